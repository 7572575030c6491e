//! Reduction of an arbitrary two-qubit state to the canonical form by local
//! unitaries.
//!
//! The zero pattern at `(0,1)` and `(0,2)` says that `|00>` in the rotated
//! frame is a product vector `|alpha beta>` for which `rho |alpha beta>` has
//! no component along `|alpha beta_perp>` or `|alpha_perp beta>`. Those are
//! exactly the stationary points of `<alpha beta| rho |alpha beta>` over
//! product vectors. Alternately diagonalising the two 2x2 blocks climbs
//! towards such a point; a Newton solve on the Bloch-vector form of the
//! stationarity equations finishes the job when the alternation is slow.
//! If the maximum is too flat for either, the same is tried towards the
//! minimum, and finally Newton from a fixed set of starting points.

use serde::{Deserialize, Serialize};

use super::{arg_or_zero, CanonicalParams, DensityMatrix};
use crate::error::{Error, Result};
use crate::matcore::{self, cr, kron, pauli_x, pauli_y, pauli_z, phase, Complex, Mat, Mat2, Mat4};

/// Cap on alternating block-diagonalisation sweeps.
pub const MAX_CANONICAL_SWEEPS: usize = 64;

const STATIONARY_TARGET: f64 = 1e-15;
const NEWTON_EVERY: usize = 4;
const MAX_NEWTON_STEPS: usize = 30;

/// `ua (x) ub`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalUnitary {
    pub ua: Mat2,
    pub ub: Mat2,
}

impl LocalUnitary {
    pub fn identity() -> Self {
        LocalUnitary {
            ua: Mat2::identity(),
            ub: Mat2::identity(),
        }
    }

    pub fn new(ua: Mat2, ub: Mat2) -> Result<Self> {
        let lu = LocalUnitary { ua, ub };
        let defect = lu.unitarity_defect();
        if defect > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "local factor is not unitary (defect {defect:e})"
            )));
        }
        Ok(lu)
    }

    pub fn unitarity_defect(&self) -> f64 {
        let id = Mat2::identity();
        (self.ua.adjoint() * self.ua)
            .max_abs_diff(&id)
            .max((self.ub.adjoint() * self.ub).max_abs_diff(&id))
    }

    pub fn full(&self) -> Mat4 {
        kron(&self.ua, &self.ub)
    }

    /// `(ua (x) ub) m (ua (x) ub)^dag`.
    pub fn apply(&self, m: &Mat4) -> Mat4 {
        m.conjugate_by(&self.full())
    }
}

/// Output of [`canonicalize`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Canonicalization {
    pub params: CanonicalParams,
    pub unitary: LocalUnitary,
    /// Max entrywise deviation between the rotated input and the matrix
    /// reassembled from `params`.
    pub residual: f64,
    pub sweeps: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct Bloch {
    a: [f64; 3],
    b: [f64; 3],
    t: [[f64; 3]; 3],
}

impl Bloch {
    fn of(rho: &Mat4) -> Self {
        let paulis = [pauli_x(), pauli_y(), pauli_z()];
        let id = Mat2::identity();
        let ev = |m: Mat4| (*rho * m).trace().re;
        Bloch {
            a: std::array::from_fn(|i| ev(kron(&paulis[i], &id))),
            b: std::array::from_fn(|j| ev(kron(&id, &paulis[j]))),
            t: std::array::from_fn(|i| std::array::from_fn(|j| ev(kron(&paulis[i], &paulis[j])))),
        }
    }
}

fn bloch_of_ket(k: &[Complex; 2]) -> [f64; 3] {
    let x = k[0].conj() * k[1];
    [2.0 * x.re, 2.0 * x.im, k[0].norm_sqr() - k[1].norm_sqr()]
}

/// Unit ket with the given Bloch vector, first nonzero entry real positive.
fn ket_of_bloch(m: &[f64; 3]) -> [Complex; 2] {
    let n = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
    let m = m.map(|x| x / n);
    if m[2] >= 0.0 {
        let a0 = ((1.0 + m[2]) / 2.0).sqrt();
        [cr(a0), Complex::new(m[0], m[1]) / (2.0 * a0)]
    } else {
        let a1 = ((1.0 - m[2]) / 2.0).sqrt();
        let a0 = Complex::new(m[0], -m[1]) / (2.0 * a1);
        normalise_phase([a0, cr(a1)])
    }
}

fn normalise_phase(k: [Complex; 2]) -> [Complex; 2] {
    let lead = if k[0].norm() > 0.0 { k[0] } else { k[1] };
    let g = lead.conj() / lead.norm();
    let n = matcore::norm(&k);
    k.map(|z| z * g / n)
}

/// SU(2) matrix sending `k` to `|0>`; its first column starts with a real
/// positive entry.
fn rotation_to_zero(k: &[Complex; 2]) -> Mat2 {
    if k[0].norm() == 0.0 {
        // no SU(2) element meets the phase convention here; use the swap
        return Mat([[cr(0.0), cr(1.0)], [cr(1.0), cr(0.0)]]);
    }
    Mat([[k[0].conj(), k[1].conj()], [-k[1], k[0]]])
}

/// Eigenvector of the largest or smallest eigenvalue of a 2x2 Hermitian block.
fn extreme_eigvec(h: &Mat2, which: Extremum) -> Result<[Complex; 2]> {
    let spec = matcore::jacobi_eigh(&h.hermitian_part(), matcore::DEFAULT_EIG_TOL)?;
    let k = match which {
        Extremum::Max => 0,
        Extremum::Min => 1,
    };
    Ok(normalise_phase(spec.eigenvectors[k]))
}

/// `<beta| rho |beta>` as an operator on qubit A.
fn partial_on_a(rho: &Mat4, beta: &[Complex; 2]) -> Mat2 {
    Mat2::from_fn(|i, j| {
        let mut z = cr(0.0);
        for k in 0..2 {
            for l in 0..2 {
                z += beta[k].conj() * rho.0[2 * i + k][2 * j + l] * beta[l];
            }
        }
        z
    })
}

/// `<alpha| rho |alpha>` as an operator on qubit B.
fn partial_on_b(rho: &Mat4, alpha: &[Complex; 2]) -> Mat2 {
    Mat2::from_fn(|k, l| {
        let mut z = cr(0.0);
        for i in 0..2 {
            for j in 0..2 {
                z += alpha[i].conj() * rho.0[2 * i + k][2 * j + l] * alpha[j];
            }
        }
        z
    })
}

fn frame(alpha: &[Complex; 2], beta: &[Complex; 2]) -> LocalUnitary {
    LocalUnitary {
        ua: rotation_to_zero(alpha),
        ub: rotation_to_zero(beta),
    }
}

fn stationarity(rho: &Mat4, lu: &LocalUnitary) -> f64 {
    let m = lu.apply(rho);
    m.0[0][1].norm().max(m.0[0][2].norm())
}

/// Dense Gaussian elimination with partial pivoting; `None` if singular.
fn solve_dense<const N: usize>(mut a: [[f64; N]; N], mut rhs: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        for row in (col + 1)..N {
            let f = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] -= f * a[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = ((row + 1)..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / a[row][row];
    }
    Some(x)
}

/// Newton iteration on
/// `a + T n = mu m`, `b + T^T m = nu n`, `|m| = |n| = 1`.
fn newton_polish(bl: &Bloch, m0: [f64; 3], n0: [f64; 3]) -> Option<([f64; 3], [f64; 3])> {
    let dot = |x: &[f64; 3], y: &[f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    let tn = |n: &[f64; 3]| -> [f64; 3] { std::array::from_fn(|i| dot(&bl.t[i], n)) };
    let ttm = |m: &[f64; 3]| -> [f64; 3] {
        std::array::from_fn(|j| (0..3).map(|i| bl.t[i][j] * m[i]).sum())
    };

    let (mut m, mut n) = (m0, n0);
    let ga: [f64; 3] = std::array::from_fn(|i| bl.a[i] + tn(&n)[i]);
    let gb: [f64; 3] = std::array::from_fn(|j| bl.b[j] + ttm(&m)[j]);
    let mut mu = dot(&ga, &m);
    let mut nu = dot(&gb, &n);

    for _ in 0..MAX_NEWTON_STEPS {
        let tnv = tn(&n);
        let tmv = ttm(&m);
        let mut f = [0.0; 8];
        for i in 0..3 {
            f[i] = bl.a[i] + tnv[i] - mu * m[i];
            f[3 + i] = bl.b[i] + tmv[i] - nu * n[i];
        }
        f[6] = 0.5 * (dot(&m, &m) - 1.0);
        f[7] = 0.5 * (dot(&n, &n) - 1.0);
        if f.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-16 {
            break;
        }
        let mut jac = [[0.0; 8]; 8];
        for i in 0..3 {
            jac[i][i] = -mu;
            for j in 0..3 {
                jac[i][3 + j] = bl.t[i][j];
                jac[3 + i][j] = bl.t[j][i];
            }
            jac[3 + i][3 + i] = -nu;
            jac[i][6] = -m[i];
            jac[3 + i][7] = -n[i];
            jac[6][i] = m[i];
            jac[7][3 + i] = n[i];
        }
        let step = solve_dense(jac, f.map(|x| -x))?;
        for i in 0..3 {
            m[i] += step[i];
            n[i] += step[3 + i];
        }
        mu += step[6];
        nu += step[7];
        if !(m.iter().chain(&n).all(|x| x.is_finite())) {
            return None;
        }
    }
    Some((m, n))
}

#[derive(Clone, Copy, PartialEq)]
enum Extremum {
    Max,
    Min,
}

struct Search {
    m: Mat4,
    bloch: Bloch,
    best: f64,
    lu: LocalUnitary,
    sweeps: usize,
}

impl Search {
    fn done(&self) -> bool {
        self.best <= STATIONARY_TARGET
    }

    fn offer(&mut self, alpha: &[Complex; 2], beta: &[Complex; 2]) -> bool {
        let candidate = frame(alpha, beta);
        let res = stationarity(&self.m, &candidate);
        if res < self.best {
            self.best = res;
            self.lu = candidate;
            return true;
        }
        false
    }

    fn polish(&mut self, m0: [f64; 3], n0: [f64; 3]) -> Option<[Complex; 2]> {
        let (mv, nv) = newton_polish(&self.bloch, m0, n0)?;
        let alpha = ket_of_bloch(&mv);
        self.offer(&alpha, &ket_of_bloch(&nv)).then_some(alpha)
    }

    /// Alternating block diagonalisation towards a maximum or minimum of
    /// `<alpha beta| rho |alpha beta>`, with periodic Newton steps.
    fn alternate(&mut self, which: Extremum, sweep_cap: usize) -> Result<()> {
        let mut alpha = [cr(1.0), cr(0.0)];
        let mut own = 0;
        while self.sweeps < sweep_cap && !self.done() {
            self.sweeps += 1;
            own += 1;
            let beta = extreme_eigvec(&partial_on_b(&self.m, &alpha), which)?;
            alpha = extreme_eigvec(&partial_on_a(&self.m, &beta), which)?;
            self.offer(&alpha, &beta);
            if !self.done() && own % NEWTON_EVERY == 0 {
                if let Some(a2) = self.polish(bloch_of_ket(&alpha), bloch_of_ket(&beta)) {
                    alpha = a2;
                }
            }
        }
        Ok(())
    }

    /// Newton from every pair of signed coordinate axes.
    fn multistart(&mut self) {
        let axes: [[f64; 3]; 6] = std::array::from_fn(|k| {
            let mut e = [0.0; 3];
            e[k / 2] = if k % 2 == 0 { 1.0 } else { -1.0 };
            e
        });
        for m0 in axes {
            for n0 in axes {
                if self.done() {
                    return;
                }
                self.polish(m0, n0);
            }
        }
    }
}

/// Finds local unitaries `ua (x) ub` (plus the relative phase on `|1>_A`)
/// bringing `rho` into canonical form and reads off the ten parameters.
///
/// Fails with [`Error::CanonicalizationResidual`] when the rotated matrix
/// differs from the reassembled canonical matrix by more than `tol`.
pub fn canonicalize(rho: &DensityMatrix, tol: f64) -> Result<Canonicalization> {
    let m = *rho.matrix();
    let mut lu = LocalUnitary::identity();
    let mut sweeps = 0;

    if m.0[0][1].norm() > 0.0 || m.0[0][2].norm() > 0.0 {
        let mut search = Search {
            m,
            bloch: Bloch::of(&m),
            best: stationarity(&m, &lu),
            lu,
            sweeps: 0,
        };
        // a nearly flat extremum stalls one direction; the other usually is not
        search.alternate(Extremum::Max, MAX_CANONICAL_SWEEPS / 2)?;
        search.alternate(Extremum::Min, MAX_CANONICAL_SWEEPS)?;
        search.multistart();
        lu = search.lu;
        sweeps = search.sweeps;
    }

    // relative phase on |1>_A makes the |01><10| entry real and nonnegative
    let rotated = lu.apply(&m);
    let theta = arg_or_zero(rotated.0[1][2]);
    if theta != 0.0 {
        let d = Mat([[cr(1.0), cr(0.0)], [cr(0.0), phase(theta)]]);
        lu.ua = d * lu.ua;
    }
    let rotated = lu.apply(&m);

    let e = |i: usize, j: usize| rotated.0[i][j];
    let params = CanonicalParams {
        r: e(0, 0).re,
        s: e(1, 1).re,
        t: e(2, 2).re,
        u: e(0, 3).norm(),
        v: e(1, 2).norm(),
        w: e(1, 3).norm(),
        q: e(2, 3).norm(),
        tau1: arg_or_zero(e(0, 3)),
        tau2: arg_or_zero(e(1, 3)),
        tau3: arg_or_zero(e(2, 3)),
    };
    let residual = params.matrix().max_abs_diff(&rotated);
    if !(residual <= tol) {
        return Err(Error::CanonicalizationResidual {
            residual,
            tolerance: tol,
        });
    }
    Ok(Canonicalization {
        params,
        unitary: lu,
        residual,
        sweeps,
    })
}
