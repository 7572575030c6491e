//! Complex 2x2 / 4x4 dense matrices and the small numerical kernels the rest
//! of the crate is built on: Kronecker products, cofactor determinants, a
//! cyclic Jacobi eigensolver for Hermitian input, a shifted-QR eigensolver
//! for general input and one-sided Jacobi singular values.
//!
//! Everything here is deliberately independent of the closed-form quartic
//! machinery in [`crate::quartic`], so it can serve as the oracle for it.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex scalar used for every matrix entry.
pub type Complex = Complex64;

/// Relative Hermiticity tolerance, `||m - m^dag||_F <= HERMITIAN_TOL * ||m||_F`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default convergence threshold for [`hermitian_eig`].
pub const DEFAULT_EIG_TOL: f64 = 1e-15;

const MAX_JACOBI_SWEEPS: usize = 100;
const MAX_QR_ITERATIONS: usize = 200;

#[inline]
pub fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex {
    Complex::new(re, 0.0)
}

/// Unit-modulus phase `e^{i theta}`.
#[inline]
pub fn phase(theta: f64) -> Complex {
    Complex::from_polar(1.0, theta)
}

/// Dense square complex matrix stored row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat<const N: usize>(pub [[Complex; N]; N]);

pub type Mat2 = Mat<2>;
pub type Mat4 = Mat<4>;

impl<const N: usize> Default for Mat<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> Mat<N> {
    pub fn zeros() -> Self {
        Mat([[Complex::new(0.0, 0.0); N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = cr(1.0);
        }
        m
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn from_real(rows: [[f64; N]; N]) -> Self {
        Self::from_fn(|i, j| cr(rows[i][j]))
    }

    pub fn diag(d: [f64; N]) -> Self {
        Self::from_fn(|i, j| if i == j { cr(d[i]) } else { cr(0.0) })
    }

    /// Outer product `|x><y|`.
    pub fn outer(x: &[Complex; N], y: &[Complex; N]) -> Self {
        Self::from_fn(|i, j| x[i] * y[j].conj())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i].conj())
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(|i, j| self.0[i][j].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i])
    }

    pub fn trace(&self) -> Complex {
        (0..N).map(|i| self.0[i][i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * k)
    }

    /// `(m + m^dag) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(|i, j| (self.0[i][j] + self.0[j][i].conj()) * 0.5)
    }

    /// `||m - m^dag||_F`.
    pub fn hermiticity_residual(&self) -> f64 {
        (*self - self.adjoint()).frobenius_norm()
    }

    pub fn mul_vec(&self, v: &[Complex; N]) -> [Complex; N] {
        let mut out = [cr(0.0); N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..N).map(|j| self.0[i][j] * v[j]).sum();
        }
        out
    }

    /// `U m U^dag`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        *u * *self * u.adjoint()
    }
}

impl<const N: usize> Index<(usize, usize)> for Mat<N> {
    type Output = Complex;
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.0[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for Mat<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.0[i][j]
    }
}

impl<const N: usize> Add for Mat<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl<const N: usize> Sub for Mat<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

impl<const N: usize> Neg for Mat<N> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::from_fn(|i, j| -self.0[i][j])
    }
}

impl<const N: usize> Mul for Mat<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| (0..N).map(|k| self.0[i][k] * rhs.0[k][j]).sum())
    }
}

impl<const N: usize> Mul<Complex> for Mat<N> {
    type Output = Self;
    fn mul(self, k: Complex) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * k)
    }
}

pub fn norm<const N: usize>(v: &[Complex; N]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<x|y>`, conjugate-linear in the first argument.
pub fn inner<const N: usize>(x: &[Complex; N], y: &[Complex; N]) -> Complex {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn pauli_x() -> Mat2 {
    Mat::from_real([[0.0, 1.0], [1.0, 0.0]])
}

pub fn pauli_y() -> Mat2 {
    Mat([[cr(0.0), c(0.0, -1.0)], [c(0.0, 1.0), cr(0.0)]])
}

pub fn pauli_z() -> Mat2 {
    Mat::diag([1.0, -1.0])
}

/// Kronecker product, `kron(a, b)[2i + k][2j + l] = a[i][j] * b[k][l]`.
pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, s| a.0[r / 2][s / 2] * b.0[r % 2][s % 2])
}

/// `sigma_y (x) sigma_y`.
pub fn sigma_yy() -> Mat4 {
    kron(&pauli_y(), &pauli_y())
}

pub fn kron_vec(a: &[Complex; 2], b: &[Complex; 2]) -> [Complex; 4] {
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

fn det3(m: &[[Complex; 4]; 4], rows: [usize; 3], cols: [usize; 3]) -> Complex {
    let e = |i: usize, j: usize| m[rows[i]][cols[j]];
    e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
        - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
        + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
}

/// Determinant by cofactor expansion along the first row.
pub fn det4(m: &Mat4) -> Complex {
    const MINOR_COLS: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];
    let mut det = cr(0.0);
    for (j, cols) in MINOR_COLS.iter().enumerate() {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        det += m.0[0][j] * det3(&m.0, [1, 2, 3], *cols) * sign;
    }
    det
}

pub fn det2(m: &Mat2) -> Complex {
    m.0[0][0] * m.0[1][1] - m.0[0][1] * m.0[1][0]
}

/// Eigen-decomposition of a Hermitian matrix: eigenvalues in descending
/// order, `eigenvectors[k]` belongs to `eigenvalues[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianSpectrum<const N: usize> {
    pub eigenvalues: [f64; N],
    pub eigenvectors: [[Complex; N]; N],
}

impl<const N: usize> HermitianSpectrum<N> {
    /// Largest `||m v - lambda v||` over the eigenpairs.
    pub fn max_residual(&self, m: &Mat<N>) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .map(|(&l, v)| {
                let mv = m.mul_vec(v);
                let r: [Complex; N] = std::array::from_fn(|i| mv[i] - v[i] * l);
                norm(&r)
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation of the eigenvector Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..N {
            for j in 0..N {
                let g = inner(&self.eigenvectors[i], &self.eigenvectors[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - cr(target)).norm());
            }
        }
        worst
    }

    /// Rebuilds `sum_k lambda_k |v_k><v_k|`.
    pub fn reconstruct(&self) -> Mat<N> {
        let mut m = Mat::zeros();
        for (l, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            m = m + Mat::outer(v, v).scale(*l);
        }
        m
    }
}

fn check_hermitian<const N: usize>(m: &Mat<N>) -> Result<Mat<N>> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let residual = m.hermiticity_residual();
    let scale = m.frobenius_norm();
    if residual > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian {
            residual,
            tolerance: HERMITIAN_TOL * scale,
        });
    }
    Ok(m.hermitian_part())
}

/// Cyclic complex Jacobi eigensolver for Hermitian matrices of any small size.
///
/// Sweeps stop once the off-diagonal Frobenius norm falls below
/// `tol * ||m||_F`.
pub fn jacobi_eigh<const N: usize>(m: &Mat<N>, tol: f64) -> Result<HermitianSpectrum<N>> {
    let mut a = check_hermitian(m)?.0;
    let mut v = Mat::<N>::identity().0;
    let scale = m.frobenius_norm();
    let threshold = tol * scale;

    let off_norm = |a: &[[Complex; N]; N]| {
        let mut s = 0.0;
        for (i, row) in a.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                if i != j {
                    s += z.norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&a) <= threshold;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(Error::NoConvergence {
                iterations: sweeps,
                what: "Jacobi eigensolver",
            });
        }
        sweeps += 1;
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a[p][q];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[p][p].re;
                let aqq = a[q][q].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                let ph = apq / mag;
                // G = diag(1, conj(ph)) * [[c, s], [-s, c]] on the (p, q) plane
                let g_pp = cr(cs);
                let g_pq = cr(sn);
                let g_qp = ph.conj() * (-sn);
                let g_qq = ph.conj() * cs;

                for row in a.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * g_pp + y * g_qp;
                    row[q] = x * g_pq + y * g_qq;
                }
                for k in 0..N {
                    let (x, y) = (a[p][k], a[q][k]);
                    a[p][k] = g_pp.conj() * x + g_qp.conj() * y;
                    a[q][k] = g_pq.conj() * x + g_qq.conj() * y;
                }
                a[p][q] = cr(0.0);
                a[q][p] = cr(0.0);
                a[p][p] = cr(a[p][p].re);
                a[q][q] = cr(a[q][q].re);

                for row in v.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * g_pp + y * g_qp;
                    row[q] = x * g_pq + y * g_qq;
                }
            }
        }
        converged = off_norm(&a) <= threshold;
    }

    let mut order: [usize; N] = std::array::from_fn(|i| i);
    // stable: ties keep solver order
    order.sort_by(|&i, &j| a[j][j].re.total_cmp(&a[i][i].re));
    Ok(HermitianSpectrum {
        eigenvalues: std::array::from_fn(|k| a[order[k]][order[k]].re),
        eigenvectors: std::array::from_fn(|k| std::array::from_fn(|i| v[i][order[k]])),
    })
}

/// Full spectrum of a 4x4 Hermitian matrix (descending).
pub fn hermitian_eig(m: &Mat4, tol: f64) -> Result<HermitianSpectrum<4>> {
    jacobi_eigh(m, tol)
}

/// Givens rotation `[[c, s], [-conj(s), c]]` mapping `(a, b)` to `(r, 0)`.
fn givens(a: Complex, b: Complex) -> (f64, Complex) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, cr(0.0));
    }
    if na == 0.0 {
        return (0.0, cr(1.0));
    }
    let r = na.hypot(nb);
    (na / r, (a / na) * b.conj() / r)
}

fn rotate_rows<const N: usize>(
    h: &mut [[Complex; N]; N],
    k: usize,
    cs: f64,
    sn: Complex,
    cols: std::ops::Range<usize>,
) {
    for j in cols {
        let (x, y) = (h[k][j], h[k + 1][j]);
        h[k][j] = x * cs + sn * y;
        h[k + 1][j] = -sn.conj() * x + y * cs;
    }
}

fn rotate_cols<const N: usize>(
    h: &mut [[Complex; N]; N],
    k: usize,
    cs: f64,
    sn: Complex,
    rows: std::ops::Range<usize>,
) {
    for row in &mut h[rows] {
        let (x, y) = (row[k], row[k + 1]);
        row[k] = x * cs + y * sn.conj();
        row[k + 1] = -x * sn + y * cs;
    }
}

/// Eigenvalues (unordered, complex) of a general square matrix by Hessenberg
/// reduction followed by Wilkinson-shifted QR sweeps with deflation.
pub fn general_eigenvalues<const N: usize>(m: &Mat<N>) -> Result<[Complex; N]> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut h = m.0;
    let scale = m.frobenius_norm();

    // Hessenberg form by Givens similarity transforms.
    for j in 0..N.saturating_sub(2) {
        for i in ((j + 2)..N).rev() {
            let (cs, sn) = givens(h[i - 1][j], h[i][j]);
            rotate_rows(&mut h, i - 1, cs, sn, 0..N);
            rotate_cols(&mut h, i - 1, cs, sn, 0..N);
            h[i][j] = cr(0.0);
        }
    }

    let eps = f64::EPSILON;
    let mut hi = N - 1;
    let mut iterations = 0;
    let mut since_deflation = 0;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = h[l][l - 1].norm();
            let local = h[l - 1][l - 1].norm() + h[l][l].norm();
            if sub <= eps * local || sub <= 1e-3 * eps * scale {
                h[l][l - 1] = cr(0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        iterations += 1;
        since_deflation += 1;
        if iterations > MAX_QR_ITERATIONS {
            return Err(Error::NoConvergence {
                iterations,
                what: "shifted QR eigensolver",
            });
        }

        let (a, b, cc, d) = (h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi]);
        let mut mu = {
            let half_tr = (a + d) * 0.5;
            let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * cc).sqrt();
            let (e1, e2) = (half_tr + disc, half_tr - disc);
            if (e1 - d).norm() <= (e2 - d).norm() {
                e1
            } else {
                e2
            }
        };
        if since_deflation % 11 == 10 {
            // exceptional shift
            mu = d + cr(h[hi][hi - 1].norm() * 0.75);
        }

        for i in l..=hi {
            h[i][i] -= mu;
        }
        let mut rots = [(1.0, cr(0.0)); N];
        for k in l..hi {
            let (cs, sn) = givens(h[k][k], h[k + 1][k]);
            rotate_rows(&mut h, k, cs, sn, k..(hi + 1));
            h[k + 1][k] = cr(0.0);
            rots[k] = (cs, sn);
        }
        for k in l..hi {
            let (cs, sn) = rots[k];
            rotate_cols(&mut h, k, cs, sn, l..(k + 2));
        }
        for i in l..=hi {
            h[i][i] += mu;
        }
    }
    Ok(std::array::from_fn(|i| h[i][i]))
}

/// Real spectrum of a 4x4 matrix known to have real eigenvalues (such as
/// `rho * rho_tilde`), descending. Imaginary parts larger than `tol` are an
/// error; negative values within `[-tol, 0)` are clamped to zero.
pub fn general_eig4_real(m: &Mat4, tol: f64) -> Result<[f64; 4]> {
    let raw = general_eigenvalues(m)?;
    let worst_imag = raw.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if worst_imag > tol {
        return Err(Error::SpectrumNotReal {
            imag: worst_imag,
            tolerance: tol,
        });
    }
    let mut out = raw.map(|z| {
        if z.re < 0.0 && z.re >= -tol {
            0.0
        } else {
            z.re
        }
    });
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// Singular values (descending) by one-sided Jacobi orthogonalisation of the
/// columns. Small singular values come out with absolute accuracy of order
/// `eps * ||m||`, without squaring.
pub fn singular_values<const N: usize>(m: &Mat<N>) -> Result<[f64; N]> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut a = m.0;
    let eps = f64::EPSILON;
    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for i in 0..N {
            for j in (i + 1)..N {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = cr(0.0);
                for row in a.iter() {
                    alpha += row[i].norm_sqr();
                    beta += row[j].norm_sqr();
                    gamma += row[i].conj() * row[j];
                }
                let g = gamma.norm();
                if g <= 4.0 * eps * (alpha * beta).sqrt() || g < f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let ph = (gamma / g).conj();
                for row in a.iter_mut() {
                    let x = row[i];
                    let y = row[j] * ph;
                    row[i] = x * cs - y * sn;
                    row[j] = x * sn + y * cs;
                }
            }
        }
        if !rotated {
            break;
        }
        sweeps += 1;
        if sweeps > MAX_JACOBI_SWEEPS {
            return Err(Error::NoConvergence {
                iterations: sweeps,
                what: "one-sided Jacobi SVD",
            });
        }
    }
    let mut out: [f64; N] =
        std::array::from_fn(|j| a.iter().map(|row| row[j].norm_sqr()).sum::<f64>().sqrt());
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}
