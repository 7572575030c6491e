//! Concurrence and entanglement of formation.
//!
//! Two independent routes to `C = max(0, sqrt(l1) - sqrt(l2) - sqrt(l3) - sqrt(l4))`
//! where `l1 >= ... >= l4` is the spectrum of `rho * rho~`:
//! [`concurrence_oracle`] works on the matrix numerically,
//! [`concurrence_ferrari`] uses the closed-form quartic roots for canonical
//! parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{self, sigma_yy, Mat4};
use crate::quartic::{
    coeffs_from_canonical, depress, ferrari_solve, DepressedQuartic, FerrariIntermediates,
    QuarticSpec,
};
use crate::states::{CanonicalParams, DensityMatrix};

/// Eigenvalues of `rho * rho~` in `[-LAMBDA_FLOOR, 0)` are treated as zero.
pub const LAMBDA_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Path {
    Oracle,
    Ferrari,
}

/// Which of the paired maxima `x2`, `x4` holds the largest root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    X2Max,
    X4Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceResult {
    /// Spectrum of `rho * rho~`, descending, clamped at zero.
    pub lambdas: [f64; 4],
    pub concurrence: f64,
    pub path: Path,
    pub branch_note: Option<Branch>,
}

/// `(sigma_y x sigma_y) rho* (sigma_y x sigma_y)`.
pub fn spin_flip(rho: &DensityMatrix) -> Mat4 {
    rho.matrix().conj().conjugate_by(&sigma_yy())
}

/// Spectrum of the non-Hermitian product `rho * rho~` from the general
/// eigensolver, descending.
pub fn flip_spectrum(rho: &DensityMatrix, tol: f64) -> Result<[f64; 4]> {
    matcore::general_eig4_real(&(*rho.matrix() * spin_flip(rho)), tol)
}

fn from_sqrt_lambdas(roots: [f64; 4]) -> f64 {
    (roots[0] - roots[1] - roots[2] - roots[3]).max(0.0)
}

/// Concurrence by direct numerical linear algebra.
///
/// With `rho = B B^dag` (`B = V sqrt(Lambda)` from the Hermitian
/// eigendecomposition), the square roots of the spectrum of `rho * rho~` are
/// the singular values of `B^T (sigma_y x sigma_y) B`. Taking singular values
/// avoids the square root of a rounded zero eigenvalue, which would cost half
/// the digits on rank-deficient states. `tol` is the Hermitian eigensolver
/// tolerance.
pub fn concurrence_oracle(rho: &DensityMatrix, tol: f64) -> Result<ConcurrenceResult> {
    let spec = matcore::hermitian_eig(rho.matrix(), tol)?;
    let b = Mat4::from_fn(|i, k| spec.eigenvectors[k][i] * spec.eigenvalues[k].max(0.0).sqrt());
    let tau = b.transpose() * sigma_yy() * b;
    let sv = matcore::singular_values(&tau)?;
    Ok(ConcurrenceResult {
        lambdas: sv.map(|s| s * s),
        concurrence: from_sqrt_lambdas(sv).min(1.0),
        path: Path::Oracle,
        branch_note: None,
    })
}

/// Everything the Ferrari route produced, for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FerrariTrace {
    pub coeffs: QuarticSpec,
    pub depressed: DepressedQuartic,
    pub ferrari: FerrariIntermediates,
    pub result: ConcurrenceResult,
}

/// Concurrence from the closed-form roots of the characteristic quartic.
///
/// `tol` gates imaginary parts inside the Ferrari solve and also sets how far
/// below zero a root may land before it is reported as an error.
pub fn concurrence_ferrari(p: &CanonicalParams, tol: f64) -> Result<ConcurrenceResult> {
    Ok(ferrari_trace(p, Some(tol))?.result)
}

/// As [`concurrence_ferrari`], keeping the intermediates. `None` uses the
/// scale-aware default tolerance.
pub fn ferrari_trace(p: &CanonicalParams, tol: Option<f64>) -> Result<FerrariTrace> {
    let coeffs = coeffs_from_canonical(p);
    let depressed = depress(&coeffs);
    let tol = tol.unwrap_or_else(|| depressed.default_tolerance());
    let ferrari = ferrari_solve(&depressed, tol)?;
    let floor = LAMBDA_FLOOR.max(tol);
    let mut lambdas = ferrari.lambdas(&depressed);
    for l in lambdas.iter_mut() {
        if *l < -floor {
            return Err(Error::NegativeEigenvalue(*l));
        }
        *l = l.max(0.0);
    }
    let x = ferrari.x;
    let (branch, top) = if x[1] >= x[3] {
        (Branch::X2Max, 1)
    } else {
        (Branch::X4Max, 3)
    };
    let others: f64 = (0..4)
        .filter(|&i| i != top)
        .map(|i| lambdas[i].sqrt())
        .sum();
    let concurrence = (lambdas[top].sqrt() - others).clamp(0.0, 1.0);
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok(FerrariTrace {
        coeffs,
        depressed,
        ferrari,
        result: ConcurrenceResult {
            lambdas,
            concurrence,
            path: Path::Ferrari,
            branch_note: Some(branch),
        },
    })
}

/// `D = rsq^2 + rtw^2 + (st - u^2)(v^2 - r eta) - 2 ruwq cos(t1 - t2 - t3)`;
/// positive exactly for inseparable canonical states.
pub fn d_criterion(p: &CanonicalParams) -> f64 {
    d_terms(p).iter().sum()
}

/// Summands of [`d_criterion`], for scale-aware comparisons.
pub fn d_terms(p: &CanonicalParams) -> [f64; 4] {
    let CanonicalParams {
        r,
        s,
        t,
        u,
        v,
        w,
        q,
        ..
    } = *p;
    [
        r * s * q * q,
        r * t * w * w,
        (s * t - u * u) * (v * v - r * p.eta()),
        -2.0 * r * u * w * q * (p.tau1 - p.tau2 - p.tau3).cos(),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementOfFormation {
    pub concurrence: f64,
    pub eof: f64,
}

/// `E(C) = h((1 + sqrt(1 - C^2)) / 2)` with `h` the binary entropy.
pub fn eof(c: f64) -> Result<EntanglementOfFormation> {
    if !(-1e-12..=1.0 + 1e-12).contains(&c) {
        return Err(Error::OutOfRange(c));
    }
    let c = c.clamp(0.0, 1.0);
    let root = ((1.0 - c) * (1.0 + c)).sqrt();
    let x = 0.5 * (1.0 + root);
    let y = 0.5 * (1.0 - root);
    let term = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    let eof = ((term(x) + term(y)) / std::f64::consts::LN_2).clamp(0.0, 1.0);
    Ok(EntanglementOfFormation {
        concurrence: c,
        eof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::cr;
    use crate::states::{bell_phi_plus, validate};

    fn product_00() -> DensityMatrix {
        validate(&Mat4::diag([1.0, 0.0, 0.0, 0.0])).unwrap()
    }

    #[test]
    fn spin_flip_examples() {
        let mm = DensityMatrix::maximally_mixed();
        assert!(spin_flip(&mm).max_abs_diff(mm.matrix()) < 1e-16);
        assert!(spin_flip(&product_00()).max_abs_diff(&Mat4::diag([0.0, 0.0, 0.0, 1.0])) < 1e-16);
        let bell = DensityMatrix::from_ket(&bell_phi_plus()).unwrap();
        assert!(spin_flip(&bell).max_abs_diff(bell.matrix()) < 1e-15);
    }

    #[test]
    fn oracle_examples() {
        let bell = DensityMatrix::from_ket(&bell_phi_plus()).unwrap();
        assert!((concurrence_oracle(&bell, 1e-15).unwrap().concurrence - 1.0).abs() < 1e-14);
        assert_eq!(
            concurrence_oracle(&product_00(), 1e-15)
                .unwrap()
                .concurrence,
            0.0
        );
        let w = DensityMatrix::werner(0.5).unwrap();
        assert!((concurrence_oracle(&w, 1e-15).unwrap().concurrence - 0.25).abs() < 1e-14);
    }

    #[test]
    fn flip_spectrum_examples() {
        let bell = DensityMatrix::from_ket(&bell_phi_plus()).unwrap();
        let l = flip_spectrum(&bell, 1e-10).unwrap();
        assert!((l[0] - 1.0).abs() < 1e-12 && l[1..].iter().all(|x| x.abs() < 1e-12));
        assert_eq!(flip_spectrum(&product_00(), 1e-10).unwrap(), [0.0; 4]);
    }

    #[test]
    fn ferrari_examples() {
        let mm = concurrence_ferrari(&CanonicalParams::maximally_mixed(), 1e-8).unwrap();
        assert_eq!(mm.concurrence, 0.0);
        assert!(mm.lambdas.iter().all(|l| (l - 1.0 / 16.0).abs() < 1e-12));
        let bell = concurrence_ferrari(&CanonicalParams::bell_phi_plus(), 1e-8).unwrap();
        assert!((bell.concurrence - 1.0).abs() < 1e-4, "{bell:?}");
        assert!((bell.lambdas[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn d_criterion_examples() {
        assert!((d_criterion(&CanonicalParams::maximally_mixed()) + 1.0 / 256.0).abs() < 1e-18);
        assert!((d_criterion(&CanonicalParams::bell_phi_plus()) - 1.0 / 16.0).abs() < 1e-18);
    }

    #[test]
    fn eof_examples() {
        assert_eq!(eof(0.0).unwrap().eof, 0.0);
        assert!((eof(1.0).unwrap().eof - 1.0).abs() < 1e-15);
        // -0.9 log2 0.9 - 0.1 log2 0.1, evaluated at 30 digits
        assert!((eof(0.6).unwrap().eof - 0.468_995_593_589_281_2).abs() < 1e-15);
        assert!(matches!(eof(1.1), Err(Error::OutOfRange(_))));
        assert!(matches!(eof(-0.01), Err(Error::OutOfRange(_))));
        assert_eq!(eof(1.0 + 1e-13).unwrap().concurrence, 1.0);
    }

    #[test]
    fn oracle_handles_rank_one_exactly_enough() {
        // (|00> + 2|11>)/sqrt5 has C = 4/5
        let k = [cr(1.0), cr(0.0), cr(0.0), cr(2.0)].map(|z| z / 5f64.sqrt());
        let rho = DensityMatrix::from_ket(&k).unwrap();
        let c = concurrence_oracle(&rho, 1e-15).unwrap();
        assert!((c.concurrence - 0.8).abs() < 1e-14);
        assert!(c.lambdas[1..].iter().all(|&l| l < 1e-28));
    }
}
