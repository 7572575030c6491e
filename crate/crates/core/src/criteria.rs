//! Partial transpose, its spectrum and the separability verdict.

use serde::{Deserialize, Serialize};

use crate::entanglement::concurrence_oracle;
use crate::error::{Error, Result};
use crate::matcore::{self, det4, Mat4};
use crate::states::DensityMatrix;

pub const DEFAULT_EPS_SEP: f64 = 1e-10;
pub const DEFAULT_EPS_C: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    #[default]
    B,
}

/// Transposes the chosen qubit's indices.
pub fn partial_transpose(m: &Mat4, which: Subsystem) -> Mat4 {
    Mat4::from_fn(|row, col| {
        let (a, b) = (row / 2, row % 2);
        let (a2, b2) = (col / 2, col % 2);
        match which {
            Subsystem::B => m.0[2 * a + b2][2 * a2 + b],
            Subsystem::A => m.0[2 * a2 + b][2 * a + b2],
        }
    })
}

pub fn partial_transpose_b(rho: &DensityMatrix) -> Mat4 {
    partial_transpose(rho.matrix(), Subsystem::B)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub positive: usize,
    pub zero: usize,
    pub negative: usize,
}

impl Signature {
    pub fn of(values: &[f64], eps: f64) -> Self {
        let count = |f: &dyn Fn(f64) -> bool| values.iter().filter(|&&x| f(x)).count();
        Signature {
            positive: count(&|x| x > eps),
            zero: count(&|x| x.abs() <= eps),
            negative: count(&|x| x < -eps),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PTSpectrum {
    /// Eigenvalues of `rho^PT`, descending.
    pub etas: [f64; 4],
    /// Cofactor determinant of `rho^PT`.
    pub det_pt: f64,
    /// Product of `etas`, an independent estimate of `det_pt`.
    pub eta_product: f64,
    pub signature: Signature,
    /// Sum of `|eta|` over negative eigenvalues.
    pub negativity: f64,
}

pub fn pt_spectrum(rho: &DensityMatrix, eps: f64) -> Result<PTSpectrum> {
    let pt = partial_transpose_b(rho);
    let etas = matcore::hermitian_eig(&pt, matcore::DEFAULT_EIG_TOL)?.eigenvalues;
    Ok(PTSpectrum {
        etas,
        det_pt: det4(&pt).re,
        eta_product: etas.iter().product(),
        signature: Signature::of(&etas, eps),
        negativity: etas.iter().filter(|&&x| x < 0.0).map(|x| -x).sum(),
    })
}

/// PT eigenvalues of a pure state with concurrence `c`:
/// `(c/2, -c/2, (1 + sqrt(1-c^2))/2, (1 - sqrt(1-c^2))/2)`.
pub fn pure_pt_eigen(c: f64) -> [f64; 4] {
    let root = ((1.0 - c) * (1.0 + c)).max(0.0).sqrt();
    [c / 2.0, -c / 2.0, (1.0 + root) / 2.0, (1.0 - root) / 2.0]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Separable,
    Inseparable,
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub det_pt: f64,
    pub concurrence: f64,
    /// `(det_pt < -eps_sep) == (concurrence > eps_c)`.
    pub agreement: bool,
}

/// Decides separability from `det(rho^PT)` and reports whether the
/// independently computed concurrence agrees.
///
/// | `det_pt`              | `C`                 | result                 |
/// |-----------------------|---------------------|------------------------|
/// | `< -eps_sep`          | `> eps_c`           | inseparable            |
/// | `< -eps_sep`          | `[eps_c/10, eps_c]` | inseparable, disagree  |
/// | `< -eps_sep`          | `< eps_c/10`        | `CriteriaDisagreement` |
/// | `> eps_sep`           | `<= eps_c`          | separable              |
/// | `> eps_sep`           | `> eps_c`           | `CriteriaDisagreement` |
/// | within `eps_sep` of 0 | any                 | boundary               |
pub fn classify(det_pt: f64, concurrence: f64, eps_sep: f64, eps_c: f64) -> Result<Verdict> {
    let agreement = (det_pt < -eps_sep) == (concurrence > eps_c);
    let disagreement = Err(Error::CriteriaDisagreement {
        det_pt,
        concurrence,
    });
    let status = if det_pt < -eps_sep {
        if concurrence < eps_c / 10.0 {
            return disagreement;
        }
        Status::Inseparable
    } else if det_pt > eps_sep {
        if concurrence > eps_c {
            return disagreement;
        }
        Status::Separable
    } else {
        Status::Boundary
    };
    Ok(Verdict {
        status,
        det_pt,
        concurrence,
        agreement,
    })
}

pub fn verdict(rho: &DensityMatrix, eps_sep: f64, eps_c: f64) -> Result<Verdict> {
    let det_pt = det4(&partial_transpose_b(rho)).re;
    let c = concurrence_oracle(rho, matcore::DEFAULT_EIG_TOL)?.concurrence;
    classify(det_pt, c, eps_sep, eps_c)
}
