//! Two-qubit states: validation, the pure-state parameterisation, the
//! ten-parameter canonical form reached by local unitaries, the
//! separable-plus-entangled convex family and random ensembles.
//!
//! The basis order is fixed as `{|00>, |01>, |10>, |11>}` with qubit A the
//! most significant index.

mod canonical;
mod random;

pub use canonical::{canonicalize, Canonicalization, LocalUnitary, MAX_CANONICAL_SWEEPS};
pub use random::{
    haar_ket, random_hermitian, random_local_unitary, random_state, Draw, DrawOrigin, Ensemble,
    StateGenerator, DEFAULT_REJECTION_CAP,
};

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{self, cr, phase, Complex, Mat, Mat2, Mat4};

/// Hermiticity, trace and positivity floors applied by [`validate`].
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_FLOOR: f64 = -1e-10;

/// Validated two-qubit density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: Mat4,
}

impl DensityMatrix {
    pub fn matrix(&self) -> &Mat4 {
        &self.mat
    }

    pub fn into_matrix(self) -> Mat4 {
        self.mat
    }

    /// Projector onto a (not necessarily normalised) ket.
    pub fn from_ket(psi: &[Complex; 4]) -> Result<Self> {
        let n = matcore::norm(psi);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidParams(
                "ket has zero or non-finite norm".into(),
            ));
        }
        let unit = psi.map(|z| z / n);
        validate(&Mat4::outer(&unit, &unit))
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix {
            mat: Mat4::identity().scale(0.25),
        }
    }

    /// `p |Phi+><Phi+| + (1 - p) I/4`.
    pub fn werner(p: f64) -> Result<Self> {
        let bell = bell_phi_plus();
        let m = Mat4::outer(&bell, &bell).scale(p) + Mat4::identity().scale((1.0 - p) / 4.0);
        validate(&m)
    }

    /// Conjugates by a local unitary; the result stays a valid state.
    pub fn rotated(&self, lu: &LocalUnitary) -> Result<Self> {
        validate(&lu.apply(&self.mat))
    }
}

/// `(|00> + |11>) / sqrt 2`.
pub fn bell_phi_plus() -> [Complex; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [cr(h), cr(0.0), cr(0.0), cr(h)]
}

/// Checks Hermiticity (relative `1e-12`), unit trace (`1e-12`) and
/// positivity (eigenvalues `>= -1e-10`), returning the symmetrised matrix.
pub fn validate(m: &Mat4) -> Result<DensityMatrix> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let residual = m.hermiticity_residual();
    let tolerance = matcore::HERMITIAN_TOL * m.frobenius_norm();
    if residual > tolerance {
        return Err(Error::NotHermitian {
            residual,
            tolerance,
        });
    }
    let mat = m.hermitian_part();
    let trace = mat.trace().re;
    if (trace - 1.0).abs() > TRACE_TOL {
        return Err(Error::TraceNotOne {
            trace,
            residual: (trace - 1.0).abs(),
        });
    }
    let spectrum = matcore::hermitian_eig(&mat, matcore::DEFAULT_EIG_TOL)?;
    let min_eigenvalue = spectrum.eigenvalues[3];
    if min_eigenvalue < PSD_FLOOR {
        return Err(Error::NotPSD { min_eigenvalue });
    }
    Ok(DensityMatrix { mat })
}

/// Wraps an angle into `[0, 2 pi)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn arg_or_zero(z: Complex) -> f64 {
    if z.norm() == 0.0 {
        0.0
    } else {
        wrap_phase(z.arg())
    }
}

/// Pure state `(a, b e^{i th1}, c e^{i th2}, sqrt(1 - a^2 - b^2 - c^2) e^{i th3})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl PureParams {
    pub fn new(a: f64, b: f64, c: f64, theta1: f64, theta2: f64, theta3: f64) -> Result<Self> {
        let p = PureParams {
            a,
            b,
            c,
            theta1,
            theta2,
            theta3,
        };
        p.check()?;
        Ok(p)
    }

    /// Product state `|00>`.
    pub fn product_00() -> Self {
        PureParams {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            theta1: 0.0,
            theta2: 0.0,
            theta3: 0.0,
        }
    }

    pub fn bell_phi_plus() -> Self {
        PureParams {
            a: std::f64::consts::FRAC_1_SQRT_2,
            ..Self::product_00()
        }
    }

    pub fn check(&self) -> Result<()> {
        let vals = [
            self.a,
            self.b,
            self.c,
            self.theta1,
            self.theta2,
            self.theta3,
        ];
        if vals.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams(
                "non-finite pure-state parameter".into(),
            ));
        }
        if self.a < 0.0 || self.b < 0.0 || self.c < 0.0 {
            return Err(Error::InvalidParams(
                "amplitudes a, b, c must be >= 0".into(),
            ));
        }
        if self.a * self.a + self.b * self.b + self.c * self.c > 1.0 + 1e-12 {
            return Err(Error::InvalidParams("a^2 + b^2 + c^2 exceeds 1".into()));
        }
        Ok(())
    }

    /// `1 - a^2 - b^2 - c^2`, floored at zero.
    pub fn last_population(&self) -> f64 {
        (1.0 - self.a * self.a - self.b * self.b - self.c * self.c).max(0.0)
    }

    /// Reads the parameters off an arbitrary nonzero ket after removing the
    /// global phase that makes its first nonzero amplitude real positive.
    pub fn from_ket(psi: &[Complex; 4]) -> Result<Self> {
        let n = matcore::norm(psi);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidParams(
                "ket has zero or non-finite norm".into(),
            ));
        }
        let lead = psi
            .iter()
            .find(|z| z.norm() > 0.0)
            .copied()
            .unwrap_or(cr(1.0));
        let g = lead.conj() / lead.norm() / n;
        let v = psi.map(|z| z * g);
        Ok(PureParams {
            a: v[0].re.max(0.0),
            b: v[1].norm(),
            c: v[2].norm(),
            theta1: arg_or_zero(v[1]),
            theta2: arg_or_zero(v[2]),
            theta3: arg_or_zero(v[3]),
        })
    }
}

pub fn ket_from_params(p: &PureParams) -> [Complex; 4] {
    [
        cr(p.a),
        phase(p.theta1) * p.b,
        phase(p.theta2) * p.c,
        phase(p.theta3) * p.last_population().sqrt(),
    ]
}

/// Closed-form concurrence of a pure state in terms of its parameters.
pub fn pure_concurrence(p: &PureParams) -> Result<f64> {
    p.check()?;
    let (a, b, c) = (p.a, p.b, p.c);
    let d2 = p.last_population();
    let bracket = a * a * d2 + b * b * c * c
        - 2.0 * a * b * c * d2.sqrt() * (p.theta1 + p.theta2 - p.theta3).cos();
    if bracket < -1e-14 {
        return Err(Error::NegativeRadicand(bracket));
    }
    Ok((2.0 * bracket.max(0.0).sqrt()).min(1.0))
}

/// Reduced state of qubit A, `tr_B |psi><psi|`.
pub fn reduced_a(psi: &[Complex; 4]) -> Mat2 {
    Mat2::from_fn(|i, j| (0..2).map(|k| psi[2 * i + k] * psi[2 * j + k].conj()).sum())
}

/// The canonical ten-parameter form
///
/// ```text
/// | r            0            0            u e^{i t1} |
/// | 0            s            v            w e^{i t2} |
/// | 0            v            t            q e^{i t3} |
/// | u e^{-i t1}  w e^{-i t2}  q e^{-i t3}  1-r-s-t    |
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalParams {
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub q: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
}

impl CanonicalParams {
    /// Diagonal state `diag(r, s, t, 1-r-s-t)`.
    pub fn diagonal(r: f64, s: f64, t: f64) -> Self {
        CanonicalParams {
            r,
            s,
            t,
            u: 0.0,
            v: 0.0,
            w: 0.0,
            q: 0.0,
            tau1: 0.0,
            tau2: 0.0,
            tau3: 0.0,
        }
    }

    pub fn maximally_mixed() -> Self {
        Self::diagonal(0.25, 0.25, 0.25)
    }

    pub fn bell_phi_plus() -> Self {
        CanonicalParams {
            u: 0.5,
            ..Self::diagonal(0.5, 0.0, 0.0)
        }
    }

    /// `1 - r - s - t`.
    pub fn eta(&self) -> f64 {
        1.0 - self.r - self.s - self.t
    }

    /// Sign and range constraints (positivity is checked separately).
    pub fn check_signs(&self) -> Result<()> {
        let all = [
            self.r, self.s, self.t, self.u, self.v, self.w, self.q, self.tau1, self.tau2, self.tau3,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams(
                "non-finite canonical parameter".into(),
            ));
        }
        if [self.r, self.s, self.t, self.u, self.v, self.w, self.q]
            .iter()
            .any(|&x| x < 0.0)
        {
            return Err(Error::InvalidParams(
                "r, s, t, u, v, w, q must be nonnegative".into(),
            ));
        }
        if self.eta() < -1e-12 {
            return Err(Error::InvalidParams("r + s + t exceeds 1".into()));
        }
        Ok(())
    }

    /// The canonical matrix, without any validation.
    pub fn matrix(&self) -> Mat4 {
        let z = cr(0.0);
        let e1 = phase(self.tau1) * self.u;
        let e2 = phase(self.tau2) * self.w;
        let e3 = phase(self.tau3) * self.q;
        Mat([
            [cr(self.r), z, z, e1],
            [z, cr(self.s), cr(self.v), e2],
            [z, cr(self.v), cr(self.t), e3],
            [e1.conj(), e2.conj(), e3.conj(), cr(self.eta())],
        ])
    }

    /// Closed-form determinant of the canonical matrix.
    pub fn det_closed_form(&self) -> f64 {
        self.det_terms().iter().sum()
    }

    /// The individual summands of [`Self::det_closed_form`], for scale-aware
    /// comparisons.
    pub fn det_terms(&self) -> [f64; 4] {
        let CanonicalParams {
            r,
            s,
            t,
            u,
            v,
            w,
            q,
            ..
        } = *self;
        [
            -r * s * q * q,
            -r * t * w * w,
            (r * self.eta() - u * u) * (s * t - v * v),
            2.0 * r * v * w * q * (self.tau2 - self.tau3).cos(),
        ]
    }
}

/// Builds and validates the canonical matrix.
pub fn assemble_canonical(p: &CanonicalParams) -> Result<DensityMatrix> {
    p.check_signs()?;
    validate(&p.matrix())
}

/// `p |00><00| + (1 - p) |psi><psi|` with `psi` entangled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexComboParams {
    pub p: f64,
    pub psi: PureParams,
}

impl ConvexComboParams {
    pub fn new(p: f64, psi: PureParams) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParams(format!(
                "mixing weight {p} outside [0, 1]"
            )));
        }
        if pure_concurrence(&psi)? <= 0.0 {
            return Err(Error::InvalidParams(
                "entangled component has zero concurrence".into(),
            ));
        }
        Ok(ConvexComboParams { p, psi })
    }

    fn concurrence_sq(&self) -> f64 {
        let c = pure_concurrence(&self.psi).unwrap_or(0.0);
        c * c
    }

    /// `X = (1-p)/2 [(1-p) C^2 + 2 p (1 - a^2 - b^2 - c^2)]`.
    pub fn x_value(&self) -> f64 {
        let p = self.p;
        0.5 * (1.0 - p) * ((1.0 - p) * self.concurrence_sq() + 2.0 * p * self.psi.last_population())
    }

    /// `Y = (1-p)^3 C^2 [(1-p) C^2 + 4 p (1 - a^2 - b^2 - c^2)]`.
    pub fn y_value(&self) -> f64 {
        let p = self.p;
        let c2 = self.concurrence_sq();
        (1.0 - p).powi(3) * c2 * ((1.0 - p) * c2 + 4.0 * p * self.psi.last_population())
    }

    /// Predicted spectrum of `rho * rho_tilde`: `{X + sqrt(Y)/2, X - sqrt(Y)/2, 0, 0}`.
    pub fn predicted_flip_spectrum(&self) -> [f64; 4] {
        let x = self.x_value();
        let half = 0.5 * self.y_value().sqrt();
        [x + half, x - half, 0.0, 0.0]
    }
}

pub fn convex_combo(cp: &ConvexComboParams) -> Result<DensityMatrix> {
    let psi = ket_from_params(&cp.psi);
    let sep = Mat4::diag([1.0, 0.0, 0.0, 0.0]);
    validate(&(sep.scale(cp.p) + Mat4::outer(&psi, &psi).scale(1.0 - cp.p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_accepts_and_rejects() {
        assert!(validate(&Mat4::identity().scale(0.25)).is_ok());
        assert!(matches!(
            validate(&Mat4::diag([0.5, 0.5, 0.5, -0.5])),
            Err(Error::NotPSD { .. })
        ));
        assert!(matches!(
            validate(&Mat4::diag([1.0, 1.0, 0.0, 0.0])),
            Err(Error::TraceNotOne { .. })
        ));
        let mut m = Mat4::identity().scale(0.25);
        m[(0, 1)] = cr(0.1);
        assert!(matches!(validate(&m), Err(Error::NotHermitian { .. })));
        m[(1, 0)] = cr(0.1);
        assert!(validate(&m).is_ok());
        m[(2, 3)] = cr(f64::NAN);
        assert_eq!(validate(&m), Err(Error::NonFinite));
    }

    #[test]
    fn kets_from_params() {
        assert_eq!(
            ket_from_params(&PureParams::product_00()),
            [cr(1.0), cr(0.0), cr(0.0), cr(0.0)]
        );
        let bell = ket_from_params(&PureParams::bell_phi_plus());
        for (got, want) in bell.iter().zip(bell_phi_plus()) {
            assert!((got - want).norm() < 1e-15);
        }
        let uniform = ket_from_params(&PureParams::new(0.5, 0.5, 0.5, 0.0, 0.0, 0.0).unwrap());
        for z in uniform {
            assert!((z - cr(0.5)).norm() < 1e-15);
        }
    }

    #[test]
    fn pure_concurrence_examples() {
        let bell = pure_concurrence(&PureParams::bell_phi_plus()).unwrap();
        assert!((bell - 1.0).abs() < 1e-15);
        assert_eq!(pure_concurrence(&PureParams::product_00()).unwrap(), 0.0);
        let uniform = PureParams::new(0.5, 0.5, 0.5, 0.3, 0.4, 0.7).unwrap();
        assert!(pure_concurrence(&uniform).unwrap() < 1e-7);
    }

    #[test]
    fn pure_params_round_trip_with_global_phase() {
        let p = PureParams::new(0.3, 0.5, 0.6, 1.0, 2.0, 3.0).unwrap();
        let psi = ket_from_params(&p).map(|z| z * phase(0.77));
        let back = PureParams::from_ket(&psi).unwrap();
        for (x, y) in [
            (p.a, back.a),
            (p.b, back.b),
            (p.c, back.c),
            (p.theta1, back.theta1),
            (p.theta2, back.theta2),
            (p.theta3, back.theta3),
        ] {
            assert!((x - y).abs() < 1e-13, "{x} vs {y}");
        }
    }

    #[test]
    fn reduced_states() {
        let r = reduced_a(&[cr(1.0), cr(0.0), cr(0.0), cr(0.0)]);
        assert_eq!(r, Mat2::diag([1.0, 0.0]));
        let r = reduced_a(&bell_phi_plus());
        assert!(r.max_abs_diff(&Mat2::identity().scale(0.5)) < 1e-15);
    }

    #[test]
    fn assemble_examples() {
        let mm = assemble_canonical(&CanonicalParams::maximally_mixed()).unwrap();
        assert_eq!(*mm.matrix(), Mat4::identity().scale(0.25));
        assert!((CanonicalParams::maximally_mixed().det_closed_form() - 1.0 / 256.0).abs() < 1e-18);
        let bell = CanonicalParams::bell_phi_plus();
        assert!(assemble_canonical(&bell).is_ok());
        assert_eq!(bell.det_closed_form(), 0.0);
        // sign constraints hold but the matrix is not positive
        let bad = CanonicalParams {
            u: 0.45,
            ..CanonicalParams::maximally_mixed()
        };
        assert!(matches!(
            assemble_canonical(&bad),
            Err(Error::NotPSD { .. })
        ));
        let neg = CanonicalParams {
            v: -0.1,
            ..CanonicalParams::maximally_mixed()
        };
        assert!(matches!(
            assemble_canonical(&neg),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn convex_combo_endpoints_and_bell_fixture() {
        let psi = PureParams::new(0.4, 0.3, 0.5, 0.1, 0.2, 0.3).unwrap();
        let pure = convex_combo(&ConvexComboParams::new(0.0, psi).unwrap()).unwrap();
        let k = ket_from_params(&psi);
        assert_eq!(*pure.matrix(), Mat4::outer(&k, &k));

        let sep = ConvexComboParams::new(1.0, psi).unwrap();
        assert_eq!(
            *convex_combo(&sep).unwrap().matrix(),
            Mat4::diag([1.0, 0.0, 0.0, 0.0])
        );
        assert_eq!(sep.x_value(), 0.0);
        assert_eq!(sep.y_value(), 0.0);

        let half = ConvexComboParams::new(0.5, PureParams::bell_phi_plus()).unwrap();
        assert!((half.y_value() - 3.0 / 16.0).abs() < 1e-15);
        assert!(ConvexComboParams::new(0.5, PureParams::product_00()).is_err());
    }
}
