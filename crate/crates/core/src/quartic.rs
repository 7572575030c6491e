//! Characteristic quartic of `rho * rho~` in the canonical frame and its
//! closed-form Ferrari solution.
//!
//! `lambda^4 + f1 lambda^3 + f2 lambda^2 + f3 lambda + f4 = 0` is shifted by
//! `lambda = x + delta/4` (`delta = -f1`) to `x^4 + a x^2 + b x + c = 0`, whose
//! roots are
//!
//! ```text
//! x1,2 =  P -+ sqrt(-b/P + Q) / 2
//! x3,4 = -P -+ sqrt( b/P + Q) / 2
//! ```
//!
//! with `P`, `Q` built from `R = a^2 + 12c`, `T = 2a^3 + 27b^2 - 72ac` and
//! `S = T + sqrt(T^2 - 4R^3)`. All intermediates are kept so callers can test
//! them individually.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{c as cplx, cr, det4, Complex};
use crate::states::CanonicalParams;

/// `lambda^4 + f1 lambda^3 + f2 lambda^2 + f3 lambda + f4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuarticSpec {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
}

impl QuarticSpec {
    pub fn eval(&self, lambda: f64) -> f64 {
        (((lambda + self.f1) * lambda + self.f2) * lambda + self.f3) * lambda + self.f4
    }

    /// `1 + sum |f_i|`, the natural scale for residuals.
    pub fn scale(&self) -> f64 {
        1.0 + self.f1.abs() + self.f2.abs() + self.f3.abs() + self.f4.abs()
    }
}

/// `x^4 + a x^2 + b x + c` together with the shift `delta` back to `lambda`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepressedQuartic {
    pub delta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl DepressedQuartic {
    pub fn eval(&self, x: f64) -> f64 {
        ((x * x + self.a) * x + self.b) * x + self.c
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (4.0 * x * x + 2.0 * self.a) * x + self.b
    }

    /// Scale-aware tolerance on imaginary parts of the computed roots.
    pub fn default_tolerance(&self) -> f64 {
        DEFAULT_FERRARI_TOL
            * (1.0
                + self.delta.abs()
                + self.a.abs()
                + self.b.abs().cbrt()
                + self.c.abs().powf(0.25))
    }
}

/// Base of [`DepressedQuartic::default_tolerance`].
pub const DEFAULT_FERRARI_TOL: f64 = 1e-8;

/// Coefficients of the characteristic quartic of `rho * rho~` for the
/// canonical matrix with parameters `p`.
pub fn coeffs_from_canonical(p: &CanonicalParams) -> QuarticSpec {
    let CanonicalParams {
        r,
        s,
        t,
        u,
        v,
        w,
        q,
        tau1,
        tau2,
        tau3,
    } = *p;
    let eta = p.eta();
    let (u2, v2, w2, q2) = (u * u, v * v, w * w, q * q);
    let c123 = (tau1 - tau2 - tau3).cos();
    let c23 = (tau2 - tau3).cos();

    let f1 = -2.0 * (r * eta + s * t + u2 + v2);

    let f2 = -r.powi(4) - 2.0 * r.powi(3) * (1.0 - r - s - t)
        + s * s * t * t
        + 2.0 * u2 * v2
        + 2.0 * s * t * (2.0 * u2 - v2)
        + (u2 + v2).powi(2)
        + r * r * (1.0 + (s - t).powi(2) - 2.0 * (s + t) + 2.0 * (u2 - 2.0 * v2))
        - 2.0
            * r
            * (q2 * s - s * (u2 - 2.0 * v2)
                + (1.0 - t) * (u2 - 2.0 * v2 - 2.0 * s * t)
                + t * (2.0 * s * s + w2))
        + 4.0 * q * r * w * (2.0 * u * c123 - v * c23);

    let f3 = 2.0
        * (-s * t * u2 * u2 - v2 * v2 * (u2 + r * eta)
            + r * s * (s * t + r * eta) * (q2 - t * eta)
            - s * u2 * (r * q2 + t * (s * t - 2.0 * r * eta))
            - r * w2 * (2.0 * r * q2 + t * (u2 + v2 - s * t - r * eta))
            - v2 * (r * s * q2 + (u2 - r * eta).powi(2) - 2.0 * s * t * (u2 + r * eta))
            + 4.0
                * r
                * u
                * (t * v * w2 * (tau1 - 2.0 * tau2).cos()
                    + q * (s * v * q * (tau1 - 2.0 * tau3).cos() - (s * t + v2) * w * c123))
            - 2.0 * r * v * w * q * (s * t + u2 - v2 - r * eta) * c23);

    let f4 = (r * s * q2 + (u2 - r * (1.0 - r - s - t)) * (s * t - v2) + r * t * w2
        - 2.0 * r * v * w * q * c23)
        .powi(2);

    QuarticSpec { f1, f2, f3, f4 }
}

/// Removes the cubic term by a Taylor shift (repeated synthetic division at
/// `-f1/4`), independent of the closed forms in [`depress_closed_form`].
pub fn depress(qs: &QuarticSpec) -> DepressedQuartic {
    let delta = -qs.f1;
    let h = delta / 4.0;
    let mut k = [1.0, qs.f1, qs.f2, qs.f3, qs.f4];
    for end in (1..5).rev() {
        for i in 1..=end {
            k[i] += h * k[i - 1];
        }
    }
    DepressedQuartic {
        delta,
        a: k[2],
        b: k[3],
        c: k[4],
    }
}

/// `a`, `b`, `c` by the explicit expressions in `f2`, `f3`, `f4` and `delta`.
pub fn depress_closed_form(qs: &QuarticSpec) -> DepressedQuartic {
    let d = -qs.f1;
    DepressedQuartic {
        delta: d,
        a: qs.f2 - 3.0 / 8.0 * d * d,
        b: qs.f3 - d * (d * d - 4.0 * qs.f2) / 8.0,
        c: qs.f4 - d * (3.0 * d.powi(3) - 16.0 * d * qs.f2 - 64.0 * qs.f3) / 256.0,
    }
}

/// Every intermediate of one Ferrari solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FerrariIntermediates {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: Complex,
    pub t: f64,
    /// `x1 <= x2` and `x3 <= x4`, after the optional polish step.
    pub x: [f64; 4],
    /// Largest imaginary part seen before taking real parts.
    pub max_imag: f64,
    /// True when the `P ~ 0` biquadratic branch was taken.
    pub biquadratic: bool,
}

impl FerrariIntermediates {
    /// Roots of the original quartic, `x_i + delta/4`.
    pub fn lambdas(&self, d: &DepressedQuartic) -> [f64; 4] {
        self.x.map(|x| x + d.delta / 4.0)
    }
}

const CBRT2: f64 = 1.259_921_049_894_873_2;

/// Solves the depressed quartic in closed form.
///
/// `tol` gates the imaginary parts of `P^2`, `Q` and the roots. `P` takes the
/// sign of `b`; both signs give the same four roots, the choice only decides
/// which pair holds the largest one.
pub fn ferrari_solve(d: &DepressedQuartic, tol: f64) -> Result<FerrariIntermediates> {
    let DepressedQuartic { delta, a, b, c } = *d;
    if ![delta, a, b, c, tol].iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite);
    }
    if delta < -tol {
        return Err(Error::InvalidParams(format!(
            "negative shift delta = {delta:e}"
        )));
    }
    let r = a * a + 12.0 * c;
    let t = 2.0 * a.powi(3) + 27.0 * b * b - 72.0 * a * c;
    let root = cplx(-4.0 * r.powi(3) + t * t, 0.0).sqrt();
    let mut s = cr(t) + root;
    // S S' = 4 R^3 and the formulas below are symmetric in S <-> S'
    let s_alt = cr(t) - root;
    if s.norm() < 1e-12 * s_alt.norm() {
        s = s_alt;
    }
    let (term_r, term_s) = if s.norm() == 0.0 {
        (cr(0.0), cr(0.0))
    } else {
        let s3 = s.cbrt();
        (cr(r) / s3, s3)
    };
    let p2 = (cr(-4.0 * a) + term_r * (2.0 * CBRT2) + term_s * (CBRT2 * CBRT2)) / 24.0;
    let q = (cr(-4.0 * a) - term_r * CBRT2 - term_s / CBRT2) / 3.0;
    let mut max_imag = p2.im.abs().max(q.im.abs());
    if max_imag > tol {
        return Err(Error::ComplexResidual {
            imag: max_imag,
            tolerance: tol,
        });
    }
    let p2 = p2.re;
    if p2 < -tol {
        return Err(Error::ComplexResidual {
            imag: (-p2).sqrt(),
            tolerance: tol,
        });
    }
    let mut p = p2.max(0.0).sqrt();
    if b < 0.0 {
        p = -p;
    }
    let q = q.re;

    let pivot_floor = 1e-9 * (1.0 + a.abs() + delta.abs());
    let (x, biquadratic) = if p.abs() < pivot_floor {
        if b.abs() > 1e-12 * (1.0 + a.abs()).powf(1.5) {
            return Err(Error::DegeneratePivot { p, b });
        }
        let (x, imag) = biquadratic_roots(a, c);
        max_imag = max_imag.max(imag);
        (x, true)
    } else {
        let h1 = cr(-b / p + q).sqrt() * 0.5;
        let h2 = cr(b / p + q).sqrt() * 0.5;
        max_imag = max_imag.max(h1.im.abs()).max(h2.im.abs());
        ([p - h1.re, p + h1.re, -p - h2.re, -p + h2.re], false)
    };
    if max_imag > tol {
        return Err(Error::ComplexResidual {
            imag: max_imag,
            tolerance: tol,
        });
    }

    Ok(FerrariIntermediates {
        p,
        q,
        r,
        s,
        t,
        x: polish(d, x),
        max_imag,
        biquadratic,
    })
}

/// `x^4 + a x^2 + c = 0`: `x1,2 = -+sqrt(y_big)`, `x3,4 = -+sqrt(y_small)`.
fn biquadratic_roots(a: f64, c: f64) -> ([f64; 4], f64) {
    let disc = a * a - 4.0 * c;
    let mut imag = if disc < 0.0 {
        0.5 * (-disc).sqrt()
    } else {
        0.0
    };
    let sq = disc.max(0.0).sqrt();
    let y_big = 0.5 * (-a + sq);
    let y_small = 0.5 * (-a - sq);
    let mut root = |y: f64| {
        if y < 0.0 {
            imag = imag.max((-y).sqrt());
        }
        y.max(0.0).sqrt()
    };
    let (rb, rs) = (root(y_big), root(y_small));
    ([-rb, rb, -rs, rs], imag)
}

/// One Newton step per root, kept only if it lowers `|p(x)|`; pair order is
/// restored afterwards.
fn polish(d: &DepressedQuartic, x: [f64; 4]) -> [f64; 4] {
    let mut out = x.map(|xi| {
        let slope = d.derivative(xi);
        if slope == 0.0 {
            return xi;
        }
        let next = xi - d.eval(xi) / slope;
        if next.is_finite() && d.eval(next).abs() < d.eval(xi).abs() {
            next
        } else {
            xi
        }
    });
    if out[0] > out[1] {
        out.swap(0, 1);
    }
    if out[2] > out[3] {
        out.swap(2, 3);
    }
    out
}

/// Vieta residuals `|e1|`, `|e2 - a|`, `|e3 + b|`, `|e4 - c|` of the roots.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VietaResiduals(pub [f64; 4]);

impl VietaResiduals {
    pub fn max(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(*x))
    }

    /// Within `tol * (1 + |a| + |b| + |c|)`.
    pub fn within(&self, d: &DepressedQuartic, tol: f64) -> bool {
        self.max() <= tol * (1.0 + d.a.abs() + d.b.abs() + d.c.abs())
    }
}

pub fn vieta_check(d: &DepressedQuartic, f: &FerrariIntermediates) -> VietaResiduals {
    let x = f.x;
    let e1: f64 = x.iter().sum();
    let mut e2 = 0.0;
    let mut e3 = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            e2 += x[i] * x[j];
            for k in (j + 1)..4 {
                e3 += x[i] * x[j] * x[k];
            }
        }
    }
    let e4 = x[0] * x[1] * x[2] * x[3];
    VietaResiduals([
        e1.abs(),
        (e2 - d.a).abs(),
        (e3 + d.b).abs(),
        (e4 - d.c).abs(),
    ])
}

/// The depressed quartic evaluated at `x = -delta/4` (left) against
/// `det(rho)^2` from the assembled matrix (right).
pub fn det_identity_check(p: &CanonicalParams) -> (f64, f64) {
    let d = depress(&coeffs_from_canonical(p));
    let h = d.delta / 4.0;
    let lhs = h.powi(4) + d.a * h * h - d.b * h + d.c;
    let det = det4(&p.matrix()).re;
    (lhs, det * det)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dq(a: f64, b: f64, c: f64) -> DepressedQuartic {
        DepressedQuartic {
            delta: 0.0,
            a,
            b,
            c,
        }
    }

    #[test]
    fn biquadratic_with_known_roots() {
        let d = dq(-5.0, 0.0, 4.0);
        let f = ferrari_solve(&d, d.default_tolerance()).unwrap();
        let mut x = f.x;
        x.sort_by(f64::total_cmp);
        for (got, want) in x.iter().zip([-2.0, -1.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-12, "{x:?}");
        }
        assert!(vieta_check(&d, &f).max() < 1e-12);
    }

    #[test]
    fn quadruple_zero_root() {
        let d = dq(0.0, 0.0, 0.0);
        let f = ferrari_solve(&d, d.default_tolerance()).unwrap();
        assert_eq!(f.x, [0.0; 4]);
        assert_eq!(vieta_check(&d, &f).0, [0.0; 4]);
    }

    #[test]
    fn generic_real_roots() {
        // (x - 0.1)(x - 0.2)(x - 0.3)(x + 0.6)
        let roots = [0.1, 0.2, 0.3, -0.6];
        let e2: f64 = (0..4)
            .flat_map(|i| ((i + 1)..4).map(move |j| (i, j)))
            .map(|(i, j)| roots[i] * roots[j])
            .sum();
        let e3 = 0.1 * 0.2 * 0.3 - 0.6 * (0.1 * 0.2 + 0.1 * 0.3 + 0.2 * 0.3);
        let e4: f64 = roots.iter().product();
        let d = dq(e2, -e3, e4);
        let f = ferrari_solve(&d, d.default_tolerance()).unwrap();
        let mut x = f.x;
        x.sort_by(f64::total_cmp);
        for (got, want) in x.iter().zip([-0.6, 0.1, 0.2, 0.3]) {
            assert!((got - want).abs() < 1e-12, "{x:?}");
        }
        assert!(f.x[1] >= f.x[0] && f.x[3] >= f.x[2]);
    }

    #[test]
    fn complex_roots_are_rejected() {
        // x^4 + 1 has no real root
        let d = dq(0.0, 0.0, 1.0);
        assert!(matches!(
            ferrari_solve(&d, 1e-8),
            Err(Error::ComplexResidual { .. })
        ));
    }

    #[test]
    fn one_real_pair_is_rejected() {
        // x^4 + 1e-3 x: roots 0, -0.1 and a complex pair
        assert!(matches!(
            ferrari_solve(&dq(0.0, 1e-3, 0.0), 1e-8),
            Err(Error::ComplexResidual { .. })
        ));
    }

    #[test]
    fn depress_paths_agree_on_simple_cases() {
        let already = QuarticSpec {
            f1: 0.0,
            f2: 0.3,
            f3: -0.1,
            f4: 0.02,
        };
        let d = depress(&already);
        assert_eq!((d.delta, d.a, d.b, d.c), (0.0, 0.3, -0.1, 0.02));

        let qs = QuarticSpec {
            f1: -1.0,
            f2: 3.0 / 8.0,
            f3: 0.0,
            f4: 0.0,
        };
        let d1 = depress(&qs);
        let d2 = depress_closed_form(&qs);
        assert_eq!(d1.delta, 1.0);
        assert!(d1.a.abs() < 1e-15 && d2.a.abs() < 1e-15);
        assert!((d1.b - d2.b).abs() < 1e-15 && (d1.c - d2.c).abs() < 1e-15);
    }

    #[test]
    fn bell_diagonal_f1() {
        let p = CanonicalParams {
            u: 0.25,
            ..CanonicalParams::diagonal(0.25, 0.25, 0.25)
        };
        assert!((coeffs_from_canonical(&p).f1 + 3.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn maximally_mixed_has_fourfold_root() {
        let p = CanonicalParams::maximally_mixed();
        let qs = coeffs_from_canonical(&p);
        assert!((qs.f1 + 0.25).abs() < 1e-15);
        let d = depress(&qs);
        let f = ferrari_solve(&d, d.default_tolerance()).unwrap();
        for l in f.lambdas(&d) {
            assert!((l - 1.0 / 16.0).abs() < 1e-12);
        }
        let (lhs, rhs) = det_identity_check(&p);
        assert!((lhs - rhs).abs() < 1e-20);
        assert!((rhs - (1.0f64 / 256.0).powi(2)).abs() < 1e-22);
    }

    #[test]
    fn bell_state_triple_root() {
        let p = CanonicalParams::bell_phi_plus();
        let d = depress(&coeffs_from_canonical(&p));
        let f = ferrari_solve(&d, d.default_tolerance()).unwrap();
        let mut l = f.lambdas(&d);
        l.sort_by(|x, y| y.total_cmp(x));
        assert!((l[0] - 1.0).abs() < 1e-9, "{l:?}");
        assert!(l[1..].iter().all(|x| x.abs() < 1e-9), "{l:?}");
        let (lhs, rhs) = det_identity_check(&p);
        assert!(lhs.abs() < 1e-15 && rhs == 0.0);
    }
}
