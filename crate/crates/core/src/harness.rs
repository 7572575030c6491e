//! Seeded verification campaigns.
//!
//! Every draw `i` of a campaign comes from its own generator stream derived
//! from `(seed, i)`, so any single draw can be regenerated with
//! [`reproduce`] and parallel runs match serial ones draw for draw.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{
    classify, partial_transpose, pt_spectrum, pure_pt_eigen, PTSpectrum, Signature, Status,
    Subsystem, DEFAULT_EPS_C, DEFAULT_EPS_SEP,
};
use crate::entanglement::{
    concurrence_oracle, d_criterion, eof, ferrari_trace, flip_spectrum, Branch, ConcurrenceResult,
    FerrariTrace,
};
use crate::error::{Error, Result};
use crate::io::{matrix_rows, MatrixRows};
use crate::matcore::{self, det4, inner, sigma_yy, Complex, Mat4};
use crate::quartic::{
    det_identity_check, vieta_check, DepressedQuartic, FerrariIntermediates, QuarticSpec,
    DEFAULT_FERRARI_TOL,
};
use crate::states::{
    canonicalize, pure_concurrence, random_hermitian, random_local_unitary, reduced_a, validate,
    CanonicalParams, DensityMatrix, Draw, DrawOrigin, Ensemble, PureParams, StateGenerator,
};

/// Named tolerances; every one must be positive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub eps_sep: f64,
    pub eps_c: f64,
    /// Base of the scale-aware imaginary-part gate in the Ferrari solve.
    pub ferrari_tol: f64,
    pub signature_eps: f64,
    /// Relative agreement of closed-form determinants with cofactor ones.
    pub det_rel: f64,
    pub det_identity: f64,
    pub pure: f64,
    pub convex_spectrum: f64,
    pub convex_det: f64,
    pub weyl_slack: f64,
    pub root_abs: f64,
    pub vieta: f64,
    pub concurrence_paths: f64,
    pub lu_invariance: f64,
    pub canonical_residual: f64,
    /// Largest tolerated share of boundary-band draws per check.
    pub boundary_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eps_sep: DEFAULT_EPS_SEP,
            eps_c: DEFAULT_EPS_C,
            ferrari_tol: DEFAULT_FERRARI_TOL,
            signature_eps: 1e-9,
            det_rel: 1e-12,
            det_identity: 1e-10,
            pure: 1e-10,
            convex_spectrum: 1e-10,
            convex_det: 1e-12,
            weyl_slack: 1e-10,
            root_abs: 1e-9,
            vieta: 1e-8,
            concurrence_paths: 1e-8,
            lu_invariance: 1e-9,
            canonical_residual: 1e-9,
            boundary_fraction: 0.01,
        }
    }
}

impl Tolerances {
    fn named(&self) -> [(&'static str, f64); 16] {
        [
            ("eps_sep", self.eps_sep),
            ("eps_c", self.eps_c),
            ("ferrari_tol", self.ferrari_tol),
            ("signature_eps", self.signature_eps),
            ("det_rel", self.det_rel),
            ("det_identity", self.det_identity),
            ("pure", self.pure),
            ("convex_spectrum", self.convex_spectrum),
            ("convex_det", self.convex_det),
            ("weyl_slack", self.weyl_slack),
            ("root_abs", self.root_abs),
            ("vieta", self.vieta),
            ("concurrence_paths", self.concurrence_paths),
            ("lu_invariance", self.lu_invariance),
            ("canonical_residual", self.canonical_residual),
            ("boundary_fraction", self.boundary_fraction),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let bad: Vec<&str> = self
            .named()
            .iter()
            .filter(|(_, v)| !(v.is_finite() && *v > 0.0))
            .map(|(k, _)| *k)
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "tolerances must be positive and finite: {}",
                bad.join(", ")
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Check {
    Equivalence,
    Signature,
    DetClosedForm,
    QuarticDetIdentity,
    PtDetCriterion,
    PureReduced,
    PurePt,
    ConvexSpectrum,
    Weyl,
    Vieta,
    FerrariVsOracle,
    LuInvariance,
    XStateVerdict,
    EofMonotone,
}

impl Check {
    pub const ALL: [Check; 14] = [
        Check::Equivalence,
        Check::Signature,
        Check::DetClosedForm,
        Check::QuarticDetIdentity,
        Check::PtDetCriterion,
        Check::PureReduced,
        Check::PurePt,
        Check::ConvexSpectrum,
        Check::Weyl,
        Check::Vieta,
        Check::FerrariVsOracle,
        Check::LuInvariance,
        Check::XStateVerdict,
        Check::EofMonotone,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Check::Equivalence => "equivalence",
            Check::Signature => "signature",
            Check::DetClosedForm => "eq24-det",
            Check::QuarticDetIdentity => "eq41-identity",
            Check::PtDetCriterion => "eq45-dpt",
            Check::PureReduced => "eq6-eq7-pure",
            Check::PurePt => "eq8-pure-pt",
            Check::ConvexSpectrum => "eq50-53-convex",
            Check::Weyl => "weyl",
            Check::Vieta => "vieta",
            Check::FerrariVsOracle => "ferrari-vs-oracle",
            Check::LuInvariance => "lu-invariance",
            Check::XStateVerdict => "xstate-verdict",
            Check::EofMonotone => "eof-monotone",
        }
    }

    /// Whether the check is meaningful for draws from `ensemble`.
    pub fn applies_to(&self, ensemble: Ensemble) -> bool {
        match self {
            Check::PureReduced | Check::PurePt => ensemble.is_pure(),
            Check::ConvexSpectrum => ensemble == Ensemble::ConvexCombo,
            Check::XStateVerdict => ensemble == Ensemble::XState,
            _ => true,
        }
    }

    /// Parses a comma-separated list, reporting every unknown name at once.
    pub fn parse_list(s: &str) -> Result<Vec<Check>> {
        let mut out = Vec::new();
        let mut unknown = Vec::new();
        for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            match name.parse::<Check>() {
                Ok(c) if !out.contains(&c) => out.push(c),
                Ok(_) => {}
                Err(_) => unknown.push(name),
            }
        }
        if !unknown.is_empty() {
            return Err(Error::UnknownCheck(unknown.join(", ")));
        }
        Ok(out)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownCheck(s.to_string()))
    }
}

impl TryFrom<String> for Check {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Check> for String {
    fn from(c: Check) -> String {
        c.name().to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub ensemble: Ensemble,
    pub trials: u64,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub checks: Vec<Check>,
    /// Spread draws over the rayon pool; results are identical either way.
    #[serde(default)]
    pub parallel: bool,
}

impl CampaignConfig {
    pub fn new(ensemble: Ensemble, trials: u64, seed: u64, checks: Vec<Check>) -> Self {
        CampaignConfig {
            ensemble,
            trials,
            seed,
            tolerances: Tolerances::default(),
            checks,
            parallel: false,
        }
    }

    /// Collects every problem instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.trials < 1 {
            problems.push("trials must be at least 1".to_string());
        }
        if self.checks.is_empty() {
            problems.push("no checks selected".to_string());
        }
        for c in &self.checks {
            if !c.applies_to(self.ensemble) {
                problems.push(format!(
                    "check {c} does not apply to ensemble {}",
                    self.ensemble
                ));
            }
        }
        if let Err(Error::InvalidConfig(msg)) = self.tolerances.validate() {
            problems.push(msg);
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeStatus {
    Pass,
    Fail,
    Boundary,
}

/// Result of one check on one draw. `residual` is in units of the check's
/// tolerance, so values above 1 fail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub status: OutcomeStatus,
    pub residual: Option<f64>,
    pub tag: Option<String>,
    pub note: Option<String>,
}

impl Outcome {
    fn gate(residual: f64) -> Self {
        Outcome {
            status: if residual <= 1.0 {
                OutcomeStatus::Pass
            } else {
                OutcomeStatus::Fail
            },
            residual: Some(residual),
            tag: None,
            note: None,
        }
    }

    fn status(status: OutcomeStatus) -> Self {
        Outcome {
            status,
            residual: None,
            tag: None,
            note: None,
        }
    }

    fn fail(note: impl Into<String>) -> Self {
        Outcome {
            note: Some(note.into()),
            ..Outcome::status(OutcomeStatus::Fail)
        }
    }

    fn tagged(mut self, tag: &str) -> Self {
        self.tag = Some(tag.to_string());
        self
    }

    fn require(self, ok: bool, note: &str) -> Self {
        if ok {
            self
        } else {
            Outcome {
                status: OutcomeStatus::Fail,
                note: Some(note.to_string()),
                ..self
            }
        }
    }
}

/// Lazily computed quantities shared by the checks of one draw.
struct DrawContext<'a> {
    draw: Draw,
    tol: &'a Tolerances,
    oracle: Option<ConcurrenceResult>,
    pt: Option<PTSpectrum>,
    canonical: Option<std::result::Result<(CanonicalParams, f64), Error>>,
}

impl<'a> DrawContext<'a> {
    fn new(draw: Draw, tol: &'a Tolerances) -> Self {
        DrawContext {
            draw,
            tol,
            oracle: None,
            pt: None,
            canonical: None,
        }
    }

    fn rho(&self) -> &DensityMatrix {
        &self.draw.rho
    }

    fn oracle(&mut self) -> Result<ConcurrenceResult> {
        if self.oracle.is_none() {
            self.oracle = Some(concurrence_oracle(self.rho(), matcore::DEFAULT_EIG_TOL)?);
        }
        Ok(self.oracle.expect("just set"))
    }

    fn pt(&mut self) -> Result<PTSpectrum> {
        if self.pt.is_none() {
            self.pt = Some(pt_spectrum(self.rho(), self.tol.signature_eps)?);
        }
        Ok(self.pt.expect("just set"))
    }

    /// Canonical parameters with the canonicalization residual (zero when
    /// the ensemble produced the parameters directly).
    fn canonical(&mut self) -> Result<(CanonicalParams, f64)> {
        if self.canonical.is_none() {
            self.canonical = Some(match self.draw.origin {
                DrawOrigin::Canonical(p) => Ok((p, 0.0)),
                _ => canonicalize(self.rho(), self.tol.canonical_residual)
                    .map(|c| (c.params, c.residual)),
            });
        }
        self.canonical.clone().expect("just set")
    }

    fn ferrari(&mut self) -> Result<(CanonicalParams, FerrariTrace)> {
        let (p, _) = self.canonical()?;
        let coeffs = crate::quartic::coeffs_from_canonical(&p);
        let tol = self.tol.ferrari_tol * scale_of(&crate::quartic::depress(&coeffs));
        Ok((p, ferrari_trace(&p, Some(tol))?))
    }

    fn ket(&self) -> Result<[Complex; 4]> {
        match self.draw.origin {
            DrawOrigin::Pure { ket } => Ok(ket),
            _ => Ok(
                matcore::hermitian_eig(self.rho().matrix(), matcore::DEFAULT_EIG_TOL)?.eigenvectors
                    [0],
            ),
        }
    }
}

/// The scale factor of the default Ferrari tolerance.
fn scale_of(d: &DepressedQuartic) -> f64 {
    d.default_tolerance() / DEFAULT_FERRARI_TOL
}

/// Sum of `|m[0][p0] m[1][p1] m[2][p2] m[3][p3]|` over all permutations; the
/// magnitude cofactor rounding errors are proportional to.
fn abs_permanent(m: &Mat4) -> f64 {
    let a = m.0.map(|row| row.map(|z| z.norm()));
    let mut total = 0.0;
    for i in 0..4 {
        for j in (0..4).filter(|&j| j != i) {
            for k in (0..4).filter(|&k| k != i && k != j) {
                let l = 6 - i - j - k;
                total += a[0][i] * a[1][j] * a[2][k] * a[3][l];
            }
        }
    }
    total
}

/// `|x - y|` relative to the largest of `|x|`, `|y|`, the summed magnitudes of
/// the closed-form terms and the matrix's permanent bound.
fn relative_gap(x: f64, y: f64, terms: &[f64], m: &Mat4) -> f64 {
    let scale = x
        .abs()
        .max(y.abs())
        .max(terms.iter().map(|t| t.abs()).sum::<f64>())
        .max(abs_permanent(m));
    if scale == 0.0 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

fn max_abs_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn sorted_desc<const N: usize>(mut v: [f64; N]) -> [f64; N] {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Independent stream for the auxiliary randomness of one check on one draw.
fn check_rng(seed: u64, index: u64, check: Check) -> ChaCha8Rng {
    let salt = (check as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt);
    rng.set_stream(index);
    rng
}

fn run_check(ctx: &mut DrawContext, check: Check, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let tol = *ctx.tol;
    match check {
        Check::Equivalence => {
            let c = ctx.oracle()?.concurrence;
            let det_pt = ctx.pt()?.det_pt;
            if !(0.0..=1.0 + 1e-10).contains(&c) {
                return Ok(Outcome::fail(format!("concurrence {c} outside [0, 1]")));
            }
            Ok(match classify(det_pt, c, tol.eps_sep, tol.eps_c) {
                Err(e) => Outcome::fail(e.to_string()),
                Ok(v) if v.status == Status::Boundary || !v.agreement => {
                    Outcome::status(OutcomeStatus::Boundary)
                }
                Ok(v) => Outcome::status(OutcomeStatus::Pass).tagged(match v.status {
                    Status::Inseparable => "inseparable",
                    _ => "separable",
                }),
            })
        }
        Check::Signature => {
            let s = ctx.pt()?;
            let entangled = s.det_pt < -tol.signature_eps;
            let out = Outcome::status(OutcomeStatus::Pass).require(
                s.signature.negative <= 1,
                "two or more negative PT eigenvalues",
            );
            if entangled {
                let expected = Signature {
                    positive: 3,
                    zero: 0,
                    negative: 1,
                };
                Ok(out
                    .require(
                        s.signature == expected,
                        "negative det_pt without signature (3,0,1)",
                    )
                    .tagged("negative-det"))
            } else {
                Ok(out)
            }
        }
        Check::DetClosedForm => {
            let (p, _) = ctx.canonical()?;
            let m = p.matrix();
            let gap = relative_gap(det4(&m).re, p.det_closed_form(), &p.det_terms(), &m);
            Ok(Outcome::gate(gap / tol.det_rel))
        }
        Check::QuarticDetIdentity => {
            let (p, _) = ctx.canonical()?;
            let (lhs, rhs) = det_identity_check(&p);
            let f1 = crate::quartic::coeffs_from_canonical(&p).f1;
            let det = det4(&p.matrix()).re;
            Ok(
                Outcome::gate((lhs - rhs).abs() / (1.0 + rhs) / tol.det_identity)
                    .require(f1 <= 0.0, "f1 > 0")
                    .require(det >= -1e-12, "det(rho) < 0"),
            )
        }
        Check::PtDetCriterion => {
            let (p, _) = ctx.canonical()?;
            let pt = partial_transpose(&p.matrix(), Subsystem::B);
            let gap = relative_gap(
                det4(&pt).re,
                -d_criterion(&p),
                &crate::entanglement::d_terms(&p),
                &pt,
            );
            Ok(Outcome::gate(gap / tol.det_rel))
        }
        Check::PureReduced => {
            let ket = ctx.ket()?;
            let params = PureParams::from_ket(&ket)?;
            let c7 = pure_concurrence(&params)?;
            let root = ((1.0 - c7) * (1.0 + c7)).sqrt();
            let predicted = [(1.0 + root) / 2.0, (1.0 - root) / 2.0];
            let reduced = matcore::jacobi_eigh(&reduced_a(&ket), matcore::DEFAULT_EIG_TOL)?;
            let flipped = sigma_yy().mul_vec(&ket.map(|z| z.conj()));
            let direct = inner(&ket, &flipped).norm();
            let oracle = ctx.oracle()?.concurrence;
            let gap = max_abs_gap(&reduced.eigenvalues, &predicted)
                .max((oracle - c7).abs())
                .max((direct - c7).abs());
            Ok(Outcome::gate(gap / tol.pure))
        }
        Check::PurePt => {
            let params = PureParams::from_ket(&ctx.ket()?)?;
            let predicted = sorted_desc(pure_pt_eigen(pure_concurrence(&params)?));
            let gap = max_abs_gap(&ctx.pt()?.etas, &predicted);
            Ok(Outcome::gate(gap / tol.pure))
        }
        Check::ConvexSpectrum => {
            let DrawOrigin::Convex(cp) = ctx.draw.origin else {
                return Ok(Outcome::fail("draw has no convex-combination parameters"));
            };
            let spectrum = flip_spectrum(ctx.rho(), tol.convex_spectrum)?;
            let spec_gap = max_abs_gap(&spectrum, &cp.predicted_flip_spectrum());
            let det_gap = (ctx.pt()?.det_pt + cp.y_value() / 16.0).abs();
            Ok(
                Outcome::gate((spec_gap / tol.convex_spectrum).max(det_gap / tol.convex_det))
                    .require(
                        cp.x_value() >= 0.0 && cp.y_value() >= 0.0,
                        "X or Y negative",
                    ),
            )
        }
        Check::Weyl => {
            let x = random_hermitian(rng);
            let y = random_hermitian(rng);
            let ex = matcore::hermitian_eig(&x, matcore::DEFAULT_EIG_TOL)?.eigenvalues;
            let ey = matcore::hermitian_eig(&y, matcore::DEFAULT_EIG_TOL)?.eigenvalues;
            let es = matcore::hermitian_eig(&(x + y), matcore::DEFAULT_EIG_TOL)?.eigenvalues;
            Ok(Outcome::gate(
                weyl_violation(&ex, &ey, &es) / tol.weyl_slack,
            ))
        }
        Check::Vieta => {
            let (_, t) = ctx.ferrari()?;
            let d = t.depressed;
            let vieta =
                vieta_check(&d, &t.ferrari).max() / (1.0 + d.a.abs() + d.b.abs() + d.c.abs());
            let recon = t
                .ferrari
                .lambdas(&d)
                .iter()
                .map(|&l| t.coeffs.eval(l).abs())
                .fold(0.0, f64::max)
                / t.coeffs.scale();
            Ok(Outcome::gate(vieta.max(recon) / tol.vieta))
        }
        Check::FerrariVsOracle => {
            let (p, t) = ctx.ferrari()?;
            let assembled = validate(&p.matrix())?;
            let spectrum = flip_spectrum(&assembled, tol.root_abs)?;
            let roots = sorted_desc(t.ferrari.lambdas(&t.depressed));
            let oracle_c = concurrence_oracle(&assembled, matcore::DEFAULT_EIG_TOL)?.concurrence;
            let gap = (max_abs_gap(&roots, &spectrum) / tol.root_abs)
                .max((t.result.concurrence - oracle_c).abs() / tol.concurrence_paths);
            let branch = match t.result.branch_note {
                Some(Branch::X2Max) => "x2-max",
                _ => "x4-max",
            };
            Ok(Outcome::gate(gap)
                .require(t.coeffs.f1 <= 0.0, "f1 > 0")
                .tagged(branch))
        }
        Check::LuInvariance => {
            let lu = random_local_unitary(rng);
            let rotated = ctx.rho().rotated(&lu)?;
            let c0 = ctx.oracle()?.concurrence;
            let d0 = ctx.pt()?.det_pt;
            let c1 = concurrence_oracle(&rotated, matcore::DEFAULT_EIG_TOL)?.concurrence;
            let d1 = det4(&partial_transpose(rotated.matrix(), Subsystem::B)).re;
            let canon = match canonicalize(&rotated, tol.canonical_residual) {
                Ok(c) => c,
                Err(e) => return Ok(Outcome::fail(e.to_string()).tagged("canonicalization-failed")),
            };
            let back = validate(&canon.params.matrix())?;
            let c2 = concurrence_oracle(&back, matcore::DEFAULT_EIG_TOL)?.concurrence;
            let d2 = det4(&partial_transpose(back.matrix(), Subsystem::B)).re;
            let gap = [(c1 - c0), (d1 - d0), (c2 - c0), (d2 - d0)]
                .iter()
                .fold(0.0f64, |m, x| m.max(x.abs()));
            Ok(Outcome::gate(gap / tol.lu_invariance))
        }
        Check::XStateVerdict => {
            let s = ctx.pt()?;
            let c = ctx.oracle()?.concurrence;
            Ok(match classify(s.det_pt, c, tol.eps_sep, tol.eps_c) {
                Err(e) => Outcome::fail(e.to_string()),
                Ok(v) if v.status == Status::Boundary || !v.agreement => {
                    Outcome::status(OutcomeStatus::Boundary)
                }
                Ok(_) => Outcome::status(OutcomeStatus::Pass).require(
                    (s.negativity > tol.eps_sep) == (c > tol.eps_c),
                    "negativity and concurrence disagree",
                ),
            })
        }
        Check::EofMonotone => {
            let (u1, u2): (f64, f64) = (rng.random(), rng.random());
            let (lo, hi) = (u1.min(u2), u1.max(u2));
            let (e_lo, e_hi) = (eof(lo)?.eof, eof(hi)?.eof);
            let e_state = eof(ctx.oracle()?.concurrence)?.eof;
            Ok(Outcome::status(OutcomeStatus::Pass)
                .require(
                    lo == hi || e_lo < e_hi,
                    "entanglement of formation not increasing",
                )
                .require(
                    (0.0..=1.0).contains(&e_state),
                    "entanglement of formation outside [0, 1]",
                ))
        }
    }
}

/// Largest violation of the Weyl bounds for eigenvalues in descending order.
pub fn weyl_violation(ex: &[f64; 4], ey: &[f64; 4], es: &[f64; 4]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            if i <= j {
                worst = worst.max(es[j] - (ex[i] + ey[j - i]));
            }
            if i >= j {
                worst = worst.max(ex[i] + ey[j + 3 - i] - es[j]);
            }
        }
    }
    worst
}

/// Per-draw scalars for the optional CSV export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawRow {
    pub index: u64,
    pub concurrence: f64,
    pub det_pt: f64,
    pub d: Option<f64>,
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub eta4: f64,
    pub verdict: String,
}

fn draw_row(index: u64, ctx: &mut DrawContext) -> Result<DrawRow> {
    let c = ctx.oracle()?.concurrence;
    let s = ctx.pt()?;
    let d = ctx.canonical().ok().map(|(p, _)| d_criterion(&p));
    let verdict = match classify(s.det_pt, c, ctx.tol.eps_sep, ctx.tol.eps_c) {
        Ok(v) => serde_json::to_value(v.status)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        Err(_) => "disagreement".to_string(),
    };
    Ok(DrawRow {
        index,
        concurrence: c,
        det_pt: s.det_pt,
        d,
        eta1: s.etas[0],
        eta2: s.etas[1],
        eta3: s.etas[2],
        eta4: s.etas[3],
        verdict,
    })
}

pub fn write_csv<W: Write>(rows: &[DrawRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

struct DrawResult {
    outcomes: Vec<Outcome>,
    row: Option<DrawRow>,
}

fn evaluate_draw(cfg: &CampaignConfig, index: u64, with_row: bool) -> Result<DrawResult> {
    let draw = StateGenerator::for_draw(cfg.seed, index).sample(cfg.ensemble)?;
    let mut ctx = DrawContext::new(draw, &cfg.tolerances);
    let outcomes = cfg
        .checks
        .iter()
        .map(|&check| {
            let mut rng = check_rng(cfg.seed, index, check);
            run_check(&mut ctx, check, &mut rng).unwrap_or_else(|e| Outcome::fail(e.to_string()))
        })
        .collect();
    let row = if with_row {
        Some(draw_row(index, &mut ctx).unwrap_or_else(|e| DrawRow {
            index,
            concurrence: f64::NAN,
            det_pt: f64::NAN,
            d: None,
            eta1: f64::NAN,
            eta2: f64::NAN,
            eta3: f64::NAN,
            eta4: f64::NAN,
            verdict: format!("error: {e}"),
        }))
    } else {
        None
    };
    Ok(DrawResult { outcomes, row })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Worst {
    pub seed: u64,
    pub index: u64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub index: u64,
    pub note: String,
}

const WORST_KEPT: usize = 5;
const FAILURES_KEPT: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: Check,
    pub pass: u64,
    pub fail: u64,
    pub boundary: u64,
    /// Largest residuals in units of the check's tolerance.
    pub worst: Vec<Worst>,
    /// First failing draws, in index order.
    pub failures: Vec<FailureRecord>,
    pub tags: BTreeMap<String, u64>,
    pub boundary_excess: bool,
}

impl CheckReport {
    fn new(check: Check) -> Self {
        CheckReport {
            check,
            pass: 0,
            fail: 0,
            boundary: 0,
            worst: Vec::new(),
            failures: Vec::new(),
            tags: BTreeMap::new(),
            boundary_excess: false,
        }
    }

    fn record(&mut self, seed: u64, index: u64, o: Outcome) {
        match o.status {
            OutcomeStatus::Pass => self.pass += 1,
            OutcomeStatus::Boundary => self.boundary += 1,
            OutcomeStatus::Fail => {
                self.fail += 1;
                if self.failures.len() < FAILURES_KEPT {
                    self.failures.push(FailureRecord {
                        index,
                        note: o
                            .note
                            .clone()
                            .unwrap_or_else(|| "residual above tolerance".into()),
                    });
                }
            }
        }
        if let Some(tag) = o.tag {
            *self.tags.entry(tag).or_default() += 1;
        }
        if let Some(r) = o.residual {
            self.worst.push(Worst {
                seed,
                index,
                residual: r,
            });
            self.worst.sort_by(|a, b| {
                b.residual
                    .total_cmp(&a.residual)
                    .then(a.index.cmp(&b.index))
            });
            self.worst.truncate(WORST_KEPT);
        }
    }

    pub fn total(&self) -> u64 {
        self.pass + self.fail + self.boundary
    }
}

/// Everything in a report that is determined by the configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBody {
    pub config: CampaignConfig,
    pub checks: Vec<CheckReport>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub body: ReportBody,
    pub wall_time_seconds: f64,
}

impl CampaignReport {
    pub fn passed(&self) -> bool {
        self.body.passed
    }

    pub fn check(&self, c: Check) -> Option<&CheckReport> {
        self.body.checks.iter().find(|r| r.check == c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn body_json(&self) -> String {
        serde_json::to_string_pretty(&self.body).expect("reports always serialize")
    }
}

pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignReport> {
    Ok(run(cfg, false)?.0)
}

/// As [`run_campaign`], also returning the per-draw CSV rows.
pub fn run_campaign_with_rows(cfg: &CampaignConfig) -> Result<(CampaignReport, Vec<DrawRow>)> {
    run(cfg, true)
}

fn run(cfg: &CampaignConfig, with_rows: bool) -> Result<(CampaignReport, Vec<DrawRow>)> {
    cfg.validate()?;
    let start = Instant::now();
    let results: Vec<DrawResult> = if cfg.parallel {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| evaluate_draw(cfg, i, with_rows))
            .collect::<Result<_>>()?
    } else {
        (0..cfg.trials)
            .map(|i| evaluate_draw(cfg, i, with_rows))
            .collect::<Result<_>>()?
    };

    let mut checks: Vec<CheckReport> = cfg.checks.iter().map(|&c| CheckReport::new(c)).collect();
    let mut rows = Vec::new();
    for (index, result) in (0u64..).zip(results) {
        for (report, outcome) in checks.iter_mut().zip(result.outcomes) {
            report.record(cfg.seed, index, outcome);
        }
        rows.extend(result.row);
    }
    for report in checks.iter_mut() {
        report.boundary_excess =
            report.boundary as f64 > cfg.tolerances.boundary_fraction * cfg.trials as f64;
    }
    let passed = checks.iter().all(|r| r.fail == 0 && !r.boundary_excess);
    Ok((
        CampaignReport {
            body: ReportBody {
                config: cfg.clone(),
                checks,
                passed,
            },
            wall_time_seconds: start.elapsed().as_secs_f64(),
        },
        rows,
    ))
}

/// Every intermediate of the pipeline for one state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub ensemble: Option<Ensemble>,
    pub seed: Option<u64>,
    pub index: Option<u64>,
    pub matrix: MatrixRows,
    pub canonical: Option<CanonicalParams>,
    pub canonical_residual: Option<f64>,
    pub coeffs: Option<QuarticSpec>,
    pub depressed: Option<DepressedQuartic>,
    pub ferrari: Option<FerrariIntermediates>,
    pub ferrari_lambdas: Option<[f64; 4]>,
    pub ferrari_concurrence: Option<f64>,
    pub branch: Option<Branch>,
    pub oracle_lambdas: [f64; 4],
    pub concurrence: f64,
    pub etas: [f64; 4],
    pub det_pt: f64,
    pub d: Option<f64>,
    pub verdict: Option<Status>,
    pub check: Option<Check>,
    pub outcome: Option<Outcome>,
    /// Stages that failed, with their error messages.
    pub errors: Vec<String>,
}

/// Runs the whole pipeline on one state. `params` skips canonicalization
/// when the canonical parameters are already known.
pub fn trace_state(
    rho: &DensityMatrix,
    params: Option<CanonicalParams>,
    tol: &Tolerances,
) -> Result<Trace> {
    let origin = match params {
        Some(p) => DrawOrigin::Canonical(p),
        None => DrawOrigin::Matrix,
    };
    let mut ctx = DrawContext::new(Draw { rho: *rho, origin }, tol);
    let oracle = ctx.oracle()?;
    let pt = ctx.pt()?;
    let mut errors = Vec::new();
    let canonical = match ctx.canonical() {
        Ok(c) => Some(c),
        Err(e) => {
            errors.push(format!("canonicalize: {e}"));
            None
        }
    };
    let ferrari = match canonical {
        Some(_) => match ctx.ferrari() {
            Ok((_, t)) => Some(t),
            Err(e) => {
                errors.push(format!("ferrari: {e}"));
                None
            }
        },
        None => None,
    };
    let verdict = match classify(pt.det_pt, oracle.concurrence, tol.eps_sep, tol.eps_c) {
        Ok(v) => Some(v.status),
        Err(e) => {
            errors.push(format!("verdict: {e}"));
            None
        }
    };
    Ok(Trace {
        ensemble: None,
        seed: None,
        index: None,
        matrix: matrix_rows(rho.matrix()),
        canonical: canonical.map(|c| c.0),
        canonical_residual: canonical.map(|c| c.1),
        coeffs: ferrari.map(|t| t.coeffs),
        depressed: ferrari.map(|t| t.depressed),
        ferrari: ferrari.map(|t| t.ferrari),
        ferrari_lambdas: ferrari.map(|t| t.result.lambdas),
        ferrari_concurrence: ferrari.map(|t| t.result.concurrence),
        branch: ferrari.and_then(|t| t.result.branch_note),
        oracle_lambdas: oracle.lambdas,
        concurrence: oracle.concurrence,
        etas: pt.etas,
        det_pt: pt.det_pt,
        d: canonical.map(|c| d_criterion(&c.0)),
        verdict,
        check: None,
        outcome: None,
        errors,
    })
}

/// Regenerates draw `index` of a campaign and traces it, including the
/// outcome of `check` on that draw.
pub fn reproduce(
    ensemble: Ensemble,
    seed: u64,
    index: u64,
    check: &str,
    tol: &Tolerances,
) -> Result<Trace> {
    let check: Check = check.parse()?;
    let draw = StateGenerator::for_draw(seed, index).sample(ensemble)?;
    let params = match draw.origin {
        DrawOrigin::Canonical(p) => Some(p),
        _ => None,
    };
    let mut trace = trace_state(&draw.rho, params, tol)?;
    let mut ctx = DrawContext::new(draw, tol);
    let mut rng = check_rng(seed, index, check);
    trace.outcome =
        Some(run_check(&mut ctx, check, &mut rng).unwrap_or_else(|e| Outcome::fail(e.to_string())));
    trace.ensemble = Some(ensemble);
    trace.seed = Some(seed);
    trace.index = Some(index);
    trace.check = Some(check);
    Ok(trace)
}
