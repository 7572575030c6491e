//! Command-line front end: `analyze`, `canonicalize`, `scan` and `reproduce`.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical pipeline failure or
//! failed campaign, 64 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use twoqubit::criteria::{PTSpectrum, Status};
use twoqubit::entanglement::{eof, Branch};
use twoqubit::harness::{self, CampaignConfig, Check, Tolerances};
use twoqubit::io::parse_state_document;
use twoqubit::matcore::Mat2;
use twoqubit::states::{canonicalize, validate, CanonicalParams, DensityMatrix, Ensemble};
use twoqubit::{entanglement, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PIPELINE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "twoqubit", version, about = "Two-qubit entanglement analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full analysis of one density matrix.
    Analyze(AnalyzeArgs),
    /// Local-unitary reduction to canonical parameters.
    Canonicalize(CanonicalizeArgs),
    /// Seeded verification campaign over a random ensemble.
    Scan(ScanArgs),
    /// Every intermediate for one draw of a campaign.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ToleranceFlags {
    #[arg(long, allow_negative_numbers = true, default_value_t = twoqubit::criteria::DEFAULT_EPS_SEP)]
    pub eps_sep: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = twoqubit::criteria::DEFAULT_EPS_C)]
    pub eps_c: f64,
    /// Base of the scale-aware Ferrari tolerance.
    #[arg(long, allow_negative_numbers = true, default_value_t = twoqubit::quartic::DEFAULT_FERRARI_TOL)]
    pub ferrari_tol: f64,
}

impl ToleranceFlags {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            eps_sep: self.eps_sep,
            eps_c: self.eps_c,
            ferrari_tol: self.ferrari_tol,
            ..Tolerances::default()
        }
    }

    fn problems(&self) -> Vec<String> {
        [
            ("--eps-sep", self.eps_sep),
            ("--eps-c", self.eps_c),
            ("--ferrari-tol", self.ferrari_tol),
        ]
        .iter()
        .filter(|(_, v)| !(v.is_finite() && *v > 0.0))
        .map(|(flag, v)| format!("{flag} must be positive and finite, got {v}"))
        .collect()
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub tolerances: ToleranceFlags,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CanonicalizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub ensemble: String,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated check names.
    #[arg(long)]
    pub checks: String,
    #[command(flatten)]
    pub tolerances: ToleranceFlags,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Per-draw scalars as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Spread draws over all cores; the report is identical.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long)]
    pub ensemble: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub index: u64,
    #[arg(long)]
    pub check: String,
    #[command(flatten)]
    pub tolerances: ToleranceFlags,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceReport {
    pub oracle: f64,
    /// Absent when canonicalization or the closed-form solve failed.
    pub ferrari: Option<f64>,
    pub oracle_lambdas: [f64; 4],
    pub ferrari_lambdas: Option<[f64; 4]>,
    pub branch: Option<Branch>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub canonical_residual: Option<f64>,
    /// `|C_ferrari - C_oracle|`.
    pub concurrence_gap: Option<f64>,
    /// `|det_pt - product of PT eigenvalues|`.
    pub det_pt_gap: f64,
    pub agreement: bool,
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub label: Option<String>,
    pub concurrence: ConcurrenceReport,
    pub eof: f64,
    pub pt_spectrum: PTSpectrum,
    pub det_pt: f64,
    pub d: Option<f64>,
    pub canonical: Option<CanonicalParams>,
    pub verdict: Status,
    pub diagnostics: Diagnostics,
    pub tolerances: Tolerances,
}

pub type Mat2Rows = [[[f64; 2]; 2]; 2];

fn mat2_rows(m: &Mat2) -> Mat2Rows {
    std::array::from_fn(|i| std::array::from_fn(|j| [m.0[i][j].re, m.0[i][j].im]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitaryReport {
    pub a: Mat2Rows,
    pub b: Mat2Rows,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalizationReport {
    pub label: Option<String>,
    pub params: CanonicalParams,
    /// `(U_A x U_B) rho (U_A x U_B)^dag` is the canonical matrix.
    pub unitary: UnitaryReport,
    pub residual: f64,
    pub sweeps: usize,
    pub d: f64,
    pub tolerance: f64,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_)
            | Error::Io(_)
            | Error::NonFinite
            | Error::NotHermitian { .. }
            | Error::TraceNotOne { .. }
            | Error::NotPSD { .. }
            | Error::InvalidParams(_) => EXIT_INPUT,
            Error::UnknownCheck(_) | Error::UnknownEnsemble(_) | Error::InvalidConfig(_) => {
                EXIT_USAGE
            }
            _ => EXIT_PIPELINE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a, stdout),
        Command::Canonicalize(a) => cmd_canonicalize(a, stdout),
        Command::Scan(a) => cmd_scan(a, stdout, stderr),
        Command::Reproduce(a) => cmd_reproduce(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn load_state(path: &Path) -> Result<(Option<String>, DensityMatrix), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let doc = parse_state_document(&text).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("{}: {e}", path.display()),
    })?;
    let rho = validate(&doc.to_mat()).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("{}: {e}", path.display()),
    })?;
    Ok((doc.label, rho))
}

fn emit<T: Serialize>(
    value: &T,
    output: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("reports always serialize");
    match output {
        Some(path) => fs::write(path, text + "\n").map_err(|e| Failure {
            code: EXIT_PIPELINE,
            message: format!("cannot write {}: {e}", path.display()),
        }),
        None => writeln!(stdout, "{text}").map_err(|e| Error::from(e).into()),
    }
}

/// Runs the whole single-state pipeline.
pub fn analyze(
    label: Option<String>,
    rho: &DensityMatrix,
    tolerances: &Tolerances,
) -> Result<AnalysisReport, Failure> {
    let trace = harness::trace_state(rho, None, tolerances)?;
    let verdict = match trace.verdict {
        Some(v) => v,
        None => {
            return Err(twoqubit::criteria::classify(
                trace.det_pt,
                trace.concurrence,
                tolerances.eps_sep,
                tolerances.eps_c,
            )
            .unwrap_err()
            .into())
        }
    };
    let pt_spectrum = twoqubit::criteria::pt_spectrum(rho, tolerances.signature_eps)?;
    Ok(AnalysisReport {
        label,
        concurrence: ConcurrenceReport {
            oracle: trace.concurrence,
            ferrari: trace.ferrari_concurrence,
            oracle_lambdas: trace.oracle_lambdas,
            ferrari_lambdas: trace.ferrari_lambdas,
            branch: trace.branch,
        },
        eof: eof(trace.concurrence)?.eof,
        det_pt: trace.det_pt,
        d: trace.d,
        canonical: trace.canonical,
        verdict,
        diagnostics: Diagnostics {
            canonical_residual: trace.canonical_residual,
            concurrence_gap: trace
                .ferrari_concurrence
                .map(|c| (c - trace.concurrence).abs()),
            det_pt_gap: (pt_spectrum.det_pt - pt_spectrum.eta_product).abs(),
            agreement: (trace.det_pt < -tolerances.eps_sep)
                == (trace.concurrence > tolerances.eps_c),
            errors: trace.errors,
        },
        pt_spectrum,
        tolerances: *tolerances,
    })
}

fn cmd_analyze(args: &AnalyzeArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let problems = args.tolerances.problems();
    if !problems.is_empty() {
        return Err(Failure::usage(problems.join("; ")));
    }
    let (label, rho) = load_state(&args.input)?;
    let report = analyze(label, &rho, &args.tolerances.tolerances())?;
    emit(&report, args.output.as_deref(), stdout)?;
    Ok(EXIT_OK)
}

fn cmd_canonicalize(args: &CanonicalizeArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let (label, rho) = load_state(&args.input)?;
    let tolerance = Tolerances::default().canonical_residual;
    let canon = canonicalize(&rho, tolerance)?;
    let report = CanonicalizationReport {
        label,
        params: canon.params,
        unitary: UnitaryReport {
            a: mat2_rows(&canon.unitary.ua),
            b: mat2_rows(&canon.unitary.ub),
        },
        residual: canon.residual,
        sweeps: canon.sweeps,
        d: entanglement::d_criterion(&canon.params),
        tolerance,
    };
    emit(&report, args.output.as_deref(), stdout)?;
    Ok(EXIT_OK)
}

/// Validates every scan flag, reporting all problems together.
pub fn scan_config(args: &ScanArgs) -> Result<CampaignConfig, Failure> {
    let mut problems = args.tolerances.problems();
    let ensemble = args
        .ensemble
        .parse::<Ensemble>()
        .map_err(|e| problems.push(e.to_string()))
        .ok();
    let checks = Check::parse_list(&args.checks)
        .map_err(|e| problems.push(e.to_string()))
        .ok();
    if args.trials < 1 {
        problems.push("--trials must be at least 1".into());
    }
    if let (Some(ensemble), Some(checks)) = (ensemble, &checks) {
        if checks.is_empty() {
            problems.push("--checks is empty".into());
        }
        for c in checks.iter().filter(|c| !c.applies_to(ensemble)) {
            problems.push(format!(
                "check `{c}` does not apply to ensemble `{ensemble}`"
            ));
        }
    }
    if !problems.is_empty() {
        return Err(Failure::usage(problems.join("; ")));
    }
    Ok(CampaignConfig {
        ensemble: ensemble.expect("checked"),
        trials: args.trials,
        seed: args.seed,
        tolerances: args.tolerances.tolerances(),
        checks: checks.expect("checked"),
        parallel: args.parallel,
    })
}

fn cmd_scan(
    args: &ScanArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    let cfg = scan_config(args)?;
    let (report, rows) = if args.csv.is_some() {
        harness::run_campaign_with_rows(&cfg)?
    } else {
        (harness::run_campaign(&cfg)?, Vec::new())
    };
    if let Some(path) = &args.csv {
        let file = fs::File::create(path).map_err(|e| Failure {
            code: EXIT_PIPELINE,
            message: format!("cannot write {}: {e}", path.display()),
        })?;
        harness::write_csv(&rows, file)?;
    }
    emit(&report, args.output.as_deref(), stdout)?;
    if report.passed() {
        return Ok(EXIT_OK);
    }
    for c in report
        .body
        .checks
        .iter()
        .filter(|c| c.fail > 0 || c.boundary_excess)
    {
        let _ = writeln!(
            stderr,
            "check {}: {} failed, {} boundary of {}",
            c.check,
            c.fail,
            c.boundary,
            c.total()
        );
    }
    Ok(EXIT_PIPELINE)
}

fn cmd_reproduce(args: &ReproduceArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let mut problems = args.tolerances.problems();
    let ensemble = args
        .ensemble
        .parse::<Ensemble>()
        .map_err(|e| problems.push(e.to_string()))
        .ok();
    if let Err(e) = args.check.parse::<Check>() {
        problems.push(e.to_string());
    }
    if !problems.is_empty() {
        return Err(Failure::usage(problems.join("; ")));
    }
    let trace = harness::reproduce(
        ensemble.expect("checked"),
        args.seed,
        args.index,
        &args.check,
        &args.tolerances.tolerances(),
    )?;
    emit(&trace, args.output.as_deref(), stdout)?;
    Ok(EXIT_OK)
}
