use twoqubit::criteria::Status;
use twoqubit::harness::{
    reproduce, run_campaign, run_campaign_with_rows, trace_state, write_csv, CampaignConfig, Check,
    OutcomeStatus, Tolerances,
};
use twoqubit::io::matrix_rows;
use twoqubit::states::{bell_phi_plus, CanonicalParams, DensityMatrix, Ensemble, StateGenerator};
use twoqubit::Error;

fn config(ensemble: Ensemble, trials: u64, seed: u64, checks: &[Check]) -> CampaignConfig {
    CampaignConfig::new(ensemble, trials, seed, checks.to_vec())
}

#[test]
fn single_equivalence_draw_is_reproducible() {
    let cfg = config(Ensemble::Ginibre { rank: 4 }, 1, 7, &[Check::Equivalence]);
    let a = run_campaign(&cfg).unwrap();
    let b = run_campaign(&cfg).unwrap();
    let check = a.check(Check::Equivalence).unwrap();
    assert_eq!(check.total(), 1);
    assert_eq!(check.pass, 1);
    assert_eq!(a.body_json(), b.body_json());
}

#[test]
fn pure_pt_campaign_passes() {
    let cfg = config(Ensemble::HaarPure, 100, 3, &[Check::PurePt]);
    let report = run_campaign(&cfg).unwrap();
    assert_eq!(report.check(Check::PurePt).unwrap().pass, 100);
    assert!(report.passed());
}

#[test]
fn signature_campaign_has_no_double_negatives() {
    let cfg = config(Ensemble::Ginibre { rank: 4 }, 5000, 11, &[Check::Signature]);
    let report = run_campaign(&cfg).unwrap();
    let s = report.check(Check::Signature).unwrap();
    assert_eq!(s.fail, 0);
    assert!(s.tags["negative-det"] > 0);
}

#[test]
fn parallel_matches_serial() {
    let checks = [
        Check::Equivalence,
        Check::Weyl,
        Check::LuInvariance,
        Check::FerrariVsOracle,
    ];
    let mut cfg = config(Ensemble::CanonicalUniform, 300, 5, &checks);
    let serial = run_campaign(&cfg).unwrap();
    cfg.parallel = true;
    let parallel = run_campaign(&cfg).unwrap();
    assert_eq!(serial.body.checks, parallel.body.checks);
}

#[test]
fn counts_add_up() {
    let checks: Vec<Check> = Check::ALL
        .into_iter()
        .filter(|c| c.applies_to(Ensemble::XState))
        .collect();
    let report = run_campaign(&config(Ensemble::XState, 200, 9, &checks)).unwrap();
    for c in &report.body.checks {
        assert_eq!(c.total(), 200, "{}", c.check);
        assert!(c.worst.len() <= 5);
        assert!(c.worst.windows(2).all(|w| w[0].residual >= w[1].residual));
    }
    assert!(report.passed());
}

#[test]
fn incompatible_checks_are_rejected() {
    let cfg = config(
        Ensemble::XState,
        10,
        1,
        &[Check::ConvexSpectrum, Check::PureReduced],
    );
    assert!(matches!(run_campaign(&cfg), Err(Error::InvalidConfig(_))));
    let mut cfg = config(Ensemble::XState, 10, 1, &[Check::Equivalence]);
    cfg.tolerances.eps_sep = 0.0;
    assert!(matches!(run_campaign(&cfg), Err(Error::InvalidConfig(_))));
}

#[test]
fn unknown_check_names() {
    assert!(matches!(
        "no-such-check".parse::<Check>(),
        Err(Error::UnknownCheck(_))
    ));
    let tol = Tolerances::default();
    assert!(matches!(
        reproduce(Ensemble::HaarPure, 1, 0, "no-such-check", &tol),
        Err(Error::UnknownCheck(_))
    ));
}

#[test]
fn reproduce_regenerates_the_campaign_draw() {
    let tol = Tolerances::default();
    for index in [0u64, 17, 123] {
        let draw = StateGenerator::for_draw(99, index)
            .sample(Ensemble::ConvexCombo)
            .unwrap();
        let trace = reproduce(Ensemble::ConvexCombo, 99, index, "eq50-53-convex", &tol).unwrap();
        assert_eq!(trace.matrix, matrix_rows(draw.rho.matrix()));
        assert_eq!(trace.outcome.unwrap().status, OutcomeStatus::Pass);
        assert!(trace.ferrari.is_some() || !trace.errors.is_empty());
    }
}

#[test]
fn reproduce_agrees_with_campaign_outcome() {
    let cfg = config(
        Ensemble::Ginibre { rank: 4 },
        50,
        21,
        &[Check::LuInvariance],
    );
    let report = run_campaign(&cfg).unwrap();
    let worst = &report.check(Check::LuInvariance).unwrap().worst[0];
    let trace = reproduce(
        cfg.ensemble,
        worst.seed,
        worst.index,
        "lu-invariance",
        &cfg.tolerances,
    )
    .unwrap();
    assert_eq!(trace.outcome.unwrap().residual, Some(worst.residual));
}

#[test]
fn bell_trace() {
    let rho = DensityMatrix::from_ket(&bell_phi_plus()).unwrap();
    let tol = Tolerances::default();
    for params in [None, Some(CanonicalParams::bell_phi_plus())] {
        let t = trace_state(&rho, params, &tol).unwrap();
        assert!((t.concurrence - 1.0).abs() < 1e-12);
        assert!((t.det_pt + 1.0 / 16.0).abs() < 1e-15);
        assert!((t.d.unwrap() - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(t.verdict, Some(Status::Inseparable));
    }
}

#[test]
fn maximally_mixed_trace() {
    let t = trace_state(
        &DensityMatrix::maximally_mixed(),
        None,
        &Tolerances::default(),
    )
    .unwrap();
    assert!((t.d.unwrap() + 1.0 / 256.0).abs() < 1e-18);
    assert!((t.det_pt - 1.0 / 256.0).abs() < 1e-18);
    assert_eq!(t.concurrence, 0.0);
    assert_eq!(t.verdict, Some(Status::Separable));
    let ferrari = t.ferrari_lambdas.unwrap();
    assert!(ferrari.iter().all(|l| (l - 1.0 / 16.0).abs() < 1e-12));
}

#[test]
fn csv_rows() {
    let cfg = config(Ensemble::Ginibre { rank: 3 }, 20, 4, &[Check::Equivalence]);
    let (report, rows) = run_campaign_with_rows(&cfg).unwrap();
    assert!(report.passed());
    assert_eq!(rows.len(), 20);
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "index,concurrence,det_pt,d,eta1,eta2,eta3,eta4,verdict"
    );
    assert_eq!(lines.count(), 20);
}

#[test]
fn report_round_trips() {
    let cfg = config(
        Ensemble::HaarPure,
        30,
        8,
        &[Check::PureReduced, Check::EofMonotone],
    );
    let report = run_campaign(&cfg).unwrap();
    let back: twoqubit::harness::CampaignReport = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(back.body.config, report.body.config);
    assert_eq!(back.body.checks.len(), 2);
}
