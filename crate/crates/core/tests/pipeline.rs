use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use twoqubit::criteria::{
    pt_spectrum, pure_pt_eigen, verdict, Status, DEFAULT_EPS_C, DEFAULT_EPS_SEP,
};
use twoqubit::entanglement::{concurrence_ferrari, concurrence_oracle, d_criterion, flip_spectrum};
use twoqubit::matcore::{hermitian_eig, DEFAULT_EIG_TOL};
use twoqubit::states::{
    bell_phi_plus, canonicalize, convex_combo, ket_from_params, pure_concurrence,
    random_local_unitary, random_state, ConvexComboParams, DensityMatrix, Ensemble, PureParams,
};

#[test]
fn werner_verdicts() {
    let expected = [
        (0.2, Status::Separable),
        (1.0 / 3.0, Status::Boundary),
        (0.5, Status::Inseparable),
        (0.9, Status::Inseparable),
    ];
    for (p, status) in expected {
        let rho = DensityMatrix::werner(p).unwrap();
        let v = verdict(&rho, DEFAULT_EPS_SEP, DEFAULT_EPS_C).unwrap();
        assert_eq!(v.status, status, "p = {p}");
        let c = concurrence_oracle(&rho, DEFAULT_EIG_TOL)
            .unwrap()
            .concurrence;
        assert!(
            (c - ((3.0 * p - 1.0) / 2.0).max(0.0)).abs() < 1e-14,
            "p = {p}"
        );
    }
}

#[test]
fn convex_bell_half() {
    let cp = ConvexComboParams::new(0.5, PureParams::bell_phi_plus()).unwrap();
    let rho = convex_combo(&cp).unwrap();
    let s = pt_spectrum(&rho, 1e-9).unwrap();
    assert!((s.det_pt + 3.0 / 256.0).abs() < 1e-14);
    assert!((cp.y_value() - 3.0 / 16.0).abs() < 1e-15);
    let spectrum = flip_spectrum(&rho, 1e-10).unwrap();
    for (got, want) in spectrum.iter().zip(cp.predicted_flip_spectrum()) {
        assert!((got - want).abs() < 1e-10);
    }
}

#[test]
fn rotated_bell_canonicalizes_back() {
    let bell = DensityMatrix::from_ket(&bell_phi_plus()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let rotated = bell.rotated(&random_local_unitary(&mut rng)).unwrap();
        let canon = canonicalize(&rotated, 1e-9).unwrap();
        assert!((d_criterion(&canon.params) - 1.0 / 16.0).abs() < 1e-9);
        let back = canon.unitary.apply(rotated.matrix());
        assert!(back.max_abs_diff(&canon.params.matrix()) < 1e-9);
    }
}

#[test]
fn ferrari_matches_oracle_on_canonical_draws() {
    for seed in 0..200 {
        let rho = random_state(Ensemble::CanonicalUniform, seed).unwrap();
        let p = canonicalize(&rho, 1e-9).unwrap().params;
        let f = concurrence_ferrari(&p, 1e-8).unwrap();
        let o = concurrence_oracle(&rho, DEFAULT_EIG_TOL).unwrap();
        assert!((f.concurrence - o.concurrence).abs() < 1e-8, "seed {seed}");
    }
}

#[test]
fn rank_one_draws_are_pure() {
    for seed in 0..50 {
        let rho = random_state(Ensemble::Ginibre { rank: 1 }, seed).unwrap();
        let e = hermitian_eig(rho.matrix(), DEFAULT_EIG_TOL)
            .unwrap()
            .eigenvalues;
        assert!(e[1..].iter().all(|x| x.abs() <= 1e-10));
    }
}

#[test]
fn pure_state_formulas_agree() {
    let psi = PureParams::new(0.6, 0.3, 0.2, 0.4, -1.1, 2.5).unwrap();
    let ket = ket_from_params(&psi);
    let rho = DensityMatrix::from_ket(&ket).unwrap();
    let c = pure_concurrence(&psi).unwrap();
    assert!(
        (concurrence_oracle(&rho, DEFAULT_EIG_TOL)
            .unwrap()
            .concurrence
            - c)
            .abs()
            < 1e-12
    );
    let mut want = pure_pt_eigen(c);
    want.sort_by(|a, b| b.total_cmp(a));
    let got = pt_spectrum(&rho, 1e-9).unwrap().etas;
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-12);
    }
}

#[test]
fn same_seed_same_state() {
    for e in Ensemble::ALL {
        assert_eq!(
            random_state(e, 77).unwrap(),
            random_state(e, 77).unwrap(),
            "{e}"
        );
    }
}
