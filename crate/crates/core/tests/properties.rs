//! Invariants checked over generated inputs.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use twoqubit::criteria::{partial_transpose, pt_spectrum, Subsystem};
use twoqubit::entanglement::{concurrence_oracle, d_criterion, eof};
use twoqubit::harness::weyl_violation;
use twoqubit::matcore::{c, det4, hermitian_eig, kron, Mat2, DEFAULT_EIG_TOL};
use twoqubit::quartic::{coeffs_from_canonical, depress, depress_closed_form, det_identity_check};
use twoqubit::states::{
    canonicalize, random_hermitian, random_local_unitary, random_state, Ensemble,
};

fn ensemble() -> impl Strategy<Value = Ensemble> {
    prop::sample::select(Ensemble::ALL.to_vec())
}

fn mat2() -> impl Strategy<Value = Mat2> {
    prop::array::uniform4(-2.0f64..2.0).prop_flat_map(|re| {
        prop::array::uniform4(-2.0f64..2.0)
            .prop_map(move |im| Mat2::from_fn(|i, j| c(re[2 * i + j], im[2 * i + j])))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kron_mixed_product(a in mat2(), b in mat2(), x in mat2(), y in mat2()) {
        let lhs = kron(&a, &b) * kron(&x, &y);
        let rhs = kron(&(a * x), &(b * y));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn weyl_bounds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_hermitian(&mut rng);
        let y = random_hermitian(&mut rng);
        let ex = hermitian_eig(&x, DEFAULT_EIG_TOL).unwrap().eigenvalues;
        let ey = hermitian_eig(&y, DEFAULT_EIG_TOL).unwrap().eigenvalues;
        let es = hermitian_eig(&(x + y), DEFAULT_EIG_TOL).unwrap().eigenvalues;
        prop_assert!(weyl_violation(&ex, &ey, &es) <= 1e-10);
    }

    #[test]
    fn det_matches_eigenvalue_product(e in ensemble(), seed in any::<u64>()) {
        let rho = random_state(e, seed).unwrap();
        let spec = hermitian_eig(rho.matrix(), DEFAULT_EIG_TOL).unwrap();
        let product: f64 = spec.eigenvalues.iter().product();
        prop_assert!((det4(rho.matrix()).re - product).abs() < 1e-15);
        prop_assert!(spec.max_residual(rho.matrix()) < 1e-13);
    }

    #[test]
    fn partial_transposes_share_spectrum(e in ensemble(), seed in any::<u64>()) {
        let rho = random_state(e, seed).unwrap();
        let pa = partial_transpose(rho.matrix(), Subsystem::A);
        let pb = partial_transpose(rho.matrix(), Subsystem::B);
        prop_assert!((det4(&pa) - det4(&pb)).norm() < 1e-16);
        let ea = hermitian_eig(&pa, DEFAULT_EIG_TOL).unwrap().eigenvalues;
        let eb = hermitian_eig(&pb, DEFAULT_EIG_TOL).unwrap().eigenvalues;
        for (x, y) in ea.iter().zip(eb) {
            prop_assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn local_unitaries_preserve_invariants(e in ensemble(), seed in any::<u64>()) {
        let rho = random_state(e, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let rotated = rho.rotated(&random_local_unitary(&mut rng)).unwrap();
        let c0 = concurrence_oracle(&rho, DEFAULT_EIG_TOL).unwrap().concurrence;
        let c1 = concurrence_oracle(&rotated, DEFAULT_EIG_TOL).unwrap().concurrence;
        prop_assert!((c0 - c1).abs() < 1e-9);
        let d0 = pt_spectrum(&rho, 1e-9).unwrap();
        let d1 = pt_spectrum(&rotated, 1e-9).unwrap();
        prop_assert!((d0.det_pt - d1.det_pt).abs() < 1e-12);
        prop_assert_eq!(d0.signature.negative, d1.signature.negative);
    }

    #[test]
    fn quartic_identities(seed in any::<u64>()) {
        let rho = random_state(Ensemble::Ginibre { rank: 4 }, seed).unwrap();
        let p = canonicalize(&rho, 1e-9).unwrap().params;
        let qs = coeffs_from_canonical(&p);
        prop_assert!(qs.f1 <= 0.0);
        let taylor = depress(&qs);
        let closed = depress_closed_form(&qs);
        prop_assert!((taylor.a - closed.a).abs() < 1e-14);
        prop_assert!((taylor.b - closed.b).abs() < 1e-14);
        prop_assert!((taylor.c - closed.c).abs() < 1e-14);
        let (lhs, det_sq) = det_identity_check(&p);
        prop_assert!((lhs - det_sq).abs() < 1e-12);
        // -a - delta^2/8 - 2 det(rho) = 4 D
        let det = det4(&p.matrix()).re;
        let chain = -taylor.a - taylor.delta * taylor.delta / 8.0 - 2.0 * det;
        prop_assert!((chain - 4.0 * d_criterion(&p)).abs() < 1e-12);
    }

    #[test]
    fn eof_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = (a.min(b), a.max(b));
        let (e_lo, e_hi) = (eof(lo).unwrap().eof, eof(hi).unwrap().eof);
        prop_assert!((0.0..=1.0).contains(&e_lo) && (0.0..=1.0).contains(&e_hi));
        if lo < hi {
            prop_assert!(e_lo < e_hi);
        }
    }

    #[test]
    fn pt_has_at_most_one_negative_eigenvalue(e in ensemble(), seed in any::<u64>()) {
        let s = pt_spectrum(&random_state(e, seed).unwrap(), 1e-9).unwrap();
        prop_assert!(s.signature.negative <= 1);
        if s.det_pt < -1e-9 {
            prop_assert_eq!((s.signature.positive, s.signature.zero, s.signature.negative), (3, 0, 1));
        }
    }
}

#[test]
fn eof_is_monotone_on_a_grid() {
    let values: Vec<f64> = (0..=1000)
        .map(|i| eof(i as f64 / 1000.0).unwrap().eof)
        .collect();
    assert!(values.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(values[0], 0.0);
    assert!((values[1000] - 1.0).abs() < 1e-15);
}
