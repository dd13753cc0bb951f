use grasskit::instances::{independent_pair, random_pair, GapRegime};
use grasskit::two_projections::reconstruction_residual;
use grasskit::wigner::{make_oracle, recover, Form, Kind, RecoverOptions};
use grasskit::{canonical_form, gap, haar_unitary, principal_angles, svd, Field, Matrix, RngState, Tolerance};
use proptest::prelude::*;

fn field() -> impl Strategy<Value = Field> {
    prop_oneof![Just(Field::Real), Just(Field::Complex)]
}

/// (d, n) with 1 ≤ n < d ≤ 8.
fn dims() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=8).prop_flat_map(|d| (Just(d), 1..d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gap_is_bounded_symmetric_and_invariant(
        (d, n) in dims(), f in field(), seed in any::<u64>()
    ) {
        let mut rng = RngState::new(seed);
        let (p, q) = independent_pair(d, n, f, &mut rng).unwrap();
        let g = gap(&p, &q).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&g));
        prop_assert!((g - gap(&q, &p).unwrap()).abs() < 1e-12);
        let u = haar_unitary(d, f, &mut rng).unwrap();
        prop_assert!((g - gap(&p.conjugate_by(&u), &q.conjugate_by(&u)).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn gap_is_sine_of_largest_angle((d, n) in dims(), f in field(), seed in any::<u64>()) {
        let tol = Tolerance::default();
        let (p, q) = independent_pair(d, n, f, &mut RngState::new(seed)).unwrap();
        let angles = principal_angles(&p, &q, &tol).unwrap();
        prop_assert_eq!(angles.len(), n);
        prop_assert!((gap(&p, &q).unwrap() - angles.largest().sin()).abs() < 1e-8);
    }

    #[test]
    fn canonical_form_reassembles(
        (d, n) in dims(), f in field(), seed in any::<u64>(), pick in 0usize..4
    ) {
        let tol = Tolerance::default();
        let mut rng = RngState::new(seed);
        let regime = GapRegime::ALL[pick];
        prop_assume!(regime.feasible(d, n));
        let pair = random_pair(d, n, f, regime, &mut rng).unwrap();
        let c = canonical_form(&pair.p, &pair.q, &tol).unwrap();
        prop_assert!(reconstruction_residual(&c, &pair.p, &pair.q).unwrap() < 10.0 * d as f64 * tol.eq_tol);
        prop_assert!((c.gap() - gap(&pair.p, &pair.q).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn svd_reconstructs(rows in 1usize..8, cols in 1usize..8, rank in 0usize..8, f in field(), seed in any::<u64>()) {
        // Low-rank products stress the repeated-zero singular value path.
        let mut rng = RngState::new(seed);
        let k = rank.min(rows).min(cols);
        let a = haar_unitary(rows, f, &mut rng).unwrap().columns(0, k);
        let b = haar_unitary(cols, f, &mut rng).unwrap().columns(0, k);
        let m = &a * &b.adjoint();
        let s = svd(&m).unwrap();
        let rebuilt = &(&s.u * &Matrix::from_diagonal_real(f, &s.sigma)) * &s.v.adjoint();
        prop_assert!((&rebuilt - &m).max_abs() < 1e-13);
        prop_assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn recovery_of_standard_unitaries((d, n) in (3usize..=6).prop_flat_map(|d| (Just(d), 1..d)), seed in any::<u64>()) {
        let tol = Tolerance::default();
        let u = haar_unitary(d, Field::Complex, &mut RngState::new(seed)).unwrap();
        let mut oracle = make_oracle(&u, n, Kind::Unitary, Form::Standard, &tol).unwrap();
        let rec = recover(&mut oracle, &tol, RecoverOptions { seed, ..Default::default() }).unwrap();
        prop_assert_eq!(rec.kind, Kind::Unitary);
        prop_assert_eq!(rec.form, Form::Standard);
        prop_assert!(rec.residual < 1e-7);
    }
}
