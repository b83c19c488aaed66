use num_complex::Complex64;
use proptest::prelude::*;
use qhermit::flow::{multiset_distance, spectrum_at, SpectrumOptions};
use qhermit::matrixkit::{eig_full, DEFAULT_TOL};
use qhermit::models::{build_q, build_q_time_derivative, oracle_spectrum, MatrixFamily, MatrixSample, ModelKind, ModelSpec, SampledFamily};

fn spec(kind: ModelKind, n: usize) -> ModelSpec {
    ModelSpec::new(kind, n).unwrap()
}

fn tridiagonal() -> impl Strategy<Value = ModelSpec> {
    (prop_oneof![Just(ModelKind::Bang), Just(ModelKind::Cyclic)], 2usize..=10).prop_map(|(k, n)| spec(k, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // The library route (refined where double precision cannot resolve the
    // confluence) matches the closed form everywhere on [-1, 1].
    #[test]
    fn spectrum_matches_oracle(s in tridiagonal(), t in -1.0f64..=1.0) {
        let q = build_q(&s, t).unwrap();
        let scale = q.frobenius_norm();
        let got = spectrum_at(&s, t, &SpectrumOptions::default()).unwrap();
        let want = oracle_spectrum(&s, t).unwrap();
        let d = multiset_distance(&got.values, &want);
        prop_assert!(d <= 1e-8 * scale, "{s} t={t}: {d:e}");

        // plain double precision is held to the same bound wherever its own
        // first-order error estimate is inside it
        let eig = eig_full(&q, DEFAULT_TOL).unwrap();
        let bound = (0..s.dim()).map(|k| eig.error_bound(k)).fold(0.0, f64::max);
        if !eig.defective_flag && bound <= 1e-8 * scale {
            prop_assert!(multiset_distance(&eig.eigenvalues, &want) <= 1e-8 * scale);
        }
    }

    #[test]
    fn cyclic_is_even_in_time(n in 2usize..=12, t in -3.0f64..3.0) {
        let s = spec(ModelKind::Cyclic, n);
        prop_assert_eq!(build_q(&s, t).unwrap(), build_q(&s, -t).unwrap());
    }

    #[test]
    fn bang_is_hermitian_past_one(n in 2usize..=12, t in 1.0f64..50.0) {
        let q = build_q(&spec(ModelKind::Bang, n), t).unwrap();
        prop_assert_eq!(q.hermitian_defect(), 0.0);
    }

    #[test]
    fn bang_even_dimension_has_no_real_eigenvalue_below_zero(half in 1usize..=5, t in -2.0f64..-1e-3) {
        let s = spec(ModelKind::Bang, 2 * half);
        let got = spectrum_at(&s, t, &SpectrumOptions::default()).unwrap();
        prop_assert!(got.values.iter().all(|z| z.im.abs() > 1e-8), "{:?}", got.values);
    }

    #[test]
    fn time_derivative_matches_differences(s in tridiagonal(), t in -0.9f64..0.9) {
        let h = 1e-6;
        let fd = (&build_q(&s, t + h).unwrap() - &build_q(&s, t - h).unwrap()).scale_real(0.5 / h);
        let dq = build_q_time_derivative(&s, t).unwrap();
        prop_assert!((&fd - &dq).max_abs() <= 1e-6 * dq.max_abs().max(1.0));
    }
}

#[test]
fn crunchbang_spectrum_and_derivative() {
    let s = ModelSpec::crunchbang();
    for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let got = eig_full(&build_q(&s, t).unwrap(), DEFAULT_TOL).unwrap().eigenvalues;
        let want = oracle_spectrum(&s, t).unwrap();
        assert!(multiset_distance(&got, &want) < 1e-12, "t={t}");
    }
    for t in [-0.5, -0.1, 0.2, 0.8] {
        let h = 1e-4;
        let fd = (&build_q(&s, t + h).unwrap() - &build_q(&s, t - h).unwrap()).scale_real(0.5 / h);
        assert!((&fd - &build_q_time_derivative(&s, t).unwrap()).max_abs() < 1e-10);
    }
    assert!(build_q_time_derivative(&s, 0.0).is_err());
    assert!(build_q_time_derivative(&spec(ModelKind::Bang, 4), 1.0).is_err());
}

#[test]
fn crunchbang_collapses_to_a_shift() {
    let q = build_q(&ModelSpec::crunchbang(), 0.0).unwrap();
    for i in 0..8 {
        for j in 0..8 {
            let want = if j == i + 1 { 1.0 } else { 0.0 };
            assert_eq!(q[(i, j)], Complex64::new(want, 0.0));
        }
    }
}

#[test]
fn sampled_family_reproduces_its_samples() {
    let s = spec(ModelKind::Bang, 3);
    let samples: Vec<MatrixSample> = [0.2, 0.4, 0.6]
        .iter()
        .map(|&t| MatrixSample {
            t,
            matrix: build_q(&s, t).unwrap(),
        })
        .collect();
    let fam = SampledFamily::new(samples).unwrap();
    assert_eq!(fam.dim(), 3);
    assert_eq!(fam.range(), (0.2, 0.6));
    assert_eq!(fam.matrix_at(0.4).unwrap(), build_q(&s, 0.4).unwrap());
    assert!(fam.matrix_at(0.7).is_err());
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(ModelSpec::bang(1).is_err());
    assert!(ModelSpec::new(ModelKind::CrunchBang, 5).is_err());
    assert!(build_q(&spec(ModelKind::Bang, 3), f64::NAN).is_err());
}
