use num_complex::Complex64;
use proptest::prelude::*;
use qhermit::dynamics::{
    constant, coriolis, dyson_provider, expectation, heisenberg_evolve, heisenberg_trajectory, omega_cauchy_evolve, provider,
    state_pair_evolve, EvolutionGenerator, MetricChoice, Provider, StatePair,
};
use qhermit::flow::multiset_distance;
use qhermit::matrixkit::{eigenvalues, hermitian_eigen, CMatrix, MatrixError, DEFAULT_TOL};
use qhermit::metric::quasi_residual;
use qhermit::models::{build_q, ModelSpec};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn square(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(-1.0f64..1.0, 2 * n * n).prop_map(move |e| CMatrix::from_fn(n, n, |i, j| c(e[2 * (i * n + j)], e[2 * (i * n + j) + 1])))
}

fn hermitian(n: usize) -> impl Strategy<Value = CMatrix> {
    square(n).prop_map(|m| (&m + &m.adjoint()).scale_real(0.5))
}

fn state(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_map(|v| v.into_iter().map(|(a, b)| c(a + 0.5, b)).collect())
}

/// `exp(t K)` for Hermitian `K`: a positive Dyson map with `Σ = i K`.
fn exp_map(k: &CMatrix, t: f64) -> Result<CMatrix, MatrixError> {
    let (w, v) = hermitian_eigen(k, DEFAULT_TOL)?;
    let d: Vec<f64> = w.iter().map(|x| (x * t).exp()).collect();
    Ok(&(&v * &CMatrix::from_real_diag(&d)) * &v.adjoint())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // With B = 0 the flow is a similarity transform whatever H is.
    #[test]
    fn heisenberg_flow_is_isospectral(n in 2usize..=5, seed in (square(5), square(5), square(5))) {
        let pick = |m: &CMatrix| CMatrix::from_fn(n, n, |i, j| m[(i, j)]);
        let (h0, h1) = (pick(&seed.0), pick(&seed.1));
        let h: Provider = provider(move |t: f64| -> Result<CMatrix, MatrixError> { Ok(h0.axpy(c(t, 0.0), &h1)) });
        // spread diagonal keeps the eigenvalues well conditioned
        let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64).collect();
        let a0 = &CMatrix::from_real_diag(&diag) + &pick(&seed.2).scale_real(0.2);
        let a1 = heisenberg_evolve(&a0, &EvolutionGenerator::heisenberg(h, None), 0.0, 1.0, 1000).unwrap();
        let drift = multiset_distance(&eigenvalues(&a0, DEFAULT_TOL).unwrap(), &eigenvalues(&a1, DEFAULT_TOL).unwrap());
        prop_assert!(drift <= 1e-8 * a0.frobenius_norm(), "{drift:e}");
    }

    // A(t) = Ω⁻¹(t) a Ω(t) for fixed Hermitian a, and A stays quasi-Hermitian
    // for the moving metric Θ = Ω†Ω.
    #[test]
    fn pullback_of_a_fixed_hermitian(k in hermitian(4), img in hermitian(4)) {
        let k = k.scale_real(0.5);
        let kk = k.clone();
        let omega: Provider = provider(move |t: f64| exp_map(&kk, t));
        let sigma_exact = k.scale(Complex64::i());
        let sigma_numeric = coriolis(&omega, 0.3, None, None).unwrap();
        prop_assert!((&sigma_numeric - &sigma_exact).max_abs() <= 1e-8);

        let o0 = omega(0.0).unwrap();
        let a0 = &(&o0.inverse().unwrap() * &img) * &o0;
        let gen = EvolutionGenerator::heisenberg(constant(sigma_exact.clone()), None);
        for (t, a) in heisenberg_trajectory(&a0, &gen, 0.0, 1.0, 1000).unwrap().into_iter().step_by(100) {
            let o = omega(t).unwrap();
            let want = &(&o.inverse().unwrap() * &img) * &o;
            prop_assert!((&a - &want).frobenius_norm() <= 1e-8 * want.frobenius_norm());
            let theta = &o.adjoint() * &o;
            let r = quasi_residual(&a, &theta).unwrap() / (a.frobenius_norm() * theta.frobenius_norm());
            prop_assert!(r <= 1e-7, "t={t}: {r:e}");
        }

        let o1 = omega_cauchy_evolve(&o0, &constant(sigma_exact), 0.0, 1.0, 1000).unwrap();
        let want = omega(1.0).unwrap();
        prop_assert!((&o1 - &want).frobenius_norm() <= 1e-10 * want.frobenius_norm());
    }

    #[test]
    fn biorthogonal_overlap_is_conserved(g in square(4), ket in state(4), partner in state(4)) {
        let s0 = StatePair::new(ket, partner).unwrap();
        let s1 = state_pair_evolve(&s0, &EvolutionGenerator::with_state_generator(constant(g)), 0.0, 1.0, 1000).unwrap();
        prop_assert!((s1.overlap() - s0.overlap()).norm() <= 1e-10 * s0.overlap().norm().max(1.0));
    }

    #[test]
    fn expectation_of_a_quasi_hermitian_is_real(k in hermitian(4), img in hermitian(4), ket in state(4)) {
        let o = exp_map(&k.scale_real(0.5), 1.0).unwrap();
        let theta = &o.adjoint() * &o;
        let a = &(&o.inverse().unwrap() * &img) * &o;
        let s = StatePair::from_metric(ket, &theta).unwrap();
        let v = expectation(&s, &a).unwrap();
        prop_assert!(v.im.abs() <= 1e-12 * a.frobenius_norm() * s.overlap().norm().max(1.0));
        prop_assert!(s.overlap().im.abs() <= 1e-12 * s.overlap().norm());
    }
}

// The same pullback oracle driven by the library's own Dyson maps of each
// model, with Σ from central differences.
#[test]
fn pullback_oracle_for_every_model() {
    let cases = [
        (ModelSpec::bang(4).unwrap(), MetricChoice::Family { kappa: vec![] }, 0.4, 0.6),
        (ModelSpec::cyclic(4).unwrap(), MetricChoice::Family { kappa: vec![1.0, 2.0, 3.0, 4.0] }, 0.5, 0.8),
        (ModelSpec::crunchbang(), MetricChoice::Diagonal, 0.35, 0.65),
    ];
    for (spec, choice, t0, t1) in cases {
        let n = spec.dim();
        let omega = dyson_provider(spec, choice, DEFAULT_TOL);
        let om = omega.clone();
        let sigma = provider(move |t| coriolis(&om, t, None, None));
        let img = CMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => c(i as f64, 0.0),
            1 => c(0.5, if i < j { 0.25 } else { -0.25 }),
            _ => c(0.0, 0.0),
        });
        let o0 = omega(t0).unwrap();
        let a0 = &(&o0.inverse().unwrap() * &img) * &o0;
        let a1 = heisenberg_evolve(&a0, &EvolutionGenerator::heisenberg(sigma, None), t0, t1, 400).unwrap();
        let o1 = omega(t1).unwrap();
        let want = &(&o1.inverse().unwrap() * &img) * &o1;
        let err = (&a1 - &want).frobenius_norm() / want.frobenius_norm();
        assert!(err < 1e-6, "{spec}: {err:e}");
    }
}

#[test]
fn schrodinger_generator_is_h_minus_sigma() {
    let q = build_q(&ModelSpec::bang(3).unwrap(), 0.5).unwrap();
    let sigma = CMatrix::identity(3).scale_real(0.25);
    let gen = EvolutionGenerator::schrodinger(constant(q.clone()), constant(sigma.clone()), None);
    assert_eq!(gen.g(0.0).unwrap(), &q - &sigma);
    assert!(EvolutionGenerator::heisenberg(constant(sigma), None).g(0.0).is_err());
}
