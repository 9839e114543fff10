use heston_dml::pricer::*;
use heston_dml::sensitivities::*;
use proptest::prelude::*;

fn arb_inputs() -> impl Strategy<Value = (MarketPoint, HestonParams)> {
    (
        -2.0..2.0f64,
        0.05..20.0f64,
        -0.01..0.10f64,
        0.005..3.0f64,
        1e-4..1.0f64,
        1e-4..1.0f64,
        0.1..2.0f64,
        -0.9..0.0f64,
    )
        .prop_map(|(m, tau, r, kappa, v0, theta, sigma, rho)| {
            (
                MarketPoint { m, tau, r },
                HestonParams {
                    kappa,
                    theta,
                    sigma,
                    rho,
                    v0,
                },
            )
        })
}

fn close(analytic: f64, fd: f64) -> bool {
    (analytic - fd).abs() <= (1e-4 * fd.abs()).max(1e-7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn put_within_bounds((pt, p) in arb_inputs()) {
        let q = QuadratureConfig::default();
        let put = normalised_forward_put(&pt, &p, &q).unwrap();
        let tol = 10.0 * q.abs_tol;
        prop_assert!(put <= 1.0 + tol);
        prop_assert!(put >= (1.0 - pt.log_forward().exp()).max(0.0) - tol);
    }

    #[test]
    fn put_falls_with_moneyness((pt, p) in arb_inputs(), dm in 1e-3..1.0f64) {
        let q = QuadratureConfig::default();
        let lo = normalised_forward_put(&pt, &p, &q).unwrap();
        let hi = normalised_forward_put(&MarketPoint { m: pt.m + dm, ..pt }, &p, &q).unwrap();
        prop_assert!(hi <= lo + 10.0 * q.abs_tol);
    }

    #[test]
    fn direct_call_obeys_parity((pt, p) in arb_inputs()) {
        let q = QuadratureConfig::default();
        let put = normalised_forward_put(&pt, &p, &q).unwrap();
        let call = normalised_forward_call_direct(&pt, &p, &q).unwrap();
        prop_assert!((call - put - pt.log_forward().exp_m1()).abs() <= 2.0 * q.abs_tol);
    }

    #[test]
    fn gradient_signs_and_rate_identity((pt, p) in arb_inputs()) {
        let g = full_gradient(&pt, &p, &QuadratureConfig::default()).unwrap();
        prop_assert!(g.is_finite());
        prop_assert!(g.d_m <= 1e-8);
        prop_assert!(g.d_v0 >= -1e-8);
        prop_assert_eq!(g.d_r, pt.tau * g.d_m);
    }

    #[test]
    fn black_scholes_embedding(m in -2.0..2.0f64, tau in 0.05..10.0f64, r in -0.01..0.1f64, v in 0.01..0.6f64) {
        let p = HestonParams::new(1.0, v, SIGMA_FLOOR, 0.0, v).unwrap();
        let pt = MarketPoint::new(m, tau, r).unwrap();
        let heston = normalised_forward_put(&pt, &p, &QuadratureConfig::default()).unwrap();
        prop_assert!((heston - bs_normalised_put(pt.log_forward(), tau, v.sqrt())).abs() < 1e-5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gradient_matches_finite_differences((pt, p) in arb_inputs()) {
        let g = full_gradient(&pt, &p, &fd_quadrature()).unwrap().to_input_order();
        let fd = fd_gradient(&pt, &p, &fd_quadrature()).unwrap().to_input_order();
        for i in 0..8 {
            prop_assert!(close(g[i], fd[i]), "{}: {} vs {}", INPUT_NAMES[i], g[i], fd[i]);
        }
    }
}

#[test]
fn one_sided_differences_at_variance_floor() {
    let p = HestonParams::new(1.2, 0.3, 0.5, -0.4, 0.0).unwrap();
    let pt = MarketPoint::new(0.1, 0.7, 0.02).unwrap();
    let g = full_gradient(&pt, &p, &fd_quadrature()).unwrap().to_input_order();
    let fd = fd_gradient(&pt, &p, &fd_quadrature()).unwrap().to_input_order();
    for i in 0..8 {
        assert!(close(g[i], fd[i]), "{}: {} vs {}", INPUT_NAMES[i], g[i], fd[i]);
    }
}

#[test]
fn theta_sensitivity_in_the_black_scholes_limit() {
    // With sigma at the floor the put is a Black-Scholes put whose variance
    // is the time average of theta + e^{-kappa t}(v0 - theta).
    let q = QuadratureConfig::default();
    let (kappa, tau, v) = (4.0, 3.0, 0.05);
    let p = HestonParams::new(kappa, v, SIGMA_FLOOR, 0.0, v).unwrap();
    let pt = MarketPoint::new(0.05, tau, 0.01).unwrap();
    let g = full_gradient(&pt, &p, &q).unwrap();
    let bs = |theta: f64, v0: f64| {
        let p = HestonParams { theta, v0, ..p };
        bs_normalised_put(pt.log_forward(), tau, bs_effective_vol(&p, tau))
    };
    let h = 1e-6;
    let d_theta = (bs(v + h, v) - bs(v - h, v)) / (2.0 * h);
    let d_v0 = (bs(v, v + h) - bs(v, v - h)) / (2.0 * h);
    assert!(
        (g.d_theta - d_theta).abs() < 1e-3 * d_theta.abs().max(1.0),
        "{} vs {}",
        g.d_theta,
        d_theta
    );
    assert!((g.d_theta + g.d_v0 - d_theta - d_v0).abs() < 1e-3);
}
