use heston_dml::marketdata::{percent_to_decimal, read_par_yields_percent, SAMPLE_PAR_YIELDS_PCT};
use heston_dml::pricer::{HestonParams, MarketPoint};
use heston_dml::sensitivities::{fd_gradient, fd_quadrature};
use heston_dml_web::demo::*;

const P: ParamArray = [2.0, 0.06, 0.4, -0.6, 0.05];

#[test]
fn greeks_match_finite_differences() {
    let out = price_and_greeks(P, -0.1, 0.75, 0.02).unwrap();
    let point = MarketPoint::new(-0.1, 0.75, 0.02).unwrap();
    let params = HestonParams::new(P[0], P[1], P[2], P[3], P[4]).unwrap();
    let fd = fd_gradient(&point, &params, &fd_quadrature()).unwrap().to_input_order();
    assert!(out[0] > 0.0 && out[0] < 1.0);
    for j in 0..8 {
        assert!(
            (out[j + 1] - fd[j]).abs() <= 1e-4 * fd[j].abs().max(1e-6),
            "input {j}: {} vs {}",
            out[j + 1],
            fd[j]
        );
    }
}

#[test]
fn invalid_inputs_are_errors() {
    assert!(price_and_greeks([-1.0, 0.06, 0.4, -0.6, 0.05], 0.0, 1.0, 0.0).is_err());
    assert!(price_and_greeks(P, 0.0, -1.0, 0.0).is_err());
}

#[test]
fn quiet_variance_gives_a_flat_smile() {
    let (kappa, theta, v0, tau) = (1.5, 0.04, 0.09, 0.5);
    let pts = smile([kappa, theta, 1e-3, 0.0, v0], tau, 0.01, -0.3, 0.3, 7).unwrap();
    let x = kappa * tau;
    let expected = (theta + (1.0 - (-x).exp()) / x * (v0 - theta)).sqrt();
    for (m, iv) in pts {
        let iv = iv.unwrap();
        assert!((iv - expected).abs() < 1e-3, "m = {m}: {iv} vs {expected}");
    }
}

#[test]
fn negative_correlation_skews_the_smile() {
    let pts = smile([1.5, 0.04, 0.6, -0.7, 0.04], 1.0, 0.0, -0.3, 0.3, 13).unwrap();
    assert_eq!(pts.len(), 13);
    assert!((pts[0].0 + 0.3).abs() < 1e-15 && (pts[12].0 - 0.3).abs() < 1e-15);
    let ivs: Vec<f64> = pts.iter().map(|p| p.1.unwrap()).collect();
    // Low strikes sit at high log-moneyness.
    assert!(ivs[12] > ivs[6] && ivs[12] > ivs[0], "{ivs:?}");
    assert!(ivs[6..].windows(2).all(|w| w[1] > w[0]), "{ivs:?}");
}

#[test]
fn sample_curve_text_round_trips_and_fits() {
    let text = sample_par_yields_text();
    assert_eq!(
        read_par_yields_percent(text.as_bytes()).unwrap(),
        percent_to_decimal(&SAMPLE_PAR_YIELDS_PCT)
    );
    let fit = fit_par_yields(&text, 60).unwrap();
    assert_eq!(fit.grid.len(), 60);
    assert_eq!(fit.grid[59].0, 30.0);
    assert!(fit.curve.rms_residual < 30e-4);
    assert!(fit.grid.iter().all(|(_, r)| r.is_finite()));
    assert!(fit_par_yields("maturity_years,rate_percent\n1,x\n", 10).is_err());
}
