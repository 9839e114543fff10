use std::sync::OnceLock;

use heston_dml::dataset::*;
use heston_dml::pricer::{from_inputs, normalised_forward_put, QuadratureConfig};
use heston_dml::sensitivities::{fd_gradient, fd_quadrature};
use proptest::prelude::*;

fn samples() -> &'static Vec<LabeledSample> {
    static CELL: OnceLock<Vec<LabeledSample>> = OnceLock::new();
    CELL.get_or_init(|| {
        generate(
            64,
            &SamplingRanges::default(),
            FellerMode::Require,
            &QuadratureConfig::default(),
            17,
        )
        .unwrap()
    })
}

#[test]
fn stored_gradients_match_finite_differences() {
    for s in samples().iter().take(10) {
        let (point, params) = from_inputs(&s.x);
        let fd = fd_gradient(&point, &params, &fd_quadrature()).unwrap().to_input_order();
        for j in 0..8 {
            let err = (s.xbar[j] - fd[j]).abs();
            assert!(
                err <= 1e-4 * fd[j].abs().max(s.xbar[j].abs()) || err < 1e-7,
                "x={:?} input {j}: {} vs {}",
                s.x,
                s.xbar[j],
                fd[j]
            );
        }
    }
}

#[test]
fn sample_invariants() {
    for s in samples() {
        assert!(s.feller_satisfied());
        assert!((0.0..=1.0).contains(&s.y));
        assert!(s.xbar.iter().all(|v| v.is_finite()));
        assert_eq!(s.xbar[2], s.x[1] * s.xbar[0]);
    }
}

#[test]
fn normalised_chain_rule() {
    let stats = fit_normaliser(samples()).unwrap();
    let quad = fd_quadrature();
    let g = |xn: &[f64; 8]| {
        let (point, params) = from_inputs(&stats.denormalise_x(xn));
        stats.normalise_y(normalised_forward_put(&point, &params, &quad).unwrap())
    };
    for s in stats.apply(samples()).iter().take(10) {
        for j in 0..8 {
            let h = 1e-5;
            let (mut up, mut dn) = (s.x, s.x);
            up[j] += h;
            dn[j] -= h;
            let fd = (g(&up) - g(&dn)) / (2.0 * h);
            let err = (fd - s.xbar[j]).abs();
            assert!(err <= 1e-4 * fd.abs().max(1e-3), "input {j}: {} vs {fd}", s.xbar[j]);
        }
    }
}

#[test]
fn normalisation_moments_and_inverse() {
    let stats = fit_normaliser(samples()).unwrap();
    let norm = stats.apply(samples());
    let n = norm.len() as f64;
    for j in 0..8 {
        let mean = norm.iter().map(|s| s.x[j]).sum::<f64>() / n;
        let var = norm.iter().map(|s| (s.x[j] - mean).powi(2)).sum::<f64>() / n;
        assert!(
            mean.abs() < 1e-10 && (var.sqrt() - 1.0).abs() < 1e-10,
            "input {j}: {mean} {var}"
        );
    }
    let weights = stats.differential_weights();
    for j in 0..8 {
        let ms = norm.iter().map(|s| s.xbar[j].powi(2)).sum::<f64>() / n;
        assert!((weights[j] * ms - 1.0).abs() < 1e-12);
    }
    for (a, b) in stats.invert(&norm).iter().zip(samples()) {
        for j in 0..8 {
            assert!((a.x[j] - b.x[j]).abs() <= 1e-12 * b.x[j].abs().max(1.0));
            assert!((a.xbar[j] - b.xbar[j]).abs() <= 1e-12 * b.xbar[j].abs().max(1.0));
        }
        assert!((a.y - b.y).abs() <= 1e-12);
    }
}

#[test]
fn files_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    write_csv(std::fs::File::create(&path).unwrap(), samples()).unwrap();
    let back = read_csv(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(&back, samples());

    let meta = DatasetMeta {
        n: 64,
        seed: 17,
        feller_mode: FellerMode::Require,
        ranges: SamplingRanges::default(),
        quadrature: QuadratureConfig::default(),
        normalisation: Some(fit_normaliser(samples()).unwrap()),
    };
    let mut buf = Vec::new();
    write_sidecar(&mut buf, &meta).unwrap();
    assert_eq!(read_sidecar(buf.as_slice()).unwrap(), meta);
}

#[test]
fn regeneration_is_byte_identical() {
    let again = generate(
        64,
        &SamplingRanges::default(),
        FellerMode::Require,
        &QuadratureConfig::default(),
        17,
    )
    .unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    write_csv(&mut a, samples()).unwrap();
    write_csv(&mut b, &again).unwrap();
    assert_eq!(a, b);
}

#[test]
fn malformed_dataset_rows_report_lines() {
    let mut text = CSV_HEADER.join(",");
    text.push_str("\n1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,x\n");
    match read_csv(text.as_bytes()) {
        Err(heston_dml::error::Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn split_of_nothing_fails() {
    assert!(split::<u32>(&[], (0.8, 0.1, 0.1), 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lhs_stratifies_every_input(n in 1usize..300, seed in any::<u64>()) {
        let ranges = SamplingRanges::default();
        let pts = lhs_sample(n, &ranges, seed).unwrap();
        prop_assert_eq!(pts.len(), n);
        for (j, [lo, hi]) in ranges.as_array().into_iter().enumerate() {
            let mut seen = vec![false; n];
            for p in &pts {
                let k = (((p[j] - lo) / (hi - lo)) * n as f64).floor().min(n as f64 - 1.0) as usize;
                prop_assert!(!seen[k], "input {} stratum {} hit twice", j, k);
                seen[k] = true;
            }
        }
    }

    #[test]
    fn split_is_a_seeded_partition(n in 1usize..500, seed in any::<u64>()) {
        let items: Vec<usize> = (0..n).collect();
        let s = split(&items, (0.8, 0.1, 0.1), seed).unwrap();
        let again = split(&items, (0.8, 0.1, 0.1), seed).unwrap();
        prop_assert_eq!(&s.train, &again.train);
        prop_assert_eq!(&s.test, &again.test);
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort();
        prop_assert_eq!(all, items);
    }
}
