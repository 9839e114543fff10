//! Acceptance gate: one line per criterion, non-zero exit if any fails.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p heston-dml-cli --test acceptance -- 3 12`.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use heston_dml::calibrate::Backend;
use heston_dml::calibrate::{
    de_minimize, model_price, nelder_mead, CalibrationProblem, DeConfig, NelderMeadConfig, Quote, QuoteSet, Strategy,
};
use heston_dml::dataset::{fit_normaliser, generate, split, FellerMode, LabeledSample, SamplingRanges, Split};
use heston_dml::marketdata::{fit_nss, percent_to_decimal, rate_at, YieldCurve, SAMPLE_PAR_YIELDS_PCT};
use heston_dml::pricer::quadrature::integrate_half_line;
use heston_dml::pricer::{
    bs_normalised_put, char_fn, from_inputs, mc_price, normalised_forward_put, HestonParams, MarketPoint,
    QuadratureConfig,
};
use heston_dml::sensitivities::{fd_gradient, fd_quadrature, price_and_gradient};
use heston_dml::twinnet::{evaluate_mse_bp, train, Network, NetworkSpec, TrainOutcome, TrainingConfig, TrainingData};
use num_complex::Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn quad() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn c1_greeks() -> Outcome {
    let start = Instant::now();
    let samples = generate(200, &SamplingRanges::default(), FellerMode::Allow, &quad(), 101).unwrap();
    let mut worst = 0.0f64;
    for s in &samples {
        let (point, params) = from_inputs(&s.x);
        let analytic = price_and_gradient(&point, &params, &quad())
            .unwrap()
            .gradient
            .to_input_order();
        let fd = fd_gradient(&point, &params, &fd_quadrature()).unwrap().to_input_order();
        for j in 0..8 {
            let allowed = (1e-4 * analytic[j].abs().max(fd[j].abs())).max(1e-7);
            worst = worst.max((analytic[j] - fd[j]).abs() / allowed);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1.0 && secs < 300.0,
        format!("1600 partials, worst error {worst:.3} x tolerance, {secs:.0}s"),
    )
}

fn c2_rate_identity() -> Outcome {
    let samples = generate(200, &SamplingRanges::default(), FellerMode::Allow, &quad(), 101).unwrap();
    let mut worst = 0.0f64;
    for s in &samples {
        let (point, params) = from_inputs(&s.x);
        let g = price_and_gradient(&point, &params, &quad()).unwrap().gradient;
        let gap = (g.d_r - point.tau * g.d_m).abs();
        worst = worst.max(gap / (f64::EPSILON * g.d_r.abs().max(f64::MIN_POSITIVE)));
    }
    outcome(
        worst <= 1.0,
        format!("largest |d_r - tau d_m| = {worst:.1} ulp over 200 points"),
    )
}

fn c3_bs_embedding() -> Outcome {
    let v0 = 0.04;
    let params = HestonParams::new(1.0, v0, 1e-4, 0.0, v0).unwrap();
    let mut worst = 0.0f64;
    for m in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        for tau in [0.1, 0.5, 1.0, 5.0, 10.0] {
            for r in [-0.01, 0.03, 0.1] {
                let point = MarketPoint::new(m, tau, r).unwrap();
                let heston = normalised_forward_put(&point, &params, &quad()).unwrap();
                let bs = bs_normalised_put(point.log_forward(), tau, v0.sqrt());
                worst = worst.max((heston - bs).abs());
            }
        }
    }
    outcome(worst < 1e-5, format!("max |Heston - BS| = {worst:.2e} on 75 points"))
}

fn c4_monte_carlo() -> Outcome {
    let samples = generate(20, &SamplingRanges::default(), FellerMode::Require, &quad(), 4).unwrap();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for (i, s) in samples.iter().enumerate() {
        let (point, params) = from_inputs(&s.x);
        let steps = ((20.0 * point.tau).ceil() as usize).max(20);
        let analytic = normalised_forward_put(&point, &params, &quad()).unwrap();
        let mc = mc_price(&point, &params, 1_000_000, steps, 1000 + i as u64).unwrap();
        let z = (analytic - mc.estimate).abs() / mc.std_error;
        worst = worst.max(z);
        failures += usize::from(z > 3.0);
    }
    outcome(failures == 0, format!("20 points, 1e6 paths, largest |z| = {worst:.2}"))
}

/// Normalised forward call from the two-probability form,
/// `e^F P1 - P2 = (e^F - 1)/2 + 1/pi int Re[e^{iuF} (e^F phi(u - i) - phi(u)) / (iu)] du`.
fn gil_pelaez_call(point: &MarketPoint, params: &HestonParams) -> f64 {
    let cfg = QuadratureConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        ..quad()
    };
    let f = point.log_forward();
    let phi = |z: Complex64| char_fn(z, params, point.tau).map(|t| t.phi);
    let integrand = |u: f64| -> heston_dml::Result<[f64; 1]> {
        let num = f.exp() * phi(Complex64::new(u, -1.0))? - phi(Complex64::new(u, 0.0))?;
        Ok([(Complex64::new(0.0, u * f).exp() * num / Complex64::new(0.0, u)).re])
    };
    let envelope = |u: f64| -> heston_dml::Result<f64> {
        Ok((f.exp() * phi(Complex64::new(u, -1.0))?.norm() + phi(Complex64::new(u, 0.0))?.norm()) / (u * u))
    };
    let [integral] = integrate_half_line(&cfg, integrand, envelope).unwrap();
    0.5 * f.exp_m1() + integral / std::f64::consts::PI
}

fn c5_parity_and_bounds() -> Outcome {
    let q = quad();
    let samples = generate(200, &SamplingRanges::default(), FellerMode::Allow, &q, 202).unwrap();
    let mut worst_parity = 0.0f64;
    let mut bound_breaks = 0;
    for s in &samples {
        let (point, params) = from_inputs(&s.x);
        let put = normalised_forward_put(&point, &params, &q).unwrap();
        let call = gil_pelaez_call(&point, &params);
        let tol = q.abs_tol + q.rel_tol * put.abs().max(call.abs());
        worst_parity = worst_parity.max((call - put - point.log_forward().exp_m1()).abs() / tol);
        let floor = (-point.log_forward().exp_m1()).max(0.0);
        bound_breaks += usize::from(!(put >= floor - q.abs_tol && put <= 1.0 + q.abs_tol));
    }
    outcome(
        worst_parity <= 2.0 && bound_breaks == 0,
        format!("parity residual up to {worst_parity:.2} x tolerance, {bound_breaks} bound violations on 200 points"),
    )
}

fn c6_adjoint() -> Outcome {
    let mut worst = 0.0f64;
    let mut archs = vec![(6, 100, false), (6, 100, true), (1, 1, false)];
    let mut state = 17u64;
    let mut next = |n: u64| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 33) % n
    };
    for _ in 0..12 {
        archs.push((1 + next(6) as usize, 1 + next(100) as usize, next(2) == 1));
    }
    for (k, &(hidden, neurons, wide)) in archs.iter().enumerate() {
        let spec = NetworkSpec {
            hidden_layers: hidden,
            neurons,
            wide_deep: wide,
            ..Default::default()
        };
        let mut net = Network::new(&spec, k as u64).unwrap();
        if let Some(w) = net.wide_weights_mut() {
            w.iter_mut().enumerate().for_each(|(i, v)| *v = 0.3 - 0.07 * i as f64);
        }
        let x: Vec<f64> = (0..8).map(|j| ((j * 7 + k * 3) % 11) as f64 / 5.0 - 1.0).collect();
        let adj = net.adjoint(&net.forward(&x, None));
        for j in 0..8 {
            let h = 1e-6;
            let (mut up, mut dn) = (x.clone(), x.clone());
            up[j] += h;
            dn[j] -= h;
            let fd = (net.predict(&up) - net.predict(&dn)) / (2.0 * h);
            worst = worst.max((adj[j] - fd).abs() / adj[j].abs().max(fd.abs()).max(1e-3));
        }
    }
    outcome(
        worst < 1e-5,
        format!(
            "{} architectures up to 6x100, worst relative error {worst:.2e}",
            archs.len()
        ),
    )
}

// Shared 16K experiment for criteria 7, 8, 9 and 11.

const SEEDS: [u64; 3] = [1, 2, 3];

struct Experiment {
    raw: Split<LabeledSample>,
    dml: Vec<TrainOutcome>,
    classical: Vec<TrainOutcome>,
    clipped: Vec<TrainOutcome>,
}

fn experiment() -> &'static Experiment {
    static CELL: OnceLock<Experiment> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let samples = generate(16384, &SamplingRanges::default(), FellerMode::Require, &quad(), 1).unwrap();
        let raw = split(&samples, (0.8, 0.1, 0.1), 1).unwrap();
        let stats = fit_normaliser(&raw.train).unwrap();
        let (tr, va) = (stats.apply(&raw.train), stats.apply(&raw.val));
        eprintln!("  16K dataset ready ({:.0}s)", start.elapsed().as_secs_f64());
        let run = |lambda: f64, clip: Option<f64>, seed: u64| {
            let config = TrainingConfig {
                lambda,
                grad_clip: clip,
                seed,
                ..Default::default()
            };
            let data = TrainingData {
                train: &tr,
                val: &va,
                stats: &stats,
            };
            let out = train(data, &NetworkSpec::default(), &config).unwrap();
            eprintln!(
                "  trained lambda={lambda} clip={clip:?} seed={seed}: test {:.3} bp ({:.0}s)",
                evaluate_mse_bp(&out.checkpoint, &raw.test),
                start.elapsed().as_secs_f64()
            );
            out
        };
        let dml = SEEDS.iter().map(|&s| run(1.0, None, s)).collect();
        let classical = SEEDS.iter().map(|&s| run(0.0, None, s)).collect();
        let clipped = SEEDS.iter().map(|&s| run(1.0, Some(4.0), s)).collect();
        Experiment {
            raw,
            dml,
            classical,
            clipped,
        }
    })
}

fn test_bp(runs: &[TrainOutcome]) -> Vec<f64> {
    let test = &experiment().raw.test;
    runs.iter().map(|r| evaluate_mse_bp(&r.checkpoint, test)).collect()
}

fn fmt_bp(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("/")
}

fn c7_dml_vs_classical() -> Outcome {
    let e = experiment();
    let dml = test_bp(&e.dml[..1])[0];
    let classical = test_bp(&e.classical[..1])[0];
    outcome(
        dml <= 1.5 && dml < classical,
        format!(
            "split {}/{}/{}, seed {}: DML {dml:.3} bp, classical {classical:.3} bp",
            e.raw.train.len(),
            e.raw.val.len(),
            e.raw.test.len(),
            SEEDS[0]
        ),
    )
}

fn c8_small_data() -> Outcome {
    let e = experiment();
    let (dml, classical) = (test_bp(&e.dml), test_bp(&e.classical));
    let ratios: Vec<f64> = classical.iter().zip(&dml).map(|(c, d)| c / d).collect();
    outcome(
        ratios.iter().all(|&r| r >= 2.0),
        format!(
            "seeds {SEEDS:?}: DML {} bp, classical {} bp, ratios {}",
            fmt_bp(&dml),
            fmt_bp(&classical),
            ratios.iter().map(|r| format!("{r:.1}x")).collect::<Vec<_>>().join("/")
        ),
    )
}

fn c9_clipping() -> Outcome {
    let e = experiment();
    let applied = e
        .clipped
        .iter()
        .flat_map(|r| &r.history)
        .map(|h| h.applied_norm_max)
        .fold(0.0, f64::max);
    let fired: usize = e.clipped.iter().flat_map(|r| &r.history).map(|h| h.clipped_steps).sum();
    let (clipped, plain) = (test_bp(&e.clipped), test_bp(&e.dml));
    let wins = clipped.iter().zip(&plain).filter(|(c, p)| c <= p).count();
    outcome(
        applied <= 4.0 + 1e-9 && wins >= 2,
        format!(
            "max applied norm {applied:.6}, clipping fired on {fired} steps; clipped {} bp vs unclipped {} bp, {wins}/3 seeds hold",
            fmt_bp(&clipped),
            fmt_bp(&plain)
        ),
    )
}

fn reference_params() -> HestonParams {
    HestonParams::new(1.4719, 0.1072, 1.5986, -0.3899, 1.12e-5).unwrap()
}

fn round_trip_surface() -> QuoteSet {
    let spot = 100.0;
    let curve: YieldCurve = fit_nss(&percent_to_decimal(&SAMPLE_PAR_YIELDS_PCT)).unwrap();
    let backend = Backend::Analytic(quad());
    let truth = reference_params();
    let mut quotes = Vec::new();
    for tau in [0.25, 0.5, 1.0, 2.0, 3.0] {
        for k in 0..15 {
            let mut q = Quote {
                tau,
                strike: 70.0 + 5.0 * k as f64,
                price: 0.0,
                rate: rate_at(&curve, tau),
            };
            q.price = model_price(&q, spot, &truth, &backend).unwrap();
            quotes.push(q);
        }
    }
    QuoteSet { spot, quotes }
}

fn perturbed_start() -> HestonParams {
    let a = reference_params().to_array();
    let f = [1.2, 0.8, 1.2, 0.8, 1.2];
    HestonParams::from_array(std::array::from_fn(|i| a[i] * f[i]))
}

fn nm_config() -> NelderMeadConfig {
    NelderMeadConfig {
        tol: 1e-6,
        ..Default::default()
    }
}

fn c10_round_trip() -> Outcome {
    let problem = CalibrationProblem::five(round_trip_surface(), Backend::Analytic(quad())).unwrap();
    let r = nelder_mead(&problem, &perturbed_start(), &nm_config()).unwrap();
    let (got, want) = (r.params.to_array(), reference_params().to_array());
    let worst = got.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(
        worst < 1e-2 && r.objective < 1e-6,
        format!(
            "75 quotes, max parameter error {worst:.2e}, objective {:.2e}, {} iterations",
            r.objective, r.iterations
        ),
    )
}

fn c11_speedup() -> Outcome {
    let quotes = round_trip_surface();
    let ckpt = Arc::new(experiment().dml[0].checkpoint.clone());
    let analytic = CalibrationProblem::five(quotes.clone(), Backend::Analytic(quad())).unwrap();
    let network = CalibrationProblem::five(quotes, Backend::Network(ckpt)).unwrap();
    let a = nelder_mead(&analytic, &perturbed_start(), &nm_config()).unwrap();
    let n = nelder_mead(&network, &perturbed_start(), &nm_config()).unwrap();
    let ratio = n.wall_clock_s / a.wall_clock_s;
    outcome(
        ratio <= 0.2,
        format!(
            "analytic {:.2}s ({} evals), network {:.3}s ({} evals), {:.0}x faster",
            a.wall_clock_s,
            a.evaluations,
            n.wall_clock_s,
            n.evaluations,
            1.0 / ratio
        ),
    )
}

fn c12_de_rastrigin() -> Outcome {
    let rastrigin = |x: &[f64]| {
        10.0 * x.len() as f64
            + x.iter()
                .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos())
                .sum::<f64>()
    };
    let bounds = [[-5.12, 5.12]; 3];
    let mut details = Vec::new();
    let mut pass = true;
    for seed in 0..5 {
        let config = DeConfig {
            strategy: Strategy::Best1Bin,
            population: 50,
            f: 0.5,
            cr: 0.7,
            generations: 200,
            seed,
            ..Default::default()
        };
        let out = de_minimize(rastrigin, &bounds, &config).unwrap();
        let dist = out.x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        pass &= dist <= 1e-3 && out.iterations <= 200;
        details.push(format!("{dist:.1e}@{}", out.iterations));
    }
    outcome(
        pass,
        format!("distance to optimum @ generations, seeds 0-4: {}", details.join(" ")),
    )
}

fn c13_nss() -> Outcome {
    let truth = YieldCurve::new([0.035, -0.012, 0.018, -0.01], [1.3, 7.5]).unwrap();
    let taus = [
        1.0 / 12.0,
        2.0 / 12.0,
        0.25,
        0.5,
        1.0,
        2.0,
        3.0,
        5.0,
        7.0,
        10.0,
        20.0,
        30.0,
    ];
    let pts: Vec<(f64, f64)> = taus.iter().map(|&t| (t, truth.rate_at(t))).collect();
    let fit = fit_nss(&pts).unwrap();
    let worst = pts.iter().map(|&(t, r)| (fit.rate_at(t) - r).abs()).fold(0.0, f64::max);
    let sample = fit_nss(&percent_to_decimal(&SAMPLE_PAR_YIELDS_PCT)).unwrap();
    outcome(
        worst < 1e-6 && sample.rms_residual < 30e-4,
        format!(
            "self-fit max error {worst:.2e}; Treasury sample RMS {:.2} bp",
            sample.rms_residual * 1e4
        ),
    )
}

fn cli(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_heston-dml"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// File contents with wall-clock fields removed.
fn stable_bytes(path: &Path) -> Vec<u8> {
    let text = fs::read(path).unwrap();
    let name = path.file_name().unwrap().to_string_lossy();
    let Ok(text) = String::from_utf8(text.clone()) else {
        return text;
    };
    if name.starts_with("result_") {
        text.lines()
            .filter(|l| !l.starts_with("wall_clock_s,"))
            .collect::<Vec<_>>()
            .join("\n")
            .into_bytes()
    } else if name.starts_with("trace_") {
        text.lines()
            .map(|l| l.rsplit_once(',').map_or(l, |p| p.0))
            .collect::<Vec<_>>()
            .join("\n")
            .into_bytes()
    } else {
        text.into_bytes()
    }
}

fn replay_matches(manifest: &Path, dir: &Path) -> Result<usize, String> {
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(manifest).unwrap()).unwrap();
    let replay = dir.join(format!("replay-{}", manifest.file_name().unwrap().to_string_lossy()));
    cli(&[
        "replay",
        manifest.to_str().unwrap(),
        "--out-dir",
        replay.to_str().unwrap(),
    ]);
    let outputs = json["outputs"].as_array().unwrap();
    for o in outputs {
        let original = PathBuf::from(o.as_str().unwrap());
        let again = replay.join(original.file_name().unwrap());
        if stable_bytes(&original) != stable_bytes(&again) {
            return Err(format!("{} differs on replay", original.display()));
        }
    }
    Ok(outputs.len())
}

fn c14_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let p = |name: &str| d.join(name).to_str().unwrap().to_owned();
    fs::write(d.join("spec.toml"), "hidden_layers = 2\nneurons = 16\n").unwrap();
    fs::write(
        d.join("train.toml"),
        "epochs = 4\nbatches_per_epoch = 4\nbatch_size = 64\n",
    )
    .unwrap();
    fs::write(
        d.join("space.toml"),
        "hidden_layers = [1, 2]\nneurons = [8]\nlearning_rates = [0.01]\ngrad_clips = [0.0, 4.0]\nepochs = [2]\n",
    )
    .unwrap();
    fs::write(d.join("cal.toml"), "[de]\ngenerations = 8\npopulation = 16\nseed = 3\n").unwrap();
    let point = [
        "--kappa", "2", "--theta", "0.06", "--sigma", "0.4", "--rho", "-0.6", "--v0", "0.05", "--m", "0.1", "--tau",
        "1.5", "--r", "0.02",
    ];

    let mut greeks = vec!["greeks", "--check-fd", "--csv"];
    let greeks_csv = p("greeks.csv");
    greeks.push(&greeks_csv);
    greeks.extend(point);
    cli(&greeks);
    cli(&["generate", "-n", "512", "--seed", "9", "--quiet", "-o", &p("data.csv")]);
    cli(&[
        "train",
        "--data",
        &p("data.csv"),
        "--spec",
        &p("spec.toml"),
        "--config",
        &p("train.toml"),
        "--grad-clip",
        "4",
        "-o",
        &p("net.ckpt"),
    ]);
    cli(&[
        "evaluate",
        "--checkpoint",
        &p("net.ckpt"),
        "--data",
        &p("data.csv"),
        "-o",
        &p("eval.csv"),
    ]);
    cli(&[
        "gridsearch",
        "--space",
        &p("space.toml"),
        "--data",
        &p("data.csv"),
        "--config",
        &p("train.toml"),
        "-o",
        &p("board.csv"),
        "--best",
        &p("best.ckpt"),
    ]);
    cli(&[
        "synth-quotes",
        "--kappa",
        "1.4719",
        "--theta",
        "0.1072",
        "--sigma",
        "1.5986",
        "--rho",
        "-0.3899",
        "--v0",
        "0.0000112",
        "--maturities",
        "0.25,1,2",
        "--strikes",
        "3800,4000,4200,4400,4600",
        "--spot",
        "4210.24",
        "--valuation-date",
        "2022-08-10",
        "--sample-curve",
        "--spread",
        "0.01",
        "--jitter",
        "0.002",
        "--seed",
        "5",
        "-o",
        &p("quotes.csv"),
    ]);
    let cal = |optimizer: &str, dir: &str| {
        cli(&[
            "calibrate",
            "--quotes",
            &p("quotes.csv"),
            "--valuation-date",
            "2022-08-10",
            "--spot",
            "4210.24",
            "--sample-curve",
            "--optimizer",
            optimizer,
            "--config",
            &p("cal.toml"),
            "-o",
            &p(dir),
        ]);
    };
    cal("de", "cal-de");
    cal("nelder-mead", "cal-nm");
    cli(&["fit-curve", "-o", &p("curve.txt")]);

    let manifests = [
        "greeks.csv.manifest.json",
        "data.csv.manifest.json",
        "net.ckpt.manifest.json",
        "eval.csv.manifest.json",
        "board.csv.manifest.json",
        "quotes.csv.manifest.json",
        "cal-de/manifest.json",
        "cal-nm/manifest.json",
        "curve.txt.manifest.json",
    ];
    let mut files = 0;
    for m in manifests {
        match replay_matches(&d.join(m), d) {
            Ok(n) => files += n,
            Err(e) => return outcome(false, e),
        }
    }
    outcome(
        true,
        format!(
            "{} stages replayed, {files} output files byte-identical",
            manifests.len()
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 14] = [
    (1, "greeks vs finite differences", c1_greeks),
    (2, "rate/moneyness identity", c2_rate_identity),
    (3, "Black-Scholes embedding", c3_bs_embedding),
    (4, "Monte-Carlo oracle", c4_monte_carlo),
    (5, "parity and bounds", c5_parity_and_bounds),
    (6, "twin-network adjoint", c6_adjoint),
    (7, "DML vs classical", c7_dml_vs_classical),
    (8, "small-data advantage", c8_small_data),
    (9, "gradient clipping", c9_clipping),
    (10, "round-trip calibration", c10_round_trip),
    (11, "network backend speedup", c11_speedup),
    (12, "DE on Rastrigin", c12_de_rastrigin),
    (13, "NSS fits", c13_nss),
    (14, "manifest determinism", c14_determinism),
];

fn main() {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let selected: Vec<&Criterion> = CRITERIA
        .iter()
        .filter(|c| only.is_empty() || only.contains(&c.0))
        .collect();
    let mut failed = Vec::new();
    let mut lines = Vec::new();
    for (id, name, f) in selected {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let line = format!(
            "criterion {id:>2} {} {name}: {} [{:.0}s]",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
        println!("{line}");
        lines.push(line);
        if !result.pass {
            failed.push(*id);
        }
    }
    println!("\nacceptance summary");
    for l in &lines {
        println!("{l}");
    }
    if failed.is_empty() {
        println!("all {} criteria passed", lines.len());
    } else {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
