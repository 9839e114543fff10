use serde::{Deserialize, Serialize};
use web_time::Instant;

use super::{OptimOutcome, TraceRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NelderMeadConfig {
    pub max_iter: usize,
    /// Converged when the simplex diameter drops below `tol`, or the
    /// objective spread drops below `tol` times the best objective.
    pub tol: f64,
    /// Fresh simplices built around the best vertex after convergence.
    /// Restarting stops once a round improves the objective by no more
    /// than `tol` relative. All rounds share `max_iter`.
    pub restarts: usize,
    /// Relative step used to build the initial simplex.
    pub initial_step: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol: 1e-6,
            restarts: 3,
            initial_step: 0.05,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

impl NelderMeadConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iter > 0
            && self.tol >= 0.0
            && self.initial_step > 0.0
            && self.reflection > 0.0
            && self.expansion > self.reflection
            && self.contraction > 0.0
            && self.contraction < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("inconsistent Nelder-Mead coefficients".into()))
        }
    }
}

fn initial_simplex(x0: &[f64], step: f64) -> Vec<Vec<f64>> {
    let mut simplex = vec![x0.to_vec()];
    for j in 0..x0.len() {
        let mut v = x0.to_vec();
        v[j] = if v[j] != 0.0 { v[j] * (1.0 + step) } else { 0.00025 };
        simplex.push(v);
    }
    simplex
}

fn combine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(&x, &y)| x + t * (y - x)).collect()
}

type Round = (Vec<f64>, f64, bool, Vec<f64>);

fn run<E>(
    eval: &mut E,
    x0: &[f64],
    config: &NelderMeadConfig,
    iterations: &mut usize,
    trace: &mut Vec<TraceRow>,
    start: Instant,
) -> Result<Round>
where
    E: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex = initial_simplex(x0, config.initial_step);
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Optimizer(format!(
            "objective is not finite at initial simplex vertex {i}"
        )));
    }

    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        trace.push(TraceRow {
            iter: *iterations,
            best_objective: values[0],
            elapsed_s: start.elapsed().as_secs_f64(),
        });

        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = values[1..].iter().map(|v| (v - values[0]).abs()).fold(0.0, f64::max);
        if diameter <= config.tol || spread <= config.tol * values[0].abs() {
            converged = true;
            break;
        }
        if *iterations >= config.max_iter {
            break;
        }
        *iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let xr = combine(&centroid, &worst, -config.reflection);
        let fr = eval(&xr);

        if fr < values[0] {
            let xe = combine(&centroid, &worst, -config.reflection * config.expansion);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < values[n] {
            let xc = combine(&centroid, &xr, config.contraction);
            let fc = eval(&xc);
            (xc, fc, fc <= fr)
        } else {
            let xc = combine(&centroid, &worst, config.contraction);
            let fc = eval(&xc);
            (xc, fc, fc < values[n])
        };
        if accept {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            simplex[i] = combine(&simplex[0], &simplex[i], config.shrink);
            values[i] = eval(&simplex[i]);
        }
    }

    Ok((simplex.swap_remove(0), values[0], converged, values))
}

/// Unconstrained Nelder-Mead minimisation of `f` from `x0`.
pub fn minimize<F>(f: F, x0: &[f64], config: &NelderMeadConfig) -> Result<OptimOutcome>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    if x0.is_empty() {
        return Err(Error::InvalidArgument("nothing to optimise".into()));
    }
    let start = Instant::now();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut x = x0.to_vec();
    let mut value = f64::INFINITY;
    let mut converged = false;
    let mut final_values = Vec::new();
    for round in 0..=config.restarts {
        let r = run(&mut eval, &x, config, &mut iterations, &mut trace, start)?;
        let improved = !value.is_finite() || r.1 < value - config.tol * value.abs();
        if r.1 <= value {
            x = r.0;
            value = r.1;
            final_values = r.3;
        }
        converged = r.2;
        if !converged || !improved || iterations >= config.max_iter {
            break;
        }
        if round < config.restarts {
            log::debug!("nelder-mead restart {} at objective {value:e}", round + 1);
        }
    }

    Ok(OptimOutcome {
        x,
        value,
        final_values,
        iterations,
        evaluations,
        converged,
        trace,
    })
}
