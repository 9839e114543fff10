//! Adaptive Gauss-Kronrod (7/15) integration of vector-valued integrands,
//! with a half-line driver that extends the truncation point until the
//! integrand's envelope makes the remaining tail negligible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::params::QuadratureConfig;
use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
    worst: f64,
}

impl<const N: usize> PartialEq for Segment<N> {
    fn eq(&self, other: &Self) -> bool {
        self.worst == other.worst
    }
}
impl<const N: usize> Eq for Segment<N> {}
impl<const N: usize> PartialOrd for Segment<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Segment<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.worst.total_cmp(&other.worst)
    }
}

fn gk15<const N: usize, F>(f: &mut F, a: f64, b: f64) -> Result<Segment<N>>
where
    F: FnMut(f64) -> Result<[f64; N]>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    for k in 0..N {
        kron[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx)?;
        let f2 = f(c + dx)?;
        for k in 0..N {
            let s = f1[k] + f2[k];
            kron[k] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for k in 0..N {
        value[k] = kron[k] * h;
        error[k] = ((kron[k] - gauss[k]) * h).abs();
    }
    Ok(Segment {
        a,
        b,
        value,
        error,
        worst: 0.0,
    })
}

/// Integrates `f` over `[a, b]` to `max(abs_tol, rel_tol |I_k|)` per component.
/// Returns the integral and the per-component error estimate.
pub fn integrate<const N: usize, F>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<([f64; N], [f64; N])>
where
    F: FnMut(f64) -> Result<[f64; N]>,
{
    let mut heap = BinaryHeap::new();
    let first = gk15(&mut f, a, b)?;
    let mut total = first.value;
    let mut err = first.error;
    heap.push(first);
    let mut intervals = 1;

    loop {
        // Ratio of error to allowance, per component; converged when all <= 1.
        let excess = (0..N)
            .map(|k| err[k] / abs_tol.max(rel_tol * total[k].abs()))
            .fold(0.0_f64, f64::max);
        if excess <= 1.0 {
            return Ok((total, err));
        }
        if intervals >= max_intervals {
            let residual = err.iter().cloned().fold(0.0, f64::max);
            return Err(Error::Integration { residual, u_reached: b });
        }
        let Some(seg) = heap.pop() else {
            return Ok((total, err));
        };
        let mid = 0.5 * (seg.a + seg.b);
        let mut left = gk15(&mut f, seg.a, mid)?;
        let mut right = gk15(&mut f, mid, seg.b)?;
        for k in 0..N {
            total[k] += left.value[k] + right.value[k] - seg.value[k];
            err[k] += left.error[k] + right.error[k] - seg.error[k];
        }
        // Priority: largest error relative to the current allowance.
        for s in [&mut left, &mut right] {
            s.worst = (0..N)
                .map(|k| s.error[k] / abs_tol.max(rel_tol * total[k].abs()))
                .fold(0.0_f64, f64::max);
        }
        heap.push(left);
        heap.push(right);
        intervals += 1;
        // Accumulated error may drift from rounding; refresh from the heap occasionally.
        if intervals % 256 == 0 {
            err = [0.0; N];
            for s in heap.iter() {
                for k in 0..N {
                    err[k] += s.error[k];
                }
            }
        }
    }
}

/// Integrates over `[0, inf)`.
///
/// The base panel is `[0, u_max]`. While `u * envelope(u)` at the current end
/// exceeds `abs_tol`, panels `[U, 2U]` are appended (the integrand decays at
/// least like `envelope(u) ~ 1/u^2`, so `u * envelope(u)` bounds the tail).
pub fn integrate_half_line<const N: usize, F, E>(cfg: &QuadratureConfig, mut f: F, envelope: E) -> Result<[f64; N]>
where
    F: FnMut(f64) -> Result<[f64; N]>,
    E: Fn(f64) -> Result<f64>,
{
    let (mut total, _) = integrate(&mut f, 0.0, cfg.u_max, cfg.abs_tol, cfg.rel_tol, cfg.max_intervals)?;
    let mut upper = cfg.u_max;
    loop {
        let tail = upper * envelope(upper)?;
        if tail <= cfg.abs_tol {
            return Ok(total);
        }
        if upper >= cfg.u_cap {
            return Err(Error::Integration {
                residual: tail,
                u_reached: upper,
            });
        }
        let next = (2.0 * upper).min(cfg.u_cap);
        let (panel, _) = integrate(&mut f, upper, next, cfg.abs_tol, cfg.rel_tol, cfg.max_intervals)?;
        for k in 0..N {
            total[k] += panel[k];
        }
        upper = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let (v, _) = integrate(|x| Ok([x.powi(5), 1.0]), 0.0, 2.0, 1e-13, 0.0, 10).unwrap();
        assert!((v[0] - 64.0 / 6.0).abs() < 1e-12);
        assert!((v[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let (v, _) = integrate(
            |x| Ok([(10.0 * x).cos(), 1.0 / (1e-4 + x * x)]),
            0.0,
            1.0,
            1e-11,
            1e-12,
            2000,
        )
        .unwrap();
        assert!((v[0] - 10f64.sin() / 10.0).abs() < 1e-11);
        let exact = (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!((v[1] - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn half_line_extends_tail() {
        // int_0^inf du / (u^2 + 1/4) = pi
        let cfg = QuadratureConfig {
            u_max: 10.0,
            u_cap: 1e12,
            abs_tol: 1e-9,
            ..Default::default()
        };
        let f = |u: f64| Ok([1.0 / (u * u + 0.25)]);
        let env = |u: f64| Ok(1.0 / (u * u + 0.25));
        let v = integrate_half_line(&cfg, f, env).unwrap();
        assert!((v[0] - std::f64::consts::PI).abs() < 2e-9);
    }

    #[test]
    fn tail_cap_reports_residual() {
        let cfg = QuadratureConfig {
            u_max: 10.0,
            u_cap: 40.0,
            abs_tol: 1e-9,
            ..Default::default()
        };
        let f = |u: f64| Ok([1.0 / (u * u + 0.25)]);
        let env = |u: f64| Ok(1.0 / (u * u + 0.25));
        match integrate_half_line(&cfg, f, env) {
            Err(Error::Integration { residual, u_reached }) => {
                assert_eq!(u_reached, 40.0);
                assert!(residual > 1e-9);
            }
            other => panic!("expected integration error, got {other:?}"),
        }
    }
}
