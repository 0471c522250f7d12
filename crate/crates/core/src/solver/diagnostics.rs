//! Long-time diagnostics of nonlinear runs: the `L²` integrability of the
//! body velocity and the logarithmic energy growth of Oseen perturbations.

use serde::Serialize;

use super::imex::run;
use super::NonlinearRunConfig;
use crate::error::{Error, Result};
use crate::fsop::{FlowState, OperatorAssembly};

/// `∫_{t₀}^t |ℓ(s)|² ds` and its increments over dyadic windows of elapsed time.
#[derive(Debug, Clone, Serialize)]
pub struct EllL2Report {
    pub times: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// `(lo, hi, ∫_lo^hi |ℓ|²)` for elapsed windows `[2^k, 2^{k+1}]`, `k ≥ 0`.
    pub windows: Vec<(f64, f64, f64)>,
    /// Every increment is strictly below its predecessor.
    pub monotone: bool,
    /// Largest ratio of successive increments.
    pub max_ratio: f64,
}

/// Trapezoidal integral of `|ℓ|²` along a step series `(t, ℓ)`.
pub fn ell_l2_diagnostic(series: &[(f64, [f64; 2])], t0: f64) -> EllL2Report {
    let sq = |l: [f64; 2]| l[0] * l[0] + l[1] * l[1];
    let mut times = Vec::with_capacity(series.len());
    let mut cumulative = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    for (i, &(t, l)) in series.iter().enumerate() {
        if i > 0 {
            let (tp, lp) = series[i - 1];
            acc += 0.5 * (t - tp) * (sq(l) + sq(lp));
        }
        times.push(t);
        cumulative.push(acc);
    }
    let at = |e: f64| -> f64 {
        let t = t0 + e;
        let k = times.partition_point(|&s| s < t);
        if k == 0 {
            return cumulative.first().copied().unwrap_or(0.0);
        }
        if k >= times.len() {
            return *cumulative.last().unwrap();
        }
        let w = (t - times[k - 1]) / (times[k] - times[k - 1]);
        cumulative[k - 1] + w * (cumulative[k] - cumulative[k - 1])
    };
    let end = times.last().map_or(0.0, |&t| t - t0);
    let mut windows = Vec::new();
    let mut lo = 1.0;
    while 2.0 * lo <= end * (1.0 + 1e-12) {
        windows.push((lo, 2.0 * lo, at(2.0 * lo) - at(lo)));
        lo *= 2.0;
    }
    let monotone = windows.windows(2).all(|w| w[1].2 < w[0].2);
    let max_ratio = windows
        .windows(2)
        .map(|w| if w[0].2 > 0.0 { w[1].2 / w[0].2 } else { 0.0 })
        .fold(0.0, f64::max);
    EllL2Report { times, cumulative, windows, monotone, max_ratio }
}

/// Fit of `‖W(t)‖² ≈ a + b log(1 + t)` for an Oseen-perturbed run.
#[derive(Debug, Clone, Serialize)]
pub struct LogEnergyReport {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    pub b_over_alpha_sq: f64,
    /// `max ‖W‖² / (‖W₀‖² + α² log(1+t) + K_α)` with `K_α = α²`, over the
    /// whole horizon and over its first half.
    pub k_full: f64,
    pub k_half: f64,
    /// `‖W‖²` never increased between samples.
    pub nonincreasing: bool,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub dissipation: Vec<f64>,
}

pub fn log_energy_experiment(
    op: &OperatorAssembly,
    cfg: &NonlinearRunConfig,
    w0: &FlowState,
    alpha: f64,
    horizon: f64,
) -> Result<LogEnergyReport> {
    let cfg = NonlinearRunConfig { alpha, horizon, ..cfg.clone() };
    let out = run(op, &cfg, w0)?;
    let tr = &out.trajectory;
    let norm = tr.column("V_L2")?;
    let diss = tr.column("dissipation")?;
    let times = tr.times.clone();
    let energy: Vec<f64> = norm.iter().map(|n| n * n).collect();

    // least squares on [1, log(1+t)]
    let (mut s1, mut sx, mut sy, mut sxx, mut sxy) = (0.0f64, 0.0f64, 0.0, 0.0f64, 0.0);
    for (&t, &e) in times.iter().zip(&energy) {
        let x = (1.0 + t).ln();
        s1 += 1.0;
        sx += x;
        sy += e;
        sxx += x * x;
        sxy += x * e;
    }
    let det = s1 * sxx - sx * sx;
    if !(det.abs() > 1e-14 * s1 * sxx) {
        return Err(Error::Degenerate("log-energy fit needs samples spread in log(1+t)".into()));
    }
    let b = (s1 * sxy - sx * sy) / det;
    let a = (sy - b * sx) / s1;

    let e0 = energy[0];
    let bound = |t: f64| e0 + alpha * alpha * ((1.0 + t).ln() + 1.0);
    let k_over = |tmax: f64| {
        times
            .iter()
            .zip(&energy)
            .filter(|(&t, _)| t <= tmax * (1.0 + 1e-12))
            .map(|(&t, &e)| {
                let d = bound(t);
                if d > 0.0 {
                    e / d
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    };
    let k_full = k_over(cfg.t0 + horizon);
    let k_half = k_over(cfg.t0 + 0.5 * horizon);
    let nonincreasing = energy.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300);
    let b_over_alpha_sq = if alpha != 0.0 { b / (alpha * alpha) } else { f64::NAN };
    Ok(LogEnergyReport { alpha, a, b, b_over_alpha_sq, k_full, k_half, nonincreasing, times, energy, dissipation: diss.to_vec() })
}

/// The experiment over several `α` and the spread of `b/α²`.
#[derive(Debug, Clone, Serialize)]
pub struct LogEnergySweep {
    pub reports: Vec<LogEnergyReport>,
    /// `max |b/α² / mean − 1|`.
    pub spread: f64,
}

pub fn log_energy_sweep(
    op: &OperatorAssembly,
    cfg: &NonlinearRunConfig,
    w0: &FlowState,
    alphas: &[f64],
    horizon: f64,
) -> Result<LogEnergySweep> {
    let reports = alphas.iter().map(|&a| log_energy_experiment(op, cfg, w0, a, horizon)).collect::<Result<Vec<_>>>()?;
    let vals: Vec<f64> = reports.iter().map(|r| r.b_over_alpha_sq).collect();
    let mean = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
    let spread = vals.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max);
    Ok(LogEnergySweep { reports, spread })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsop::{assemble_operator, GridConfig, RigidBodyParams};

    #[test]
    fn zero_series_has_zero_integral() {
        let s: Vec<(f64, [f64; 2])> = (0..=80).map(|i| (i as f64 * 0.1, [0.0, 0.0])).collect();
        let r = ell_l2_diagnostic(&s, 0.0);
        assert!(r.cumulative.iter().all(|&c| c == 0.0));
        assert_eq!(r.windows.len(), 3);
    }

    #[test]
    fn dyadic_increments_of_a_power_law() {
        // |ℓ|² = (1+t)^{-2}: ∫_T^{2T} = 1/(1+T) − 1/(1+2T)
        let s: Vec<(f64, [f64; 2])> = (0..=64000).map(|i| {
            let t = i as f64 * 1e-3;
            (t, [1.0 / (1.0 + t), 0.0])
        }).collect();
        let r = ell_l2_diagnostic(&s, 0.0);
        assert!(r.monotone);
        for &(lo, hi, inc) in &r.windows {
            let exact = 1.0 / (1.0 + lo) - 1.0 / (1.0 + hi);
            assert!((inc - exact).abs() < 1e-7, "{lo}: {inc} vs {exact}");
        }
    }

    #[test]
    fn unforced_energy_does_not_grow() {
        let cfg = NonlinearRunConfig {
            grid: GridConfig::new(10.0, 24, 2),
            body: RigidBodyParams::disk(1.0),
            dt: 0.05,
            samples_per_decade: 10,
            ..Default::default()
        };
        let op = assemble_operator(&cfg.grid, &cfg.body).unwrap();
        let w0 = op.apply_projector(&op.sample_admissible_trace(
            |x| {
                let e = (-(x[0] - 2.5).powi(2) - x[1] * x[1]).exp();
                [-x[1] * e, (x[0] - 2.5) * e]
            },
            [0.0; 2],
            0.0,
        ));
        let r = log_energy_experiment(&op, &cfg, &w0, 0.0, 4.0).unwrap();
        assert!(r.nonincreasing);
        assert!(r.b <= 0.0);
    }
}
