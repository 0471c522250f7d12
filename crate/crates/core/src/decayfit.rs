//! Log-log decay fits over trust windows, and the verdict suites comparing
//! fitted exponents with the predicted ones.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// Minimum number of samples inside a fit window.
pub const MIN_SAMPLES: usize = 20;
/// Smallest accepted `t_hi / t_lo`: half a decade.
pub const MIN_SPAN: f64 = 3.162_277_660_168_379_5;
/// Exponent tolerance of the theorem suites.
pub const EXPONENT_TOLERANCE: f64 = 0.15;

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub quantity: String,
    pub fitted_exponent: f64,
    pub target_exponent: f64,
    pub window: (f64, f64),
    /// RMS of the residual of the log-log fit.
    pub residual: f64,
    pub samples: usize,
    /// The window reaches beyond the trust horizon.
    pub truncation_flag: bool,
    pub tolerance: f64,
    /// Gate outcome; `None` when no gate is attached.
    pub pass: Option<bool>,
}

impl DecayReport {
    /// Attach a target exponent and a two-sided gate `|fit − target| ≤ tol`.
    /// Flagged fits never pass.
    pub fn gate(mut self, quantity: &str, target: f64, tol: f64) -> Self {
        self.quantity = quantity.to_string();
        self.target_exponent = target;
        self.tolerance = tol;
        self.pass = Some(!self.truncation_flag && (self.fitted_exponent - target).abs() <= tol);
        self
    }

    /// Attach a one-sided gate `fit < bound` (strict).
    pub fn gate_below(mut self, quantity: &str, bound: f64) -> Self {
        self.quantity = quantity.to_string();
        self.target_exponent = bound;
        self.tolerance = 0.0;
        self.pass = Some(!self.truncation_flag && self.fitted_exponent < bound);
        self
    }

    /// Attach a one-sided gate `fit ≤ bound + tol`.
    pub fn gate_at_most(mut self, quantity: &str, bound: f64, tol: f64) -> Self {
        self.quantity = quantity.to_string();
        self.target_exponent = bound;
        self.tolerance = tol;
        self.pass = Some(!self.truncation_flag && self.fitted_exponent <= bound + tol);
        self
    }

    pub fn verdict(&self) -> &'static str {
        match self.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "-",
        }
    }
}

/// Least-squares slope of `log value` against `log t` over `window`.
///
/// `trust_horizon`, when given, flags windows reaching past it.
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64), trust_horizon: Option<f64>) -> Result<DecayReport> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Window(format!("invalid window [{lo}, {hi}]")));
    }
    if hi / lo < MIN_SPAN {
        return Err(Error::Window(format!("window [{lo}, {hi}] spans less than half a decade")));
    }
    let pts: Vec<(f64, f64)> = series.iter().copied().filter(|&(t, _)| t >= lo && t <= hi).collect();
    if pts.len() < MIN_SAMPLES {
        return Err(Error::Window(format!("{} samples in [{lo}, {hi}], need at least {MIN_SAMPLES}", pts.len())));
    }
    if let Some(&(t, v)) = pts.iter().find(|&&(_, v)| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Data(format!("nonpositive or non-finite value {v} at t = {t}")));
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    let truncation_flag = trust_horizon.is_some_and(|h| hi > h * (1.0 + 1e-12)) || lo < 1.0;
    Ok(DecayReport {
        quantity: String::new(),
        fitted_exponent: slope,
        target_exponent: f64::NAN,
        window,
        residual: (rss / n).sqrt(),
        samples: pts.len(),
        truncation_flag,
        tolerance: f64::NAN,
        pass: None,
    })
}

/// Time series of scalar diagnostics of one run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Trajectory {
    /// Initial time of the run.
    pub t0: f64,
    /// Largest elapsed time `t − t₀` trusted on the truncated domain.
    pub trust_horizon: f64,
    /// Oseen strength of a perturbed run (0 for plain runs).
    pub alpha: f64,
    pub times: Vec<f64>,
    pub columns: BTreeMap<String, Vec<f64>>,
}

/// Column name of `‖v‖_{L^p(𝓕₀)}`.
pub fn fluid_lp_column(p: f64) -> String {
    format!("v_L{}", fmt_p(p))
}

/// Column name of `‖v − αΘ‖_{L^p(𝓕₀)}`.
pub fn remainder_lp_column(p: f64) -> String {
    format!("w_L{}", fmt_p(p))
}

fn fmt_p(p: f64) -> String {
    if p.fract() == 0.0 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

impl Trajectory {
    pub fn new(t0: f64, trust_horizon: f64, alpha: f64) -> Self {
        Self { t0, trust_horizon, alpha, ..Default::default() }
    }

    /// Append one sample; every push must carry the same set of columns.
    pub fn push(&mut self, t: f64, values: &[(&str, f64)]) {
        self.times.push(t);
        for (k, v) in values {
            self.columns.entry((*k).to_string()).or_default().push(*v);
        }
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns.get(name).map(|v| v.as_slice()).ok_or_else(|| Error::Data(format!("trajectory has no column `{name}`")))
    }

    /// `(t − shift, value · (t − scale_shift)^power)` pairs.
    fn series(&self, name: &str, shift: f64, power: f64, scale_shift: f64) -> Result<Vec<(f64, f64)>> {
        let col = self.column(name)?;
        Ok(self.times.iter().zip(col).map(|(&t, &v)| (t - shift, v * (t - scale_shift).powf(power))).collect())
    }

    /// Default fit window in elapsed time: `[1, min(t_end − t₀, horizon)]`.
    pub fn default_window(&self) -> (f64, f64) {
        let end = self.times.last().copied().unwrap_or(self.t0) - self.t0;
        (1.0, end.min(self.trust_horizon))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut head = vec!["t".to_string()];
        head.extend(self.columns.keys().cloned());
        wr.write_record(&head)?;
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![format!("{t:.17e}")];
            row.extend(self.columns.values().map(|c| format!("{:.17e}", c[i])));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, t0: f64, trust_horizon: f64, alpha: f64) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let head: Vec<String> = rd.headers()?.iter().map(|s| s.to_string()).collect();
        if head.first().map(|s| s.as_str()) != Some("t") {
            return Err(Error::Data("run CSV must start with a `t` column".into()));
        }
        let mut tr = Self::new(t0, trust_horizon, alpha);
        for rec in rd.records() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Data(format!("bad number `{s}`: {e}"))))
                .collect::<Result<_>>()?;
            tr.times.push(vals[0]);
            for (k, v) in head.iter().skip(1).zip(&vals[1..]) {
                tr.columns.entry(k.clone()).or_default().push(*v);
            }
        }
        Ok(tr)
    }
}

/// Fluid norms and body speed of a plain run against the `L^q → L^p`
/// exponents: `‖v‖_{L^p} ~ t^{−(1/q − 1/p)}`, `|ℓ| ~ t^{−1/q}`.
pub fn theorem_main3_suite(tr: &Trajectory, q: f64, p_list: &[f64]) -> Result<Vec<DecayReport>> {
    let win = tr.default_window();
    let mut out = Vec::new();
    for &p in p_list {
        let name = fluid_lp_column(p);
        let s = tr.series(&name, tr.t0, 0.0, tr.t0)?;
        let rep = fit_decay(&s, win, Some(tr.trust_horizon))?;
        let target = -(1.0 / q - 1.0 / p);
        out.push(if q >= 2.0 { rep.gate_at_most(&name, 0.0, 0.0) } else { rep.gate(&name, target, EXPONENT_TOLERANCE) });
    }
    let s = tr.series("ell", tr.t0, 0.0, tr.t0)?;
    let rep = fit_decay(&s, win, Some(tr.trust_horizon))?;
    out.push(if q >= 2.0 { rep.gate_at_most("ell", 0.0, 0.0) } else { rep.gate("ell", -1.0 / q, EXPONENT_TOLERANCE) });
    Ok(out)
}

/// Perturbed runs: `t^{1/2 − 1/p}‖v − αΘ‖_{L^p}` must show a strictly
/// negative slope, and `(t − t₀)^{1/q}|ℓ|` must not grow.
pub fn oseen_stability_suite(tr: &Trajectory, q: f64, p_list: &[f64]) -> Result<Vec<DecayReport>> {
    if tr.alpha == 0.0 {
        return theorem_main3_suite(tr, q, p_list);
    }
    let win = tr.default_window();
    let mut out = Vec::new();
    for &p in p_list {
        let name = remainder_lp_column(p);
        // fit in absolute time for the self-similar weight
        let col = tr.column(&name)?;
        let s: Vec<(f64, f64)> =
            tr.times.iter().zip(col).map(|(&t, &v)| (t - tr.t0, v * t.powf(0.5 - 1.0 / p))).collect();
        let rep = fit_decay(&s, win, Some(tr.trust_horizon))?;
        out.push(rep.gate_below(&format!("t^(1/2-1/p) {name}"), 0.0));
    }
    let s = tr.series("ell", tr.t0, 1.0 / q, tr.t0)?;
    let rep = fit_decay(&s, win, Some(tr.trust_horizon))?;
    out.push(rep.gate_at_most("(t-t0)^(1/q) ell", 0.0, EXPONENT_TOLERANCE));
    Ok(out)
}

/// Human-readable verdict table.
pub fn verdict_table(reports: &[DecayReport]) -> String {
    let mut s = format!(
        "{:<28} {:>10} {:>10} {:>18} {:>10} {:>6} {}\n",
        "quantity", "fitted", "target", "window", "rms", "trunc", "verdict"
    );
    for r in reports {
        s += &format!(
            "{:<28} {:>10.4} {:>10.4} {:>8.2}..{:<8.2} {:>10.2e} {:>6} {}\n",
            r.quantity,
            r.fitted_exponent,
            r.target_exponent,
            r.window.0,
            r.window.1,
            r.residual,
            r.truncation_flag,
            r.verdict()
        );
    }
    s
}

pub fn write_verdict_csv<W: Write>(w: W, reports: &[DecayReport]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["quantity", "fitted_exponent", "target_exponent", "t_lo", "t_hi", "residual", "samples", "truncation_flag", "verdict"])?;
    for r in reports {
        wr.write_record([
            r.quantity.clone(),
            format!("{:.12e}", r.fitted_exponent),
            format!("{:.12e}", r.target_exponent),
            format!("{}", r.window.0),
            format!("{}", r.window.1),
            format!("{:.6e}", r.residual),
            r.samples.to_string(),
            r.truncation_flag.to_string(),
            r.verdict().to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// A gnuplot script plotting the trajectory columns on log-log axes.
pub fn plot_script(csv_name: &str, tr: &Trajectory) -> String {
    let mut s = format!(
        "set datafile separator ','\nset logscale xy\nset key autotitle columnhead\nset xlabel 't - t0'\nt0 = {}\nplot ",
        tr.t0
    );
    let cols: Vec<String> = tr
        .columns
        .keys()
        .enumerate()
        .map(|(i, _)| format!("'{csv_name}' using ($1-t0):{} with lines", i + 2))
        .collect();
    s += &cols.join(", \\\n     ");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(n: usize, e: f64, noise: impl Fn(usize) -> f64) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let t = 10f64.powf(2.0 * i as f64 / (n - 1) as f64);
                (t, t.powf(e) * (1.0 + noise(i)))
            })
            .collect()
    }

    #[test]
    fn exact_power_law() {
        let r = fit_decay(&power(50, -0.25, |_| 0.0), (1.0, 100.0), Some(100.0)).unwrap();
        assert!((r.fitted_exponent + 0.25).abs() < 1e-12);
        assert!(!r.truncation_flag);
        let c = fit_decay(&power(50, 0.0, |_| 0.0), (1.0, 100.0), None).unwrap();
        assert!(c.fitted_exponent.abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_windows_and_data() {
        let s = power(50, -1.0, |_| 0.0);
        assert!(matches!(fit_decay(&s, (1.0, 2.0), None), Err(Error::Window(_))));
        assert!(matches!(fit_decay(&s[..10], (1.0, 100.0), None), Err(Error::Window(_))));
        let mut bad = s.clone();
        bad[5].1 = 0.0;
        assert!(matches!(fit_decay(&bad, (1.0, 100.0), None), Err(Error::Data(_))));
        let r = fit_decay(&s, (1.0, 100.0), Some(50.0)).unwrap().gate("x", -1.0, 0.1);
        assert!(r.truncation_flag && r.pass == Some(false));
    }

    #[test]
    fn csv_round_trip() {
        let mut tr = Trajectory::new(0.0, 100.0, 0.0);
        for i in 0..30 {
            let t = 1.0 + i as f64;
            tr.push(t, &[("ell", 1.0 / t), ("v_L4", t.powf(-0.5))]);
        }
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let back = Trajectory::read_csv(&buf[..], 0.0, 100.0, 0.0).unwrap();
        assert_eq!(back.times, tr.times);
        assert_eq!(back.columns, tr.columns);
    }
}
