//! Acceptance suite: one PASS/FAIL line per criterion. Scenario audits are
//! run at their default configuration; derived quantities are compared with
//! oracles computed here, independently of the library.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use diskflow::audit::{self, AuditReport, ExperimentConfig, Scenario};
use diskflow::gn::gn_constant;
use diskflow::oseen::theta_diff_l2_sq;
use diskflow::special::eval_k;

mod common;
use common::{a_oracle, k_oracle, theta_diff_exact};

struct Outcome {
    pass: bool,
    detail: String,
}

fn from_report(r: &AuditReport) -> Outcome {
    let failed: Vec<&str> = r.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let detail = r.checks.iter().map(|c| format!("{} = {:.3e}", c.name, c.value)).collect::<Vec<_>>().join("; ");
    Outcome { pass: failed.is_empty(), detail: if failed.is_empty() { detail } else { format!("failed: {}; {detail}", failed.join(", ")) } }
}

fn scenario(s: Scenario) -> Result<AuditReport, String> {
    audit::run_scenario(s, &ExperimentConfig::defaults(s)).map_err(|e| e.to_string())
}

fn combine(parts: Vec<Outcome>) -> Outcome {
    Outcome { pass: parts.iter().all(|p| p.pass), detail: parts.into_iter().map(|p| p.detail).collect::<Vec<_>>().join(" | ") }
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Result<Outcome, String> {
    let r = scenario(Scenario::BesselAudit)?;
    let mut worst = 0.0f64;
    for i in 0..41 {
        let x = 1e-4 * (1e6f64).powf(i as f64 / 40.0);
        let a = eval_k(0, x).map_err(|e| e.to_string())?;
        let b = eval_k(1, x).map_err(|e| e.to_string())?;
        for (v, o) in [
            (a.value, k_oracle(0.0, x, false)),
            (b.value, k_oracle(1.0, x, false)),
            (a.derivative, k_oracle(0.0, x, true)),
            (b.derivative, k_oracle(1.0, x, true)),
        ] {
            worst = worst.max((v / o - 1.0).abs());
        }
    }
    Ok(combine(vec![from_report(&r), check(worst < 1e-10, format!("Gauss-Legendre oracle max rel err = {worst:.2e}"))]))
}

fn criterion_7_and_8(main3: &AuditReport) -> (Outcome, Outcome) {
    let cfg = ExperimentConfig::defaults(Scenario::ThmMain3);
    let steps = (cfg.run.horizon / cfg.run.dt).round() as usize;
    let energy = main3.checks.iter().find(|c| c.name.starts_with("energy defect")).expect("energy check");
    let c7 = check(
        energy.pass && steps >= 1000 && cfg.run.alpha == 0.0,
        format!("{} = {:.3e}, steps = {steps}, alpha = {}", energy.name, energy.value, cfg.run.alpha),
    );
    let rest: Vec<_> = main3.checks.iter().filter(|c| !c.name.starts_with("energy defect")).collect();
    let c8 = check(
        rest.iter().all(|c| c.pass),
        rest.iter().map(|c| format!("{} = {:.4}", c.name, c.value)).collect::<Vec<_>>().join("; "),
    );
    (c7, c8)
}

fn criterion_11() -> Result<Outcome, String> {
    let r = scenario(Scenario::GnAudit)?;
    let pinned = (3.0 / (2.0 * PI)).powf(0.125) * (2.0f64 / 3.0).powf(0.25);
    let a4 = gn_constant(2.0, 2).map_err(|e| e.to_string())?.value;
    let mut worst = (a4 / pinned - 1.0).abs();
    for q in [1.05, 1.25, 1.5, 3.0, 4.0, 8.0, 25.0] {
        worst = worst.max((gn_constant(q, 2).map_err(|e| e.to_string())?.value / a_oracle(q) - 1.0).abs());
    }
    let mut theta_gap = 0.0f64;
    let mut bound_ok = true;
    let ts = [0.0, 0.1, 1.0, 7.0, 60.0, 1e3];
    for &t in &ts {
        for &s in &ts {
            if t == s {
                continue;
            }
            let (a, b): (f64, f64) = (1.0 + t, 1.0 + s);
            let exact = theta_diff_exact(t, s);
            let got = theta_diff_l2_sq(t, s, 1e-12).map_err(|e| e.to_string())?;
            theta_gap = theta_gap.max((got / exact - 1.0).abs());
            bound_ok &= exact <= (a / b).ln().abs() / (4.0 * PI);
        }
    }
    Ok(combine(vec![
        from_report(&r),
        check(worst < 1e-12, format!("A vs independent Gamma oracle (A at p=4 pinned) max rel = {worst:.2e}")),
        check(theta_gap < 1e-9 && bound_ok, format!("Theta L2 difference vs closed form max rel = {theta_gap:.2e}")),
    ]))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Result<Outcome, String>)> = Vec::new();
    results.push((1, "Bessel audit", criterion_1()));
    let resolvent = scenario(Scenario::ResolventAudit);
    results.push((2, "resolvent refinement order", resolvent.as_ref().map_err(Clone::clone).map(|r| {
        let c = r.check("closed-form residual observed order").expect("order check");
        check(c.pass, format!("min observed order = {:.3}", c.value))
    })));
    results.push((3, "corrected resolvent", resolvent.as_ref().map_err(Clone::clone).map(|r| {
        let c = r.check("corrected resolvent vs direct solve").expect("gap check");
        let t = r.check("runtime [s]").expect("runtime");
        check(c.pass && t.pass, format!("max rel gap = {:.2e}, runtime {:.2} s", c.value, t.value))
    })));
    results.push((4, "operator properties", scenario(Scenario::OperatorAudit).map(|r| from_report(&r))));
    results.push((5, "fractional powers", scenario(Scenario::FracpowAudit).map(|r| from_report(&r))));
    results.push((6, "semigroup decay", scenario(Scenario::SemigroupDecay).map(|r| from_report(&r))));
    match scenario(Scenario::ThmMain3) {
        Ok(r) => {
            let (c7, c8) = criterion_7_and_8(&r);
            results.push((7, "energy identity", Ok(c7)));
            results.push((8, "plain decay rates", Ok(c8)));
        }
        Err(e) => {
            results.push((7, "energy identity", Err(e.clone())));
            results.push((8, "plain decay rates", Err(e)));
        }
    }
    results.push((9, "Oseen stability", scenario(Scenario::ThmMain2).map(|r| from_report(&r))));
    results.push((10, "zeta bound", scenario(Scenario::OseenBounds).map(|r| from_report(&r))));
    results.push((11, "GN audit", criterion_11()));
    results.push((
        12,
        "Duhamel cross-check and log energy",
        scenario(Scenario::DuhamelXcheck).and_then(|d| scenario(Scenario::LogEnergy).map(|l| combine(vec![from_report(&d), from_report(&l)]))),
    ));

    let mut all = true;
    for (id, name, res) in &results {
        let (pass, detail) = match res {
            Ok(o) => (o.pass, o.detail.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= pass;
        println!("{} criterion {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} in {:.1} s", if all { "all criteria PASS" } else { "FAILURES" }, start.elapsed().as_secs_f64());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
