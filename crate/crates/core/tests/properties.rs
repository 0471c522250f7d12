use std::sync::OnceLock;

use diskflow::decayfit::fit_decay;
use diskflow::fsop::semigroup::{moving_tail_dipole, semigroup_step, step_ledger};
use diskflow::fsop::{assemble_operator, FlowState, GridConfig, OperatorAssembly, RigidBodyParams};
use diskflow::gn::gn_constant;
use diskflow::oseen::theta_diff_l2_sq;
use diskflow::special::eval_k;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

fn op() -> &'static OperatorAssembly {
    static OP: OnceLock<OperatorAssembly> = OnceLock::new();
    OP.get_or_init(|| assemble_operator(&GridConfig::new(8.0, 24, 3), &RigidBodyParams::disk(1.0)).unwrap())
}

fn raw_state(op: &OperatorAssembly, seed: u64) -> FlowState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = op.zeros();
    s.coeffs.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    s.ell = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    s.omega = rng.gen_range(-1.0..1.0);
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gn_constant_matches_gamma_oracle(q in 1.0001f64..50.0) {
        let a = gn_constant(q, 2).unwrap().value;
        prop_assert!((a / common::a_oracle(q) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bessel_matches_quadrature_and_recurrence(x in 1e-3f64..200.0) {
        let k0 = eval_k(0, x).unwrap();
        let k1 = eval_k(1, x).unwrap();
        prop_assert!((k0.value / common::k_oracle(0.0, x, false) - 1.0).abs() < 1e-10);
        prop_assert!((k1.value / common::k_oracle(1.0, x, false) - 1.0).abs() < 1e-10);
        prop_assert!((k0.derivative + k1.value).abs() <= 1e-12 * k1.value);
        prop_assert!(k1.value > k0.value && k0.value > 0.0);
    }

    #[test]
    fn theta_difference_below_log_bound(t in 0.0f64..500.0, s in 0.0f64..500.0) {
        prop_assume!((t - s).abs() > 1e-3);
        let got = theta_diff_l2_sq(t, s, 1e-12).unwrap();
        let exact = common::theta_diff_exact(t, s);
        prop_assert!((got / exact - 1.0).abs() < 1e-8);
        prop_assert!(got <= ((1.0 + t) / (1.0 + s)).ln().abs() / (4.0 * std::f64::consts::PI) * (1.0 + 1e-12));
    }

    #[test]
    fn power_law_slope_survives_one_percent_noise(exponent in -2.0f64..-0.1, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let series: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let t = 10f64.powf(2.0 * i as f64 / 199.0);
                (t, t.powf(exponent) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
            })
            .collect();
        let r = fit_decay(&series, (1.0, 100.0), Some(100.0)).unwrap();
        prop_assert!((r.fitted_exponent - exponent).abs() < 0.01);
        prop_assert!(!r.truncation_flag);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn projector_is_idempotent_and_admissible(seed in any::<u64>()) {
        let op = op();
        let p = op.apply_projector(&raw_state(op, seed));
        let pp = op.apply_projector(&p);
        prop_assert!(op.norm(&p.sub(&pp)) <= 1e-12 * op.norm(&p));
        prop_assert!(op.divergence_defect(&p) < 1e-10);
        prop_assert!(p.trace_mismatch() < 1e-14);
    }

    #[test]
    fn operator_is_symmetric(a in any::<u64>(), b in any::<u64>()) {
        let op = op();
        let u = op.apply_projector(&raw_state(op, a));
        let v = op.apply_projector(&raw_state(op, b));
        let (au, av) = (op.apply_a(&u), op.apply_a(&v));
        prop_assert!((op.inner(&au, &v) - op.inner(&u, &av)).abs() <= 1e-12 * op.norm(&au) * op.norm(&v));
        prop_assert!(op.sym_form(&u) > 0.0);
    }

    #[test]
    fn semigroup_step_contracts(seed in any::<u64>(), log_dt in -3.0f64..1.0) {
        let op = op();
        let dt = 10f64.powf(log_dt);
        let v0 = op.apply_projector(&raw_state(op, seed));
        let v1 = semigroup_step(&v0, dt, op).unwrap();
        let l = step_ledger(op, &v0, &v1, dt);
        prop_assert!(l.norm_after <= l.norm_before);
        prop_assert!(l.defect < 1e-8);
    }

    #[test]
    fn norm_is_rotation_invariant(seed in any::<u64>(), phi in 0.0f64..6.3) {
        let op = op();
        let v = op.apply_projector(&raw_state(op, seed));
        let r = v.rotated(phi);
        prop_assert!((op.norm(&r) / op.norm(&v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moving_dipole_carries_the_body(kappa in 0.0f64..1.5, amplitude in 0.01f64..1.0) {
        let op = op();
        let v = moving_tail_dipole(op, 4.0 / 3.0, amplitude, kappa);
        prop_assert!(v.trace_mismatch() < 1e-14);
        prop_assert!(op.divergence_defect(&v) < 1e-10);
        prop_assert!((v.ell[0] - kappa * amplitude).abs() < 0.05 * amplitude);
        prop_assert!(v.ell[1].abs() < 1e-12 && v.omega.abs() < 1e-12);
    }
}
