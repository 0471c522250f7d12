//! Time stepping of `∂_t V + A V = 0` and empirical decay rates of the
//! semigroup.
//!
//! Single steps use Crank-Nicolson, which is unconditionally contractive in
//! the energy norm and reproduces the energy balance exactly with the
//! midpoint field. Long decay runs use the spectral propagator instead,
//! which is exact in time.

use serde::Serialize;

use super::banded::BandedCholesky;
use super::operator::{OperatorAssembly, SpaceKind};
use super::spectral::Spectrum;
use super::state::FlowState;
use crate::decayfit::{fit_decay, DecayReport};
use crate::error::{Error, Result};

/// Tolerance on fitted semigroup exponents.
pub const SEMIGROUP_TOLERANCE: f64 = 0.1;

/// Crank-Nicolson propagator with factorizations cached for a fixed step.
#[derive(Debug, Clone)]
pub struct CrankNicolson {
    pub dt: f64,
    pub kind: SpaceKind,
    facs: Vec<BandedCholesky>,
}

impl CrankNicolson {
    pub fn new(op: &OperatorAssembly, dt: f64, kind: SpaceKind) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Precondition(format!("time step must be positive, got {dt}")));
        }
        let facs = op.factor_all(kind, 1.0, 0.5 * dt).map_err(|e| Error::Numerical(format!("Crank-Nicolson factorization failed for dt = {dt}: {e}")))?;
        Ok(Self { dt, kind, facs })
    }

    /// `(M + dt/2 K)^{-1} M V`, the midpoint of a step.
    pub fn half(&self, op: &OperatorAssembly, v: &FlowState) -> FlowState {
        op.solve_with(&self.facs, v, self.kind)
    }

    /// `(M + dt/2 K)^{-1} Zᵀ g` for a dual vector `g`.
    pub fn solve_load(&self, op: &OperatorAssembly, g: &FlowState) -> FlowState {
        op.solve_load_with(&self.facs, g, self.kind)
    }

    pub fn step(&self, op: &OperatorAssembly, v: &FlowState) -> FlowState {
        let mut out = self.half(op, v).scaled(2.0);
        out.axpy(-1.0, v);
        out.time = v.time + self.dt;
        out
    }
}

/// One Crank-Nicolson step of the linear semigroup.
pub fn semigroup_step(v: &FlowState, dt: f64, op: &OperatorAssembly) -> Result<FlowState> {
    Ok(CrankNicolson::new(op, dt, SpaceKind::Constrained)?.step(op, v))
}

/// Energy balance of one step: `‖V₁‖² − ‖V₀‖²` against `−2 dt ⟨A V_½, V_½⟩`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepLedger {
    pub norm_before: f64,
    pub norm_after: f64,
    pub dissipation: f64,
    /// `|‖V₁‖² − ‖V₀‖² + dissipation| / ‖V₀‖²`.
    pub defect: f64,
}

pub fn step_ledger(op: &OperatorAssembly, v0: &FlowState, v1: &FlowState, dt: f64) -> StepLedger {
    let mut mid = v0.add(v1);
    mid.scale(0.5);
    let n0 = op.norm(v0);
    let n1 = op.norm(v1);
    let dissipation = 2.0 * dt * op.sym_form(&mid);
    let defect = (n1 * n1 - n0 * n0 + dissipation).abs() / (n0 * n0).max(f64::MIN_POSITIVE);
    StepLedger { norm_before: n0, norm_after: n1, dissipation, defect }
}

/// Fitted decay of `S(t)V₀` with the recorded series.
#[derive(Debug, Clone, Serialize)]
pub struct SemigroupDecay {
    pub q: f64,
    pub p: f64,
    pub horizon: f64,
    /// `‖S(t)V₀‖_{𝓛^p}` against `1/p − 1/q`, gated.
    pub norm: DecayReport,
    /// `‖∇S(t)V₀‖_{L^p(𝓕₀)}` against `−1/2 + 1/p − 1/q` (reported only).
    pub gradient: DecayReport,
    /// `|ℓ|` against `−1/q` (reported only).
    pub ell: DecayReport,
    pub warning: Option<String>,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub gradients: Vec<f64>,
    pub ells: Vec<f64>,
}

/// Log-spaced sample times in `[lo, hi]`.
pub fn log_times(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Evolve `V₀` with the exact propagator and fit decay rates over `[1, horizon]`.
pub fn measure_semigroup_decay(
    op: &OperatorAssembly,
    spec: &Spectrum,
    v0: &FlowState,
    q: f64,
    p: f64,
    horizon: f64,
) -> Result<SemigroupDecay> {
    measure_decay_against(op, spec, v0, q, p, horizon, 1.0 / p - 1.0 / q)
}

/// Duality variant: `V₀ = ℙ div F`, `q = p = 2`, norm target `−1/2`.
pub fn measure_duality_decay(op: &OperatorAssembly, spec: &Spectrum, v0: &FlowState, horizon: f64) -> Result<SemigroupDecay> {
    measure_decay_against(op, spec, v0, 2.0, 2.0, horizon, -0.5)
}

fn measure_decay_against(
    op: &OperatorAssembly,
    spec: &Spectrum,
    v0: &FlowState,
    q: f64,
    p: f64,
    horizon: f64,
    norm_target: f64,
) -> Result<SemigroupDecay> {
    if !(q > 1.0 && p >= q) {
        return Err(Error::Precondition(format!("need 1 < q <= p, got q = {q}, p = {p}")));
    }
    if !(horizon > 1.0) {
        return Err(Error::Precondition(format!("horizon must exceed 1, got {horizon}")));
    }
    let trust = op.cfg.trust_horizon();
    let warning = (horizon > trust).then(|| {
        format!("horizon {horizon} exceeds the trust window R²/16 = {trust}; boundary effects may bias the fit")
    });
    let coeffs = spec.coefficients(op, v0);
    let times = log_times(1.0, horizon, 48);
    let mut norms = Vec::with_capacity(times.len());
    let mut gradients = Vec::with_capacity(times.len());
    let mut ells = Vec::with_capacity(times.len());
    for &t in &times {
        let v = spec.synthesize(op, &coeffs, |l| (-t * l).exp());
        norms.push(op.lp_norm(&v, p));
        gradients.push(op.grad_lp(&v, p));
        ells.push((v.ell[0] * v.ell[0] + v.ell[1] * v.ell[1]).sqrt());
    }
    let series = |y: &[f64]| times.iter().copied().zip(y.iter().copied()).collect::<Vec<_>>();
    let win = (1.0, horizon);
    let norm = fit_decay(&series(&norms), win, Some(trust))?.gate("norm", norm_target, SEMIGROUP_TOLERANCE);
    let mut gradient = fit_decay(&series(&gradients), win, Some(trust))?;
    gradient.quantity = "gradient".into();
    gradient.target_exponent = -0.5 + 1.0 / p - 1.0 / q;
    let mut ell = match fit_decay(&series(&ells), win, Some(trust)) {
        Ok(r) => r,
        // a body at rest for all times (e.g. zero mode-1 content)
        Err(Error::Data(_)) => DecayReport {
            quantity: String::new(),
            fitted_exponent: f64::NAN,
            target_exponent: f64::NAN,
            window: win,
            residual: f64::NAN,
            samples: times.len(),
            truncation_flag: horizon > trust,
            tolerance: f64::NAN,
            pass: None,
        },
        Err(e) => return Err(e),
    };
    ell.quantity = "ell".into();
    ell.target_exponent = -1.0 / q;
    Ok(SemigroupDecay { q, p, horizon, norm, gradient, ell, warning, times, norms, gradients, ells })
}

/// Divergence-free field with velocity tail `|v| ~ r^{−2/q}` and a body at
/// rest: stream function `f(r) sin θ` with `f = r^{1−2/q}` far out and a
/// double zero at `r = 1`. This is the slowest-decaying profile compatible
/// with `𝓛^q`-type data, so its norms follow the `L^q → L^p` rates.
pub fn critical_tail_dipole(op: &OperatorAssembly, q: f64, amplitude: f64) -> FlowState {
    let e = 1.0 - 2.0 / q;
    let mut raw = op.zeros();
    for (i, &r) in op.grid.r.iter().enumerate() {
        let x = r - 1.0;
        let c = 1.0 - (-x * x).exp();
        let dc = 2.0 * x * (-x * x).exp();
        let f = r.powf(e) * c * c;
        let df = e * r.powf(e - 1.0) * c * c + r.powf(e) * 2.0 * c * dc;
        // block 1: v_r = a cos θ, v_θ = d sin θ, with v_r = f cos θ / r, v_θ = −f' sin θ
        raw.a_mut(1)[i] = amplitude * f / r;
        raw.d_mut(1)[i] = -amplitude * df;
    }
    raw.sync_trace();
    op.apply_projector(&raw)
}

/// [`critical_tail_dipole`] plus a body translating at `ℓ = (κ·amplitude, 0)`:
/// `f = r^{1−2/q}(c² + κ(1 + (2/q)(r−1))e^{−(r−1)²})`, `c = 1 − e^{−(r−1)²}`,
/// so the fluid trace on `r = 1` is the rigid translation.
pub fn moving_tail_dipole(op: &OperatorAssembly, q: f64, amplitude: f64, kappa: f64) -> FlowState {
    let e = 1.0 - 2.0 / q;
    let mut raw = op.zeros();
    for (i, &r) in op.grid.r.iter().enumerate() {
        let x = r - 1.0;
        let g = (-x * x).exp();
        let c = 1.0 - g;
        let dc = 2.0 * x * g;
        let h = (1.0 + (1.0 - e) * x) * g;
        let dh = (1.0 - e) * g - 2.0 * x * h;
        let b = c * c + kappa * h;
        let db = 2.0 * c * dc + kappa * dh;
        let f = r.powf(e) * b;
        let df = e * r.powf(e - 1.0) * b + r.powf(e) * db;
        raw.a_mut(1)[i] = amplitude * f / r;
        raw.d_mut(1)[i] = -amplitude * df;
    }
    raw.ell = [kappa * amplitude, 0.0];
    raw.sync_trace();
    op.apply_projector(&raw)
}

/// Axisymmetric swirl `v = r^{−2/q} c(r)² e_θ` with `c = 1 − e^{−(r−1)²}`:
/// zero net dipole, body at rest, and the same critical tail as
/// [`critical_tail_dipole`].
pub fn critical_tail_swirl(op: &OperatorAssembly, q: f64, amplitude: f64) -> FlowState {
    let mut raw = op.zeros();
    for (i, &r) in op.grid.r.iter().enumerate() {
        let c = 1.0 - (-(r - 1.0) * (r - 1.0)).exp();
        raw.d_mut(0)[i] = amplitude * r.powf(-2.0 / q) * c * c;
    }
    raw.sync_trace();
    op.apply_projector(&raw)
}

/// `ℙ div F` with `F = χ(r) r^{−1} (e_r⊗e_θ + e_θ⊗e_r)`, `χ` a smooth step
/// from 0 (for `r ≤ r0`) to 1 (for `r ≥ 2 r0`). `F` vanishes near the disk
/// and lies barely in `L²`.
pub fn shear_divergence_data(op: &OperatorAssembly, r0: f64, amplitude: f64) -> FlowState {
    let step = |r: f64| {
        let s = ((r - r0) / r0).clamp(0.0, 1.0);
        s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    };
    op.projected_divergence(|r, _| {
        let f = amplitude * step(r) / r;
        [[0.0, f], [f, 0.0]]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsop::{assemble_operator, GridConfig, RigidBodyParams};
    use rand::{Rng, SeedableRng};

    fn random_admissible(op: &OperatorAssembly, seed: u64) -> FlowState {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut s = op.zeros();
        s.coeffs.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        s.ell = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        s.omega = rng.gen_range(-1.0..1.0);
        op.apply_projector(&s)
    }

    #[test]
    fn contraction_and_energy_ledger() {
        let op = assemble_operator(&GridConfig::new(10.0, 32, 4), &RigidBodyParams::disk(1.0)).unwrap();
        for (seed, dt) in [(1, 1e-3), (2, 0.1), (3, 10.0)] {
            let v0 = random_admissible(&op, seed);
            let v1 = semigroup_step(&v0, dt, &op).unwrap();
            let l = step_ledger(&op, &v0, &v1, dt);
            assert!(l.norm_after <= l.norm_before);
            assert!(l.defect < 1e-8, "defect {}", l.defect);
        }
    }

    #[test]
    fn second_order_in_time() {
        let op = assemble_operator(&GridConfig::new(8.0, 24, 2), &RigidBodyParams::disk(1.0)).unwrap();
        let v0 = random_admissible(&op, 7);
        // smooth data: damp the stiff part first
        let v0 = CrankNicolson::new(&op, 0.05, SpaceKind::Constrained).unwrap().half(&op, &v0);
        let run = |n: usize| {
            let cn = CrankNicolson::new(&op, 0.5 / n as f64, SpaceKind::Constrained).unwrap();
            (0..n).fold(v0.clone(), |v, _| cn.step(&op, &v))
        };
        let (a, b, c) = (run(8), run(16), run(32));
        let order = (op.norm(&a.sub(&b)) / op.norm(&b.sub(&c))).log2();
        assert!(order > 1.9, "order {order}");
    }

    #[test]
    fn gradient_fields_project_to_zero() {
        let op = assemble_operator(&GridConfig::new(10.0, 32, 3), &RigidBodyParams::disk(1.0)).unwrap();
        let chi: Vec<Vec<f64>> = (0..op.zeros().blocks())
            .map(|b| op.grid.r.iter().map(|&r| ((r - 1.0) * (b as f64 + 1.0)).sin() * (-(r - 4.0).powi(2)).exp()).collect())
            .collect();
        let g = op.discrete_gradient(&chi);
        let pg = op.apply_projector(&g);
        assert!(op.norm(&pg) < 1e-10 * op.norm(&g));
    }
}
