//! Resolvent of `Ã` against rigid right-hand sides, built from `K_0` and
//! `K_1`, and the Dirichlet-corrected resolvent for general data.
//!
//! With `s = √λ` the profiles are
//!
//! * `φ_λ(r) = K_0(s r) / D_0` for `r > 1`, constant `K_0(s)/D_0` inside,
//!   `D_0 = λ K_0(s) − (2π/m) s K_0'(s)`;
//! * `ψ_λ(r) = K_1(s r) / D_1` for `r > 1`, `K_1(s) r / D_1` inside,
//!   `D_1 = (2π𝓙⁻¹ + λ) K_1(s) − 2π𝓙⁻¹ s K_1'(s)`.
//!
//! The `2π𝓙⁻¹` in `D_1` comes from the disk contribution `∫_{B₀}|∇(ωx^⊥)|² = 2πω²`
//! of the gradient form; the same denominator is used on both sides of `r = 1`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::grid::RigidBodyParams;
use super::operator::{ModeOperator, OperatorAssembly, SpaceKind};
use super::state::{block_info, FlowState, RigidDof};
use crate::error::{Error, Result};
use crate::special::k01_scaled;

/// `V_λ[F, τ](x) = φ_λ(x) F + ψ_λ(x) τ x^⊥/|x|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventField {
    pub lambda: f64,
    pub force: [f64; 2],
    pub torque: f64,
    pub body: RigidBodyParams,
    sqrt_lambda: f64,
    /// `D_0 e^{s}` and `D_1 e^{s}`.
    d0_scaled: f64,
    d1_scaled: f64,
}

pub fn closed_form_resolvent(lambda: f64, force: [f64; 2], torque: f64, body: &RigidBodyParams) -> Result<ResolventField> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("resolvent needs lambda > 0, got {lambda}")));
    }
    body.validate()?;
    let s = lambda.sqrt();
    let (k0, k1) = k01_scaled(s);
    let (m, j) = (body.mass, body.inertia);
    // K0' = −K1, K1' = −K0 − K1/s
    let d0 = lambda * k0 + 2.0 * PI / m * s * k1;
    let d1 = (2.0 * PI / j + lambda) * k1 + 2.0 * PI / j * (s * k0 + k1);
    Ok(ResolventField { lambda, force, torque, body: *body, sqrt_lambda: s, d0_scaled: d0, d1_scaled: d1 })
}

impl ResolventField {
    /// `φ_λ(r)`.
    pub fn phi(&self, r: f64) -> f64 {
        let s = self.sqrt_lambda;
        if r <= 1.0 {
            k01_scaled(s).0 / self.d0_scaled
        } else {
            k01_scaled(s * r).0 * (-s * (r - 1.0)).exp() / self.d0_scaled
        }
    }

    /// `ψ_λ(r)`.
    pub fn psi(&self, r: f64) -> f64 {
        let s = self.sqrt_lambda;
        if r <= 1.0 {
            k01_scaled(s).1 * r / self.d1_scaled
        } else {
            k01_scaled(s * r).1 * (-s * (r - 1.0)).exp() / self.d1_scaled
        }
    }

    /// `φ_λ'(r)` for `r > 1`.
    pub fn phi_prime(&self, r: f64) -> f64 {
        let s = self.sqrt_lambda;
        -s * k01_scaled(s * r).1 * (-s * (r - 1.0)).exp() / self.d0_scaled
    }

    /// `ψ_λ'(r)` for `r > 1`.
    pub fn psi_prime(&self, r: f64) -> f64 {
        let s = self.sqrt_lambda;
        let (k0, k1) = k01_scaled(s * r);
        -s * (k0 + k1 / (s * r)) * (-s * (r - 1.0)).exp() / self.d1_scaled
    }

    /// Rigid velocity carried on the disk: `(φ_λ(1) F, ψ_λ(1) τ)`.
    pub fn disk_motion(&self) -> ([f64; 2], f64) {
        let p = self.phi(1.0);
        ([p * self.force[0], p * self.force[1]], self.psi(1.0) * self.torque)
    }

    pub fn velocity(&self, x: [f64; 2]) -> [f64; 2] {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let p = self.phi(r);
        let mut v = [p * self.force[0], p * self.force[1]];
        if r > 0.0 {
            let q = self.psi(r) * self.torque / r;
            v[0] -= q * x[1];
            v[1] += q * x[0];
        }
        v
    }

    /// Samples of the field on the grid nodes (the outer node keeps the
    /// exact, nonzero value).
    pub fn sample(&self, op: &OperatorAssembly) -> FlowState {
        let mut s = op.zeros();
        for (i, &r) in op.grid.r.iter().enumerate() {
            let (p, q) = (self.phi(r), self.psi(r));
            s.d_mut(0)[i] = q * self.torque;
            for (b, f) in [(1, self.force[0]), (2, self.force[1])] {
                s.a_mut(b)[i] = p * f;
                s.d_mut(b)[i] = -p * f;
            }
        }
        let (ell, om) = self.disk_motion();
        s.ell = ell;
        s.omega = om;
        s
    }

    /// Radial ODE residuals `(φ'' + φ'/r − λφ, ψ'' + ψ'/r − ψ/r² − λψ)` at
    /// `r > 1`, with derivatives from sixth-order central differences of the
    /// evaluated profiles.
    pub fn ode_residual(&self, r: f64, h: f64) -> (f64, f64) {
        let d = |f: &dyn Fn(f64) -> f64| {
            let v: Vec<f64> = (-3..=3).map(|j| f(r + j as f64 * h)).collect();
            let d1 = (-v[0] + 9.0 * v[1] - 45.0 * v[2] + 45.0 * v[4] - 9.0 * v[5] + v[6]) / (60.0 * h);
            let d2 = (2.0 * v[0] - 27.0 * v[1] + 270.0 * v[2] - 490.0 * v[3] + 270.0 * v[4] - 27.0 * v[5] + 2.0 * v[6])
                / (180.0 * h * h);
            (v[3], d1, d2)
        };
        let (p, p1, p2) = d(&|x| self.phi(x));
        let (q, q1, q2) = d(&|x| self.psi(x));
        (p2 + p1 / r - self.lambda * p, q2 + q1 / r - q / (r * r) - self.lambda * q)
    }
}

/// `(K̃ + λ M) x` on a local vector.
fn shifted_local(mo: &ModeOperator, lambda: f64, x: &[f64]) -> Vec<f64> {
    let mut y = mo.apply_kgrad(x);
    for ((y, m), v) in y.iter_mut().zip(&mo.mdiag).zip(x) {
        *y += lambda * m * v;
    }
    y
}

/// Discrete residual of `(Ã + λ) V_λ[F, τ] = (F + τ x^⊥) 𝟙_{B₀}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolventResidual {
    pub lambda: f64,
    /// Largest strong-form residual over interior fluid nodes.
    pub fluid: f64,
    /// `|computed force − F|` and `|computed torque − τ|`.
    pub force: f64,
    pub torque: f64,
}

impl ResolventResidual {
    pub fn max(&self) -> f64 {
        self.fluid.max(self.force).max(self.torque)
    }
}

/// Apply the assembled `Ã + λ` to the sampled closed form. The outer node
/// holds the exact profile value, so truncation at `R` does not pollute the
/// last interior row.
pub fn resolvent_residual(op: &OperatorAssembly, rf: &ResolventField) -> ResolventResidual {
    let v = rf.sample(op);
    let n = op.intervals();
    let mut out = ResolventResidual { lambda: rf.lambda, fluid: 0.0, force: 0.0, torque: 0.0 };
    for b in 0..3 {
        let mo = op.mode_of_block(b);
        let sp = mo.space(SpaceKind::Free);
        let x = op.local(&v, b);
        let r = sp.zt(&shifted_local(mo, rf.lambda, &x));
        let slot = x.len() - 1;
        let (target, rigid_err) = match block_info(b).1 {
            Some(RigidDof::Omega) => (rf.torque, &mut out.torque),
            Some(RigidDof::EllX) => (rf.force[0], &mut out.force),
            _ => (rf.force[1], &mut out.force),
        };
        // the rigid row of M_r contains the node-0 half cell; the target only
        // charges the disk itself
        let got = r[0] / mo.mdiag[slot];
        *rigid_err = rigid_err.max((got - target).abs());
        for (l, rv) in r.iter().enumerate().skip(1) {
            let node = 1 + (l - 1) / 2;
            debug_assert!(node < n);
            out.fluid = out.fluid.max((rv / sp.mass.get(l, l)).abs());
        }
    }
    out
}

/// Which rigid-data profiles complete the Dirichlet solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    /// Discrete solutions of `(Ã + λ) V = (F + τx^⊥)𝟙_{B₀}` on the grid, so the
    /// corrected resolvent equals the direct solve up to round-off.
    Discrete,
    /// The sampled Bessel profiles.
    ClosedForm,
}

/// Output of [`dirichlet_correction`].
#[derive(Debug, Clone)]
pub struct DirichletCorrection {
    pub lambda: f64,
    /// `F₀` and `τ₀` from the discrete boundary rows.
    pub force0: [f64; 2],
    pub torque0: f64,
    /// `F₀` and `τ₀` from one-sided fourth-order differencing of `∂_r v₀`.
    pub force0_stencil: [f64; 2],
    pub torque0_stencil: f64,
    /// `(Ã₀ + λ)^{-1}(w 𝟙_{𝓕₀})`.
    pub v0: FlowState,
    /// `Ṽ_λ[W] = V₀ + V_λ[ℓ_W − F₀, ω_W − τ₀]`.
    pub corrected: FlowState,
}

/// Right-hand side `Zᵀ M x` of a block in a space.
fn rhs(mo: &ModeOperator, kind: SpaceKind, x: &[f64]) -> Vec<f64> {
    let mx: Vec<f64> = x.iter().zip(&mo.mdiag).map(|(a, w)| a * w).collect();
    mo.space(kind).zt(&mx)
}

/// Direct solve of `(Ã + λ) Ṽ = W` with the assembled matrices.
pub fn free_resolvent_direct(op: &OperatorAssembly, w: &FlowState, lambda: f64) -> Result<FlowState> {
    let facs = op.factor_all(SpaceKind::Free, lambda, 1.0)?;
    Ok(op.map_blocks(w, |mo, _, x| {
        let sp = mo.space(SpaceKind::Free);
        let y = facs[mo.k].solve(&rhs(mo, SpaceKind::Free, &x));
        sp.scatter(&y, x.len())
    }))
}

/// Discrete profile: solution of `(Ã + λ)V = (F + τx^⊥)𝟙_{B₀}` for the
/// rigid blocks.
pub fn discrete_profile(op: &OperatorAssembly, lambda: f64, force: [f64; 2], torque: f64) -> Result<FlowState> {
    let mut out = op.zeros();
    for b in 0..3 {
        let mo = op.mode_of_block(b);
        let sp = mo.space(SpaceKind::Free);
        let slot = mo.local_len() - 1;
        let amp = match block_info(b).1 {
            Some(RigidDof::Omega) => torque,
            Some(RigidDof::EllX) => force[0],
            _ => force[1],
        };
        let mut r = vec![0.0; sp.dim];
        r[0] = mo.mdiag[slot] * amp;
        let fac = sp.factor(lambda, 1.0)?;
        let x = sp.scatter(&fac.solve(&r), mo.local_len());
        op.set_local(&mut out, b, &x);
    }
    Ok(out)
}

/// Dirichlet solve plus rigid correction of the resolvent of `Ã`.
pub fn dirichlet_correction(op: &OperatorAssembly, w: &FlowState, lambda: f64, profile: ProfileKind) -> Result<DirichletCorrection> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("resolvent needs lambda > 0, got {lambda}")));
    }
    let facs = op.factor_all(SpaceKind::Dirichlet, lambda, 1.0)?;
    let v0 = op.map_blocks(w, |mo, _, x| {
        let sp = mo.space(SpaceKind::Dirichlet);
        let y = facs[mo.k].solve(&rhs(mo, SpaceKind::Dirichlet, &x));
        sp.scatter(&y, x.len())
    });
    let (m, j) = (op.body.mass, op.body.inertia);
    let mut force0 = [0.0; 2];
    let mut torque0 = 0.0;
    for b in 0..3 {
        let mo = op.mode_of_block(b);
        let slot = mo.local_len() - 1;
        let x0 = op.local(&v0, b);
        let g = mo.space(SpaceKind::Free).zt(&shifted_local(mo, lambda, &x0))[0];
        // remove the node-0 half-cell load of W, which belongs to the fluid
        let xw = op.local(w, b);
        let half = rhs(mo, SpaceKind::Free, &xw)[0] - mo.mdiag[slot] * xw[slot];
        let val = (g - half) / mo.mdiag[slot];
        match block_info(b).1 {
            Some(RigidDof::Omega) => torque0 = val,
            Some(RigidDof::EllX) => force0[0] = val,
            _ => force0[1] = val,
        }
    }
    let grid = &op.grid;
    let dr = |f: &[f64]| grid.boundary_derivative(f);
    let force0_stencil = [
        -PI * (dr(v0.a(1)) - dr(v0.d(1))) / m,
        -PI * (dr(v0.a(2)) - dr(v0.d(2))) / m,
    ];
    let torque0_stencil = -2.0 * PI * dr(v0.d(0)) / j;

    let f = [w.ell[0] - force0[0], w.ell[1] - force0[1]];
    let t = w.omega - torque0;
    let corr = match profile {
        ProfileKind::Discrete => discrete_profile(op, lambda, f, t)?,
        ProfileKind::ClosedForm => closed_form_resolvent(lambda, f, t, &op.body)?.sample(op),
    };
    let corrected = v0.add(&corr);
    Ok(DirichletCorrection { lambda, force0, torque0, force0_stencil, torque0_stencil, v0, corrected })
}

/// Duality form of the boundary functionals: `m F₀ = −∫ w K_0(√λ r)/K_0(√λ)`
/// and `𝓙 τ₀ = −∫ w·e_θ K_1(√λ r)/K_1(√λ)`, by grid quadrature. Returns
/// `(F₀, τ₀)`.
pub fn duality_functionals(op: &OperatorAssembly, w: &FlowState, lambda: f64) -> ([f64; 2], f64) {
    let s = lambda.sqrt();
    let (k0s, k1s) = k01_scaled(s);
    let g = &op.grid;
    let parts: Vec<(f64, f64, f64)> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let r = g.r[i];
            let (k0, k1) = k01_scaled(s * r);
            let e = (-s * (r - 1.0)).exp();
            let (u0, u1) = (k0 * e / k0s, k1 * e / k1s);
            let wt = g.w[i];
            (
                PI * wt * (w.a(1)[i] - w.d(1)[i]) * u0,
                PI * wt * (w.a(2)[i] - w.d(2)[i]) * u0,
                2.0 * PI * wt * w.d(0)[i] * u1,
            )
        })
        .collect();
    let (fx, fy, tq) = parts.iter().fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    ([-fx / op.body.mass, -fy / op.body.mass], -tq / op.body.inertia)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsop::{assemble_operator, GridConfig};

    #[test]
    fn profiles_continuous_and_decaying() {
        let body = RigidBodyParams::disk(1.0);
        for lambda in [1e-3, 0.1, 1.0, 10.0, 1e4] {
            let rf = closed_form_resolvent(lambda, [0.3, -0.7], 1.1, &body).unwrap();
            assert!((rf.phi(1.0) - rf.phi(1.0 + 1e-12)).abs() < 1e-9 * rf.phi(1.0).abs());
            assert!((rf.psi(1.0) - rf.psi(1.0 + 1e-12)).abs() < 1e-9 * rf.psi(1.0).abs());
            for r in [2.5, 4.0, 9.0] {
                let bound = (-lambda.sqrt() * (r - 1.0)).exp();
                let v = rf.velocity([r, 0.0]);
                assert!((v[0].hypot(v[1])) <= 2.0 * bound * (rf.phi(1.0).abs() + rf.psi(1.0).abs()) + 1e-300);
            }
        }
        assert!(closed_form_resolvent(0.0, [1.0, 0.0], 0.0, &body).is_err());
    }

    #[test]
    fn radial_ode_holds() {
        let body = RigidBodyParams::disk(2.0);
        for lambda in [0.1, 1.0, 10.0] {
            let rf = closed_form_resolvent(lambda, [1.0, 0.0], 1.0, &body).unwrap();
            for r in [1.5, 3.0, 6.0] {
                let (a, b) = rf.ode_residual(r, 1e-2);
                let scale = rf.phi(r).abs() * lambda.max(1.0);
                assert!(a.abs() < 1e-6 * scale.max(1e-300), "phi ode {a} at {r}");
                let scale = rf.psi(r).abs() * lambda.max(1.0);
                assert!(b.abs() < 1e-6 * scale.max(1e-300), "psi ode {b} at {r}");
            }
        }
    }

    #[test]
    fn zero_data_zero_field() {
        let rf = closed_form_resolvent(1.0, [0.0, 0.0], 0.0, &RigidBodyParams::default()).unwrap();
        assert_eq!(rf.velocity([2.0, 1.0]), [0.0, 0.0]);
    }

    #[test]
    fn residual_decreases_with_refinement() {
        let body = RigidBodyParams::disk(1.0);
        let rf = closed_form_resolvent(1.0, [0.4, -0.2], 0.9, &body).unwrap();
        let res: Vec<f64> = [32usize, 64]
            .iter()
            .map(|&n| resolvent_residual(&assemble_operator(&GridConfig::new(20.0, n, 1), &body).unwrap(), &rf).max())
            .collect();
        assert!(res[1] < 0.3 * res[0], "{res:?}");
    }

    #[test]
    fn corrected_resolvent_matches_direct_solve() {
        let body = RigidBodyParams::disk(1.0);
        let op = assemble_operator(&GridConfig::new(15.0, 40, 3), &body).unwrap();
        let mut w = op.zeros();
        for (i, v) in w.coeffs.iter_mut().enumerate() {
            *v = ((i * 7919) % 101) as f64 / 50.0 - 1.0;
        }
        w.ell = [0.3, -0.5];
        w.omega = 0.8;
        w.sync_trace();
        let c = dirichlet_correction(&op, &w, 0.7, ProfileKind::Discrete).unwrap();
        let d = free_resolvent_direct(&op, &w, 0.7).unwrap();
        assert!(op.norm(&c.corrected.sub(&d)) < 1e-10 * op.norm(&d));
        // zero fluid data: no correction forces
        let mut r = op.zeros();
        r.ell = [1.0, 0.0];
        r.sync_trace();
        let mut rr = r.clone();
        for b in 0..rr.blocks() {
            for i in 0..rr.nodes() {
                rr.a_mut(b)[i] = 0.0;
                rr.d_mut(b)[i] = 0.0;
            }
        }
        let c = dirichlet_correction(&op, &rr, 0.7, ProfileKind::Discrete).unwrap();
        assert!(c.force0[0].abs() < 1e-14 && c.torque0.abs() < 1e-14);
    }
}
