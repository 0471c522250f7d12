//! Weak forms of the transport terms on the polar grid.
//!
//! All loads are right-hand sides: the step solves
//! `M ∂_t y + K y = g(y, t)`. The convection uses the skew form
//! `b(u; v, φ) = ½[∫(u·∇v)·φ − ∫(u·∇φ)·v]`, so `b(u; v, v) = 0` holds for
//! the grid quadrature exactly.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::fsop::fields::{PolarSamples, WeakLoad};
use crate::fsop::{FlowState, OperatorAssembly};
use crate::oseen;

/// Azimuthal speed `U(r)` of the unit-circulation Oseen vortex at time `t`,
/// `Θ = U(|x|) e_θ`.
#[derive(Debug, Clone, Copy)]
pub struct OseenProfile {
    pub time: f64,
}

impl OseenProfile {
    pub fn new(time: f64) -> Self {
        Self { time }
    }

    pub fn u(&self, r: f64) -> f64 {
        let z = r * r / (4.0 * (1.0 + self.time));
        -(-z).exp_m1() / (2.0 * PI * r)
    }

    pub fn du(&self, r: f64) -> f64 {
        let s = 1.0 + self.time;
        let z = r * r / (4.0 * s);
        (-z).exp() / (4.0 * PI * s) + (-z).exp_m1() / (2.0 * PI * r * r)
    }

    /// Residual torque source `ζ(t)` of the angular momentum law.
    pub fn zeta(&self, op: &OperatorAssembly) -> f64 {
        oseen::zeta(self.time, &op.body).torque_residual
    }
}

/// Which parts of the right-hand side to assemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forcing {
    pub alpha: f64,
    /// `−b(w − ℓ + αΘ; w, φ)`: self-transport and transport by `αΘ`.
    pub transport: bool,
    /// `−α∫((w − ℓ)·∇Θ)·φ`.
    pub stretch: bool,
    /// `αζ(t)` on the angular momentum row.
    pub torque: bool,
    /// `α∫(w⊗Θ):∇φ`, the divergence form of `−α(Θ·∇)w` (used instead of
    /// the skew form for the `αΘ` part of the transport).
    pub div_form: bool,
}

impl Forcing {
    /// Everything, with the skew form for the `αΘ` transport.
    pub fn full(alpha: f64) -> Self {
        Self { alpha, transport: true, stretch: alpha != 0.0, torque: alpha != 0.0, div_form: false }
    }

    /// Everything, with the divergence form for the `αΘ` transport.
    pub fn full_div_form(alpha: f64) -> Self {
        Self { div_form: true, ..Self::full(alpha) }
    }
}

/// Polar components of the constant field `ℓ` at angle `θ`.
#[inline]
fn ell_polar(ell: [f64; 2], c: f64, s: f64) -> (f64, f64) {
    (ell[0] * c + ell[1] * s, -ell[0] * s + ell[1] * c)
}

/// Assemble the right-hand side `g(w, t)` at time `t` as a dual vector.
pub fn forcing_load(op: &OperatorAssembly, w: &FlowState, t: f64, f: &Forcing) -> FlowState {
    let nphi = op.ang.nphi;
    let nodes = op.grid.len();
    let needs_grid = f.transport || f.stretch || (f.div_form && f.alpha != 0.0);
    let mut load = if needs_grid { WeakLoad::zeros(nodes * nphi) } else { WeakLoad::default() };
    if needs_grid {
        let s = op.synthesize(w, f.transport);
        let th = OseenProfile::new(t);
        let alpha = f.alpha;
        let skew_alpha = if f.div_form { 0.0 } else { alpha };
        let (vr, vt, drr, drt, dtr, dtt) = load.all_mut();
        let rows = vr
            .par_chunks_mut(nphi)
            .zip(vt.par_chunks_mut(nphi))
            .zip(drr.par_chunks_mut(nphi))
            .zip(drt.par_chunks_mut(nphi))
            .zip(dtr.par_chunks_mut(nphi))
            .zip(dtt.par_chunks_mut(nphi));
        rows.enumerate().for_each(|(i, (((((lr, lt), lrr), lrt), ltr), ltt))| {
            let r = op.grid.r[i];
            let (uth, duth) = (th.u(r), th.du(r));
            for j in 0..nphi {
                let k = i * nphi + j;
                let (c, sn) = (op.ang.theta[j].cos(), op.ang.theta[j].sin());
                let (er, et) = ell_polar(w.ell, c, sn);
                // relative velocity w − ℓ
                let (qr, qt) = (s.vr[k] - er, s.vt[k] - et);
                if f.transport {
                    let (ur, ut) = (qr, qt + skew_alpha * uth);
                    let g = s.gradient(r, i, j);
                    let (wr, wt) = (s.vr[k], s.vt[k]);
                    lr[j] -= 0.5 * (g[0][0] * ur + g[0][1] * ut);
                    lt[j] -= 0.5 * (g[1][0] * ur + g[1][1] * ut);
                    lrr[j] += 0.5 * ur * wr;
                    ltr[j] += 0.5 * ut * wr / r;
                    lt[j] -= 0.5 * ut * wr / r;
                    lrt[j] += 0.5 * ur * wt;
                    ltt[j] += 0.5 * ut * wt / r;
                    lr[j] += 0.5 * ut * wt / r;
                }
                if f.div_form && alpha != 0.0 {
                    let a = alpha * uth / r;
                    let (wr, wt) = (s.vr[k], s.vt[k]);
                    ltr[j] += a * wr;
                    lt[j] -= a * wr;
                    ltt[j] += a * wt;
                    lr[j] += a * wt;
                }
                if f.stretch {
                    // ∇Θ (w − ℓ) = [−U q_θ / r, U' q_r]
                    lr[j] += alpha * uth * qt / r;
                    lt[j] -= alpha * duth * qr;
                }
            }
        });
    }
    if f.torque && f.alpha != 0.0 {
        load.torque = f.alpha * OseenProfile::new(t).zeta(op);
    }
    op.weak_load(&load)
}

/// Dual vector of the plain convective form `−∫((u·∇)v)·φ` with
/// `u = w_a − ℓ_a`, `v = w_b`.
pub fn convective_load(op: &OperatorAssembly, wa: &FlowState, wb: &FlowState) -> FlowState {
    let nphi = op.ang.nphi;
    let nodes = op.grid.len();
    let sa = op.synthesize(wa, false);
    let sb = op.synthesize(wb, true);
    let mut load = WeakLoad { vr: Some(vec![0.0; nodes * nphi]), vt: Some(vec![0.0; nodes * nphi]), ..Default::default() };
    let (lr, lt) = (load.vr.as_mut().unwrap(), load.vt.as_mut().unwrap());
    lr.par_chunks_mut(nphi).zip(lt.par_chunks_mut(nphi)).enumerate().for_each(|(i, (lr, lt))| {
        let r = op.grid.r[i];
        for j in 0..nphi {
            let k = i * nphi + j;
            let (c, s) = (op.ang.theta[j].cos(), op.ang.theta[j].sin());
            let (er, et) = ell_polar(wa.ell, c, s);
            let (ur, ut) = (sa.vr[k] - er, sa.vt[k] - et);
            let g = sb.gradient(r, i, j);
            lr[j] = -(g[0][0] * ur + g[0][1] * ut);
            lt[j] = -(g[1][0] * ur + g[1][1] * ut);
        }
    });
    op.weak_load(&load)
}

/// Largest `dt (|u_r|/h_r + |u_θ|/(r Δθ))` over the grid for the transport
/// velocity `w − ℓ + αΘ(t)`.
pub fn cfl_number(op: &OperatorAssembly, w: &FlowState, alpha: f64, t: f64, dt: f64) -> f64 {
    let s: PolarSamples = op.synthesize(w, false);
    let nphi = op.ang.nphi;
    let dth = 2.0 * PI / nphi as f64;
    let th = OseenProfile::new(t);
    let g = &op.grid;
    (0..g.len())
        .into_par_iter()
        .map(|i| {
            let r = g.r[i];
            let hr = match i {
                0 => g.h[0],
                _ if i == g.len() - 1 => g.h[i - 1],
                _ => g.h[i - 1].min(g.h[i]),
            };
            let a = alpha * th.u(r);
            (0..nphi)
                .map(|j| {
                    let k = i * nphi + j;
                    let (c, sn) = (op.ang.theta[j].cos(), op.ang.theta[j].sin());
                    let (er, et) = ell_polar(w.ell, c, sn);
                    (s.vr[k] - er).abs() / hr + (s.vt[k] - et + a).abs() / (r * dth)
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
        * dt
}

/// Dot product of a dual vector with a state (`g · x` over local vectors).
pub fn pairing(op: &OperatorAssembly, g: &FlowState, x: &FlowState) -> f64 {
    (0..g.blocks())
        .map(|b| op.local(g, b).iter().zip(op.local(x, b)).map(|(a, c)| a * c).sum::<f64>())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsop::{assemble_operator, GridConfig, RigidBodyParams};
    use rand::{Rng, SeedableRng};

    fn setup() -> (OperatorAssembly, FlowState) {
        let op = assemble_operator(&GridConfig::new(10.0, 32, 4), &RigidBodyParams::disk(1.0)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut s = op.zeros();
        s.coeffs.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        s.ell = [0.3, -0.2];
        s.omega = 0.4;
        (op.clone(), op.apply_projector(&s))
    }

    #[test]
    fn skew_transport_is_energy_neutral() {
        let (op, w) = setup();
        let f = Forcing { alpha: 0.7, transport: true, stretch: false, torque: false, div_form: false };
        let g = forcing_load(&op, &w, 2.0, &f);
        let e = pairing(&op, &g, &w);
        let scale = op.norm(&w).powi(3);
        assert!(e.abs() < 1e-13 * scale, "{e}");
    }

    #[test]
    fn oseen_profile_matches_vortex() {
        let th = OseenProfile::new(1.5);
        for r in [1.0, 2.5, 9.0] {
            let v = oseen::theta(1.5, [0.0, r], 1.0);
            assert!((th.u(r) + v[0]).abs() < 1e-15);
            let h = 1e-5;
            let fd = (th.u(r + h) - th.u(r - h)) / (2.0 * h);
            assert!((th.du(r) - fd).abs() < 1e-9);
        }
    }

    #[test]
    fn weak_load_is_the_adjoint_of_synthesis() {
        // ∫ F:∇φ through the load equals direct quadrature with φ synthesized
        let (op, phi) = setup();
        let nphi = op.ang.nphi;
        let s = op.synthesize(&phi, true);
        let mut load = WeakLoad::zeros(op.grid.len() * nphi);
        let mut direct = 0.0;
        {
            let (vr, vt, drr, drt, dtr, dtt) = load.all_mut();
            for i in 0..op.grid.len() {
                for j in 0..nphi {
                    let k = i * nphi + j;
                    let c = [(i + 2 * j) as f64, 1.0, (i * j) as f64 * 0.1, -0.5, 0.25, (j as f64).sin()];
                    vr[k] = c[0];
                    vt[k] = c[1];
                    drr[k] = c[2];
                    drt[k] = c[3];
                    dtr[k] = c[4];
                    dtt[k] = c[5];
                    direct += op.cell_weight(i)
                        * (c[0] * s.vr[k] + c[1] * s.vt[k] + c[2] * s.dr_vr[k] + c[3] * s.dr_vt[k] + c[4] * s.dt_vr[k] + c[5] * s.dt_vt[k]);
                }
            }
        }
        let g = op.weak_load(&load);
        let via = pairing(&op, &g, &phi);
        assert!((via - direct).abs() < 1e-11 * direct.abs());
    }

    #[test]
    fn div_and_skew_forms_agree() {
        // Θ·∇ only differentiates in θ, where the trapezoidal rule integrates
        // by parts exactly, so the two forms coincide on the grid.
        let op = assemble_operator(&GridConfig::new(10.0, 32, 4), &RigidBodyParams::disk(1.0)).unwrap();
        let w = op.apply_projector(&op.sample_admissible_trace(
            |x| {
                let e = (-(x[0] - 3.0).powi(2) - x[1] * x[1]).exp();
                [-x[1] * e, (x[0] - 3.0) * e]
            },
            [0.3, -0.1],
            0.2,
        ));
        let lin = |div_form| Forcing { alpha: 1.0, transport: false, stretch: false, torque: false, div_form };
        let skew = {
            let all = forcing_load(&op, &w, 0.5, &Forcing { transport: true, ..lin(false) });
            let own = forcing_load(&op, &w, 0.5, &Forcing { transport: true, alpha: 0.0, ..lin(false) });
            op.riesz(&all.sub(&own), crate::fsop::SpaceKind::Constrained)
        };
        let div = op.riesz(&forcing_load(&op, &w, 0.5, &lin(true)), crate::fsop::SpaceKind::Constrained);
        assert!(op.norm(&div) > 1e-3);
        assert!(op.norm(&skew.sub(&div)) < 1e-12 * op.norm(&div));
    }
}
