//! Physical-space sampling: synthesis of the velocity on the polar grid,
//! analysis of prescribed fields, and the `𝓛^p`-type norms.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::operator::{OperatorAssembly, SpaceKind};
use super::state::FlowState;
use crate::quad;

/// Equispaced angles with the real Fourier basis tabulated per block.
#[derive(Debug, Clone)]
pub struct AngularGrid {
    pub nphi: usize,
    pub theta: Vec<f64>,
    /// `v_r` basis of block `b` at angle `j`: `br[b * nphi + j]`.
    pub br: Vec<f64>,
    /// `v_θ` basis.
    pub bt: Vec<f64>,
    /// `∂_θ` of the `v_r` basis.
    pub dbr: Vec<f64>,
    /// `∂_θ` of the `v_θ` basis.
    pub dbt: Vec<f64>,
    pub blocks: usize,
}

impl AngularGrid {
    pub fn new(modes: usize, nphi: usize) -> Self {
        let blocks = 2 * modes + 1;
        let theta: Vec<f64> = (0..nphi).map(|j| 2.0 * PI * j as f64 / nphi as f64).collect();
        let mut br = vec![0.0; blocks * nphi];
        let mut bt = vec![0.0; blocks * nphi];
        let mut dbr = vec![0.0; blocks * nphi];
        let mut dbt = vec![0.0; blocks * nphi];
        for (j, &th) in theta.iter().enumerate() {
            br[j] = 1.0;
            bt[j] = 1.0;
            for k in 1..=modes {
                let kf = k as f64;
                let (c, s) = ((kf * th).cos(), (kf * th).sin());
                let (b1, b2) = ((2 * k - 1) * nphi + j, 2 * k * nphi + j);
                br[b1] = c;
                bt[b1] = s;
                dbr[b1] = -kf * s;
                dbt[b1] = kf * c;
                br[b2] = s;
                bt[b2] = -c;
                dbr[b2] = kf * c;
                dbt[b2] = kf * s;
            }
        }
        Self { nphi, theta, br, bt, dbr, dbt, blocks }
    }

    #[inline]
    pub fn row<'a>(&self, table: &'a [f64], b: usize) -> &'a [f64] {
        &table[b * self.nphi..(b + 1) * self.nphi]
    }

    /// `(1/N_φ) Σ_j basis_b(θ_j)²`.
    pub fn basis_norm(&self, b: usize) -> f64 {
        if b == 0 {
            1.0
        } else {
            0.5
        }
    }
}

/// Polar velocity components and their derivatives on `(node, angle)`,
/// stored row-major with `nphi` angles per node.
#[derive(Debug, Clone, Default)]
pub struct PolarSamples {
    pub nodes: usize,
    pub nphi: usize,
    pub vr: Vec<f64>,
    pub vt: Vec<f64>,
    pub dr_vr: Vec<f64>,
    pub dr_vt: Vec<f64>,
    pub dt_vr: Vec<f64>,
    pub dt_vt: Vec<f64>,
}

impl PolarSamples {
    /// Gradient in the polar frame `[[G_rr, G_rθ], [G_θr, G_θθ]]` at `(i, j)`.
    #[inline]
    pub fn gradient(&self, r: f64, i: usize, j: usize) -> [[f64; 2]; 2] {
        let k = i * self.nphi + j;
        [
            [self.dr_vr[k], (self.dt_vr[k] - self.vt[k]) / r],
            [self.dr_vt[k], (self.dt_vt[k] + self.vr[k]) / r],
        ]
    }
}

/// Synthesize `Σ_b c_b[i] basis_b(θ_j)` for all nodes.
fn synth(ang: &AngularGrid, nodes: usize, coef: impl Fn(usize, usize) -> f64 + Sync, table: &[f64]) -> Vec<f64> {
    let nphi = ang.nphi;
    let mut out = vec![0.0; nodes * nphi];
    out.par_chunks_mut(nphi).enumerate().for_each(|(i, row)| {
        for b in 0..ang.blocks {
            let c = coef(b, i);
            if c != 0.0 {
                for (o, t) in row.iter_mut().zip(ang.row(table, b)) {
                    *o += c * t;
                }
            }
        }
    });
    out
}

/// Adjoint of synthesis: `c_b[i] = Σ_j f(i, j) basis_b(θ_j)`, returned as
/// `[block][node]`.
pub fn adjoint_synth(ang: &AngularGrid, nodes: usize, f: &[f64], table: &[f64]) -> Vec<Vec<f64>> {
    let nphi = ang.nphi;
    (0..ang.blocks)
        .into_par_iter()
        .map(|b| {
            let t = ang.row(table, b);
            (0..nodes).map(|i| f[i * nphi..(i + 1) * nphi].iter().zip(t).map(|(a, b)| a * b).sum()).collect()
        })
        .collect()
}

impl OperatorAssembly {
    /// Velocity and, when `derivs` is set, its radial and angular derivatives.
    pub fn synthesize(&self, v: &FlowState, derivs: bool) -> PolarSamples {
        let ang = &self.ang;
        let nodes = self.grid.len();
        let vr = synth(ang, nodes, |b, i| v.a(b)[i], &ang.br);
        let vt = synth(ang, nodes, |b, i| v.d(b)[i], &ang.bt);
        let mut s = PolarSamples { nodes, nphi: ang.nphi, vr, vt, ..Default::default() };
        if derivs {
            let da: Vec<Vec<f64>> = (0..v.blocks()).map(|b| self.grid.derivative(v.a(b))).collect();
            let dd: Vec<Vec<f64>> = (0..v.blocks()).map(|b| self.grid.derivative(v.d(b))).collect();
            s.dr_vr = synth(ang, nodes, |b, i| da[b][i], &ang.br);
            s.dr_vt = synth(ang, nodes, |b, i| dd[b][i], &ang.bt);
            s.dt_vr = synth(ang, nodes, |b, i| v.a(b)[i], &ang.dbr);
            s.dt_vt = synth(ang, nodes, |b, i| v.d(b)[i], &ang.dbt);
        }
        s
    }

    /// Quadrature weight of grid point `(i, ·)`: `w_i · 2π/N_φ`.
    #[inline]
    pub fn cell_weight(&self, i: usize) -> f64 {
        self.grid.w[i] * 2.0 * PI / self.ang.nphi as f64
    }

    /// Coefficients of polar samples `(v_r, v_θ)` in the truncated Fourier basis.
    pub fn analyze(&self, vr: &[f64], vt: &[f64]) -> FlowState {
        let ang = &self.ang;
        let nodes = self.grid.len();
        let ca = adjoint_synth(ang, nodes, vr, &ang.br);
        let cd = adjoint_synth(ang, nodes, vt, &ang.bt);
        let mut s = self.zeros();
        for b in 0..s.blocks() {
            let nrm = ang.nphi as f64 * ang.basis_norm(b);
            for i in 0..nodes {
                s.a_mut(b)[i] = ca[b][i] / nrm;
                s.d_mut(b)[i] = cd[b][i] / nrm;
            }
        }
        s
    }

    /// Sample a Cartesian vector field on the grid (raw, not projected).
    /// The disk data are set to `ell`, `omega`; node 0 keeps the sampled
    /// fluid values.
    pub fn sample_cartesian<F>(&self, f: F, ell: [f64; 2], omega: f64) -> FlowState
    where
        F: Fn([f64; 2]) -> [f64; 2] + Sync,
    {
        let nphi = self.ang.nphi;
        let nodes = self.grid.len();
        let mut vr = vec![0.0; nodes * nphi];
        let mut vt = vec![0.0; nodes * nphi];
        vr.par_chunks_mut(nphi).zip(vt.par_chunks_mut(nphi)).enumerate().for_each(|(i, (rr, tt))| {
            let r = self.grid.r[i];
            for j in 0..nphi {
                let (c, s) = (self.ang.theta[j].cos(), self.ang.theta[j].sin());
                let u = f([r * c, r * s]);
                rr[j] = u[0] * c + u[1] * s;
                tt[j] = -u[0] * s + u[1] * c;
            }
        });
        let mut st = self.analyze(&vr, &vt);
        st.ell = ell;
        st.omega = omega;
        st
    }

    /// Like [`sample_cartesian`](Self::sample_cartesian) but forces the rigid
    /// trace on node 0 and zero on the outer node.
    pub fn sample_admissible_trace<F>(&self, f: F, ell: [f64; 2], omega: f64) -> FlowState
    where
        F: Fn([f64; 2]) -> [f64; 2] + Sync,
    {
        let mut s = self.sample_cartesian(f, ell, omega);
        s.sync_trace();
        s
    }

    /// `∫_{𝓕₀ ∩ {r<R}} |v|^p` by grid quadrature (`p = ∞` gives the max).
    pub fn fluid_lp_pow(&self, v: &FlowState, p: f64) -> f64 {
        let s = self.synthesize(v, false);
        self.reduce_grid(&s, p, |s, _i, k| (s.vr[k] * s.vr[k] + s.vt[k] * s.vt[k]).sqrt())
    }

    fn reduce_grid<F>(&self, s: &PolarSamples, p: f64, f: F) -> f64
    where
        F: Fn(&PolarSamples, usize, usize) -> f64 + Sync,
    {
        let nphi = s.nphi;
        let parts: Vec<f64> = (0..s.nodes)
            .into_par_iter()
            .map(|i| {
                let w = self.cell_weight(i);
                let mut acc = 0.0f64;
                for j in 0..nphi {
                    let v = f(s, i, i * nphi + j);
                    if p.is_infinite() {
                        acc = acc.max(v);
                    } else {
                        acc += w * v.powf(p);
                    }
                }
                acc
            })
            .collect();
        if p.is_infinite() {
            parts.into_iter().fold(0.0, f64::max)
        } else {
            parts.into_iter().sum()
        }
    }

    /// `‖v‖_{L^p(𝓕₀)}`.
    pub fn fluid_lp(&self, v: &FlowState, p: f64) -> f64 {
        let s = self.fluid_lp_pow(v, p);
        if p.is_infinite() {
            s
        } else {
            s.powf(1.0 / p)
        }
    }

    /// `(m/π) ∫_{B₀} |ℓ + ω x^⊥|^p`.
    pub fn disk_lp_pow(&self, v: &FlowState, p: f64) -> f64 {
        let m = self.body.mass;
        if p == 2.0 {
            return m * (v.ell[0] * v.ell[0] + v.ell[1] * v.ell[1]) + 0.5 * m * v.omega * v.omega;
        }
        let (rs, ws) = quad::gauss_legendre_on(24, 0.0, 1.0);
        let nt = 96;
        let mut acc = 0.0;
        for (r, w) in rs.iter().zip(&ws) {
            for j in 0..nt {
                let th = 2.0 * PI * j as f64 / nt as f64;
                let u = [v.ell[0] - v.omega * r * th.sin(), v.ell[1] + v.omega * r * th.cos()];
                acc += w * r * (2.0 * PI / nt as f64) * (u[0] * u[0] + u[1] * u[1]).sqrt().powf(p);
            }
        }
        m / PI * acc
    }

    /// `‖V‖_{𝓛^p}`; `p = ∞` returns `max(sup|v|, sup_{B₀}|ℓ + ωx^⊥|)`.
    pub fn lp_norm(&self, v: &FlowState, p: f64) -> f64 {
        if p.is_infinite() {
            let disk = (v.ell[0] * v.ell[0] + v.ell[1] * v.ell[1]).sqrt() + v.omega.abs();
            return self.fluid_lp(v, p).max(disk);
        }
        (self.fluid_lp_pow(v, p) + self.disk_lp_pow(v, p)).powf(1.0 / p)
    }

    /// `‖∇v‖_{L^p(𝓕₀)}` (Frobenius), from grid derivatives.
    pub fn grad_lp(&self, v: &FlowState, p: f64) -> f64 {
        let s = self.synthesize(v, true);
        let g = &self.grid;
        let tot = self.reduce_grid(&s, p, |s, i, k| {
            let j = k - i * s.nphi;
            let m = s.gradient(g.r[i], i, j);
            (m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1]).sqrt()
        });
        if p.is_infinite() {
            tot
        } else {
            tot.powf(1.0 / p)
        }
    }

    /// Grid-quadrature values of `∫|∇v|²` and `2∫|D(v)|²` over the fluid.
    pub fn grid_dirichlet_forms(&self, v: &FlowState) -> (f64, f64) {
        let s = self.synthesize(v, true);
        let nphi = s.nphi;
        let g = &self.grid;
        (0..s.nodes)
            .into_par_iter()
            .map(|i| {
                let w = self.cell_weight(i);
                let mut a = 0.0;
                let mut b = 0.0;
                for j in 0..nphi {
                    let m = s.gradient(g.r[i], i, j);
                    a += w * (m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1]);
                    let off = 0.5 * (m[0][1] + m[1][0]);
                    b += w * 2.0 * (m[0][0] * m[0][0] + m[1][1] * m[1][1] + 2.0 * off * off);
                }
                (a, b)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1))
    }

    /// Load vector of the weak functional described by `load`, in local
    /// block coordinates (a `FlowState` used as a dual vector: node values
    /// hold the load on each coefficient, `ell`/`omega` the disk loads).
    pub fn weak_load(&self, load: &WeakLoad) -> FlowState {
        let ang = &self.ang;
        let nodes = self.grid.len();
        let nphi = ang.nphi;
        let weigh = |f: &[f64]| -> Vec<f64> {
            let mut out = f.to_vec();
            out.par_chunks_mut(nphi).enumerate().for_each(|(i, row)| {
                let w = self.cell_weight(i);
                row.iter_mut().for_each(|x| *x *= w);
            });
            out
        };
        let mut s = self.zeros();
        let mut add = |f: &[f64], table: &[f64], radial: bool, azim: bool| {
            let c = adjoint_synth(ang, nodes, &weigh(f), table);
            for (b, cb) in c.iter().enumerate() {
                let cb = if radial { self.derivative_adjoint(cb) } else { cb.clone() };
                let dst = if azim { s.d_mut(b) } else { s.a_mut(b) };
                dst.iter_mut().zip(&cb).for_each(|(d, x)| *d += x);
            }
        };
        if let Some(f) = &load.vr {
            add(f, &ang.br, false, false);
        }
        if let Some(f) = &load.vt {
            add(f, &ang.bt, false, true);
        }
        if let Some(f) = &load.dr_vr {
            add(f, &ang.br, true, false);
        }
        if let Some(f) = &load.dr_vt {
            add(f, &ang.bt, true, true);
        }
        if let Some(f) = &load.dt_vr {
            add(f, &ang.dbr, false, false);
        }
        if let Some(f) = &load.dt_vt {
            add(f, &ang.dbt, false, true);
        }
        s.ell = load.force;
        s.omega = load.torque;
        s
    }

    /// Transpose of [`RadialGrid::derivative`](super::grid::RadialGrid::derivative).
    fn derivative_adjoint(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; g.len()];
        for (i, st) in self.grid.d1.iter().enumerate() {
            for &(j, c) in st {
                out[j] += c * g[i];
            }
        }
        out
    }

    /// Riesz representative in the given space of a dual vector produced by
    /// [`weak_load`](Self::weak_load): solves `M_r y = Zᵀ g` per block.
    pub fn riesz(&self, load: &FlowState, kind: SpaceKind) -> FlowState {
        self.map_blocks(load, |mo, _, g| {
            let sp = mo.space(kind);
            sp.scatter(&sp.mass_solve(&sp.zt(&g)), g.len())
        })
    }

    /// `ℙ div F` for a tensor field sampled in the polar frame: the Riesz
    /// representative of `Φ ↦ −∫_{𝓕₀} F : ∇φ`. `f` returns
    /// `[[F_rr, F_rθ], [F_θr, F_θθ]]` at `(r, θ)`, the first index being the
    /// component of `φ`.
    pub fn projected_divergence<F>(&self, f: F) -> FlowState
    where
        F: Fn(f64, f64) -> [[f64; 2]; 2] + Sync,
    {
        let nphi = self.ang.nphi;
        let n = self.grid.len() * nphi;
        let mut load = WeakLoad::zeros(n);
        let (vr, vt, drr, drt, dtr, dtt) = load.all_mut();
        for i in 0..self.grid.len() {
            let r = self.grid.r[i];
            for j in 0..nphi {
                let k = i * nphi + j;
                let m = f(r, self.ang.theta[j]);
                // F : G_φ with G_φ = [[∂_r φ_r, (∂_θ φ_r − φ_θ)/r], [∂_r φ_θ, (∂_θ φ_θ + φ_r)/r]]
                drr[k] = -m[0][0];
                dtr[k] = -m[0][1] / r;
                vt[k] = m[0][1] / r;
                drt[k] = -m[1][0];
                dtt[k] = -m[1][1] / r;
                vr[k] = -m[1][1] / r;
            }
        }
        self.riesz(&self.weak_load(&load), SpaceKind::Constrained)
    }
}

/// Coefficient arrays of a weak load
/// `Φ ↦ Σ_{i,j} w_ij (f_r φ_r + f_θ φ_θ + g_rr ∂_rφ_r + g_θr ∂_rφ_θ + h_r ∂_θφ_r + h_θ ∂_θφ_θ)`
/// on the polar grid (row-major, `nphi` angles per node), plus disk loads.
#[derive(Debug, Clone, Default)]
pub struct WeakLoad {
    pub vr: Option<Vec<f64>>,
    pub vt: Option<Vec<f64>>,
    pub dr_vr: Option<Vec<f64>>,
    pub dr_vt: Option<Vec<f64>>,
    pub dt_vr: Option<Vec<f64>>,
    pub dt_vt: Option<Vec<f64>>,
    pub force: [f64; 2],
    pub torque: f64,
}

impl WeakLoad {
    pub fn zeros(n: usize) -> Self {
        let z = || Some(vec![0.0; n]);
        Self { vr: z(), vt: z(), dr_vr: z(), dr_vt: z(), dt_vr: z(), dt_vt: z(), force: [0.0; 2], torque: 0.0 }
    }

    /// Mutable access to all six arrays; panics unless built by [`zeros`](Self::zeros).
    #[allow(clippy::type_complexity)]
    pub fn all_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64], &mut [f64], &mut [f64], &mut [f64]) {
        (
            self.vr.as_mut().unwrap(),
            self.vt.as_mut().unwrap(),
            self.dr_vr.as_mut().unwrap(),
            self.dr_vt.as_mut().unwrap(),
            self.dt_vr.as_mut().unwrap(),
            self.dt_vt.as_mut().unwrap(),
        )
    }
}
