//! Assembly of the discrete operators `A`, `Ã` and `Ã₀`.
//!
//! Every block is described by a local vector `x = [a_0..a_N, d_0..d_N, ρ]`
//! where `ρ` is the rigid degree of freedom of the block (unused for
//! `k ≥ 2`). The mass form is `c_k Σ w_i (a_i² + d_i²) + M_ρ ρ²` with
//! `c_k = 2π` for `k = 0`, `π` otherwise and `M_ρ ∈ {𝓙, m, 0}`.
//!
//! Two Dirichlet forms are discretized with the same finite-volume weights:
//! the gradient form `∫_{𝓕₀}|∇v|² + 2πω²` defining `Ã` and `Ã₀`, and the
//! symmetric-gradient form `2∫_{𝓕₀}|D(v)|²` defining `A` on the subspace of
//! discretely divergence-free fields. Both are `O(h²)` consistent; Korn's
//! identity makes them equal on the continuous level.
//!
//! Unknowns are eliminated through sparse maps `x = Z y`: for `A` the free
//! variables are the rigid dof and the radial components `a_1..a_{N−1}`, the
//! azimuthal components following from the centered divergence constraint.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::banded::{BandedCholesky, SymBanded};
use super::fields::AngularGrid;
use super::grid::{GridConfig, RadialGrid, RigidBodyParams};
use super::state::{block_info, FlowState, RigidDof};
use crate::error::Result;

/// Which discrete operator a reduced space belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// Divergence-free, rigid on the disk: the space of `A`.
    Constrained,
    /// Rigid trace but no divergence constraint: the space of `Ã`.
    Free,
    /// Zero trace on `r = 1`: the space of `Ã₀`.
    Dirichlet,
}

type Sparse = Vec<(usize, usize, f64)>;

fn add_square(t: &mut Sparse, weight: f64, terms: &[(usize, f64)]) {
    for &(i, ci) in terms {
        for &(j, cj) in terms {
            t.push((i, j, weight * ci * cj));
        }
    }
}

fn sparse_apply(t: &Sparse, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for &(i, j, v) in t {
        y[i] += v * x[j];
    }
    y
}

/// One reduced space with its mass and stiffness matrices.
#[derive(Debug, Clone)]
pub struct ReducedSpace {
    pub kind: SpaceKind,
    pub k: usize,
    pub dim: usize,
    zmap: Vec<Vec<(usize, f64)>>,
    src: Vec<usize>,
    pub mass: SymBanded,
    pub stiff: SymBanded,
    /// Gradient form restricted to this space (only kept for `Constrained`).
    pub stiff_grad: Option<SymBanded>,
    mass_chol: BandedCholesky,
}

impl ReducedSpace {
    fn reduce(zmap: &[Vec<(usize, f64)>], dim: usize, t: &Sparse) -> SymBanded {
        let mut bw = 0usize;
        let mut entries = Vec::with_capacity(t.len() * 4);
        for &(i, j, v) in t {
            if v == 0.0 {
                continue;
            }
            for &(l1, c1) in &zmap[i] {
                for &(l2, c2) in &zmap[j] {
                    if l1 >= l2 {
                        bw = bw.max(l1 - l2);
                        entries.push((l1, l2, c1 * c2 * v));
                    }
                }
            }
        }
        let mut m = SymBanded::zeros(dim, bw);
        for (i, j, v) in entries {
            m.add_sym(i, j, v);
        }
        m
    }

    /// Read the free variables off a local vector.
    pub fn gather(&self, x: &[f64]) -> Vec<f64> {
        self.src.iter().map(|&j| x[j]).collect()
    }

    /// `x = Z y`.
    pub fn scatter(&self, y: &[f64], len: usize) -> Vec<f64> {
        let mut x = vec![0.0; len];
        for (j, row) in self.zmap.iter().enumerate() {
            x[j] = row.iter().map(|&(l, c)| c * y[l]).sum();
        }
        x
    }

    /// `Zᵀ v`.
    pub fn zt(&self, v: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for (j, row) in self.zmap.iter().enumerate() {
            for &(l, c) in row {
                y[l] += c * v[j];
            }
        }
        y
    }

    pub fn mass_solve(&self, b: &[f64]) -> Vec<f64> {
        self.mass_chol.solve(b)
    }

    /// `M_r^{-1} K_r y`.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        self.mass_solve(&self.stiff.mul(y))
    }

    /// Factor `α M_r + β K_r`.
    pub fn factor(&self, alpha: f64, beta: f64) -> Result<BandedCholesky> {
        SymBanded::lin_comb(alpha, &self.mass, beta, &self.stiff).cholesky()
    }

    pub fn quad_form(&self, m: &SymBanded, y: &[f64]) -> f64 {
        m.mul(y).iter().zip(y).map(|(a, b)| a * b).sum()
    }
}

/// Everything attached to one wavenumber `k`.
#[derive(Debug, Clone)]
pub struct ModeOperator {
    pub k: usize,
    /// Angular weight `c_k`.
    pub ck: f64,
    /// Diagonal of the local mass form (length `2(N+1)+1`).
    pub mdiag: Vec<f64>,
    /// Node-level gradient form (including `2πω²` for `k = 0`).
    pub kgrad: Vec<(usize, usize, f64)>,
    /// Node-level symmetric-gradient form.
    pub ksym: Vec<(usize, usize, f64)>,
    /// Divergence rows `(node, [(local index, coef)])` scaled by `c_k w_i`.
    pub div_rows: Vec<(usize, Vec<(usize, f64)>)>,
    pub a: ReducedSpace,
    pub at: ReducedSpace,
    pub a0: ReducedSpace,
}

impl ModeOperator {
    pub fn space(&self, kind: SpaceKind) -> &ReducedSpace {
        match kind {
            SpaceKind::Constrained => &self.a,
            SpaceKind::Free => &self.at,
            SpaceKind::Dirichlet => &self.a0,
        }
    }

    pub fn local_len(&self) -> usize {
        self.mdiag.len()
    }

    pub fn apply_kgrad(&self, x: &[f64]) -> Vec<f64> {
        sparse_apply(&self.kgrad, x)
    }

    pub fn apply_ksym(&self, x: &[f64]) -> Vec<f64> {
        sparse_apply(&self.ksym, x)
    }

    /// Discrete divergence rows applied to a local vector (weighted form).
    pub fn divergence(&self, x: &[f64]) -> Vec<(usize, f64)> {
        self.div_rows.iter().map(|(i, row)| (*i, row.iter().map(|&(j, c)| c * x[j]).sum())).collect()
    }
}

/// The assembled discrete fluid-structure operators.
#[derive(Debug, Clone)]
pub struct OperatorAssembly {
    pub cfg: GridConfig,
    pub body: RigidBodyParams,
    pub grid: RadialGrid,
    /// Indexed by wavenumber `k = 0..=N_θ`.
    pub modes: Vec<ModeOperator>,
    pub ang: AngularGrid,
}

/// Build `A`, `Ã` and `Ã₀` on the given grid.
pub fn assemble_operator(cfg: &GridConfig, body: &RigidBodyParams) -> Result<OperatorAssembly> {
    cfg.validate()?;
    body.validate()?;
    let grid = RadialGrid::new(cfg)?;
    let modes = (0..=cfg.fourier_modes)
        .into_par_iter()
        .map(|k| build_mode(&grid, body, k))
        .collect::<Result<Vec<_>>>()?;
    let ang = AngularGrid::new(cfg.fourier_modes, cfg.angular_points());
    Ok(OperatorAssembly { cfg: cfg.clone(), body: *body, grid, modes, ang })
}

fn build_mode(g: &RadialGrid, body: &RigidBodyParams, k: usize) -> Result<ModeOperator> {
    let n = g.intervals();
    let ia = |i: usize| i;
    let id = |i: usize| n + 1 + i;
    let slot = 2 * (n + 1);
    let len = slot + 1;
    let ck = if k == 0 { 2.0 * PI } else { PI };
    let kf = k as f64;

    let mut mdiag = vec![0.0; len];
    for i in 0..=n {
        mdiag[ia(i)] = ck * g.w[i];
        mdiag[id(i)] = ck * g.w[i];
    }
    mdiag[slot] = match k {
        0 => body.inertia,
        1 => body.mass,
        _ => 0.0,
    };

    let mut kgrad = Sparse::new();
    let mut ksym = Sparse::new();
    for i in 0..n {
        let (h, rh) = (g.h[i], g.rh[i]);
        add_square(&mut kgrad, ck * rh / h, &[(ia(i + 1), 1.0), (ia(i), -1.0)]);
        add_square(&mut kgrad, ck * rh / h, &[(id(i + 1), 1.0), (id(i), -1.0)]);
        add_square(&mut ksym, 2.0 * ck * rh / h, &[(ia(i + 1), 1.0), (ia(i), -1.0)]);
        let c = 0.5 / rh;
        add_square(
            &mut ksym,
            ck * rh * h,
            &[(id(i + 1), 1.0 / h - c), (id(i), -1.0 / h - c), (ia(i + 1), -kf * c), (ia(i), -kf * c)],
        );
    }
    for i in 0..=n {
        let (w, r) = (g.w[i], g.r[i]);
        let c = ck * w / (r * r);
        add_square(&mut kgrad, c, &[(ia(i), kf), (id(i), 1.0)]);
        add_square(&mut kgrad, c, &[(id(i), kf), (ia(i), 1.0)]);
        add_square(&mut ksym, 2.0 * c, &[(id(i), kf), (ia(i), 1.0)]);
    }
    if k == 0 {
        kgrad.push((slot, slot, 2.0 * PI));
    }

    let rigid = k <= 1;
    // trace of the rigid dof on node 0
    let trace = |z: &mut Vec<Vec<(usize, f64)>>, r: usize| {
        if k == 0 {
            z[id(0)] = vec![(r, 1.0)];
        } else {
            z[ia(0)] = vec![(r, 1.0)];
            z[id(0)] = vec![(r, -1.0)];
        }
        z[slot] = vec![(r, 1.0)];
    };

    // constrained space
    let (za, srca, dima) = {
        let mut z = vec![Vec::new(); len];
        let mut src = Vec::new();
        let off = usize::from(rigid);
        if rigid {
            trace(&mut z, 0);
            src.push(slot);
        }
        if k == 0 {
            for i in 1..n {
                z[id(i)] = vec![(off + i - 1, 1.0)];
                src.push(id(i));
            }
        } else {
            for i in 1..n {
                z[ia(i)] = vec![(off + i - 1, 1.0)];
                src.push(ia(i));
            }
            for i in 1..n {
                let den = kf * (g.r[i + 1] - g.r[i - 1]);
                let mut row = Vec::new();
                for &(j, c) in &[(i - 1, g.r[i - 1] / den), (i + 1, -g.r[i + 1] / den)] {
                    for &(l, cz) in &z[ia(j)].clone() {
                        row.push((l, c * cz));
                    }
                }
                z[id(i)] = row;
            }
        }
        (z, src, off + n - 1)
    };

    let free_space = |with_rigid: bool| {
        let mut z = vec![Vec::new(); len];
        let mut src = Vec::new();
        let off = usize::from(with_rigid);
        if with_rigid {
            trace(&mut z, 0);
            src.push(slot);
        }
        for i in 1..n {
            let l = off + 2 * (i - 1);
            z[ia(i)] = vec![(l, 1.0)];
            z[id(i)] = vec![(l + 1, 1.0)];
            src.push(ia(i));
            src.push(id(i));
        }
        (z, src, off + 2 * (n - 1))
    };

    let mtrip: Sparse = mdiag.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, i, *v)).collect();

    let make = |kind: SpaceKind, z: Vec<Vec<(usize, f64)>>, src: Vec<usize>, dim: usize, kt: &Sparse, extra: Option<&Sparse>| -> Result<ReducedSpace> {
        let mass = ReducedSpace::reduce(&z, dim, &mtrip);
        let stiff = ReducedSpace::reduce(&z, dim, kt);
        let stiff_grad = extra.map(|e| ReducedSpace::reduce(&z, dim, e));
        let mass_chol = mass.cholesky()?;
        Ok(ReducedSpace { kind, k, dim, zmap: z, src, mass, stiff, stiff_grad, mass_chol })
    };

    let a = make(SpaceKind::Constrained, za, srca, dima, &ksym, Some(&kgrad))?;
    let (zt, srct, dimt) = free_space(rigid);
    let at = make(SpaceKind::Free, zt, srct, dimt, &kgrad, None)?;
    let (z0, src0, dim0) = free_space(false);
    let a0 = make(SpaceKind::Dirichlet, z0, src0, dim0, &kgrad, None)?;

    let mut div_rows = Vec::new();
    for i in 1..n {
        let s = ck * g.w[i];
        let row = if k == 0 {
            let c = s / (g.r[i] * g.h[i - 1]);
            vec![(ia(i), c * g.r[i]), (ia(i - 1), -c * g.r[i - 1])]
        } else {
            let den = g.r[i] * (g.r[i + 1] - g.r[i - 1]);
            vec![(ia(i + 1), s * g.r[i + 1] / den), (ia(i - 1), -s * g.r[i - 1] / den), (id(i), s * kf / g.r[i])]
        };
        div_rows.push((i, row));
    }

    Ok(ModeOperator { k, ck, mdiag, kgrad, ksym, div_rows, a, at, a0 })
}

impl OperatorAssembly {
    pub fn intervals(&self) -> usize {
        self.grid.intervals()
    }

    pub fn fourier_modes(&self) -> usize {
        self.cfg.fourier_modes
    }

    pub fn zeros(&self) -> FlowState {
        FlowState::zeros(self.intervals(), self.fourier_modes())
    }

    pub fn mode_of_block(&self, b: usize) -> &ModeOperator {
        &self.modes[block_info(b).0]
    }

    /// Local vector of block `b`.
    pub fn local(&self, v: &FlowState, b: usize) -> Vec<f64> {
        let mut x = v.block(b).to_vec();
        x.push(block_info(b).1.map(|d| v.rigid(d)).unwrap_or(0.0));
        x
    }

    /// Write a local vector back into block `b`.
    pub fn set_local(&self, v: &mut FlowState, b: usize, x: &[f64]) {
        let m = v.block(b).len();
        v.block_mut(b).copy_from_slice(&x[..m]);
        if let Some(d) = block_info(b).1 {
            v.set_rigid(d, x[m]);
        }
    }

    /// Map a per-block function over all blocks in parallel and assemble
    /// the outputs (local vectors) into a state.
    pub fn map_blocks<F>(&self, v: &FlowState, f: F) -> FlowState
    where
        F: Fn(&ModeOperator, usize, Vec<f64>) -> Vec<f64> + Sync,
    {
        let outs: Vec<Vec<f64>> = (0..v.blocks())
            .into_par_iter()
            .map(|b| f(self.mode_of_block(b), b, self.local(v, b)))
            .collect();
        let mut out = self.zeros();
        out.time = v.time;
        for (b, x) in outs.iter().enumerate() {
            self.set_local(&mut out, b, x);
        }
        out
    }

    /// Fallible variant of [`map_blocks`](Self::map_blocks).
    pub fn try_map_blocks<F>(&self, v: &FlowState, f: F) -> Result<FlowState>
    where
        F: Fn(&ModeOperator, usize, Vec<f64>) -> Result<Vec<f64>> + Sync,
    {
        let outs: Vec<Vec<f64>> = (0..v.blocks())
            .into_par_iter()
            .map(|b| f(self.mode_of_block(b), b, self.local(v, b)))
            .collect::<Result<_>>()?;
        let mut out = self.zeros();
        out.time = v.time;
        for (b, x) in outs.iter().enumerate() {
            self.set_local(&mut out, b, x);
        }
        Ok(out)
    }

    /// Sum of a per-block scalar.
    pub fn sum_blocks<F>(&self, v: &FlowState, f: F) -> f64
    where
        F: Fn(&ModeOperator, usize, Vec<f64>) -> f64 + Sync,
    {
        // collected first so the summation order does not depend on scheduling
        let parts: Vec<f64> = (0..v.blocks()).into_par_iter().map(|b| f(self.mode_of_block(b), b, self.local(v, b))).collect();
        parts.into_iter().sum()
    }

    /// Energy inner product `∫ u·v + m ℓ_u·ℓ_v + 𝓙 ω_u ω_v`.
    pub fn inner(&self, u: &FlowState, v: &FlowState) -> f64 {
        let mut s = 0.0;
        for b in 0..u.blocks() {
            let m = &self.mode_of_block(b).mdiag;
            let (x, y) = (u.block(b), v.block(b));
            s += x.iter().zip(y).zip(m).map(|((a, b), w)| a * b * w).sum::<f64>();
        }
        s + self.body.mass * (u.ell[0] * v.ell[0] + u.ell[1] * v.ell[1]) + self.body.inertia * u.omega * v.omega
    }

    pub fn norm(&self, v: &FlowState) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// Kinetic energy `½(m|ℓ|² + 𝓙ω² + ∫|v|²)`.
    pub fn kinetic_energy(&self, v: &FlowState) -> f64 {
        0.5 * self.inner(v, v)
    }

    /// Orthogonal projection onto discretely divergence-free fields that are
    /// rigid on the disk. Node-0 values of `raw` are treated as fluid values
    /// of the half cell next to the disk; `raw.ell`, `raw.omega` carry the
    /// disk data.
    pub fn apply_projector(&self, raw: &FlowState) -> FlowState {
        self.project_onto(raw, SpaceKind::Constrained)
    }

    pub fn project_onto(&self, raw: &FlowState, kind: SpaceKind) -> FlowState {
        self.map_blocks(raw, |mo, _, x| {
            let sp = mo.space(kind);
            let mx: Vec<f64> = x.iter().zip(&mo.mdiag).map(|(a, w)| a * w).collect();
            let y = sp.mass_solve(&sp.zt(&mx));
            sp.scatter(&y, x.len())
        })
    }

    /// `A V` for admissible `V`.
    pub fn apply_a(&self, v: &FlowState) -> FlowState {
        self.apply_in(v, SpaceKind::Constrained)
    }

    /// Apply the operator of the given space to a state lying in it.
    pub fn apply_in(&self, v: &FlowState, kind: SpaceKind) -> FlowState {
        self.map_blocks(v, |mo, _, x| {
            let sp = mo.space(kind);
            let y = sp.gather(&x);
            sp.scatter(&sp.apply(&y), x.len())
        })
    }

    /// `⟨AV, V⟩ = 2‖D(v)‖²` in its discrete form.
    pub fn sym_form(&self, v: &FlowState) -> f64 {
        self.sum_blocks(v, |mo, _, x| {
            let kx = mo.apply_ksym(&x);
            kx.iter().zip(&x).map(|(a, b)| a * b).sum()
        })
    }

    /// `∫_{ℝ²}|∇V|² = ∫_{𝓕₀}|∇v|² + 2πω²` in its discrete form.
    pub fn grad_form(&self, v: &FlowState) -> f64 {
        self.sum_blocks(v, |mo, _, x| {
            let kx = mo.apply_kgrad(&x);
            kx.iter().zip(&x).map(|(a, b)| a * b).sum()
        })
    }

    /// Largest strong-form discrete divergence `|div_i|/(c_k w_i)`.
    pub fn divergence_defect(&self, v: &FlowState) -> f64 {
        (0..v.blocks())
            .map(|b| {
                let mo = self.mode_of_block(b);
                let x = self.local(v, b);
                mo.divergence(&x)
                    .into_iter()
                    .map(|(i, d)| (d / (mo.ck * self.grid.w[i])).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Apply `f(A)` given per-block solvers; helper for shifted solves
    /// `(α M + β K)^{-1} M` in the chosen space.
    pub fn shifted_solve(&self, v: &FlowState, kind: SpaceKind, alpha: f64, beta: f64) -> Result<FlowState> {
        let facs = self.factor_all(kind, alpha, beta)?;
        Ok(self.solve_with(&facs, v, kind))
    }

    /// Factor `α M_r + β K_r` for every wavenumber.
    pub fn factor_all(&self, kind: SpaceKind, alpha: f64, beta: f64) -> Result<Vec<BandedCholesky>> {
        self.modes.par_iter().map(|mo| mo.space(kind).factor(alpha, beta)).collect()
    }

    /// `(α M_r + β K_r)^{-1} M_r y` for every block using precomputed factors.
    pub fn solve_with(&self, facs: &[BandedCholesky], v: &FlowState, kind: SpaceKind) -> FlowState {
        self.map_blocks(v, |mo, _, x| {
            let sp = mo.space(kind);
            let y = sp.gather(&x);
            let z = facs[mo.k].solve(&sp.mass.mul(&y));
            sp.scatter(&z, x.len())
        })
    }

    /// `(α M_r + β K_r)^{-1} Zᵀ g` for a dual vector `g` (see
    /// [`weak_load`](Self::weak_load)).
    pub fn solve_load_with(&self, facs: &[BandedCholesky], load: &FlowState, kind: SpaceKind) -> FlowState {
        self.map_blocks(load, |mo, _, g| {
            let sp = mo.space(kind);
            sp.scatter(&facs[mo.k].solve(&sp.zt(&g)), g.len())
        })
    }

    /// Discrete gradient `M^{-1} Dᵀ χ` of nodal values `χ[block][node]`,
    /// the adjoint of the weighted divergence rows.
    pub fn discrete_gradient(&self, chi: &[Vec<f64>]) -> FlowState {
        let mut out = self.zeros();
        for (b, c) in chi.iter().enumerate() {
            let mo = self.mode_of_block(b);
            let mut g = vec![0.0; mo.local_len()];
            for (i, row) in &mo.div_rows {
                for &(j, coef) in row {
                    g[j] += coef * c[*i];
                }
            }
            let x: Vec<f64> = g.iter().zip(&mo.mdiag).map(|(g, m)| if *m > 0.0 { g / m } else { 0.0 }).collect();
            self.set_local(&mut out, b, &x);
        }
        out
    }

    /// Rigid dof of block `b`, if any.
    pub fn block_rigid(&self, b: usize) -> Option<RigidDof> {
        block_info(b).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> OperatorAssembly {
        assemble_operator(&GridConfig::new(10.0, 24, 3), &RigidBodyParams::disk(1.0)).unwrap()
    }

    fn random_state(op: &OperatorAssembly, seed: u64) -> FlowState {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut s = op.zeros();
        s.coeffs.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        s.ell = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        s.omega = rng.gen_range(-1.0..1.0);
        s
    }

    #[test]
    fn projector_properties() {
        let op = small();
        let raw = random_state(&op, 1);
        let p = op.apply_projector(&raw);
        let pp = op.apply_projector(&p);
        assert!(op.norm(&p.sub(&pp)) < 1e-12 * op.norm(&p));
        assert!(op.divergence_defect(&p) < 1e-10);
        assert!(p.trace_mismatch() < 1e-14);
        // orthogonality of the residual
        let other = op.apply_projector(&random_state(&op, 2));
        assert!(op.inner(&raw.sub(&p), &other).abs() < 1e-11 * op.norm(&raw) * op.norm(&other));
    }

    #[test]
    fn operator_symmetric_positive() {
        let op = small();
        let u = op.apply_projector(&random_state(&op, 3));
        let v = op.apply_projector(&random_state(&op, 4));
        let (au, av) = (op.apply_a(&u), op.apply_a(&v));
        let l = op.inner(&au, &v);
        let r = op.inner(&u, &av);
        assert!((l - r).abs() < 1e-12 * op.norm(&au) * op.norm(&v));
        assert!((op.inner(&au, &u) - op.sym_form(&u)).abs() < 1e-9 * op.sym_form(&u));
        assert!(op.sym_form(&u) > 0.0);
    }
}
