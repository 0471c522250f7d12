//! Coefficient storage for `V = (v, ℓ, ω)`.
//!
//! The fluid velocity is stored in polar components expanded in real Fourier
//! modes. Block 0 is the axisymmetric part `v_r = a(r)`, `v_θ = d(r)`. For
//! `k ≥ 1` block `2k−1` holds `v_r = a cos kθ`, `v_θ = d sin kθ` and block `2k`
//! holds `v_r = a sin kθ`, `v_θ = −d cos kθ`; both share the same radial
//! operators. Node 0 sits on the disk boundary and carries the rigid trace:
//! `d = ω` in block 0, `a = ℓ_x, d = −ℓ_x` in block 1, `a = ℓ_y, d = −ℓ_y`
//! in block 2, zero elsewhere. The outer node is zero.

use serde::{Deserialize, Serialize};

/// Rigid degree of freedom carried by a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RigidDof {
    Omega,
    EllX,
    EllY,
}

/// Wavenumber and rigid coupling of block `b`.
pub fn block_info(b: usize) -> (usize, Option<RigidDof>) {
    match b {
        0 => (0, Some(RigidDof::Omega)),
        1 => (1, Some(RigidDof::EllX)),
        2 => (1, Some(RigidDof::EllY)),
        _ => ((b + 1) / 2, None),
    }
}

/// `cos`-type (`false`) or `sin`-type (`true`) radial velocity.
pub fn block_is_sine(b: usize) -> bool {
    b > 0 && b % 2 == 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    /// Number of radial intervals `N`.
    pub intervals: usize,
    /// Highest wavenumber `N_θ`.
    pub modes: usize,
    /// `[block][a | d][node]`, `2N_θ+1` blocks of `2(N+1)` values.
    pub coeffs: Vec<f64>,
    pub ell: [f64; 2],
    pub omega: f64,
    pub time: f64,
}

impl FlowState {
    pub fn zeros(intervals: usize, modes: usize) -> Self {
        let nb = 2 * modes + 1;
        Self { intervals, modes, coeffs: vec![0.0; nb * 2 * (intervals + 1)], ell: [0.0; 2], omega: 0.0, time: 0.0 }
    }

    pub fn blocks(&self) -> usize {
        2 * self.modes + 1
    }

    pub fn nodes(&self) -> usize {
        self.intervals + 1
    }

    fn off(&self, b: usize) -> usize {
        b * 2 * self.nodes()
    }

    pub fn a(&self, b: usize) -> &[f64] {
        let o = self.off(b);
        &self.coeffs[o..o + self.nodes()]
    }

    pub fn d(&self, b: usize) -> &[f64] {
        let o = self.off(b) + self.nodes();
        &self.coeffs[o..o + self.nodes()]
    }

    pub fn a_mut(&mut self, b: usize) -> &mut [f64] {
        let o = self.off(b);
        let n = self.nodes();
        &mut self.coeffs[o..o + n]
    }

    pub fn d_mut(&mut self, b: usize) -> &mut [f64] {
        let o = self.off(b) + self.nodes();
        let n = self.nodes();
        &mut self.coeffs[o..o + n]
    }

    /// Both components of block `b` as one slice `[a | d]`.
    pub fn block(&self, b: usize) -> &[f64] {
        let o = self.off(b);
        &self.coeffs[o..o + 2 * self.nodes()]
    }

    pub fn block_mut(&mut self, b: usize) -> &mut [f64] {
        let o = self.off(b);
        let n = 2 * self.nodes();
        &mut self.coeffs[o..o + n]
    }

    pub fn rigid(&self, dof: RigidDof) -> f64 {
        match dof {
            RigidDof::Omega => self.omega,
            RigidDof::EllX => self.ell[0],
            RigidDof::EllY => self.ell[1],
        }
    }

    pub fn set_rigid(&mut self, dof: RigidDof, v: f64) {
        match dof {
            RigidDof::Omega => self.omega = v,
            RigidDof::EllX => self.ell[0] = v,
            RigidDof::EllY => self.ell[1] = v,
        }
    }

    /// Overwrite node 0 with the rigid trace and node `N` with zero.
    pub fn sync_trace(&mut self) {
        let n = self.intervals;
        for b in 0..self.blocks() {
            let (a0, d0) = match block_info(b).1 {
                Some(RigidDof::Omega) => (0.0, self.omega),
                Some(dof) => {
                    let v = self.rigid(dof);
                    (v, -v)
                }
                None => (0.0, 0.0),
            };
            self.a_mut(b)[0] = a0;
            self.d_mut(b)[0] = d0;
            self.a_mut(b)[n] = 0.0;
            self.d_mut(b)[n] = 0.0;
        }
    }

    /// Largest deviation of node 0 from the rigid trace.
    pub fn trace_mismatch(&self) -> f64 {
        let mut t = self.clone();
        t.sync_trace();
        let mut m = 0.0f64;
        for b in 0..self.blocks() {
            m = m.max((t.a(b)[0] - self.a(b)[0]).abs()).max((t.d(b)[0] - self.d(b)[0]).abs());
        }
        m
    }

    pub fn axpy(&mut self, s: f64, other: &FlowState) {
        for (u, v) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *u += s * v;
        }
        self.ell[0] += s * other.ell[0];
        self.ell[1] += s * other.ell[1];
        self.omega += s * other.omega;
    }

    pub fn scale(&mut self, s: f64) {
        self.coeffs.iter_mut().for_each(|v| *v *= s);
        self.ell[0] *= s;
        self.ell[1] *= s;
        self.omega *= s;
    }

    pub fn scaled(&self, s: f64) -> FlowState {
        let mut o = self.clone();
        o.scale(s);
        o
    }

    pub fn sub(&self, other: &FlowState) -> FlowState {
        let mut o = self.clone();
        o.axpy(-1.0, other);
        o
    }

    pub fn add(&self, other: &FlowState) -> FlowState {
        let mut o = self.clone();
        o.axpy(1.0, other);
        o
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .chain(self.ell.iter())
            .chain(std::iter::once(&self.omega))
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Rotate the configuration by the angle `phi` (fluid and body).
    pub fn rotated(&self, phi: f64) -> FlowState {
        let mut o = self.clone();
        for k in 1..=self.modes {
            let (c, s) = ((k as f64 * phi).cos(), (k as f64 * phi).sin());
            let (bc, bs) = (2 * k - 1, 2 * k);
            // a cos k(θ−φ) + b sin k(θ−φ) in the rotated frame
            for i in 0..self.nodes() {
                let (ac, as_) = (self.a(bc)[i], self.a(bs)[i]);
                o.a_mut(bc)[i] = ac * c - as_ * s;
                o.a_mut(bs)[i] = ac * s + as_ * c;
                let (dc, ds) = (self.d(bc)[i], self.d(bs)[i]);
                o.d_mut(bc)[i] = dc * c - ds * s;
                o.d_mut(bs)[i] = dc * s + ds * c;
            }
        }
        let (c, s) = (phi.cos(), phi.sin());
        o.ell = [c * self.ell[0] - s * self.ell[1], s * self.ell[0] + c * self.ell[1]];
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_sync() {
        let mut s = FlowState::zeros(10, 3);
        s.ell = [0.5, -0.25];
        s.omega = 2.0;
        s.sync_trace();
        assert_eq!(s.d(0)[0], 2.0);
        assert_eq!((s.a(1)[0], s.d(1)[0]), (0.5, -0.5));
        assert_eq!((s.a(2)[0], s.d(2)[0]), (-0.25, 0.25));
        assert_eq!(s.trace_mismatch(), 0.0);
    }

    #[test]
    fn block_layout() {
        assert_eq!(block_info(0), (0, Some(RigidDof::Omega)));
        assert_eq!(block_info(4), (2, None));
        assert!(block_is_sine(2) && !block_is_sine(3));
    }
}
