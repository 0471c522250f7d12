//! Dense per-mode eigendecompositions of the discrete operators.
//!
//! For each wavenumber the generalized problem `K_r b = λ M_r b` is reduced
//! to a symmetric one with the Cholesky factor of `M_r`. The eigenvectors are
//! `M_r`-orthonormal, so any spectral function `f(A)` is applied exactly.
//! This serves as the oracle for the quadrature-based fractional powers and
//! as an exact-in-time propagator for long decay runs.

use nalgebra::{DMatrix, DVector, SymmetricTridiagonal};
use rayon::prelude::*;

use super::operator::{OperatorAssembly, SpaceKind};
use super::state::FlowState;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ModeSpectrum {
    pub k: usize,
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// `M_r`-orthonormal eigenvectors as columns.
    vectors: DMatrix<f64>,
    /// `Bᵀ M_r`, mapping reduced coordinates to spectral coefficients.
    analysis: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub kind: SpaceKind,
    pub modes: Vec<ModeSpectrum>,
}

impl Spectrum {
    pub fn new(op: &OperatorAssembly, kind: SpaceKind) -> Result<Self> {
        let modes = op
            .modes
            .par_iter()
            .map(|mo| {
                let sp = mo.space(kind);
                let m = sp.mass.to_dense();
                let kmat = sp.stiff.to_dense();
                let chol = m.clone().cholesky().ok_or_else(|| Error::Numerical(format!("mass matrix of mode {} not SPD", mo.k)))?;
                let l = chol.l();
                let linv = l
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| Error::Numerical(format!("mass factor of mode {} singular", mo.k)))?;
                let c = &linv * kmat * linv.transpose();
                let c = (&c + &c.transpose()) * 0.5;
                let dim = c.nrows();
                let (evals, evecs) = symmetric_eigen(c).ok_or_else(|| Error::Numerical(format!("eigen iteration of mode {} did not converge", mo.k)))?;
                let mut order: Vec<usize> = (0..dim).collect();
                order.sort_by(|&a, &b| evals[a].total_cmp(&evals[b]));
                let values: Vec<f64> = order.iter().map(|&i| evals[i]).collect();
                let q = DMatrix::from_fn(dim, dim, |i, j| evecs[(i, order[j])]);
                let vectors = linv.transpose() * &q;
                let analysis = vectors.transpose() * m;
                Ok(ModeSpectrum { k: mo.k, values, vectors, analysis })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind, modes })
    }

    pub fn smallest_eigenvalue(&self) -> f64 {
        self.modes.iter().map(|m| m.values[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn largest_eigenvalue(&self) -> f64 {
        self.modes.iter().map(|m| *m.values.last().unwrap()).fold(0.0, f64::max)
    }

    /// `f(A) V` for a state in the space of this spectrum.
    pub fn apply_fn<F>(&self, op: &OperatorAssembly, v: &FlowState, f: F) -> FlowState
    where
        F: Fn(f64) -> f64 + Sync,
    {
        op.map_blocks(v, |mo, _, x| {
            let sp = mo.space(self.kind);
            let ms = &self.modes[mo.k];
            let y = DVector::from_vec(sp.gather(&x));
            let mut c = &ms.analysis * y;
            for (ci, &l) in c.iter_mut().zip(&ms.values) {
                *ci *= f(l);
            }
            let out = &ms.vectors * c;
            sp.scatter(out.as_slice(), x.len())
        })
    }

    /// Spectral coefficients of every block, `[block][eigen index]`.
    pub fn coefficients(&self, op: &OperatorAssembly, v: &FlowState) -> Vec<Vec<f64>> {
        (0..v.blocks())
            .into_par_iter()
            .map(|b| {
                let mo = op.mode_of_block(b);
                let y = DVector::from_vec(mo.space(self.kind).gather(&op.local(v, b)));
                (&self.modes[mo.k].analysis * y).as_slice().to_vec()
            })
            .collect()
    }

    /// Rebuild a state from spectral coefficients scaled by `f(λ)`.
    pub fn synthesize<F>(&self, op: &OperatorAssembly, coeffs: &[Vec<f64>], f: F) -> FlowState
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let blocks: Vec<Vec<f64>> = (0..coeffs.len())
            .into_par_iter()
            .map(|b| {
                let mo = op.mode_of_block(b);
                let ms = &self.modes[mo.k];
                let c = DVector::from_iterator(ms.values.len(), coeffs[b].iter().zip(&ms.values).map(|(c, &l)| c * f(l)));
                let out = &ms.vectors * c;
                mo.space(self.kind).scatter(out.as_slice(), mo.local_len())
            })
            .collect();
        let mut s = op.zeros();
        for (b, x) in blocks.iter().enumerate() {
            op.set_local(&mut s, b, x);
        }
        s
    }

    /// Exact semigroup `e^{−tA} V`.
    pub fn propagate(&self, op: &OperatorAssembly, v: &FlowState, t: f64) -> FlowState {
        let mut s = self.apply_fn(op, v, |l| (-t * l).exp());
        s.time = v.time + t;
        s
    }
}

/// Householder tridiagonalization followed by implicit QL with Wilkinson
/// shifts. Returns unsorted eigenvalues and orthonormal eigenvectors.
fn symmetric_eigen(c: DMatrix<f64>) -> Option<(Vec<f64>, DMatrix<f64>)> {
    let n = c.nrows();
    if n == 1 {
        return Some((vec![c[(0, 0)]], DMatrix::identity(1, 1)));
    }
    let (mut z, d, e) = SymmetricTridiagonal::new(c).unpack();
    let mut d: Vec<f64> = d.iter().copied().collect();
    let mut e: Vec<f64> = e.iter().copied().chain(std::iter::once(0.0)).collect();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return None;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut cc, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = cc * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                cc = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * cc * b;
                p = s * r;
                d[i + 1] = g + p;
                g = cc * r - b;
                for k in 0..n {
                    let f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + cc * f;
                    z[(k, i)] = cc * z[(k, i)] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Some((d, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsop::{assemble_operator, GridConfig, RigidBodyParams};

    #[test]
    fn reproduces_operator() {
        let op = assemble_operator(&GridConfig::new(8.0, 16, 2), &RigidBodyParams::disk(1.0)).unwrap();
        let sp = Spectrum::new(&op, SpaceKind::Constrained).unwrap();
        assert!(sp.smallest_eigenvalue() > 0.0);
        let mut raw = op.zeros();
        for (i, v) in raw.coeffs.iter_mut().enumerate() {
            *v = (i as f64 * 0.37).sin();
        }
        raw.omega = 0.5;
        let v = op.apply_projector(&raw);
        let av = sp.apply_fn(&op, &v, |l| l);
        let direct = op.apply_a(&v);
        assert!(op.norm(&av.sub(&direct)) < 1e-10 * op.norm(&direct));
        let id = sp.apply_fn(&op, &v, |_| 1.0);
        assert!(op.norm(&id.sub(&v)) < 1e-12 * op.norm(&v));
    }
}
