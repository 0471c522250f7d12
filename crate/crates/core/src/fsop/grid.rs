//! Radial grid on `[1, R]`, angular sampling and rigid body parameters.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monotone map `[0, 1] → [1, R]` placing the radial nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stretching {
    Uniform,
    /// `r = R^s`: spacing proportional to `r`.
    Logarithmic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub outer_radius: f64,
    /// Number of radial intervals; nodes are `r_0 = 1, …, r_N = R`.
    pub radial_points: usize,
    /// Highest azimuthal wavenumber kept.
    pub fourier_modes: usize,
    pub stretching: Stretching,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { outer_radius: 40.0, radial_points: 64, fourier_modes: 16, stretching: Stretching::Logarithmic }
    }
}

impl GridConfig {
    pub fn new(outer_radius: f64, radial_points: usize, fourier_modes: usize) -> Self {
        Self { outer_radius, radial_points, fourier_modes, stretching: Stretching::Logarithmic }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.outer_radius > 1.0) {
            return Err(Error::Config(format!("grid.outer_radius must exceed 1, got {}", self.outer_radius)));
        }
        if self.radial_points < 8 {
            return Err(Error::Config(format!(
                "grid.radial_points = {} is too coarse for the banded stencils (need >= 8)",
                self.radial_points
            )));
        }
        if self.fourier_modes < 1 {
            return Err(Error::Config("grid.fourier_modes must be at least 1".into()));
        }
        Ok(())
    }

    /// Largest horizon for which the truncated domain is trusted, `R²/16`.
    pub fn trust_horizon(&self) -> f64 {
        self.outer_radius * self.outer_radius / 16.0
    }

    /// Number of angular sample points; odd and large enough that triple
    /// products of resolved modes are integrated exactly.
    pub fn angular_points(&self) -> usize {
        let n = 3 * self.fourier_modes + 1;
        if n % 2 == 0 {
            n + 1
        } else {
            n
        }
    }
}

/// Disk mass and moment of inertia.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidBodyParams {
    pub mass: f64,
    pub inertia: f64,
}

impl Default for RigidBodyParams {
    fn default() -> Self {
        Self::disk(1.0)
    }
}

impl RigidBodyParams {
    /// Homogeneous unit disk of the given density: `m = ρπ`, `𝓙 = m/2`.
    pub fn disk(density: f64) -> Self {
        let mass = density * PI;
        Self { mass, inertia: 0.5 * mass }
    }

    pub fn new(mass: f64, inertia: f64) -> Result<Self> {
        let b = Self { mass, inertia };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.inertia > 0.0) {
            return Err(Error::Config(format!(
                "body.mass and body.inertia must be positive, got {} and {}",
                self.mass, self.inertia
            )));
        }
        Ok(())
    }
}

/// Node positions and finite-volume weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    /// `r_0 = 1 < … < r_N = R`
    pub r: Vec<f64>,
    /// `h_i = r_{i+1} − r_i`
    pub h: Vec<f64>,
    /// `(r_i + r_{i+1})/2`
    pub rh: Vec<f64>,
    /// `∫ r dr` over the dual cell of node `i` (half cells at both ends).
    pub w: Vec<f64>,
    /// Three-point first-derivative stencils (second order).
    pub d1: Vec<[(usize, f64); 3]>,
}

impl RadialGrid {
    pub fn new(cfg: &GridConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.radial_points;
        let big_r = cfg.outer_radius;
        let r: Vec<f64> = (0..=n)
            .map(|i| {
                let s = i as f64 / n as f64;
                match cfg.stretching {
                    Stretching::Uniform => 1.0 + (big_r - 1.0) * s,
                    Stretching::Logarithmic => big_r.powf(s),
                }
            })
            .collect();
        let h: Vec<f64> = r.windows(2).map(|p| p[1] - p[0]).collect();
        let rh: Vec<f64> = r.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        let w: Vec<f64> = (0..=n)
            .map(|i| {
                let lo = if i == 0 { r[0] } else { rh[i - 1] };
                let hi = if i == n { r[n] } else { rh[i] };
                0.5 * (hi * hi - lo * lo)
            })
            .collect();
        let d1 = (0..=n)
            .map(|i| {
                let idx = if i == 0 {
                    [0, 1, 2]
                } else if i == n {
                    [n - 2, n - 1, n]
                } else {
                    [i - 1, i, i + 1]
                };
                let xs = [r[idx[0]], r[idx[1]], r[idx[2]]];
                let c = fd_weights(r[i], &xs, 1);
                [(idx[0], c[0]), (idx[1], c[1]), (idx[2], c[2])]
            })
            .collect();
        Ok(Self { r, h, rh, w, d1 })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn intervals(&self) -> usize {
        self.r.len() - 1
    }

    /// First radial derivative of nodal values.
    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        self.d1.iter().map(|st| st.iter().map(|&(j, c)| c * f[j]).sum()).collect()
    }

    /// Fourth-order one-sided derivative at `r = 1`.
    pub fn boundary_derivative(&self, f: &[f64]) -> f64 {
        let c = fd_weights(self.r[0], &self.r[0..5], 1);
        c.iter().zip(f).map(|(c, v)| c * v).sum()
    }

    pub fn min_spacing(&self) -> f64 {
        self.h.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Finite-difference weights for the `m`-th derivative at `x0` on nodes `xs`
/// (Fornberg's recursion).
pub fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_area() {
        for st in [Stretching::Uniform, Stretching::Logarithmic] {
            let cfg = GridConfig { stretching: st, ..GridConfig::new(12.0, 30, 4) };
            let g = RadialGrid::new(&cfg).unwrap();
            let s: f64 = g.w.iter().sum();
            assert!((s - 0.5 * (144.0 - 1.0)).abs() < 1e-12);
            assert!((g.r[30] - 12.0).abs() < 1e-12 && g.r[0] == 1.0);
        }
    }

    #[test]
    fn derivative_exact_on_quadratics() {
        let g = RadialGrid::new(&GridConfig::new(10.0, 20, 2)).unwrap();
        let f: Vec<f64> = g.r.iter().map(|r| r * r - 3.0 * r).collect();
        let d = g.derivative(&f);
        for (r, v) in g.r.iter().zip(&d) {
            assert!((v - (2.0 * r - 3.0)).abs() < 1e-10);
        }
        let q: Vec<f64> = g.r.iter().map(|r| r.powi(4)).collect();
        assert!((g.boundary_derivative(&q) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn config_validation() {
        assert!(GridConfig::new(1.0, 64, 4).validate().is_err());
        assert!(GridConfig::new(10.0, 4, 4).validate().is_err());
        assert!(RigidBodyParams::new(-1.0, 1.0).is_err());
        assert_eq!(GridConfig::default().angular_points() % 2, 1);
    }
}
