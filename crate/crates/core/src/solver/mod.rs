//! Time integration of the coupled body-frame system, plain and perturbed
//! around the Oseen vortex `αΘ`, and a Duhamel-Picard cross-check.

pub mod diagnostics;
pub mod duhamel;
pub mod imex;
pub mod transport;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsop::{GridConfig, RigidBodyParams};

pub use diagnostics::{ell_l2_diagnostic, log_energy_experiment, EllL2Report, LogEnergyReport};
pub use duhamel::{bilinear_term_norms, duhamel_picard, x_norm, BilinearReport, DuhamelResult};
pub use imex::{step_nonlinear, step_perturbed, run, EnergyLedger, RunOutput, Stepper, StepReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ProjectionImex,
    DuhamelPicard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NonlinearRunConfig {
    pub grid: GridConfig,
    pub body: RigidBodyParams,
    /// Oseen strength; 0 for the plain system.
    pub alpha: f64,
    /// Initial time.
    pub t0: f64,
    pub dt: f64,
    /// Run length `T − t₀`.
    pub horizon: f64,
    pub scheme: Scheme,
    /// Largest accepted `dt·|u|/h`.
    pub cfl_cap: f64,
    /// Relative tolerance of the fixed-point iteration inside a step.
    pub picard_tol: f64,
    pub picard_max: usize,
    /// Diagnostics recorded per decade of elapsed time.
    pub samples_per_decade: usize,
    /// `p` values of the recorded `L^p` norms.
    pub p_list: Vec<f64>,
}

impl Default for NonlinearRunConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            body: RigidBodyParams::default(),
            alpha: 0.0,
            t0: 0.0,
            dt: 0.05,
            horizon: 100.0,
            scheme: Scheme::ProjectionImex,
            cfl_cap: 0.5,
            picard_tol: 1e-13,
            picard_max: 60,
            samples_per_decade: 40,
            p_list: vec![2.0, 4.0],
        }
    }
}

impl NonlinearRunConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.body.validate()?;
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("run.dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::Config(format!("run.horizon must be positive, got {}", self.horizon)));
        }
        if !(self.t0 >= 0.0) {
            return Err(Error::Config(format!("run.t0 must be nonnegative, got {}", self.t0)));
        }
        if self.horizon > self.grid.trust_horizon() * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "run.horizon = {} exceeds the trust window R²/16 = {}",
                self.horizon,
                self.grid.trust_horizon()
            )));
        }
        if !(self.cfl_cap > 0.0) || !(self.picard_tol > 0.0) || self.picard_max == 0 {
            return Err(Error::Config("run.cfl_cap, run.picard_tol and run.picard_max must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps covering the horizon.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round().max(1.0) as usize
    }
}
