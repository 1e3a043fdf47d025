//! Harness configuration, read from a TOML file. Every key is optional:
//!
//! ```toml
//! [cost]            # benchmark step cost
//! q1 = 1.0
//! q2 = 0.1
//! r = 0.001
//!
//! [lqr]             # outer-loop design weights
//! q1 = 1.0
//! q2 = 0.1
//! r = 0.001
//! literal_feedback = false
//!
//! [mrac]
//! omega = [2.0, 2.0]
//! psi = [0.0, 0.0]
//! beta_r = [-10.0, -1.0]   # default: -|alpha_r|
//! gamma_x = [1.0, 1.0]     # diagonal
//! gamma_u = 0.1
//! q = [1.0, 1.0]           # diagonal
//!
//! [run]
//! integration_rate_hz = 200.0
//! guard = 1000.0
//! x0 = [0.0, 0.0]
//! x0_perturbation = 0.0
//!
//! [tolerances]
//! lyapunov_residual = 1e-10
//! care_residual = 1e-8
//! newton_residual = 1e-10
//! newton_max_iter = 100
//! symmetry = 1e-12
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::runner::EpisodeOptions;
use crate::error::{Error, Result};
use crate::mrac::MracConfig;
use crate::num_core::{Matrix, SolverTolerances};
use crate::plant::CompanionSystem;
use crate::policy::LqrPolicy;
use crate::srip::CostWeights;

/// The bundled `configs/benchmark.toml`.
pub const BENCHMARK_TOML: &str = include_str!("../../configs/benchmark.toml");

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub cost: CostWeights,
    pub lqr: LqrSection,
    pub mrac: MracSection,
    pub run: RunSection,
    pub tolerances: SolverTolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LqrSection {
    pub q1: f64,
    pub q2: f64,
    pub r: f64,
    pub literal_feedback: bool,
}

impl Default for LqrSection {
    fn default() -> Self {
        let w = CostWeights::default();
        LqrSection {
            q1: w.q1,
            q2: w.q2,
            r: w.r,
            literal_feedback: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MracSection {
    pub omega: Option<Vec<f64>>,
    pub psi: Option<Vec<f64>>,
    pub beta_r: Option<Vec<f64>>,
    pub gamma_x: Option<Vec<f64>>,
    pub gamma_u: Option<f64>,
    pub q: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub integration_rate_hz: f64,
    pub guard: f64,
    pub x0: Vec<f64>,
    pub x0_perturbation: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            integration_rate_hz: 200.0,
            guard: 1e3,
            x0: vec![0.0, 0.0],
            x0_perturbation: 0.0,
        }
    }
}

impl HarnessConfig {
    /// Adaptive gains tuned for the SRIP benchmark at 100 Hz: stiff, well
    /// damped error feedback with moderate adaptation rates.
    pub fn benchmark() -> Self {
        Self::from_toml(BENCHMARK_TOML).expect("bundled benchmark config parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn mrac_config(&self, reference: &CompanionSystem) -> Result<MracConfig> {
        let mut cfg = MracConfig::for_reference(reference);
        let s = &self.mrac;
        if let Some(v) = &s.omega {
            cfg.omega = v.clone();
        }
        if let Some(v) = &s.psi {
            cfg.psi = v.clone();
        }
        if let Some(v) = &s.beta_r {
            cfg.beta_r = v.clone();
        }
        if let Some(v) = &s.gamma_x {
            cfg.gamma_x = Matrix::from_diagonal(v);
        }
        if let Some(v) = &s.q {
            cfg.q = Matrix::from_diagonal(v);
        }
        if let Some(v) = s.gamma_u {
            cfg.gamma_u = v;
        }
        cfg.validate(reference.dim())?;
        Ok(cfg)
    }

    pub fn lqr_policy(&self, reference: &CompanionSystem) -> Result<LqrPolicy> {
        let w = CostWeights {
            q1: self.lqr.q1,
            q2: self.lqr.q2,
            r: self.lqr.r,
        };
        let mut p = LqrPolicy::design(reference, &w, &self.tolerances)?;
        p.literal_feedback = self.lqr.literal_feedback;
        Ok(p)
    }

    pub fn episode_options(&self) -> Result<EpisodeOptions> {
        self.cost.validate()?;
        if !(self.run.guard > 0.0) {
            return Err(Error::Argument(format!(
                "guard must be positive, got {}",
                self.run.guard
            )));
        }
        Ok(EpisodeOptions {
            weights: self.cost,
            guard: self.run.guard,
            x0_perturbation: self.run.x0_perturbation,
            tolerances: self.tolerances,
            ..EpisodeOptions::default()
        })
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}
