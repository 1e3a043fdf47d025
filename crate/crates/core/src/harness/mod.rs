//! Inner/outer loop episode runner, benchmark sweeps, metrics and export.

mod bench;
mod config;
mod export;
mod metrics;
mod runner;
mod selftest;

pub use bench::{
    env_seeds, run_benchmark, BenchmarkTable, CellOutcome, CellRecord, VariantRow, VariantSpec,
};
pub use config::{HarnessConfig, LqrSection, MracSection, RunSection, BENCHMARK_TOML};
pub use export::{
    export_episode, export_table, import_episode, import_table, import_table_csv, read_episode_csv,
    read_table_csv, write_episode_csv, write_table_csv, ExportFormat, SCHEMA_VERSION,
};
pub use metrics::{compute_metrics, MetricsSummary};
pub use runner::{run_episode, EpisodeOptions, EpisodeRecord};
pub use selftest::run_selftest;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::srip::{AGENT_RATE_HZ, EPISODE_SECONDS};

/// Rates of one loop arrangement. The policy runs at `outer_rate_hz`; each
/// outer tick spans `f1` inner ticks of `delta1` seconds; each inner tick
/// integrates the reference in `f2` substeps and the true plant in
/// `plant_substeps` substeps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub outer_rate_hz: f64,
    pub f1: usize,
    pub f2: usize,
    pub plant_substeps: usize,
    pub mrac_enabled: bool,
}

impl LoopConfig {
    pub fn inner_rate_hz(&self) -> f64 {
        self.outer_rate_hz * self.f1 as f64
    }

    pub fn delta1(&self) -> f64 {
        1.0 / self.inner_rate_hz()
    }

    pub fn delta2(&self) -> f64 {
        self.delta1() / self.f2 as f64
    }

    pub fn inner_ticks(&self, episode_seconds: f64) -> usize {
        (episode_seconds * self.inner_rate_hz()).round() as usize
    }

    /// Inner ticks per agent (cost) step.
    pub fn ticks_per_agent_step(&self) -> usize {
        (self.inner_rate_hz() / AGENT_RATE_HZ).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.outer_rate_hz > 0.0 && self.outer_rate_hz.is_finite()) {
            return Err(Error::Argument(format!(
                "outer rate must be positive, got {}",
                self.outer_rate_hz
            )));
        }
        if self.f1 == 0 || self.f2 == 0 || self.plant_substeps == 0 {
            return Err(Error::Argument(
                "F1, F2 and plant substeps must be ≥ 1".into(),
            ));
        }
        let inner = self.inner_rate_hz();
        let per_agent = inner / AGENT_RATE_HZ;
        if (per_agent - per_agent.round()).abs() > 1e-9 || per_agent.round() < 1.0 {
            return Err(Error::Argument(format!(
                "inner rate {inner} Hz is not a multiple of the {AGENT_RATE_HZ} Hz agent rate"
            )));
        }
        let ticks = EPISODE_SECONDS * inner;
        if (ticks - ticks.round()).abs() > 1e-9 {
            return Err(Error::Argument(format!(
                "episode does not hold a whole number of {inner} Hz ticks"
            )));
        }
        Ok(())
    }

    /// The arrangement for a named variant, integrating plant and reference
    /// at `integration_rate_hz`.
    pub fn for_variant(variant: Variant, integration_rate_hz: f64) -> Result<Self> {
        let (outer, f1, mrac) = match variant {
            Variant::Direct100 => (100.0, 1, false),
            Variant::Mrac100 => (10.0, 10, true),
            Variant::Direct10 => (10.0, 1, false),
            Variant::Mrac10 => (10.0, 1, true),
        };
        let inner = outer * f1 as f64;
        let sub = integration_rate_hz / inner;
        if (sub - sub.round()).abs() > 1e-9 || sub.round() < 1.0 {
            return Err(Error::Argument(format!(
                "integration rate {integration_rate_hz} Hz is not a multiple of {inner} Hz"
            )));
        }
        let sub = sub.round() as usize;
        let cfg = LoopConfig {
            outer_rate_hz: outer,
            f1,
            f2: sub,
            plant_substeps: sub,
            mrac_enabled: mrac,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// The four loop arrangements compared on the benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Policy on the true state at 100 Hz.
    Direct100,
    /// Policy on the reference at 10 Hz, adaptive inner loop at 100 Hz.
    Mrac100,
    /// Policy on the true state at 10 Hz.
    Direct10,
    /// Policy on the reference at 10 Hz, adaptive inner loop at 10 Hz.
    Mrac10,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Direct100,
        Variant::Mrac100,
        Variant::Direct10,
        Variant::Mrac10,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Direct100 => "direct100",
            Variant::Mrac100 => "mrac100",
            Variant::Direct10 => "direct10",
            Variant::Mrac10 => "mrac10",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| {
                Error::Argument(format!(
                    "unknown variant '{s}' (expected direct100, mrac100, direct10 or mrac10)"
                ))
            })
    }
}
