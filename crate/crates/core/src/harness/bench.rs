use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::MetricsSummary;
use super::runner::{run_episode, EpisodeOptions};
use super::LoopConfig;
use crate::error::{Error, Result};
use crate::mrac::MracConfig;
use crate::plant::{Form, PlantState};
use crate::policy::Policy;
use crate::srip::{sample_test_env, TestEnv};

#[derive(Clone, Debug)]
pub struct VariantSpec {
    pub name: String,
    pub policy: Policy,
    pub loop_cfg: LoopConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellOutcome {
    Completed(MetricsSummary),
    Diverged { message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub variant: String,
    pub env_index: usize,
    pub env_seed: u64,
    pub outcome: CellOutcome,
}

/// Per-variant aggregates over the completed episodes. Means are absent when
/// no episode completed; standard errors need at least two.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantRow {
    pub variant: String,
    pub n_envs: usize,
    pub n_completed: usize,
    pub n_diverged: usize,
    pub mean_avg_cost: Option<f64>,
    pub se_avg_cost: Option<f64>,
    pub mean_total_cost: Option<f64>,
    pub mean_avg_e_theta_sq_deg: Option<f64>,
    pub se_avg_e_theta_sq_deg: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub form: Form,
    pub master_seed: u64,
    pub n_envs: usize,
    pub envs: Vec<TestEnv>,
    pub rows: Vec<VariantRow>,
    pub cells: Vec<CellRecord>,
}

impl BenchmarkTable {
    pub fn row(&self, variant: &str) -> Option<&VariantRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }
}

/// Per-env seeds drawn from one generator seeded by `master_seed`.
pub fn env_seeds(master_seed: u64, n_envs: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    (0..n_envs).map(|_| rng.next_u64()).collect()
}

/// Runs every variant on the same `n_envs` sampled environments. Episodes
/// execute in parallel; results are gathered in (variant, env) order.
pub fn run_benchmark(
    n_envs: usize,
    variants: &[VariantSpec],
    master_seed: u64,
    form: Form,
    mrac_cfg: Option<&MracConfig>,
    x0: &PlantState,
    options: &EpisodeOptions,
) -> Result<BenchmarkTable> {
    if n_envs == 0 {
        return Err(Error::Argument(
            "benchmark needs at least one environment".into(),
        ));
    }
    let envs: Vec<TestEnv> = env_seeds(master_seed, n_envs)
        .into_iter()
        .map(|s| sample_test_env(s, form))
        .collect();

    let jobs: Vec<(usize, usize)> = (0..variants.len())
        .flat_map(|v| (0..n_envs).map(move |e| (v, e)))
        .collect();
    let cells: Vec<CellRecord> = jobs
        .par_iter()
        .map(|&(v, e)| {
            let spec = &variants[v];
            let env = &envs[e];
            let outcome =
                match run_episode(env, &spec.policy, &spec.loop_cfg, mrac_cfg, x0, options) {
                    Ok(rec) => CellOutcome::Completed(rec.summary),
                    Err(err) => CellOutcome::Diverged {
                        message: err.to_string(),
                    },
                };
            CellRecord {
                variant: spec.name.clone(),
                env_index: e,
                env_seed: env.seed,
                outcome,
            }
        })
        .collect();

    let rows = variants
        .iter()
        .map(|spec| aggregate(&spec.name, n_envs, &cells))
        .collect();
    Ok(BenchmarkTable {
        form,
        master_seed,
        n_envs,
        envs,
        rows,
        cells,
    })
}

fn aggregate(name: &str, n_envs: usize, cells: &[CellRecord]) -> VariantRow {
    let done: Vec<&MetricsSummary> = cells
        .iter()
        .filter(|c| c.variant == name)
        .filter_map(|c| match &c.outcome {
            CellOutcome::Completed(m) => Some(m),
            CellOutcome::Diverged { .. } => None,
        })
        .collect();
    let costs: Vec<f64> = done.iter().map(|m| m.avg_cost).collect();
    let totals: Vec<f64> = done.iter().map(|m| m.total_cost).collect();
    let errs: Vec<f64> = done.iter().map(|m| m.avg_e_theta_sq_deg).collect();
    VariantRow {
        variant: name.to_string(),
        n_envs,
        n_completed: done.len(),
        n_diverged: n_envs - done.len(),
        mean_avg_cost: mean(&costs),
        se_avg_cost: standard_error(&costs),
        mean_total_cost: mean(&totals),
        mean_avg_e_theta_sq_deg: mean(&errs),
        se_avg_e_theta_sq_deg: standard_error(&errs),
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn standard_error(v: &[f64]) -> Option<f64> {
    if v.len() < 2 {
        return None;
    }
    let m = mean(v)?;
    let n = v.len() as f64;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    Some((var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_deterministic() {
        assert_eq!(env_seeds(7, 5), env_seeds(7, 5));
        assert_ne!(env_seeds(7, 5), env_seeds(8, 5));
        assert_eq!(env_seeds(7, 3), env_seeds(7, 5)[..3]);
    }

    #[test]
    fn dispersion() {
        assert_eq!(mean(&[]), None);
        assert_eq!(standard_error(&[1.0]), None);
        let se = standard_error(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        // sample variance 5/3, n = 4
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
