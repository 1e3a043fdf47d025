use serde::{Deserialize, Serialize};

use super::runner::EpisodeRecord;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    /// Mean per-step cost on the agent grid.
    pub avg_cost: f64,
    pub total_cost: f64,
    /// Mean of `(θ − θ_r)²` over the inner-loop grid, in squared degrees.
    pub avg_e_theta_sq_deg: f64,
    /// Radians.
    pub peak_abs_e_theta: f64,
}

pub fn compute_metrics(record: &EpisodeRecord) -> MetricsSummary {
    let total_cost: f64 = record.costs.iter().sum();
    let avg_cost = mean_or_zero(total_cost, record.costs.len());
    let sq_deg_sum: f64 = record
        .e
        .iter()
        .map(|e| {
            let d = e[0].to_degrees();
            d * d
        })
        .sum();
    MetricsSummary {
        avg_cost,
        total_cost,
        avg_e_theta_sq_deg: mean_or_zero(sq_deg_sum, record.e.len()),
        peak_abs_e_theta: record.e.iter().fold(0.0, |m, e| m.max(e[0].abs())),
    }
}

fn mean_or_zero(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(e_theta: &[f64], costs: &[f64]) -> EpisodeRecord {
        let n = e_theta.len();
        EpisodeRecord {
            times: (0..n).map(|i| i as f64).collect(),
            theta_set: vec![0.0; n],
            x: vec![[0.0; 2]; n],
            x_r: vec![[0.0; 2]; n],
            u: vec![0.0; n],
            u_r: vec![0.0; n],
            e: e_theta.iter().map(|&v| [v, 0.0]).collect(),
            gains: vec![],
            costs: costs.to_vec(),
            lyapunov: None,
            summary: MetricsSummary::default(),
        }
    }

    #[test]
    fn zero_record() {
        assert_eq!(
            compute_metrics(&record(&[0.0; 5], &[0.0; 2])),
            MetricsSummary::default()
        );
        assert_eq!(
            compute_metrics(&record(&[], &[])),
            MetricsSummary::default()
        );
    }

    #[test]
    fn one_degree_error() {
        let m = compute_metrics(&record(&[1f64.to_radians(); 10], &[]));
        assert!((m.avg_e_theta_sq_deg - 1.0).abs() < 1e-12);
        assert_eq!(m.peak_abs_e_theta, 1f64.to_radians());
    }

    #[test]
    fn cost_average_and_total() {
        let m = compute_metrics(&record(&[], &[1.0, 2.0, 3.0]));
        assert_eq!((m.avg_cost, m.total_cost), (2.0, 6.0));
    }
}
