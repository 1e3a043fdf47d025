use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, MetricsSummary};
use super::LoopConfig;
use crate::error::{Error, Result};
use crate::mrac::{ideal_gains, AdaptiveState, IdealGains, MracConfig, MracController};
use crate::num_core::{norm, SolverTolerances};
use crate::plant::{companion_from_pendulum, step_plant, PlantParams, PlantState};
use crate::policy::{Observation, Policy};
use crate::srip::{active_setpoint, step_cost, CostWeights, TestEnv, EPISODE_SECONDS};

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeOptions {
    pub weights: CostWeights,
    /// Bound on `‖x_r‖`, `|u_r|`, `‖x‖` and `|u|`.
    pub guard: f64,
    pub reference_params: PlantParams,
    pub episode_seconds: f64,
    /// Record the Lyapunov value at each inner tick using gains computed
    /// from the env's true parameters.
    pub record_lyapunov: bool,
    /// Start the adaptive gains here instead of `K̂ = 0`, `k̂_u = 1`.
    pub initial_gains: Option<AdaptiveState>,
    pub freeze_gains: bool,
    /// Reference initial state; defaults to the true initial state.
    pub x_r0: Option<Vec<f64>>,
    /// Half-width of a uniform perturbation added to `x0`, seeded by the env.
    pub x0_perturbation: f64,
    pub tolerances: SolverTolerances,
}

impl Default for EpisodeOptions {
    fn default() -> Self {
        EpisodeOptions {
            weights: CostWeights::default(),
            guard: 1e3,
            reference_params: PlantParams::nominal(),
            episode_seconds: EPISODE_SECONDS,
            record_lyapunov: false,
            initial_gains: None,
            freeze_gains: false,
            x_r0: None,
            x0_perturbation: 0.0,
            tolerances: SolverTolerances::default(),
        }
    }
}

/// Trajectories on the inner-loop grid plus costs on the agent grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub times: Vec<f64>,
    pub theta_set: Vec<f64>,
    pub x: Vec<[f64; 2]>,
    pub x_r: Vec<[f64; 2]>,
    pub u: Vec<f64>,
    pub u_r: Vec<f64>,
    pub e: Vec<[f64; 2]>,
    /// Adaptive gains `[K̂₁, K̂₂, k̂_u]` in force at each tick; empty without
    /// an inner loop.
    pub gains: Vec<[f64; 3]>,
    pub costs: Vec<f64>,
    pub lyapunov: Option<Vec<f64>>,
    pub summary: MetricsSummary,
}

fn pair(v: &[f64]) -> [f64; 2] {
    [v[0], v[1]]
}

fn guard_check(value: f64, signal: &'static str, t: f64, guard: f64) -> Result<()> {
    if value.is_finite() && value <= guard {
        Ok(())
    } else {
        Err(Error::Divergence {
            time: t,
            signal,
            value,
            guard,
        })
    }
}

/// Runs one episode of the nested loop.
///
/// With the inner loop enabled the policy only sees the reference state; each
/// inner tick reads `x`, forms `e`, applies `u` from the pre-update gains,
/// adapts, then integrates the reference and the true plant under a
/// zero-order hold. Without it the policy drives the true plant from `x` and
/// a closed-loop copy of the reference runs alongside to measure tracking.
pub fn run_episode(
    env: &TestEnv,
    policy: &Policy,
    loop_cfg: &LoopConfig,
    mrac_cfg: Option<&MracConfig>,
    x0: &PlantState,
    options: &EpisodeOptions,
) -> Result<EpisodeRecord> {
    loop_cfg.validate()?;
    if x0.x.len() != 2 {
        return Err(Error::Dimension(format!(
            "pendulum state has 2 entries, got {}",
            x0.x.len()
        )));
    }
    let true_sys = companion_from_pendulum(&env.params, env.form)?;
    let reference = companion_from_pendulum(&options.reference_params, env.form)?;

    let mut controller = if loop_cfg.mrac_enabled {
        let cfg = match mrac_cfg {
            Some(c) => c.clone(),
            None => MracConfig::for_reference(&reference),
        };
        if cfg.variant != env.form {
            return Err(Error::Argument(format!(
                "{} adaptive loop on a {} environment",
                cfg.variant, env.form
            )));
        }
        let mut ctl = MracController::new(reference.clone(), cfg, &options.tolerances)?;
        if let Some(g) = &options.initial_gains {
            ctl = ctl.with_state(g.clone());
        }
        if options.freeze_gains {
            ctl = ctl.frozen();
        }
        Some(ctl)
    } else {
        None
    };
    let ideal: Option<IdealGains> = match (&controller, options.record_lyapunov) {
        (Some(_), true) => Some(ideal_gains(&true_sys, &reference)?),
        _ => None,
    };

    let mut x = x0.clone();
    if options.x0_perturbation > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(env.seed ^ 0x5eed_0f1c);
        let h = options.x0_perturbation;
        for v in x.x.iter_mut() {
            *v += rng.gen_range(-h..=h);
        }
    }
    let mut x_r = PlantState {
        x: options.x_r0.clone().unwrap_or_else(|| x.x.clone()),
        t: x.t,
    };

    let n_ticks = loop_cfg.inner_ticks(options.episode_seconds);
    let per_agent = loop_cfg.ticks_per_agent_step();
    let inner_rate = loop_cfg.inner_rate_hz();
    let dt = loop_cfg.delta1();
    let guard = options.guard;

    let mut rec = EpisodeRecord {
        times: Vec::with_capacity(n_ticks),
        theta_set: Vec::with_capacity(n_ticks),
        x: Vec::with_capacity(n_ticks),
        x_r: Vec::with_capacity(n_ticks),
        u: Vec::with_capacity(n_ticks),
        u_r: Vec::with_capacity(n_ticks),
        e: Vec::with_capacity(n_ticks),
        gains: Vec::new(),
        costs: Vec::with_capacity(n_ticks / per_agent),
        lyapunov: ideal.as_ref().map(|_| Vec::with_capacity(n_ticks)),
        summary: MetricsSummary::default(),
    };

    let mut u_r = 0.0;
    let mut u_direct = 0.0;
    for i in 0..n_ticks {
        let t = i as f64 / inner_rate;
        let theta_set = active_setpoint(&env.schedule, t)?;
        guard_check(norm(&x_r.x), "x_r", t, guard)?;
        guard_check(norm(&x.x), "x", t, guard)?;

        if i % loop_cfg.f1 == 0 {
            u_r = policy.act(&Observation::new(&x_r.x, theta_set))?;
            guard_check(u_r.abs(), "u_r", t, guard)?;
            if controller.is_none() {
                u_direct = policy.act(&Observation::new(&x.x, theta_set))?;
            }
        }

        let e = [x.x[0] - x_r.x[0], x.x[1] - x_r.x[1]];
        let u = match controller.as_mut() {
            Some(ctl) => {
                let s = ctl.state();
                rec.gains.push([s.k_hat[0], s.k_hat[1], s.k_u_hat]);
                if let (Some(ideal), Some(vs)) = (&ideal, rec.lyapunov.as_mut()) {
                    vs.push(ctl.lyapunov_value(&e, ideal)?);
                }
                ctl.step(&x.x, &x_r.x, u_r, dt)?.u
            }
            None => u_direct,
        };
        guard_check(u.abs(), "u", t, guard)?;

        rec.times.push(t);
        rec.theta_set.push(theta_set);
        rec.x.push(pair(&x.x));
        rec.x_r.push(pair(&x_r.x));
        rec.u.push(u);
        rec.u_r.push(u_r);
        rec.e.push(e);
        if i % per_agent == 0 {
            rec.costs
                .push(step_cost(x.x[0], x.x[1], u, theta_set, &options.weights));
        }

        x_r = step_plant(&reference, &x_r, u_r, dt, loop_cfg.f2)?;
        x = step_plant(&true_sys, &x, u, dt, loop_cfg.plant_substeps)?;
        // keep time on the exact tick grid
        x_r.t = (i + 1) as f64 / inner_rate;
        x.t = x_r.t;
    }
    rec.summary = compute_metrics(&rec);
    Ok(rec)
}
