//! Set-point randomized inverted pendulum: cost, set-point schedules and
//! randomized test environments.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{Form, PlantParams};

pub const EPISODE_SECONDS: f64 = 20.0;
pub const DWELL_SECONDS: f64 = 5.0;
pub const SETPOINTS_PER_EPISODE: usize = 4;
pub const AGENT_RATE_HZ: f64 = 10.0;
/// Agent steps per episode.
pub const EPISODE_STEPS: usize = 200;

pub const LENGTH_RANGE: (f64, f64) = (0.75, 1.25);
pub const MASS_RANGE: (f64, f64) = (0.75, 1.25);
pub const DAMPING_RANGE: (f64, f64) = (0.001, 2.0);
pub const GRAVITY: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub q1: f64,
    pub q2: f64,
    pub r: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            q1: 1.0,
            q2: 0.1,
            r: 0.001,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        if [self.q1, self.q2, self.r]
            .iter()
            .any(|w| !(*w >= 0.0 && w.is_finite()))
        {
            return Err(Error::Argument(format!(
                "cost weights must be ≥ 0: {self:?}"
            )));
        }
        Ok(())
    }
}

/// `q1·(θ − θ₀)² + q2·θ̇² + r·u²` on unwrapped angles.
pub fn step_cost(theta: f64, theta_dot: f64, u: f64, theta_set: f64, w: &CostWeights) -> f64 {
    let err = theta - theta_set;
    w.q1 * err * err + w.q2 * theta_dot * theta_dot + w.r * u * u
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetpointSchedule {
    pub setpoints: Vec<f64>,
    pub dwell: f64,
}

impl SetpointSchedule {
    pub fn new(setpoints: Vec<f64>, dwell: f64) -> Result<Self> {
        if setpoints.is_empty() {
            return Err(Error::Argument(
                "schedule needs at least one set-point".into(),
            ));
        }
        if let Some(s) = setpoints.iter().find(|s| !(s.abs() <= PI)) {
            return Err(Error::Argument(format!("set-point {s} outside [−π, π]")));
        }
        if !(dwell > 0.0 && dwell.is_finite()) {
            return Err(Error::Argument(format!(
                "dwell must be positive, got {dwell}"
            )));
        }
        Ok(SetpointSchedule { setpoints, dwell })
    }

    /// A single set-point held for the whole episode.
    pub fn constant(theta_set: f64) -> Result<Self> {
        Self::new(vec![theta_set; SETPOINTS_PER_EPISODE], DWELL_SECONDS)
    }

    pub fn duration(&self) -> f64 {
        self.dwell * self.setpoints.len() as f64
    }
}

/// Four independent uniform draws from `[−π, π]`, 5 s apart.
pub fn sample_schedule_with<R: Rng>(rng: &mut R) -> SetpointSchedule {
    let setpoints = (0..SETPOINTS_PER_EPISODE)
        .map(|_| rng.gen_range(-PI..=PI))
        .collect();
    SetpointSchedule {
        setpoints,
        dwell: DWELL_SECONDS,
    }
}

pub fn sample_schedule(seed: u64) -> SetpointSchedule {
    sample_schedule_with(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Set-point active at `t`; dwell intervals are half-open `[k·dwell, (k+1)·dwell)`
/// and the episode end maps to the last set-point.
pub fn active_setpoint(schedule: &SetpointSchedule, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Argument(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    let idx = ((t / schedule.dwell).floor() as usize).min(schedule.setpoints.len() - 1);
    Ok(schedule.setpoints[idx])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestEnv {
    pub seed: u64,
    pub params: PlantParams,
    pub schedule: SetpointSchedule,
    pub form: Form,
}

impl TestEnv {
    /// Unperturbed pendulum with a seeded schedule.
    pub fn nominal(seed: u64, form: Form) -> Self {
        TestEnv {
            seed,
            params: PlantParams::nominal(),
            schedule: sample_schedule(seed),
            form,
        }
    }
}

/// Uniform `l`, `m`, `b` in their ranges (drawn in that order), `g = 10`,
/// then the schedule, all from one generator seeded by `seed`.
pub fn sample_test_env(seed: u64, form: Form) -> TestEnv {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = rng.gen_range(LENGTH_RANGE.0..=LENGTH_RANGE.1);
    let m = rng.gen_range(MASS_RANGE.0..=MASS_RANGE.1);
    let b = rng.gen_range(DAMPING_RANGE.0..=DAMPING_RANGE.1);
    let schedule = sample_schedule_with(&mut rng);
    TestEnv {
        seed,
        params: PlantParams {
            m,
            l,
            b,
            g: GRAVITY,
        },
        schedule,
        form,
    }
}

/// Writes one JSON object per line.
pub fn write_env_suite<W: Write>(envs: &[TestEnv], mut out: W) -> std::io::Result<()> {
    for env in envs {
        serde_json::to_writer(&mut out, env)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_env_suite<R: BufRead>(input: R) -> Result<Vec<TestEnv>> {
    let mut envs = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<env suite>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let env: TestEnv = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        env.params.validate()?;
        SetpointSchedule::new(env.schedule.setpoints.clone(), env.schedule.dwell)?;
        envs.push(env);
    }
    Ok(envs)
}
