use std::io::Write;

use super::bench::{run_benchmark, VariantSpec};
use super::export::write_table_csv;
use super::runner::{run_episode, EpisodeOptions};
use super::{LoopConfig, Variant};
use crate::error::Result;
use crate::mrac::{ideal_gains, AdaptiveState, MracConfig};
use crate::num_core::{solve_care, solve_lyapunov, Matrix};
use crate::plant::{companion_from_pendulum, Form, PlantParams, PlantState};
use crate::policy::{LqrPolicy, MlpPolicy, Observation, Policy};
use crate::srip::{sample_test_env, CostWeights, TestEnv};

type Check = (&'static str, Box<dyn Fn() -> Result<Option<String>>>);

fn lqr(form: Form) -> Result<Policy> {
    let reference = companion_from_pendulum(&PlantParams::nominal(), form)?;
    Ok(Policy::Lqr(LqrPolicy::design(
        &reference,
        &CostWeights::default(),
        &Default::default(),
    )?))
}

fn max_err(e: &[[f64; 2]]) -> f64 {
    e.iter().map(|e| e[0].hypot(e[1])).fold(0.0, f64::max)
}

fn checks() -> Vec<Check> {
    vec![
        (
            "lyapunov solver residual",
            Box::new(|| {
                let a = Matrix::from_rows(&[&[0.0, 1.0], &[-10.0, -1.0]]);
                let s = solve_lyapunov(&a, &Matrix::identity(2))?;
                Ok((s.residual_norm > 1e-10).then(|| format!("residual {:e}", s.residual_norm)))
            }),
        ),
        (
            "riccati scalar case",
            Box::new(|| {
                let s = solve_care(
                    &Matrix::identity(1).scale(0.0),
                    &[1.0],
                    &Matrix::identity(1),
                    1.0,
                )?;
                let ok = (s.p[(0, 0)] - 1.0).abs() <= 1e-12 && (s.k[0] - 1.0).abs() <= 1e-12;
                Ok((!ok).then(|| format!("P = {:?}, K = {:?}", s.p, s.k)))
            }),
        ),
        (
            "feedthrough at zero mismatch",
            Box::new(|| {
                for form in [Form::Linear, Form::Nonlinear] {
                    let env = TestEnv::nominal(1, form);
                    let cfg = LoopConfig::for_variant(Variant::Mrac100, 200.0)?;
                    let rec = run_episode(
                        &env,
                        &lqr(form)?,
                        &cfg,
                        None,
                        &PlantState::new(vec![0.0, 0.0]),
                        &EpisodeOptions::default(),
                    )?;
                    let m = max_err(&rec.e);
                    if m > 1e-9 {
                        return Ok(Some(format!("{form}: max |e| = {m:e}")));
                    }
                }
                Ok(None)
            }),
        ),
        (
            "ideal gains track perfectly",
            Box::new(|| {
                for form in [Form::Linear, Form::Nonlinear] {
                    let env = sample_test_env(17, form);
                    let reference = companion_from_pendulum(&PlantParams::nominal(), form)?;
                    let true_sys = companion_from_pendulum(&env.params, form)?;
                    let ideal = ideal_gains(&true_sys, &reference)?;
                    let cfg = LoopConfig {
                        f2: 1,
                        plant_substeps: 1,
                        ..LoopConfig::for_variant(Variant::Mrac100, 200.0)?
                    };
                    let opts = EpisodeOptions {
                        initial_gains: Some(AdaptiveState::from(&ideal)),
                        freeze_gains: true,
                        ..EpisodeOptions::default()
                    };
                    let mcfg = MracConfig::for_reference(&reference);
                    let rec = run_episode(
                        &env,
                        &lqr(form)?,
                        &cfg,
                        Some(&mcfg),
                        &PlantState::new(vec![0.0, 0.0]),
                        &opts,
                    )?;
                    let m = max_err(&rec.e);
                    if m > 1e-9 {
                        return Ok(Some(format!("{form}: max |e| = {m:e}")));
                    }
                }
                Ok(None)
            }),
        ),
        (
            "benchmark determinism",
            Box::new(|| {
                let variants = vec![
                    VariantSpec {
                        name: "lqr-direct100".into(),
                        policy: lqr(Form::Linear)?,
                        loop_cfg: LoopConfig::for_variant(Variant::Direct100, 200.0)?,
                    },
                    VariantSpec {
                        name: "lqr-mrac100".into(),
                        policy: lqr(Form::Linear)?,
                        loop_cfg: LoopConfig::for_variant(Variant::Mrac100, 200.0)?,
                    },
                ];
                let run = || -> Result<Vec<u8>> {
                    let t = run_benchmark(
                        3,
                        &variants,
                        99,
                        Form::Linear,
                        None,
                        &PlantState::new(vec![0.0, 0.0]),
                        &EpisodeOptions::default(),
                    )?;
                    let mut buf = Vec::new();
                    write_table_csv(&t.rows, &mut buf).expect("write to memory");
                    Ok(buf)
                };
                Ok((run()? != run()?).then(|| "CSV bytes differ between runs".to_string()))
            }),
        ),
        (
            "policy file round trip",
            Box::new(|| {
                let p = MlpPolicy {
                    layer_sizes: vec![3, 4, 1],
                    activations: vec![crate::policy::Activation::Tanh],
                    weights: vec![
                        (0..12).map(|i| (i as f64 * 0.37).sin()).collect(),
                        vec![0.3, -1.1, 0.7, 2.0],
                    ],
                    biases: vec![vec![0.1, -0.2, 0.0, 0.05], vec![-0.4]],
                    output_scale: Some(20.0),
                    observation_order: vec![
                        crate::policy::Feature::Theta,
                        crate::policy::Feature::ThetaDot,
                        crate::policy::Feature::ThetaSet,
                    ],
                };
                let back = MlpPolicy::from_json(&p.to_json())?;
                let obs = Observation {
                    theta: 0.3,
                    theta_dot: -1.2,
                    theta_set: 2.0,
                };
                Ok((p.act(&obs)?.to_bits() != back.act(&obs)?.to_bits())
                    .then(|| "outputs differ after reload".to_string()))
            }),
        ),
    ]
}

/// Runs the quick invariant checks, printing one line each. Returns whether
/// all of them passed.
pub fn run_selftest<W: Write>(mut out: W) -> std::io::Result<bool> {
    let mut all = true;
    for (name, check) in checks() {
        match check() {
            Ok(None) => writeln!(out, "[PASS] {name}")?,
            Ok(Some(detail)) => {
                all = false;
                writeln!(out, "[FAIL] {name}: {detail}")?;
            }
            Err(e) => {
                all = false;
                writeln!(out, "[FAIL] {name}: {e}")?;
            }
        }
    }
    Ok(all)
}
