#![allow(dead_code)]

use mrac_rl::harness::{HarnessConfig, LoopConfig, Variant, VariantSpec};
use mrac_rl::mrac::MracConfig;
use mrac_rl::plant::{companion_from_pendulum, CompanionSystem, Form, PlantParams, PlantState};
use mrac_rl::policy::{LqrPolicy, Policy};
use mrac_rl::srip::CostWeights;

pub fn reference(form: Form) -> CompanionSystem {
    companion_from_pendulum(&PlantParams::nominal(), form).unwrap()
}

pub fn lqr(form: Form) -> Policy {
    Policy::Lqr(
        LqrPolicy::design(
            &reference(form),
            &CostWeights::default(),
            &Default::default(),
        )
        .unwrap(),
    )
}

pub fn default_mrac(form: Form) -> MracConfig {
    MracConfig::for_reference(&reference(form))
}

pub fn benchmark_mrac(form: Form) -> MracConfig {
    HarnessConfig::benchmark()
        .mrac_config(&reference(form))
        .unwrap()
}

pub fn origin() -> PlantState {
    PlantState::new(vec![0.0, 0.0])
}

pub fn variant(v: Variant) -> LoopConfig {
    LoopConfig::for_variant(v, 200.0).unwrap()
}

pub fn lqr_spec(v: Variant, form: Form) -> VariantSpec {
    VariantSpec {
        name: format!("lqr-{v}"),
        policy: lqr(form),
        loop_cfg: variant(v),
    }
}

/// Inner loop at `rate` Hz with reference and plant integrated once per tick.
pub fn single_step_loop(rate: f64) -> LoopConfig {
    LoopConfig {
        outer_rate_hz: 10.0,
        f1: (rate / 10.0).round() as usize,
        f2: 1,
        plant_substeps: 1,
        mrac_enabled: true,
    }
}
