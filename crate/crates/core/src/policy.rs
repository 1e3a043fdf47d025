//! Outer-loop policies mapping `[θ, θ̇, θ₀]` to a reference torque.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num_core::{dot, is_hurwitz, solve_care_with, Matrix, SolverTolerances};
use crate::plant::{CompanionSystem, Form};
use crate::srip::CostWeights;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub theta: f64,
    pub theta_dot: f64,
    pub theta_set: f64,
}

impl Observation {
    pub fn new(x: &[f64], theta_set: f64) -> Self {
        Observation {
            theta: x[0],
            theta_dot: x[1],
            theta_set,
        }
    }
}

/// Steady torque holding `[θ_set, 0]` on the reference pendulum:
/// `−α₁·φ(θ_set)/b_r`, i.e. `−m·g·l·θ_set` or `−m·g·l·sin θ_set`.
pub fn lqr_feedforward(theta_set: f64, reference: &CompanionSystem, mode: Form) -> f64 {
    let phi = match mode {
        Form::Linear => theta_set,
        Form::Nonlinear => theta_set.sin(),
    };
    -reference.alpha()[0] * phi / reference.b_scalar()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LqrPolicy {
    pub k_r: Vec<f64>,
    pub reference: CompanionSystem,
    pub feedforward_mode: Form,
    /// Regulate `x` instead of `x − [θ₀, 0]` in the feedback term.
    pub literal_feedback: bool,
}

impl LqrPolicy {
    /// Gain from the continuous Riccati equation on the linearized reference
    /// with state weights `diag(q1, q2)` and input weight `r`.
    pub fn design(
        reference: &CompanionSystem,
        weights: &CostWeights,
        tol: &SolverTolerances,
    ) -> Result<Self> {
        if reference.dim() != 2 {
            return Err(Error::Dimension(format!(
                "set-point policy needs a pendulum (n = 2), got n = {}",
                reference.dim()
            )));
        }
        let a = reference.state_matrix();
        let b = reference.input_column();
        let q = Matrix::from_diagonal(&[weights.q1, weights.q2]);
        let sol = solve_care_with(&a, &b, &q, weights.r, tol)?;
        Ok(LqrPolicy {
            k_r: sol.k.into_inner(),
            reference: reference.clone(),
            feedforward_mode: reference.form(),
            literal_feedback: false,
        })
    }

    pub fn closed_loop_is_hurwitz(&self) -> Result<bool> {
        let mut a = self.reference.state_matrix();
        let b = self.reference.input_column();
        for j in 0..2 {
            a[(1, j)] -= b[1] * self.k_r[j];
        }
        is_hurwitz(&a)
    }

    pub fn act(&self, obs: &Observation) -> f64 {
        let u0 = lqr_feedforward(obs.theta_set, &self.reference, self.feedforward_mode);
        let offset = if self.literal_feedback {
            0.0
        } else {
            obs.theta_set
        };
        -dot(&self.k_r, &[obs.theta - offset, obs.theta_dot]) + u0
    }
}

pub fn lqr_act(policy: &LqrPolicy, obs: &Observation) -> f64 {
    policy.act(obs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Tanh => v.tanh(),
            Activation::Relu => v.max(0.0),
        }
    }
}

/// Network input features, in the order the file declares them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Theta,
    ThetaDot,
    ThetaSet,
    /// `θ − θ₀`
    ThetaError,
}

impl Feature {
    fn read(self, obs: &Observation) -> f64 {
        match self {
            Feature::Theta => obs.theta,
            Feature::ThetaDot => obs.theta_dot,
            Feature::ThetaSet => obs.theta_set,
            Feature::ThetaError => obs.theta - obs.theta_set,
        }
    }
}

fn default_order() -> Vec<Feature> {
    vec![Feature::Theta, Feature::ThetaDot, Feature::ThetaSet]
}

/// Feed-forward network policy, stored as JSON:
///
/// ```json
/// {
///   "layer_sizes": [3, 2, 1],
///   "activations": ["tanh"],
///   "weights": [[0.5, 0.0, 0.0, 0.0, 1.0, 0.0], [1.0, -2.0]],
///   "biases": [[0.0, 0.1], [0.0]],
///   "output_scale": 5.0,
///   "observation_order": ["theta", "theta_dot", "theta_set"]
/// }
/// ```
///
/// `weights[i]` is the row-major `layer_sizes[i+1] × layer_sizes[i]` matrix of
/// layer `i`; `activations` has one entry per hidden layer. The output layer
/// is affine, or `output_scale · tanh(·)` when `output_scale` is present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpPolicy {
    pub layer_sizes: Vec<usize>,
    pub activations: Vec<Activation>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_scale: Option<f64>,
    #[serde(default = "default_order")]
    pub observation_order: Vec<Feature>,
}

impl MlpPolicy {
    pub fn validate(&self) -> Result<()> {
        let sizes = &self.layer_sizes;
        if sizes.len() < 2 {
            return Err(Error::Schema(
                "layer_sizes needs at least input and output".into(),
            ));
        }
        if sizes[0] != 3 || self.observation_order.len() != 3 {
            return Err(Error::Schema(format!(
                "input layer must take 3 features, got {} with {} declared",
                sizes[0],
                self.observation_order.len()
            )));
        }
        if *sizes.last().unwrap() != 1 {
            return Err(Error::Schema("output layer must have size 1".into()));
        }
        let layers = sizes.len() - 1;
        if self.weights.len() != layers || self.biases.len() != layers {
            return Err(Error::Schema(format!(
                "{layers} layers need {layers} weight and bias arrays, got {} and {}",
                self.weights.len(),
                self.biases.len()
            )));
        }
        if self.activations.len() != layers - 1 {
            return Err(Error::Schema(format!(
                "{} hidden layers need as many activations, got {}",
                layers - 1,
                self.activations.len()
            )));
        }
        for i in 0..layers {
            let (fan_in, fan_out) = (sizes[i], sizes[i + 1]);
            if fan_in == 0 || fan_out == 0 {
                return Err(Error::Schema(format!("layer {i} has zero width")));
            }
            if self.weights[i].len() != fan_in * fan_out {
                return Err(Error::Schema(format!(
                    "layer {i} weights: expected {fan_out}x{fan_in} = {}, got {}",
                    fan_in * fan_out,
                    self.weights[i].len()
                )));
            }
            if self.biases[i].len() != fan_out {
                return Err(Error::Schema(format!(
                    "layer {i} biases: expected {fan_out}, got {}",
                    self.biases[i].len()
                )));
            }
        }
        let all_finite = self
            .weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Schema("weights and biases must be finite".into()));
        }
        if let Some(s) = self.output_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Schema(format!(
                    "output_scale must be positive, got {s}"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let policy: MlpPolicy = serde_json::from_str(text)?;
        policy.validate()?;
        Ok(policy)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn act(&self, obs: &Observation) -> Result<f64> {
        let mut activ: Vec<f64> = self.observation_order.iter().map(|f| f.read(obs)).collect();
        let layers = self.weights.len();
        for i in 0..layers {
            let fan_in = self.layer_sizes[i];
            let mut next: Vec<f64> = self.weights[i]
                .chunks_exact(fan_in)
                .zip(&self.biases[i])
                .map(|(row, b)| dot(row, &activ) + b)
                .collect();
            if i + 1 < layers {
                let act = self.activations[i];
                next.iter_mut().for_each(|v| *v = act.apply(*v));
            }
            activ = next;
        }
        let raw = activ[0];
        let out = match self.output_scale {
            Some(s) => s * raw.tanh(),
            None => raw,
        };
        if !out.is_finite() {
            return Err(Error::numeric(format!("network output for {obs:?}")));
        }
        Ok(out)
    }
}

pub fn mlp_load(path: &Path) -> Result<MlpPolicy> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    MlpPolicy::from_json(&text)
}

pub fn mlp_act(policy: &MlpPolicy, obs: &Observation) -> Result<f64> {
    policy.act(obs)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Policy {
    Lqr(LqrPolicy),
    Mlp(MlpPolicy),
}

impl Policy {
    pub fn act(&self, obs: &Observation) -> Result<f64> {
        match self {
            Policy::Lqr(p) => Ok(p.act(obs)),
            Policy::Mlp(p) => p.act(obs),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Lqr(_) => "lqr",
            Policy::Mlp(_) => "mlp",
        }
    }
}
