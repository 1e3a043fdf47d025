//! Companion-form plants `ẋ = A·ζ(x) + λ·B·u` and the inverted pendulum
//! `m·l²·θ̈ = m·g·l·φ(θ) − b·θ̇ + u` expressed in that form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num_core::{dot, euler_step, Matrix, Vector};

/// Physical pendulum constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    pub m: f64,
    pub l: f64,
    pub b: f64,
    pub g: f64,
}

impl PlantParams {
    pub fn new(m: f64, l: f64, b: f64, g: f64) -> Result<Self> {
        let p = PlantParams { m, l, b, g };
        p.validate()?;
        Ok(p)
    }

    /// `m = l = b = 1`, `g = 10`.
    pub fn nominal() -> Self {
        PlantParams {
            m: 1.0,
            l: 1.0,
            b: 1.0,
            g: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m", self.m), ("l", self.l), ("b", self.b), ("g", self.g)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!(
                    "pendulum constant {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// `m·l²`
    pub fn inertia(&self) -> f64 {
        self.m * self.l * self.l
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Linear,
    Nonlinear,
}

impl std::fmt::Display for Form {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Form::Linear => "linear",
            Form::Nonlinear => "nonlinear",
        })
    }
}

impl std::str::FromStr for Form {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Form::Linear),
            "nonlinear" => Ok(Form::Nonlinear),
            other => Err(Error::Argument(format!("unknown form '{other}'"))),
        }
    }
}

/// The scalar map applied to the first state coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    Identity,
    Sine,
}

impl Nonlinearity {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Nonlinearity::Identity => v,
            Nonlinearity::Sine => v.sin(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompanionSystem {
    alpha: Vector,
    b_scalar: f64,
    lambda_scale: f64,
    form: Form,
    nonlinearity: Nonlinearity,
}

impl CompanionSystem {
    pub fn new(
        alpha: Vector,
        b_scalar: f64,
        lambda_scale: f64,
        form: Form,
        nonlinearity: Nonlinearity,
    ) -> Result<Self> {
        if let Some(i) = alpha.iter().position(|&a| a == 0.0) {
            return Err(Error::DegenerateParameter(format!(
                "companion row entry {i} is zero"
            )));
        }
        if b_scalar == 0.0 || !b_scalar.is_finite() {
            return Err(Error::DegenerateParameter(format!(
                "input gain must be nonzero, got {b_scalar}"
            )));
        }
        if !(lambda_scale > 0.0 && lambda_scale.is_finite()) {
            return Err(Error::Argument(format!(
                "input scale must be positive, got {lambda_scale}"
            )));
        }
        if form == Form::Linear && nonlinearity != Nonlinearity::Identity {
            return Err(Error::Argument(
                "linear form requires the identity map".into(),
            ));
        }
        Ok(CompanionSystem {
            alpha,
            b_scalar,
            lambda_scale,
            form,
            nonlinearity,
        })
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// Last row of the state matrix.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn b_scalar(&self) -> f64 {
        self.b_scalar
    }

    pub fn lambda_scale(&self) -> f64 {
        self.lambda_scale
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        self.nonlinearity
    }

    pub fn with_lambda(mut self, lambda_scale: f64) -> Result<Self> {
        if !(lambda_scale > 0.0 && lambda_scale.is_finite()) {
            return Err(Error::Argument(format!(
                "input scale must be positive, got {lambda_scale}"
            )));
        }
        self.lambda_scale = lambda_scale;
        Ok(self)
    }

    pub fn state_matrix(&self) -> Matrix {
        Matrix::companion(&self.alpha)
    }

    /// Input column `[0, …, 0, b]` (without λ).
    pub fn input_column(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.dim()];
        b[self.dim() - 1] = self.b_scalar;
        b
    }
}

pub fn companion_from_pendulum(params: &PlantParams, form: Form) -> Result<CompanionSystem> {
    params.validate()?;
    let inertia = params.inertia();
    let alpha = Vector::new(vec![params.g / params.l, -params.b / inertia])?;
    let nonlinearity = match form {
        Form::Linear => Nonlinearity::Identity,
        Form::Nonlinear => Nonlinearity::Sine,
    };
    CompanionSystem::new(alpha, 1.0 / inertia, 1.0, form, nonlinearity)
}

pub fn zeta(x: &[f64], system: &CompanionSystem) -> Result<Vec<f64>> {
    check_dim(x, system)?;
    Ok(zeta_unchecked(x, system))
}

fn zeta_unchecked(x: &[f64], system: &CompanionSystem) -> Vec<f64> {
    let mut z = x.to_vec();
    z[0] = system.nonlinearity.apply(x[0]);
    z
}

fn check_dim(x: &[f64], system: &CompanionSystem) -> Result<()> {
    if x.len() != system.dim() {
        return Err(Error::Dimension(format!(
            "state has length {}, system has dimension {}",
            x.len(),
            system.dim()
        )));
    }
    Ok(())
}

pub fn plant_derivative(system: &CompanionSystem, x: &[f64], u: f64) -> Result<Vec<f64>> {
    check_dim(x, system)?;
    let dx = derivative_unchecked(system, x, u);
    if dx.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric(format!(
            "plant derivative at x = {x:?}, u = {u}"
        )));
    }
    Ok(dx)
}

fn derivative_unchecked(system: &CompanionSystem, x: &[f64], u: f64) -> Vec<f64> {
    let n = system.dim();
    let z = zeta_unchecked(x, system);
    let mut dx = Vec::with_capacity(n);
    dx.extend_from_slice(&z[1..]);
    dx.push(dot(&system.alpha, &z) + system.lambda_scale * system.b_scalar * u);
    dx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub x: Vec<f64>,
    pub t: f64,
}

impl PlantState {
    pub fn new(x: Vec<f64>) -> Self {
        PlantState { x, t: 0.0 }
    }
}

/// Advances `dt` seconds in `substeps` Euler steps with `u` held constant.
pub fn step_plant(
    system: &CompanionSystem,
    state: &PlantState,
    u: f64,
    dt: f64,
    substeps: usize,
) -> Result<PlantState> {
    check_dim(&state.x, system)?;
    if substeps == 0 {
        return Err(Error::Argument("substeps must be at least 1".into()));
    }
    if !u.is_finite() {
        return Err(Error::numeric(format!("control input at t = {}", state.t)));
    }
    let h = dt / substeps as f64;
    let mut x = state.x.clone();
    for _ in 0..substeps {
        x = euler_step(|x| derivative_unchecked(system, x, u), &x, h).map_err(|e| match e {
            Error::Numeric { context } => {
                Error::numeric(format!("{context} during plant step from t = {}", state.t))
            }
            other => other,
        })?;
    }
    Ok(PlantState { x, t: state.t + dt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn nominal(form: Form) -> CompanionSystem {
        companion_from_pendulum(&PlantParams::nominal(), form).unwrap()
    }

    #[test]
    fn pendulum_companion_rows() {
        let s = nominal(Form::Linear);
        assert_eq!(s.alpha(), &[10.0, -1.0]);
        assert_eq!(s.b_scalar(), 1.0);
        assert_eq!(s.lambda_scale(), 1.0);

        let heavy = companion_from_pendulum(
            &PlantParams::new(2.0, 1.0, 1.0, 10.0).unwrap(),
            Form::Linear,
        )
        .unwrap();
        assert_eq!(heavy.alpha(), &[10.0, -0.5]);
        assert_eq!(heavy.b_scalar(), 0.5);

        let long = companion_from_pendulum(
            &PlantParams::new(1.0, 2.0, 1.0, 10.0).unwrap(),
            Form::Nonlinear,
        )
        .unwrap();
        assert_eq!(long.alpha(), &[5.0, -0.25]);
        assert_eq!(long.b_scalar(), 0.25);
        assert_eq!(long.nonlinearity(), Nonlinearity::Sine);
    }

    #[test]
    fn zeta_examples() {
        let nl = nominal(Form::Nonlinear);
        assert_eq!(zeta(&[0.0, 0.0], &nl).unwrap(), vec![0.0, 0.0]);
        assert_eq!(zeta(&[FRAC_PI_2, 3.0], &nl).unwrap(), vec![1.0, 3.0]);
        assert_eq!(
            zeta(&[0.4, -1.0], &nominal(Form::Linear)).unwrap(),
            vec![0.4, -1.0]
        );
        assert!(matches!(zeta(&[0.0], &nl), Err(Error::Dimension(_))));
    }

    #[test]
    fn derivative_examples() {
        let s = nominal(Form::Linear);
        assert_eq!(
            plant_derivative(&s, &[0.1, 0.0], 0.0).unwrap(),
            vec![0.0, 1.0]
        );
        assert_eq!(
            plant_derivative(&s, &[0.0, 0.0], 0.0).unwrap(),
            vec![0.0, 0.0]
        );
        assert_eq!(
            plant_derivative(&s, &[0.0, 0.0], 1.0).unwrap(),
            vec![0.0, 1.0]
        );
        assert!(plant_derivative(&s, &[0.0, 0.0], f64::INFINITY).is_err());
    }

    #[test]
    fn euler_on_pendulum() {
        let s = nominal(Form::Linear);
        let x = euler_step(
            |x| plant_derivative(&s, x, 0.0).unwrap(),
            &[0.1, 0.0],
            0.005,
        )
        .unwrap();
        assert_eq!(x, vec![0.1, 0.005]);
    }

    #[test]
    fn step_examples() {
        let s = nominal(Form::Linear);
        let rest = step_plant(&s, &PlantState::new(vec![0.0, 0.0]), 0.0, 0.01, 3).unwrap();
        assert_eq!(rest.x, vec![0.0, 0.0]);
        assert_eq!(rest.t, 0.01);

        let start = PlantState::new(vec![0.1, 0.0]);
        let two = step_plant(&s, &start, 0.0, 0.01, 2).unwrap();
        // hand-chained: [0.1, 0.005] then [0.1 + 0.005·0.005, 0.005 + 0.005·(1.0 − 0.005)]
        let want = [0.1 + 0.005 * 0.005, 0.005 + 0.005 * (10.0 * 0.1 - 0.005)];
        assert!((two.x[0] - want[0]).abs() < 1e-16 && (two.x[1] - want[1]).abs() < 1e-16);

        let one = step_plant(&s, &start, 0.7, 0.005, 1).unwrap();
        let direct =
            euler_step(|x| plant_derivative(&s, x, 0.7).unwrap(), &start.x, 0.005).unwrap();
        assert_eq!(one.x, direct);
        assert!(step_plant(&s, &start, 0.0, 0.01, 0).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(PlantParams::new(0.0, 1.0, 1.0, 10.0).is_err());
        assert!(PlantParams::new(1.0, 1.0, -1.0, 10.0).is_err());
        assert!(CompanionSystem::new(
            Vector::new(vec![1.0, 0.0]).unwrap(),
            1.0,
            1.0,
            Form::Linear,
            Nonlinearity::Identity
        )
        .is_err());
    }
}
