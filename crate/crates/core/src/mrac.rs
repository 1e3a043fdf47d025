//! Model-reference adaptive inner loops for companion-form plants.
//!
//! Both variants drive the tracking error `e = x − x_r` through the Hurwitz
//! matrix `A_H` and adapt `(K̂, k̂_u)` along `−Γ·regressor·eᵀP·B_r`:
//!
//! * linear: `A_H = A_r − h(Dα_r)ᵀ`, `ξ = u_r − (Dα_r)ᵀe / b_r`, regressor `x`
//! * nonlinear: `A_H = A_r − hα_rᵀ + hβ_rᵀ`,
//!   `ξ = u_r − α_rᵀ(ζ − ζ_r) / b_r + β_rᵀe / b_r`, regressor `ζ(x)`
//!
//! with control `u = K̂ᵀ·regressor + k̂_u·ξ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num_core::{
    dot, is_hurwitz, is_positive_definite, solve_lyapunov_with, Matrix, SolverTolerances,
};
use crate::plant::{zeta, CompanionSystem, Form};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MracConfig {
    /// Diagonal of `D` where the reference row entry is positive; each > 1.
    pub omega: Vec<f64>,
    /// Diagonal of `D` where the reference row entry is negative; each ≤ 0.
    pub psi: Vec<f64>,
    /// Replacement last row of `A_H` for the nonlinear variant; strictly negative.
    pub beta_r: Vec<f64>,
    pub gamma_x: Matrix,
    pub gamma_u: f64,
    pub q: Matrix,
    pub variant: Form,
}

impl MracConfig {
    /// Defaults for a reference system: `ω = 2`, `ψ = 0`, `β_r = −|α_r|`,
    /// `Γ = 10·I`, `γ_u = 10`, `Q = I`.
    pub fn for_reference(reference: &CompanionSystem) -> Self {
        let n = reference.dim();
        MracConfig {
            omega: vec![2.0; n],
            psi: vec![0.0; n],
            beta_r: reference.alpha().iter().map(|a| -a.abs()).collect(),
            gamma_x: Matrix::identity(n),
            gamma_u: 0.1,
            q: Matrix::identity(n),
            variant: reference.form(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let dims_ok = self.omega.len() == n
            && self.psi.len() == n
            && self.beta_r.len() == n
            && self.gamma_x.rows() == n
            && self.gamma_x.is_square()
            && self.q.rows() == n
            && self.q.is_square();
        if !dims_ok {
            return Err(Error::Dimension(format!(
                "adaptive controller configuration does not match dimension {n}"
            )));
        }
        if let Some(w) = self.omega.iter().find(|&&w| !(w > 1.0)) {
            return Err(Error::Argument(format!(
                "omega entries must exceed 1, got {w}"
            )));
        }
        if let Some(p) = self.psi.iter().find(|&&p| !(p <= 0.0)) {
            return Err(Error::Argument(format!("psi entries must be ≤ 0, got {p}")));
        }
        if let Some(b) = self.beta_r.iter().find(|&&b| !(b < 0.0)) {
            return Err(Error::Argument(format!(
                "beta_r entries must be strictly negative, got {b}"
            )));
        }
        if !(self.gamma_u > 0.0 && self.gamma_u.is_finite()) {
            return Err(Error::Argument(format!(
                "gamma_u must be positive, got {}",
                self.gamma_u
            )));
        }
        if !is_positive_definite(&self.gamma_x)? {
            return Err(Error::Argument(
                "gamma_x must be symmetric positive definite".into(),
            ));
        }
        if !is_positive_definite(&self.q)? {
            return Err(Error::Argument(
                "Q must be symmetric positive definite".into(),
            ));
        }
        Ok(())
    }
}

/// Constants fixed once per reference model and configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct MracDerived {
    pub variant: Form,
    /// Diagonal selection matrix (linear variant only).
    pub d: Option<Matrix>,
    pub a_h: Matrix,
    pub p: Matrix,
    pub h: Vec<f64>,
    pub alpha_r: Vec<f64>,
    pub b_r: f64,
    /// Last row of `A_H` relative to `A_r`: `Dα_r` (linear) or `β_r` (nonlinear).
    pub feedback_row: Vec<f64>,
    /// `P·B_r`, so that `eᵀP·B_r = dot(e, p_b)`.
    pub p_b: Vec<f64>,
    pub gamma_x_inv: Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveState {
    pub k_hat: Vec<f64>,
    pub k_u_hat: f64,
}

impl AdaptiveState {
    /// `K̂ = 0`, `k̂_u = 1`: exact feedthrough of `u_r` when `e = 0`.
    pub fn initial(n: usize) -> Self {
        AdaptiveState {
            k_hat: vec![0.0; n],
            k_u_hat: 1.0,
        }
    }
}

/// Gains satisfying the matching conditions for a known true plant. Only
/// computable when the true parameters are known, so used for checking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealGains {
    pub k_star: Vec<f64>,
    pub k_u_star: f64,
    pub lambda_true: f64,
}

impl From<&IdealGains> for AdaptiveState {
    fn from(g: &IdealGains) -> Self {
        AdaptiveState {
            k_hat: g.k_star.clone(),
            k_u_hat: g.k_u_star,
        }
    }
}

pub fn build_d(alpha_r: &[f64], config: &MracConfig) -> Result<Matrix> {
    let n = alpha_r.len();
    if config.omega.len() != n || config.psi.len() != n {
        return Err(Error::Dimension(format!(
            "omega/psi lengths {}/{} do not match {n}",
            config.omega.len(),
            config.psi.len()
        )));
    }
    let diag = alpha_r
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            if a > 0.0 {
                Ok(config.omega[i])
            } else if a < 0.0 {
                Ok(config.psi[i])
            } else {
                Err(Error::DegenerateParameter(format!(
                    "reference row entry {i} is zero"
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Matrix::from_diagonal(&diag))
}

pub fn derive_linear(alpha_r: &[f64], b_r: f64, config: &MracConfig) -> Result<MracDerived> {
    derive_linear_with(alpha_r, b_r, config, &SolverTolerances::default())
}

pub fn derive_linear_with(
    alpha_r: &[f64],
    b_r: f64,
    config: &MracConfig,
    tol: &SolverTolerances,
) -> Result<MracDerived> {
    config.validate(alpha_r.len())?;
    let d = build_d(alpha_r, config)?;
    let d_alpha = d.mul_vec(alpha_r)?;
    let hurwitz_row: Vec<f64> = alpha_r.iter().zip(&d_alpha).map(|(a, da)| a - da).collect();
    finish(
        Form::Linear,
        Some(d),
        alpha_r,
        b_r,
        d_alpha,
        &hurwitz_row,
        config,
        tol,
    )
}

pub fn derive_nonlinear(alpha_r: &[f64], b_r: f64, config: &MracConfig) -> Result<MracDerived> {
    derive_nonlinear_with(alpha_r, b_r, config, &SolverTolerances::default())
}

pub fn derive_nonlinear_with(
    alpha_r: &[f64],
    b_r: f64,
    config: &MracConfig,
    tol: &SolverTolerances,
) -> Result<MracDerived> {
    config
        .validate(alpha_r.len())
        .map_err(|e| Error::Construction(e.to_string()))?;
    let beta = config.beta_r.clone();
    finish(
        Form::Nonlinear,
        None,
        alpha_r,
        b_r,
        beta.clone(),
        &beta,
        config,
        tol,
    )
}

/// Builds the variant matching `config.variant` for the given reference.
pub fn derive(
    reference: &CompanionSystem,
    config: &MracConfig,
    tol: &SolverTolerances,
) -> Result<MracDerived> {
    if reference.form() != config.variant {
        return Err(Error::Argument(format!(
            "{} controller cannot follow a {} reference",
            config.variant,
            reference.form()
        )));
    }
    match config.variant {
        Form::Linear => derive_linear_with(reference.alpha(), reference.b_scalar(), config, tol),
        Form::Nonlinear => {
            derive_nonlinear_with(reference.alpha(), reference.b_scalar(), config, tol)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    variant: Form,
    d: Option<Matrix>,
    alpha_r: &[f64],
    b_r: f64,
    feedback_row: Vec<f64>,
    hurwitz_row: &[f64],
    config: &MracConfig,
    tol: &SolverTolerances,
) -> Result<MracDerived> {
    if b_r == 0.0 || !b_r.is_finite() {
        return Err(Error::DegenerateParameter(format!("b_r = {b_r}")));
    }
    let n = alpha_r.len();
    let a_h = Matrix::companion(hurwitz_row);
    if !is_hurwitz(&a_h)? {
        return Err(Error::Construction(format!("A_H = {a_h:?} is not Hurwitz")));
    }
    let p = solve_lyapunov_with(&a_h, &config.q, tol)
        .map_err(|e| Error::Construction(format!("Lyapunov solve failed: {e}")))?
        .p;
    let mut h = vec![0.0; n];
    h[n - 1] = 1.0;
    let p_b = p.row(n - 1).iter().map(|v| v * b_r).collect();
    Ok(MracDerived {
        variant,
        d,
        a_h,
        p,
        h,
        alpha_r: alpha_r.to_vec(),
        b_r,
        feedback_row,
        p_b,
        gamma_x_inv: config.gamma_x.inverse()?,
    })
}

pub fn xi_linear(u_r: f64, e: &[f64], derived: &MracDerived) -> f64 {
    u_r - dot(&derived.feedback_row, e) / derived.b_r
}

pub fn xi_nonlinear(
    u_r: f64,
    e: &[f64],
    zeta_x: &[f64],
    zeta_r: &[f64],
    derived: &MracDerived,
) -> f64 {
    let dz: Vec<f64> = zeta_x.iter().zip(zeta_r).map(|(a, b)| a - b).collect();
    u_r - dot(&derived.alpha_r, &dz) / derived.b_r + dot(&derived.feedback_row, e) / derived.b_r
}

pub fn control(adaptive: &AdaptiveState, regressor: &[f64], xi: f64) -> f64 {
    dot(&adaptive.k_hat, regressor) + adaptive.k_u_hat * xi
}

/// One explicit-Euler step of the adaptive laws over `dt`.
pub fn adapt_step(
    adaptive: &AdaptiveState,
    regressor: &[f64],
    e: &[f64],
    xi: f64,
    derived: &MracDerived,
    config: &MracConfig,
    dt: f64,
) -> Result<AdaptiveState> {
    if !(dt > 0.0) {
        return Err(Error::Argument(format!(
            "adaptation step must be positive, got {dt}"
        )));
    }
    let s = dot(e, &derived.p_b);
    let g_reg = config.gamma_x.mul_vec(regressor)?;
    let k_hat: Vec<f64> = adaptive
        .k_hat
        .iter()
        .zip(&g_reg)
        .map(|(k, g)| k - dt * g * s)
        .collect();
    if k_hat.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric(format!("state-gain estimate K̂ = {k_hat:?}")));
    }
    let k_u_hat = adaptive.k_u_hat - dt * config.gamma_u * xi * s;
    if !k_u_hat.is_finite() {
        return Err(Error::numeric(format!(
            "input-gain estimate k̂_u = {k_u_hat}"
        )));
    }
    Ok(AdaptiveState { k_hat, k_u_hat })
}

/// `eᵀPe + λ·K̃ᵀΓ⁻¹K̃ + λ·k̃_u²/γ_u` with `K̃ = K̂ − K*`, `k̃_u = k̂_u − k_u*`.
pub fn lyapunov_value(
    e: &[f64],
    adaptive: &AdaptiveState,
    ideal: &IdealGains,
    derived: &MracDerived,
    config: &MracConfig,
) -> Result<f64> {
    let k_tilde: Vec<f64> = adaptive
        .k_hat
        .iter()
        .zip(&ideal.k_star)
        .map(|(a, b)| a - b)
        .collect();
    let k_u_tilde = adaptive.k_u_hat - ideal.k_u_star;
    Ok(derived.p.quadratic_form(e)?
        + ideal.lambda_true * derived.gamma_x_inv.quadratic_form(&k_tilde)?
        + ideal.lambda_true * k_u_tilde * k_u_tilde / config.gamma_u)
}

/// Matching-condition gains: `λ = b_true/b_r`, `k_u* = 1/λ`,
/// `K* = (α_r − α_true)/(λ·b_r)`.
pub fn ideal_gains(
    true_system: &CompanionSystem,
    reference: &CompanionSystem,
) -> Result<IdealGains> {
    if true_system.dim() != reference.dim() || true_system.form() != reference.form() {
        return Err(Error::Dimension(
            "true and reference systems differ in dimension or form".into(),
        ));
    }
    let lambda_true = true_system.lambda_scale() * true_system.b_scalar()
        / (reference.lambda_scale() * reference.b_scalar());
    if !(lambda_true > 0.0) {
        return Err(Error::Argument(format!(
            "input gains have opposite signs (λ = {lambda_true})"
        )));
    }
    let denom = lambda_true * reference.b_scalar();
    let k_star = reference
        .alpha()
        .iter()
        .zip(true_system.alpha())
        .map(|(ar, a)| (ar - a) / denom)
        .collect();
    Ok(IdealGains {
        k_star,
        k_u_star: 1.0 / lambda_true,
        lambda_true,
    })
}

/// Per-tick quantities of one inner-loop evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerTick {
    pub u: f64,
    pub xi: f64,
    pub e: Vec<f64>,
    pub regressor: Vec<f64>,
}

/// An adaptive inner loop bound to one reference model.
#[derive(Clone, Debug)]
pub struct MracController {
    reference: CompanionSystem,
    config: MracConfig,
    derived: MracDerived,
    state: AdaptiveState,
    frozen: bool,
}

impl MracController {
    pub fn new(
        reference: CompanionSystem,
        config: MracConfig,
        tol: &SolverTolerances,
    ) -> Result<Self> {
        let derived = derive(&reference, &config, tol)?;
        let state = AdaptiveState::initial(reference.dim());
        Ok(MracController {
            reference,
            config,
            derived,
            state,
            frozen: false,
        })
    }

    /// Replaces the gain estimates, e.g. with ideal gains.
    pub fn with_state(mut self, state: AdaptiveState) -> Self {
        self.state = state;
        self
    }

    /// Disables adaptation; the control law runs with fixed gains.
    pub fn frozen(mut self) -> Self {
        self.frozen = true;
        self
    }

    pub fn state(&self) -> &AdaptiveState {
        &self.state
    }

    pub fn derived(&self) -> &MracDerived {
        &self.derived
    }

    pub fn config(&self) -> &MracConfig {
        &self.config
    }

    /// Evaluates the control law with the current gains.
    pub fn evaluate(&self, x: &[f64], x_r: &[f64], u_r: f64) -> Result<InnerTick> {
        let e: Vec<f64> = x.iter().zip(x_r).map(|(a, b)| a - b).collect();
        let (xi, regressor) = match self.config.variant {
            Form::Linear => (xi_linear(u_r, &e, &self.derived), x.to_vec()),
            Form::Nonlinear => {
                let z = zeta(x, &self.reference)?;
                let z_r = zeta(x_r, &self.reference)?;
                (xi_nonlinear(u_r, &e, &z, &z_r, &self.derived), z)
            }
        };
        let u = control(&self.state, &regressor, xi);
        if !u.is_finite() {
            return Err(Error::numeric(format!("adaptive control at e = {e:?}")));
        }
        Ok(InnerTick {
            u,
            xi,
            e,
            regressor,
        })
    }

    /// Computes `u` with the pre-update gains, then advances the gains by `dt`.
    pub fn step(&mut self, x: &[f64], x_r: &[f64], u_r: f64, dt: f64) -> Result<InnerTick> {
        let tick = self.evaluate(x, x_r, u_r)?;
        if !self.frozen {
            self.state = adapt_step(
                &self.state,
                &tick.regressor,
                &tick.e,
                tick.xi,
                &self.derived,
                &self.config,
                dt,
            )?;
        }
        Ok(tick)
    }

    pub fn lyapunov_value(&self, e: &[f64], ideal: &IdealGains) -> Result<f64> {
        lyapunov_value(e, &self.state, ideal, &self.derived, &self.config)
    }
}
