//! Dense linear algebra, matrix-equation solvers and fixed-step integration.

mod care;
mod euler;
mod linalg;
mod lyapunov;

pub use care::{solve_care, solve_care_with, stabilizing_gain, CareSolution};
pub use euler::euler_step;
pub use linalg::{
    characteristic_polynomial, dot, is_hurwitz, is_positive_definite, norm, symmetric_eigenvalues,
    Matrix, Vector,
};
pub use lyapunov::{solve_lyapunov, solve_lyapunov_with, LyapunovSolution};

use serde::{Deserialize, Serialize};

/// Solver acceptance thresholds. Residual bounds scale with `max(1, ‖Q‖_F)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverTolerances {
    pub lyapunov_residual: f64,
    pub care_residual: f64,
    /// Newton–Kleinman stops once the Riccati residual drops below this.
    pub newton_residual: f64,
    pub newton_max_iter: usize,
    pub symmetry: f64,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        SolverTolerances {
            lyapunov_residual: 1e-10,
            care_residual: 1e-8,
            newton_residual: 1e-10,
            newton_max_iter: 100,
            symmetry: 1e-12,
        }
    }
}
