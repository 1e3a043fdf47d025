use super::linalg::{is_hurwitz, is_positive_definite, Matrix};
use super::SolverTolerances;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct LyapunovSolution {
    /// Symmetric positive definite solution of `P·A + Aᵀ·P = −Q`.
    pub p: Matrix,
    pub residual_norm: f64,
}

pub fn solve_lyapunov(a: &Matrix, q: &Matrix) -> Result<LyapunovSolution> {
    solve_lyapunov_with(a, q, &SolverTolerances::default())
}

pub fn solve_lyapunov_with(
    a: &Matrix,
    q: &Matrix,
    tol: &SolverTolerances,
) -> Result<LyapunovSolution> {
    if !a.is_square() || !q.is_square() || a.rows() != q.rows() {
        return Err(Error::Dimension(format!(
            "Lyapunov operands {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            q.rows(),
            q.cols()
        )));
    }
    if !is_hurwitz(a)? {
        return Err(Error::Stability(format!("{a:?}")));
    }
    if !is_positive_definite(q)? {
        return Err(Error::Argument(
            "Q must be symmetric positive definite".into(),
        ));
    }
    let p = kronecker_solve(a, q)?;
    let residual_norm = lyapunov_residual(a, &p, q)?;
    if residual_norm > tol.lyapunov_residual * q.frobenius_norm().max(1.0) {
        return Err(Error::Convergence(format!(
            "Lyapunov residual {residual_norm:e} above tolerance"
        )));
    }
    if !is_positive_definite(&p)? {
        return Err(Error::Numeric {
            context: "Lyapunov solution lost positive definiteness".into(),
        });
    }
    Ok(LyapunovSolution { p, residual_norm })
}

/// `‖P·A + Aᵀ·P + Q‖_F`
pub(crate) fn lyapunov_residual(a: &Matrix, p: &Matrix, q: &Matrix) -> Result<f64> {
    Ok(p.matmul(a)?
        .add(&a.transpose().matmul(p)?)?
        .add(q)?
        .frobenius_norm())
}

/// Solves `P·A + Aᵀ·P = −Q` through the n²×n² vectorized system with
/// row-major `vec(P)`. No stability or definiteness checks; `Q` may be
/// indefinite. The result is symmetrized.
pub(crate) fn kronecker_solve(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    let mut system = Matrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for k in 0..n {
                // (P·A)_ij = Σ_k P_ik A_kj
                system[(row, i * n + k)] += a[(k, j)];
                // (Aᵀ·P)_ij = Σ_k A_ki P_kj
                system[(row, k * n + j)] += a[(k, i)];
            }
        }
    }
    let rhs: Vec<f64> = q.as_slice().iter().map(|v| -v).collect();
    let vec_p = system
        .solve(&rhs)
        .map_err(|_| Error::Stability("Lyapunov operator is singular".into()))?;
    Ok(Matrix::new(n, n, vec_p)?.symmetrized())
}
