use super::linalg::{is_hurwitz, Matrix, Vector};
use super::lyapunov::kronecker_solve;
use super::SolverTolerances;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CareSolution {
    pub p: Matrix,
    /// Row gain `K = R⁻¹·Bᵀ·P`; the optimal input is `u = −K·x`.
    pub k: Vector,
    pub residual_norm: f64,
    pub iterations: usize,
}

pub fn solve_care(a: &Matrix, b: &[f64], q: &Matrix, r: f64) -> Result<CareSolution> {
    solve_care_with(a, b, q, r, &SolverTolerances::default())
}

/// Single-input continuous algebraic Riccati equation
/// `AᵀP + PA − P·B·R⁻¹·Bᵀ·P + Q = 0` by Newton–Kleinman iteration from a
/// pole-shifting initial gain.
pub fn solve_care_with(
    a: &Matrix,
    b: &[f64],
    q: &Matrix,
    r: f64,
    tol: &SolverTolerances,
) -> Result<CareSolution> {
    let n = a.rows();
    if !a.is_square() || b.len() != n || q.rows() != n || !q.is_square() {
        return Err(Error::Dimension(format!(
            "CARE operands A {}x{}, B {}, Q {}x{}",
            a.rows(),
            a.cols(),
            b.len(),
            q.rows(),
            q.cols()
        )));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Argument(format!("R must be positive, got {r}")));
    }
    if !q.is_symmetric(tol.symmetry) {
        return Err(Error::Argument("Q must be symmetric".into()));
    }
    let q_norm = q.frobenius_norm();
    let a_norm = a.frobenius_norm();
    let scale_for = |p: &Matrix| {
        let pb: f64 = (0..n)
            .map(|i| (0..n).map(|j| p[(i, j)] * b[j]).sum::<f64>().powi(2))
            .sum();
        (q_norm + 2.0 * a_norm * p.frobenius_norm() + pb / r).max(1.0)
    };

    let mut k = stabilizing_gain(a, b)?;
    let mut p: Option<Matrix> = None;
    let mut best: Option<(Matrix, Vec<f64>, f64)> = None;
    let mut iterations = 0;
    let mut stalled = 0;
    for iter in 1..=tol.newton_max_iter {
        iterations = iter;
        let closed = closed_loop(a, b, &k);
        if !is_hurwitz(&closed)? {
            return Err(Error::Convergence(format!(
                "Newton–Kleinman iterate {iter} lost stability"
            )));
        }
        let next = match &p {
            // (A − BK)ᵀP + P(A − BK) = −(Q + Kᵀ R K)
            None => {
                let mut rhs = q.clone();
                for i in 0..n {
                    for j in 0..n {
                        rhs[(i, j)] += r * k[i] * k[j];
                    }
                }
                kronecker_solve(&closed, &rhs)?
            }
            // the same Newton step written as a correction, which avoids
            // the cancellation in Q + KᵀRK once P is large
            Some(p) => {
                let delta = kronecker_solve(&closed, &riccati_residual_matrix(a, b, q, r, p)?)?;
                let sum = p.add(&delta)?;
                sum.add(&sum.transpose())?.scale(0.5)
            }
        };
        k = gain_from(&next, b, r);
        let residual = riccati_residual(a, b, q, r, &next)?;
        let step = match &p {
            Some(prev) => {
                next.sub(prev)?.frobenius_norm() / next.frobenius_norm().max(f64::MIN_POSITIVE)
            }
            None => f64::INFINITY,
        };
        let improved = best.as_ref().is_none_or(|(_, _, res)| residual < *res);
        if improved {
            best = Some((next.clone(), k.clone(), residual));
        }
        // far from the solution the residual can rise while P still moves a
        // lot; only count stalls once the steps are tiny
        if !improved && step < 1e-8 {
            stalled += 1;
        } else if improved {
            stalled = 0;
        }
        p = Some(next);
        if residual <= tol.newton_residual * q_norm.max(1.0)
            || stalled >= 3
            || step <= 4.0 * f64::EPSILON
        {
            break;
        }
    }
    let (p, k, residual_norm) = best.expect("at least one iteration");
    // judged against the size of the terms it balances, so that large but
    // accurate solutions of poorly conditioned problems are accepted
    if residual_norm > tol.care_residual * scale_for(&p) {
        return Err(Error::Convergence(format!(
            "Riccati residual {residual_norm:e} after {iterations} iterations"
        )));
    }
    if !is_hurwitz(&closed_loop(a, b, &k))? {
        return Err(Error::Convergence(
            "closed loop A − BK is not Hurwitz".into(),
        ));
    }
    Ok(CareSolution {
        p,
        k: Vector::new(k)?,
        residual_norm,
        iterations,
    })
}

/// A gain `K` with `A − B·K` Hurwitz. Zero when `A` is already stable,
/// otherwise Bass's construction: shift by `σ > ‖A‖_F`, solve
/// `(A + σI)X + X(A + σI)ᵀ = 2BBᵀ` and take `K = BᵀX⁻¹`, which places
/// every closed-loop eigenvalue left of `−σ`.
pub fn stabilizing_gain(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if is_hurwitz(a)? {
        return Ok(vec![0.0; n]);
    }
    let sigma = a.frobenius_norm() + 1.0;
    let mut shifted = a.scale(-1.0);
    for i in 0..n {
        shifted[(i, i)] -= sigma;
    }
    let mut bbt = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            bbt[(i, j)] = 2.0 * b[i] * b[j];
        }
    }
    // kronecker_solve(M, Q) solves X·M + Mᵀ·X = −Q; with M = shiftedᵀ this is
    // shifted·X + X·shiftedᵀ = −2BBᵀ.
    let x = kronecker_solve(&shifted.transpose(), &bbt)?;
    let x_inv = x
        .inverse()
        .map_err(|_| Error::Argument("(A, B) is not controllable".into()))?;
    let k = x_inv.transpose().mul_vec(b)?;
    if !is_hurwitz(&closed_loop(a, b, &k))? {
        return Err(Error::Argument("(A, B) is not stabilizable".into()));
    }
    Ok(k)
}

fn closed_loop(a: &Matrix, b: &[f64], k: &[f64]) -> Matrix {
    let mut c = a.clone();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            c[(i, j)] -= b[i] * k[j];
        }
    }
    c
}

fn gain_from(p: &Matrix, b: &[f64], r: f64) -> Vec<f64> {
    // K = R⁻¹ Bᵀ P, P symmetric so Bᵀ P = (P B)ᵀ
    p.mul_vec(b)
        .expect("dimensions checked")
        .into_iter()
        .map(|v| v / r)
        .collect()
}

pub(crate) fn riccati_residual(
    a: &Matrix,
    b: &[f64],
    q: &Matrix,
    r: f64,
    p: &Matrix,
) -> Result<f64> {
    Ok(riccati_residual_matrix(a, b, q, r, p)?.frobenius_norm())
}

fn riccati_residual_matrix(
    a: &Matrix,
    b: &[f64],
    q: &Matrix,
    r: f64,
    p: &Matrix,
) -> Result<Matrix> {
    let pb = p.mul_vec(b)?;
    let mut res = a.transpose().matmul(p)?.add(&p.matmul(a)?)?.add(q)?;
    for i in 0..a.rows() {
        for j in 0..a.rows() {
            res[(i, j)] -= pb[i] * pb[j] / r;
        }
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_integrator() {
        let sol = solve_care(
            &Matrix::from_rows(&[&[0.0]]),
            &[1.0],
            &Matrix::identity(1),
            1.0,
        )
        .unwrap();
        assert!((sol.p[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((sol.k[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stable_plant_zero_cost() {
        let sol = solve_care(
            &Matrix::from_rows(&[&[-1.0]]),
            &[1.0],
            &Matrix::zeros(1, 1),
            1.0,
        )
        .unwrap();
        assert_eq!(sol.p[(0, 0)], 0.0);
        assert_eq!(sol.k[0], 0.0);
    }

    #[test]
    fn inverted_pendulum_gain_matches_companion_closed_form() {
        // For A = [[0,1],[a1,a2]], B = [0,1], Q = diag(q1,q2):
        // k1 = a1 + sqrt(a1² + q1/r), k2 = a2 + sqrt(a2² + q2/r + 2 k1)
        let (a1, a2, q1, q2, r): (f64, f64, f64, f64, f64) = (10.0, -1.0, 1.0, 0.1, 0.001);
        let sol = solve_care(
            &Matrix::companion(&[a1, a2]),
            &[0.0, 1.0],
            &Matrix::from_diagonal(&[q1, q2]),
            r,
        )
        .unwrap();
        let k1 = a1 + (a1 * a1 + q1 / r).sqrt();
        let k2 = a2 + (a2 * a2 + q2 / r + 2.0 * k1).sqrt();
        assert!((sol.k[0] - k1).abs() < 1e-9 * k1, "{:?} vs {k1}", sol.k);
        assert!((sol.k[1] - k2).abs() < 1e-9 * k2, "{:?} vs {k2}", sol.k);
        assert!(sol.residual_norm < 1e-8);
    }

    #[test]
    fn uncontrollable_unstable_mode_is_rejected() {
        let a = Matrix::from_diagonal(&[1.0, -1.0]);
        assert!(solve_care(&a, &[0.0, 1.0], &Matrix::identity(2), 1.0).is_err());
    }

    #[test]
    fn rejects_nonpositive_r() {
        assert!(matches!(
            solve_care(&Matrix::identity(1), &[1.0], &Matrix::identity(1), 0.0),
            Err(Error::Argument(_))
        ));
    }
}
