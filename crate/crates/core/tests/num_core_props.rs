use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mrac_rl::num_core::{
    euler_step, is_hurwitz, is_positive_definite, solve_care, solve_lyapunov,
    symmetric_eigenvalues, Matrix,
};

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn from_entries(n: usize, v: &[f64]) -> Matrix {
    Matrix::new(n, n, v[..n * n].to_vec()).unwrap()
}

fn spd(n: usize, v: &[f64]) -> Matrix {
    let l = from_entries(n, v);
    l.matmul(&l.transpose())
        .unwrap()
        .add(&Matrix::identity(n).scale(0.05))
        .unwrap()
}

/// Stabilizing CARE solution from the stable invariant subspace of the
/// Hamiltonian, found with the matrix sign iteration.
fn hamiltonian_care(a: &DMatrix<f64>, b: &DVector<f64>, q: &DMatrix<f64>, r: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n))
        .copy_from(&(-(b * b.transpose()) / r));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    let mut s = h;
    for _ in 0..100 {
        let next = (&s + s.clone().try_inverse().unwrap()) * 0.5;
        let done = (&next - &s).norm() <= 1e-14 * next.norm();
        s = next;
        if done {
            break;
        }
    }
    // (S + I) [I; P] = 0  →  [S12; S22 + I] P = −[S11 + I; S21]
    let id = DMatrix::<f64>::identity(n, n);
    let mut lhs = DMatrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n))
        .copy_from(&s.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n))
        .copy_from(&(s.view((n, n), (n, n)) + &id));
    let mut rhs = DMatrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n))
        .copy_from(&(-(s.view((0, 0), (n, n)) + &id)));
    rhs.view_mut((n, 0), (n, n))
        .copy_from(&(-s.view((n, 0), (n, n))));
    let p = lhs.svd(true, true).solve(&rhs, 1e-14).unwrap();
    (&p + p.transpose()) * 0.5
}

/// σ_min / σ_max of `[B, AB, …]`; near zero the CARE solution blows up.
fn controllability_ratio(a: &Matrix, b: &[f64]) -> f64 {
    let a = to_na(a);
    let n = a.nrows();
    let mut c = DMatrix::zeros(n, n);
    let mut col = DVector::from_column_slice(b);
    for j in 0..n {
        c.set_column(j, &col);
        col = &a * col;
    }
    let s = c.singular_values();
    s.min() / s.max()
}

fn max_real_eig(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn pendulum_lqr_matches_hamiltonian_oracle() {
    let a = Matrix::from_rows(&[&[0.0, 1.0], &[10.0, -1.0]]);
    let q = Matrix::from_diagonal(&[1.0, 0.1]);
    let sol = solve_care(&a, &[0.0, 1.0], &q, 0.001).unwrap();
    let oracle = hamiltonian_care(
        &to_na(&a),
        &DVector::from_vec(vec![0.0, 1.0]),
        &to_na(&q),
        0.001,
    );
    for i in 0..2 {
        for j in 0..2 {
            assert_relative_eq!(sol.p[(i, j)], oracle[(i, j)], max_relative = 1e-6);
        }
    }
    let k_oracle = DVector::from_vec(vec![oracle[(0, 1)], oracle[(1, 1)]]) / 0.001;
    assert_relative_eq!(sol.k[0], k_oracle[0], max_relative = 1e-6);
    assert_relative_eq!(sol.k[1], k_oracle[1], max_relative = 1e-6);
}

#[test]
fn nearly_uncontrollable_care_is_solved() {
    // det[B, AB] ≈ 0.007 gives ‖P‖ ≈ 3e5
    let a = Matrix::from_rows(&[
        &[-1.3039876724151238, -2.908054132560115],
        &[-1.2802987260903422, 1.107083925850721],
    ]);
    let b = [1.5933407131913224, 0.5866531308492494];
    let q = Matrix::identity(2).scale(0.05);
    let sol = solve_care(&a, &b, &q, 0.01).unwrap();
    let oracle = hamiltonian_care(
        &to_na(&a),
        &DVector::from_column_slice(&b),
        &to_na(&q),
        0.01,
    );
    let rel = (to_na(&sol.p) - &oracle).norm() / oracle.norm();
    assert!(rel <= 1e-6, "relative gap to oracle {rel}");
}

#[test]
fn is_hurwitz_agrees_with_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 1000 {
        let n = 2 + checked % 2;
        let v: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-2.0..1.5)).collect();
        let m = from_entries(n, &v);
        let abscissa = max_real_eig(&to_na(&m));
        if abscissa.abs() < 1e-9 {
            continue;
        }
        assert_eq!(is_hurwitz(&m).unwrap(), abscissa < 0.0, "{m:?}");
        checked += 1;
    }
}

#[test]
fn euler_is_first_order_on_stable_linear_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let m = from_entries(2, &v);
        let a = m
            .sub(&Matrix::identity(2).scale(m.frobenius_norm() + 0.5))
            .unwrap();
        let x0 = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let exact_at = |t: f64| (to_na(&a) * t).exp() * DVector::from_vec(x0.clone());
        let global = |dt: f64| {
            let steps = (1.0 / dt).round() as usize;
            let mut x = x0.clone();
            for _ in 0..steps {
                x = euler_step(|s| a.mul_vec(s).unwrap(), &x, dt).unwrap();
            }
            (DVector::from_vec(x) - exact_at(1.0)).norm()
        };
        let ratio = global(0.0025) / global(0.005);
        assert!((0.45..0.55).contains(&ratio), "global error ratio {ratio}");
        let one_step = |dt: f64| {
            let x = euler_step(|s| a.mul_vec(s).unwrap(), &x0, dt).unwrap();
            (DVector::from_vec(x) - exact_at(dt)).norm()
        };
        let ratio = one_step(0.0025) / one_step(0.005);
        assert!((0.2..0.3).contains(&ratio), "local error ratio {ratio}");
    }
}

proptest! {
    #[test]
    fn lyapunov_on_random_hurwitz(
        n in 1usize..=3,
        m in prop::collection::vec(-3.0f64..3.0, 9),
        l in prop::collection::vec(-2.0f64..2.0, 9),
        margin in 0.05f64..3.0,
    ) {
        let a0 = from_entries(n, &m);
        let sigma = max_real_eig(&to_na(&a0)).max(0.0) + margin;
        let a = a0.sub(&Matrix::identity(n).scale(sigma)).unwrap();
        let q = spd(n, &l);
        let p = solve_lyapunov(&a, &q).unwrap().p;
        let (an, pn) = (to_na(&a), to_na(&p));
        let res = (&pn * &an + an.transpose() * &pn + to_na(&q)).norm();
        prop_assert!(res <= 1e-10 * q.frobenius_norm().max(1.0), "residual {}", res);
        let min_eig = pn.symmetric_eigenvalues().min();
        prop_assert!(min_eig > 0.0);
        prop_assert!(is_positive_definite(&p).unwrap());
    }

    #[test]
    fn care_closed_loop_is_hurwitz(
        n in 1usize..=3,
        m in prop::collection::vec(-3.0f64..3.0, 9),
        b in prop::collection::vec(0.3f64..2.0, 3),
        l in prop::collection::vec(-2.0f64..2.0, 9),
        r in 0.01f64..10.0,
    ) {
        let a = from_entries(n, &m);
        let ctrb = controllability_ratio(&a, &b[..n]);
        prop_assume!(ctrb >= 1e-4);
        let q = spd(n, &l);
        let sol = solve_care(&a, &b[..n], &q, r).unwrap();
        let bk = Matrix::new(n, n, (0..n * n).map(|k| b[k / n] * sol.k[k % n]).collect()).unwrap();
        prop_assert!(is_hurwitz(&a.sub(&bk).unwrap()).unwrap());

        let (an, pn, qn) = (to_na(&a), to_na(&sol.p), to_na(&q));
        let pb = &pn * DVector::from_column_slice(&b[..n]);
        let res = an.transpose() * &pn + &pn * &an - &pb * pb.transpose() / r + &qn;
        let size = qn.norm() + 2.0 * an.norm() * pn.norm() + pb.norm_squared() / r;
        prop_assert!(res.norm() <= 1e-8 * size.max(1.0), "relative residual {}", res.norm() / size);

        // the sign-iteration oracle loses accuracy as P becomes ill-conditioned
        let eig = pn.clone().symmetric_eigenvalues();
        if eig.max() <= 1e4 * eig.min() {
            let oracle = hamiltonian_care(&an, &DVector::from_column_slice(&b[..n]), &qn, r);
            let rel = (&pn - &oracle).norm() / oracle.norm().max(1.0);
            prop_assert!(rel <= 1e-6, "relative gap to oracle {}", rel);
        }
    }

    #[test]
    fn jacobi_eigenvalues_match_oracle(
        n in 1usize..=4,
        l in prop::collection::vec(-2.0f64..2.0, 16),
    ) {
        let m = from_entries(n, &l);
        let s = m.add(&m.transpose()).unwrap();
        let mut ours = symmetric_eigenvalues(&s).unwrap();
        ours.sort_by(f64::total_cmp);
        let mut theirs: Vec<f64> = to_na(&s).symmetric_eigenvalues().iter().copied().collect();
        theirs.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(&theirs) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn euler_exact_for_constant_rates(
        x in prop::collection::vec(-10.0f64..10.0, 1..5),
        rate in -5.0f64..5.0,
        dt in 1e-4f64..0.5,
    ) {
        let n = x.len();
        let next = euler_step(|_| vec![rate; n], &x, dt).unwrap();
        for (a, b) in next.iter().zip(&x) {
            prop_assert_eq!(*a, b + dt * rate);
        }
    }
}
