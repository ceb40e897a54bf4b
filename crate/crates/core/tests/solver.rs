mod common;

use arma_wls::socp::{check_feasibility, solve, SocpProblem, SolveStatus};
use common::{brute_force, gaussian_matrix, gaussian_vector, random_instance, LsInstance};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problem(inst: &LsInstance) -> SocpProblem {
    SocpProblem::from_parts(&inst.q_hat, &inst.q_vec, &inst.g, inst.r.clone())
}

#[test]
fn matches_active_set_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..60 {
        let inst = random_instance(&mut rng, 6, 8);
        let (_, want) = brute_force(&inst).expect("instance is feasible by construction");
        let sol = solve(&problem(&inst), 1e-9, 100).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "case {case}");
        let scale = want.max(1e-6);
        assert!(
            (sol.objective - want).abs() <= 1e-6 * scale,
            "case {case}: got {} want {want}",
            sol.objective
        );
        let feas = check_feasibility(&sol.x, &problem(&inst), 1e-8).unwrap();
        assert!(feas.feasible, "case {case}: {feas:?}");
    }
}

#[test]
fn recovers_planted_active_set() {
    // Plant h* with three binding rows and positive multipliers μ:
    // Q̂ᵀ(Q̂h* - q̂) + G_Aᵀμ = 0  ⇒  q̂ = Q̂h* + Q̂⁻ᵀG_Aᵀμ.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let n = 5;
        let q_hat = gaussian_matrix(&mut rng, n, n) + DMatrix::identity(n, n) * 3.0;
        let h_star = gaussian_vector(&mut rng, n);
        let g = gaussian_matrix(&mut rng, 7, n);
        let mu = DVector::from_fn(3, |_, _| rng.random_range(0.5..2.0));
        let g_active = g.rows(0, 3).into_owned();
        let shift = q_hat.transpose().lu().solve(&g_active.tr_mul(&mu)).unwrap();
        let q_vec = &q_hat * &h_star + shift;
        let mut r = &g * &h_star;
        for i in 3..7 {
            r[i] += rng.random_range(0.1..1.0);
        }
        let sol = solve(&SocpProblem::from_parts(&q_hat, &q_vec, &g, r), 1e-9, 100).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        for (a, b) in sol.h().iter().zip(h_star.iter()) {
            assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn zero_is_always_feasible_for_positive_rhs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=10);
        let q_hat = gaussian_matrix(&mut rng, n, n) + DMatrix::identity(n, n) * 2.0;
        let p = SocpProblem::from_parts(
            &q_hat,
            &gaussian_vector(&mut rng, n),
            &gaussian_matrix(&mut rng, m, n),
            DVector::from_element(m, 1.0 - 1e-5),
        );
        let mut x0 = DVector::zeros(n + 1);
        x0[0] = p.b_vec.norm();
        assert!(check_feasibility(&x0, &p, 0.0).unwrap().feasible);
        assert_ne!(solve(&p, 1e-9, 100).unwrap().status, SolveStatus::Infeasible);
    }
}

#[test]
fn bitwise_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inst = random_instance(&mut rng, 8, 12);
    let a = solve(&problem(&inst), 1e-9, 100).unwrap();
    let b = solve(&problem(&inst), 1e-9, 100).unwrap();
    assert_eq!(a.x.as_slice(), b.x.as_slice());
    assert_eq!(a.status, b.status);
}

#[test]
fn contradictory_rows_are_infeasible() {
    // h_1 + h_2 ≤ -1 and -(h_1 + h_2) ≤ -1
    let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, -1.0]);
    let p = SocpProblem::from_parts(
        &DMatrix::identity(2, 2),
        &DVector::from_vec(vec![1.0, 1.0]),
        &g,
        DVector::from_vec(vec![-1.0, -1.0]),
    );
    assert_eq!(solve(&p, 1e-9, 100).unwrap().status, SolveStatus::Infeasible);
}
