use std::cell::Cell;

use arma_wls::designer::{design_with_solver, grid_margin, DesignOptions};
use arma_wls::grid::build_grid;
use arma_wls::socp::{ConeSolver, SocpProblem, SocpSolution};
use arma_wls::{design_modified_error, design_wls, ArmaChebFilter, DesignError, DesignSpec, InteriorPointSolver};

fn small_spec(order: usize, gamma: f64, k_max: usize) -> DesignSpec {
    DesignSpec {
        order_p: order,
        order_q: order,
        grid_l: 100,
        gamma,
        k_max,
        ..DesignSpec::default()
    }
}

fn filter_of(x: &[f64], spec: &DesignSpec) -> ArmaChebFilter {
    let p = spec.order_p;
    ArmaChebFilter::new(x[1..p + 2].to_vec(), x[p + 2..].to_vec(), spec.epsilon)
}

#[test]
fn converged_design_is_a_fixed_point() {
    let spec = small_spec(4, 0.5, 400);
    let res = design_wls(&spec, None).unwrap();
    assert!(res.converged);
    let last = res.trace.records.last().unwrap();
    let again = design_wls(&DesignSpec { k_max: 1, ..spec.clone() }, Some(&last.x)).unwrap();
    let j_next = again.trace.records[0].objective;
    assert!((j_next - last.objective).abs() <= 1e-6 * last.objective);
}

#[test]
fn converged_design_ends_at_the_trace_minimum() {
    for gamma in [0.25, 0.5] {
        let res = design_wls(&small_spec(5, gamma, 400), None).unwrap();
        assert!(res.converged);
        let best = res.trace.best().unwrap().objective;
        assert!(res.metrics.true_objective <= best * (1.0 + 1e-9), "gamma {gamma}");
    }
}

#[test]
fn every_iterate_satisfies_the_grid_constraints() {
    let spec = small_spec(5, 0.25, 60);
    let grid = build_grid(&spec).unwrap();
    let res = design_wls(&spec, None).unwrap();
    for r in &res.trace.records {
        let margin = grid_margin(&filter_of(&r.x, &spec), &grid);
        assert!(margin >= spec.epsilon * (1.0 - 1e-9), "k = {}: margin {margin}", r.k);
    }
}

#[test]
fn improves_on_the_modified_error_design() {
    for order in [3, 4, 5] {
        let spec = small_spec(order, 0.5, 400);
        let wls = design_wls(&spec, None).unwrap();
        let me = design_modified_error(&spec).unwrap();
        assert!(wls.metrics.true_objective <= me.metrics.true_objective + 1e-12, "order {order}");
    }
}

#[test]
fn one_undamped_step_is_the_modified_error_design() {
    let spec = small_spec(4, 1.0, 1);
    let a = design_wls(&spec, None).unwrap();
    let b = design_modified_error(&spec).unwrap();
    assert_eq!(a.filter, b.filter);
    assert_eq!(a.metrics, b.metrics);
}

#[test]
fn exactly_representable_target() {
    // Only the passband is weighted, where h_d ≡ 1: β = [1] is exact.
    let spec = DesignSpec {
        order_p: 0,
        order_q: 0,
        grid_l: 20,
        gamma: 1.0,
        k_max: 5,
        stopband_weight: 0.0,
        ..DesignSpec::default()
    };
    let res = design_wls(&spec, None).unwrap();
    let first = &res.trace.records[0];
    assert!(first.objective <= 1e-20);
    assert!((first.x[1] - 1.0).abs() <= 1e-12);
    assert!(res.converged);
    let me = design_modified_error(&spec).unwrap();
    assert_eq!(me.filter, res.filter);
}

#[test]
fn nonconvergence_returns_the_best_iterate() {
    // Undamped reweighting oscillates on this low-order spec.
    let spec = small_spec(2, 1.0, 12);
    let res = design_wls(&spec, None).unwrap();
    assert!(!res.converged);
    let best = res.trace.best().unwrap();
    assert_eq!(res.filter, filter_of(&best.x, &spec));
    assert_eq!(res.metrics.true_objective, best.objective);
}

#[test]
fn repeated_runs_are_identical() {
    let spec = small_spec(5, 0.25, 30);
    let a = design_wls(&spec, None).unwrap();
    let b = design_wls(&spec, None).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.filter, b.filter);
}

/// Delegates to the built-in solver, then reports failure from the third call.
struct FailsOnThirdCall {
    calls: Cell<usize>,
}

impl ConeSolver for FailsOnThirdCall {
    fn solve(&self, problem: &SocpProblem) -> arma_wls::Result<SocpSolution> {
        self.calls.set(self.calls.get() + 1);
        let mut sol = InteriorPointSolver::default().solve(problem)?;
        if self.calls.get() == 3 {
            sol.status = arma_wls::SolveStatus::Infeasible;
        }
        Ok(sol)
    }
}

#[test]
fn solver_failure_carries_the_partial_trace() {
    let spec = small_spec(3, 0.25, 10);
    let solver = FailsOnThirdCall { calls: Cell::new(0) };
    let err = design_with_solver(&spec, None, &DesignOptions::default(), &solver).unwrap_err();
    match err {
        DesignError::SolverFailure { iteration, trace, .. } => {
            assert_eq!(iteration, 3);
            assert_eq!(trace.iterations(), 2);
        }
        other => panic!("unexpected error {other:?}"),
    }
}
