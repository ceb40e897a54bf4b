//! Outer reweighting loop with relaxation.
//!
//! Each iteration reweights the grid with the previous denominator, solves
//! the cone program for `Φ(x_{k-1})`, and blends
//! `x_k = γ Φ(x_{k-1}) + (1 - γ) x_{k-1}`. The loop stops once
//! `‖x_k - x_{k-1}‖_∞ ≤ δ_t` or after `k_max` iterations.

use log::{debug, info};
use serde::Serialize;

use crate::chebyshev::ArmaChebFilter;
use crate::error::{DesignError, Result};
use crate::grid::{build_grid, compute_metrics, DesignGrid, DesignMetrics, DesignSpec};
use crate::socp::{assemble_socp, ConeSolver, InteriorPointSolver, SolveStatus};
use crate::wls::{assemble_quadratic_with_floor, true_objective, update_weights, DEFAULT_EIG_FLOOR};

/// `γ·phi + (1 - γ)·prev`, elementwise.
pub fn relax_step(phi_x: &[f64], x_prev: &[f64], gamma: f64) -> Vec<f64> {
    assert_eq!(phi_x.len(), x_prev.len(), "relaxation needs equal lengths");
    phi_x
        .iter()
        .zip(x_prev)
        .map(|(p, x)| gamma * p + (1.0 - gamma) * x)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `[η; β; α]` after relaxation.
    pub x: Vec<f64>,
    /// True (rational) weighted squared error of `x`.
    pub objective: f64,
    pub step_inf_norm: f64,
    pub status: SolveStatus,
    /// η of the cone solution before relaxation.
    pub eta: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Record with the smallest true objective.
    pub fn best(&self) -> Option<&IterationRecord> {
        self.records.iter().min_by(|a, b| a.objective.total_cmp(&b.objective))
    }
}

#[derive(Debug, Clone)]
pub struct DesignResult {
    pub filter: ArmaChebFilter,
    pub metrics: DesignMetrics,
    pub trace: IterationTrace,
    pub converged: bool,
}

/// Numerical knobs that are not part of the filter specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignOptions {
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    /// Eigenvalue floor of `Q_k` relative to `trace / dim`.
    pub eig_floor: f64,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            solver_tol: 1e-9,
            solver_max_iter: 100,
            eig_floor: DEFAULT_EIG_FLOOR,
        }
    }
}

fn split(x: &[f64], p: usize, epsilon: f64) -> ArmaChebFilter {
    ArmaChebFilter::new(x[1..p + 2].to_vec(), x[p + 2..].to_vec(), epsilon)
}

/// Runs the reweighted design from `x0 = [η; β; α]` (all zeros when `None`).
pub fn design_wls(spec: &DesignSpec, x0: Option<&[f64]>) -> Result<DesignResult> {
    design_wls_with(spec, x0, &DesignOptions::default())
}

pub fn design_wls_with(spec: &DesignSpec, x0: Option<&[f64]>, options: &DesignOptions) -> Result<DesignResult> {
    let solver = InteriorPointSolver {
        tol: options.solver_tol,
        max_iter: options.solver_max_iter,
        trace: false,
    };
    design_with_solver(spec, x0, options, &solver)
}

/// Same as [`design_wls_with`] but with a caller-supplied cone solver.
pub fn design_with_solver<S: ConeSolver>(
    spec: &DesignSpec,
    x0: Option<&[f64]>,
    options: &DesignOptions,
    solver: &S,
) -> Result<DesignResult> {
    let grid = build_grid(spec)?;
    let (p, q) = (spec.order_p, spec.order_q);
    let n = spec.n_coeffs() + 1;
    let mut x_prev = match x0 {
        Some(x) if x.len() != n => {
            return Err(DesignError::DimensionMismatch {
                expected: n,
                actual: x.len(),
            })
        }
        Some(x) => x.to_vec(),
        None => vec![0.0; n],
    };

    let mut trace = IterationTrace::default();
    for k in 1..=spec.k_max {
        let alpha_prev = &x_prev[p + 2..];
        let weights = update_weights(&grid.w, alpha_prev, &grid, spec.epsilon)?;
        let quad = assemble_quadratic_with_floor(&grid, &weights, p, q, options.eig_floor)?;
        let problem = assemble_socp(&quad, &grid, spec);
        let sol = solver.solve(&problem)?;
        if sol.status == SolveStatus::Infeasible {
            return Err(DesignError::SolverFailure {
                iteration: k,
                status: sol.status,
                trace: Box::new(trace),
            });
        }

        let x = relax_step(sol.x.as_slice(), &x_prev, spec.gamma);
        let step = x
            .iter()
            .zip(&x_prev)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
        let objective = true_objective(&split(&x, p, spec.epsilon), &grid)?;
        debug!(
            "iteration {k}: J = {objective:.6e}, step = {step:.3e}, eta = {:.3e}, status = {}",
            sol.objective,
            sol.status.as_str()
        );
        trace.records.push(IterationRecord {
            k,
            x: x.clone(),
            objective,
            step_inf_norm: step,
            status: sol.status,
            eta: sol.objective,
        });
        x_prev = x;
        // With γ = 0 the iterate cannot move, so a zero step proves nothing.
        if step <= spec.delta_t && spec.gamma > 0.0 {
            trace.converged = true;
            break;
        }
    }

    let converged = trace.converged;
    let chosen = if converged {
        x_prev
    } else {
        trace.best().map(|r| r.x.clone()).unwrap_or(x_prev)
    };
    let filter = split(&chosen, p, spec.epsilon);
    let metrics = compute_metrics(&filter, &grid)?;
    info!(
        "design finished: converged = {converged}, iterations = {}, SSE = {:.4} dB",
        trace.iterations(),
        metrics.sse_db
    );
    Ok(DesignResult {
        filter,
        metrics,
        trace,
        converged,
    })
}

/// One-shot minimiser of the linearised (modified) error: no reweighting
/// and no relaxation, stability rows included.
pub fn design_modified_error(spec: &DesignSpec) -> Result<DesignResult> {
    design_modified_error_with(spec, &DesignOptions::default())
}

pub fn design_modified_error_with(spec: &DesignSpec, options: &DesignOptions) -> Result<DesignResult> {
    let one_shot = DesignSpec {
        gamma: 1.0,
        k_max: 1,
        ..spec.clone()
    };
    let mut result = design_wls_with(&one_shot, None, options)?;
    // A single solve has nothing to converge; optimality is what counts.
    result.converged = result.trace.records.iter().all(|r| r.status == SolveStatus::Optimal);
    result.trace.converged = result.converged;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub stable: bool,
    /// Smallest `1 + c_Q(λ)ᵀα` on the refined grid.
    pub margin: f64,
    pub at_lambda: f64,
}

/// Checks the stability margin on a grid `refinement` times denser than a
/// design grid with `grid_l` intervals.
pub fn verify_stability(filter: &ArmaChebFilter, grid_l: usize, refinement: usize) -> StabilityReport {
    let refinement = refinement.max(1);
    let points = grid_l.max(1) * refinement;
    let mut margin = f64::INFINITY;
    let mut at_lambda = 0.0;
    for i in 0..=points {
        let lambda = 2.0 * i as f64 / points as f64;
        let den = filter.denominator(lambda);
        if den < margin {
            margin = den;
            at_lambda = lambda;
        }
    }
    StabilityReport {
        stable: margin >= filter.epsilon * (1.0 - 1e-6),
        margin,
        at_lambda,
    }
}

/// Minimum of the denominator over the design grid, used to check trace
/// iterates.
pub fn grid_margin(filter: &ArmaChebFilter, grid: &DesignGrid) -> f64 {
    grid.lambdas
        .iter()
        .map(|&l| filter.denominator(l))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relax_examples() {
        assert_eq!(relax_step(&[1.0, 2.0], &[5.0, 6.0], 1.0), vec![1.0, 2.0]);
        assert_eq!(relax_step(&[1.0, 2.0], &[5.0, 6.0], 0.0), vec![5.0, 6.0]);
        assert_eq!(relax_step(&[4.0], &[0.0], 0.25), vec![1.0]);
    }

    #[test]
    fn stability_of_zero_alpha() {
        let f = ArmaChebFilter::all_pass(3, 3, 1e-5);
        let rep = verify_stability(&f, 500, 10);
        assert!(rep.stable);
        assert_eq!(rep.margin, 1.0);
    }

    #[test]
    fn stability_margin_at_the_boundary() {
        // 1 + α T_1(1-λ) is smallest at λ = 2 for α > 0: 1 - α.
        let eps = 1e-5;
        let f = ArmaChebFilter::new(vec![1.0], vec![1.0 - eps], eps);
        let rep = verify_stability(&f, 50, 4);
        assert_eq!(rep.at_lambda, 2.0);
        assert!((rep.margin - eps).abs() < 1e-15);
        assert!(rep.stable);
        let f = ArmaChebFilter::new(vec![1.0], vec![1.0 - 0.5 * eps], eps);
        assert!(!verify_stability(&f, 50, 4).stable);
    }

    #[test]
    fn gamma_zero_never_moves() {
        let spec = DesignSpec {
            order_p: 2,
            order_q: 2,
            grid_l: 40,
            gamma: 0.0,
            k_max: 5,
            ..DesignSpec::default()
        };
        let res = design_wls(&spec, None).unwrap();
        assert!(!res.converged);
        assert_eq!(res.trace.iterations(), 5);
        let j0 = res.trace.records[0].objective;
        assert!(res.trace.records.iter().all(|r| r.objective == j0 && r.step_inf_norm == 0.0));
    }

    #[test]
    fn rejects_wrong_initial_length() {
        let spec = DesignSpec { order_p: 2, order_q: 2, grid_l: 40, ..DesignSpec::default() };
        assert!(matches!(
            design_wls(&spec, Some(&[0.0; 3])),
            Err(DesignError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_unstable_initial_point() {
        let spec = DesignSpec { order_p: 1, order_q: 1, grid_l: 40, ..DesignSpec::default() };
        // α_1 = 2 gives 1 + 2(1-λ) = -1 at λ = 2
        let err = design_wls(&spec, Some(&[0.0, 0.0, 0.0, 2.0])).unwrap_err();
        assert!(matches!(err, DesignError::InfeasiblePreviousIterate { .. }));
    }
}
