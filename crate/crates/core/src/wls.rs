//! Per-iteration weighted quadratic model of the design error.
//!
//! With `h = [β; α]` and the regressor `d(λ) = [c_P(λ); -h_d(λ) c_Q(λ)]`,
//! the reweighted error is
//!
//! ```text
//!   J_k(h) = Σ_j W_k(λ_j) (d(λ_j)ᵀh - h_d(λ_j))²  =  hᵀQ_k h - 2 q_kᵀh + p_k
//! ```
//!
//! where `W_k = W / (1 + c_Qᵀα_{k-1})²`. The cone program needs a factor
//! `Q̂` with `Q̂ᵀQ̂ = Q` and `q̂` with `Q̂ᵀq̂ = q`; both come from the SVD of
//! the weighted regressor matrix `R` (`Q = RᵀR`), which yields the same
//! symmetric square root as an eigendecomposition of `Q` without squaring
//! its condition number.

use nalgebra::{DMatrix, DVector};

use crate::chebyshev::{shifted_values, ArmaChebFilter};
use crate::error::{DesignError, Result};
use crate::grid::DesignGrid;

/// Default eigenvalue floor of `Q_k`, relative to `trace(Q_k) / dim`.
pub const DEFAULT_EIG_FLOOR: f64 = 1e-10;

/// `d(λ) = [c_P(λ); -h_d c_Q(λ)]`, length `p + q + 1`.
pub fn regressor(lambda: f64, hd_value: f64, p: usize, q: usize) -> Vec<f64> {
    let t = shifted_values(lambda, p.max(q));
    let mut d = Vec::with_capacity(p + q + 1);
    d.extend_from_slice(&t[..=p]);
    d.extend(t[1..=q].iter().map(|v| -hd_value * v));
    d
}

/// Reweighted grid weights `W_k(λ_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationWeights {
    pub values: Vec<f64>,
}

/// `W_k = W / (1 + c_Qᵀα_prev)²`. The previous iterate must keep every
/// denominator at or above `epsilon` (up to rounding).
pub fn update_weights(
    base_w: &[f64],
    alpha_prev: &[f64],
    grid: &DesignGrid,
    epsilon: f64,
) -> Result<IterationWeights> {
    if base_w.len() != grid.len() {
        return Err(DesignError::DimensionMismatch {
            expected: grid.len(),
            actual: base_w.len(),
        });
    }
    let prev = ArmaChebFilter::new(vec![0.0], alpha_prev.to_vec(), epsilon);
    // The solver lands on the constraint boundary only up to rounding.
    let threshold = epsilon * (1.0 - 1e-9);
    let mut values = Vec::with_capacity(grid.len());
    for (&w, &lambda) in base_w.iter().zip(&grid.lambdas) {
        let den = prev.denominator(lambda);
        if !(den >= threshold) {
            return Err(DesignError::InfeasiblePreviousIterate { lambda, value: den });
        }
        values.push(if w == 0.0 { 0.0 } else { w / (den * den) });
    }
    Ok(IterationWeights { values })
}

/// `Q_k`, `q_k`, `p_k` and the spectral factor `(Q̂_k, q̂_k)`.
#[derive(Debug, Clone)]
pub struct QuadraticData {
    pub q_mat: DMatrix<f64>,
    pub q_vec: DVector<f64>,
    pub p_scalar: f64,
    pub q_hat_mat: DMatrix<f64>,
    pub q_hat_vec: DVector<f64>,
    /// Absolute eigenvalue floor applied to `Q_k`.
    pub eig_floor: f64,
    /// Eigenvalues of `Q_k` (ascending) before flooring.
    pub eigenvalues: Vec<f64>,
}

impl QuadraticData {
    pub fn dim(&self) -> usize {
        self.q_vec.len()
    }

    /// `hᵀQh - 2qᵀh + p`.
    pub fn objective(&self, h: &[f64]) -> f64 {
        let h = DVector::from_column_slice(h);
        (h.transpose() * &self.q_mat * &h)[(0, 0)] - 2.0 * self.q_vec.dot(&h) + self.p_scalar
    }

    /// `Q̂ᵀQ̂`, i.e. `Q_k` with its spectrum floored.
    pub fn floored(&self) -> DMatrix<f64> {
        self.q_hat_mat.transpose() * &self.q_hat_mat
    }

    /// Number of eigenvalues that were raised to the floor.
    pub fn floored_count(&self) -> usize {
        self.eigenvalues.iter().filter(|&&e| e < self.eig_floor).count()
    }
}

/// Builds the quadratic model with the default eigenvalue floor.
pub fn assemble_quadratic(
    grid: &DesignGrid,
    weights: &IterationWeights,
    p: usize,
    q: usize,
) -> Result<QuadraticData> {
    assemble_quadratic_with_floor(grid, weights, p, q, DEFAULT_EIG_FLOOR)
}

pub fn assemble_quadratic_with_floor(
    grid: &DesignGrid,
    weights: &IterationWeights,
    p: usize,
    q: usize,
    floor_rel: f64,
) -> Result<QuadraticData> {
    let n = p + q + 1;
    if weights.values.len() != grid.len() {
        return Err(DesignError::DimensionMismatch {
            expected: grid.len(),
            actual: weights.values.len(),
        });
    }
    if let Some(bad) = weights.values.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(DesignError::InvalidSpec(format!("iteration weight {bad} is not a finite nonnegative value")));
    }

    let active: Vec<usize> = (0..grid.len()).filter(|&i| weights.values[i] > 0.0).collect();
    // Zero rows pad R up to n rows so the SVD returns a full n×n basis.
    let rows = active.len().max(n);
    let mut r_mat = DMatrix::<f64>::zeros(rows, n);
    let mut r_rhs = DVector::<f64>::zeros(rows);
    let mut q_mat = DMatrix::<f64>::zeros(n, n);
    let mut q_vec = DVector::<f64>::zeros(n);
    let mut p_scalar = 0.0;
    for (row, &i) in active.iter().enumerate() {
        let w = weights.values[i];
        let hd = grid.hd[i];
        let d = DVector::from_vec(regressor(grid.lambdas[i], hd, p, q));
        q_mat.ger(w, &d, &d, 1.0);
        q_vec.axpy(w * hd, &d, 1.0);
        p_scalar += w * hd * hd;
        let sw = w.sqrt();
        r_mat.row_mut(row).copy_from(&(d.transpose() * sw));
        r_rhs[row] = sw * hd;
    }
    // exact symmetry
    q_mat = (&q_mat + q_mat.transpose()) * 0.5;

    let trace = q_mat.trace();
    if !(trace > 0.0) {
        return Err(DesignError::RankDeficient { below_floor: n, dim: n });
    }
    let eig_floor = floor_rel * trace / n as f64;

    let svd = r_mat.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma = svd.singular_values;

    let mut eigenvalues: Vec<f64> = sigma.iter().map(|s| s * s).collect();
    let below = eigenvalues.iter().filter(|&&e| e < eig_floor).count();
    if below > n - 1 {
        return Err(DesignError::RankDeficient { below_floor: below, dim: n });
    }
    let floored_sigma: DVector<f64> = sigma.map(|s| (s * s).max(eig_floor).sqrt());

    // Q̂ = V diag(σ_f) Vᵀ
    let v = v_t.transpose();
    let mut v_scaled = v.clone();
    for (j, mut col) in v_scaled.column_iter_mut().enumerate() {
        col *= floored_sigma[j];
    }
    let mut q_hat_mat = &v_scaled * &v_t;
    q_hat_mat = (&q_hat_mat + q_hat_mat.transpose()) * 0.5;

    // Q̂ᵀq̂ = q = Rᵀr  ⇒  q̂ = V diag(σ/σ_f) Uᵀ r
    let mut coeff = u.transpose() * &r_rhs;
    for j in 0..n {
        coeff[j] *= sigma[j] / floored_sigma[j];
    }
    let q_hat_vec = &v * coeff;

    eigenvalues.sort_by(|a, b| a.total_cmp(b));
    Ok(QuadraticData {
        q_mat,
        q_vec,
        p_scalar,
        q_hat_mat,
        q_hat_vec,
        eig_floor,
        eigenvalues,
    })
}

/// Weighted squared error of the rational response on the grid, using the
/// base weights `grid.w`.
pub fn true_objective(filter: &ArmaChebFilter, grid: &DesignGrid) -> Result<f64> {
    let mut sum = 0.0;
    for i in 0..grid.len() {
        let h = filter.freq_response(grid.lambdas[i])?;
        let e = h - grid.hd[i];
        sum += grid.w[i] * e * e;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Band, DesignSpec};
    use approx::assert_relative_eq;

    fn tiny_grid(lambdas: &[f64], hd: &[f64], w: &[f64]) -> DesignGrid {
        DesignGrid {
            lambdas: lambdas.to_vec(),
            hd: hd.to_vec(),
            w: w.to_vec(),
            bands: hd
                .iter()
                .map(|&h| if h == 1.0 { Band::Passband } else { Band::Stopband })
                .collect(),
        }
    }

    #[test]
    fn regressor_examples() {
        assert_eq!(regressor(0.0, 1.0, 1, 1), vec![1.0, 1.0, -1.0]);
        assert_eq!(regressor(2.0, 0.0, 1, 2), vec![1.0, -1.0, -0.0, -0.0]);
        assert_eq!(regressor(1.0, 1.0, 2, 1), vec![1.0, 0.0, -1.0, -0.0]);
    }

    #[test]
    fn weights_unchanged_for_zero_alpha() {
        let grid = build_grid(&DesignSpec::default()).unwrap();
        let w = update_weights(&grid.w, &[0.0; 11], &grid, 1e-5).unwrap();
        assert_eq!(w.values, grid.w);
    }

    #[test]
    fn weights_divide_by_squared_denominator() {
        let grid = tiny_grid(&[0.0, 0.6], &[1.0, 0.0], &[3.0, 0.0]);
        let w = update_weights(&grid.w, &[0.5], &grid, 1e-5).unwrap();
        assert_relative_eq!(w.values[0], 3.0 / 2.25);
        // transition-style zero weight stays zero
        assert_eq!(w.values[1], 0.0);
    }

    #[test]
    fn infeasible_previous_iterate() {
        let grid = tiny_grid(&[0.0, 2.0], &[1.0, 0.0], &[1.0, 1.0]);
        // 1 + α T_1(1-λ) at λ = 2 is 1 - α
        let err = update_weights(&grid.w, &[1.0], &grid, 1e-5).unwrap_err();
        assert!(matches!(err, DesignError::InfeasiblePreviousIterate { lambda, .. } if lambda == 2.0));
    }

    #[test]
    fn single_point_quadratic() {
        let grid = tiny_grid(&[0.0], &[1.0], &[1.0]);
        let weights = IterationWeights { values: vec![1.0] };
        let quad = assemble_quadratic(&grid, &weights, 0, 0).unwrap();
        assert_eq!(quad.q_mat[(0, 0)], 1.0);
        assert_eq!(quad.q_vec[0], 1.0);
        assert_eq!(quad.p_scalar, 1.0);
        assert_relative_eq!(quad.q_hat_mat[(0, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(quad.q_hat_vec[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn two_point_quadratic() {
        let grid = tiny_grid(&[0.0, 2.0], &[1.0, 0.0], &[1.0, 1.0]);
        let weights = IterationWeights { values: vec![1.0, 1.0] };
        let quad = assemble_quadratic(&grid, &weights, 0, 0).unwrap();
        assert_eq!(quad.q_mat[(0, 0)], 2.0);
        assert_eq!(quad.q_vec[0], 1.0);
        assert_eq!(quad.p_scalar, 1.0);
    }

    #[test]
    fn all_zero_weights_are_rank_deficient() {
        let grid = tiny_grid(&[0.0, 2.0], &[1.0, 0.0], &[0.0, 0.0]);
        let weights = IterationWeights { values: vec![0.0, 0.0] };
        assert!(matches!(
            assemble_quadratic(&grid, &weights, 1, 1),
            Err(DesignError::RankDeficient { .. })
        ));
    }

    #[test]
    fn factor_identities_on_benchmark_grid() {
        let grid = build_grid(&DesignSpec::default()).unwrap();
        let weights = IterationWeights { values: grid.w.clone() };
        let quad = assemble_quadratic(&grid, &weights, 11, 11).unwrap();
        let qn = quad.q_mat.norm();
        assert!((quad.floored() - &quad.q_mat).norm() / qn <= 1e-9);
        let back = quad.q_hat_mat.transpose() * &quad.q_hat_vec;
        assert!((back - &quad.q_vec).norm() / quad.q_vec.norm() <= 1e-8);
        assert!((&quad.q_mat - quad.q_mat.transpose()).amax() <= 1e-12 * quad.q_mat.amax());
    }

    #[test]
    fn modified_error_is_first_quadratic() {
        // With α_prev = 0 the model is the linearised (modified) error.
        let spec = DesignSpec { order_p: 3, order_q: 2, grid_l: 40, ..DesignSpec::default() };
        let grid = build_grid(&spec).unwrap();
        let weights = update_weights(&grid.w, &[0.0; 2], &grid, spec.epsilon).unwrap();
        let quad = assemble_quadratic(&grid, &weights, 3, 2).unwrap();
        let h = [0.3, -0.2, 0.1, 0.05, 0.2, -0.1];
        let direct: f64 = (0..grid.len())
            .map(|i| {
                let f = ArmaChebFilter::new(h[..4].to_vec(), h[4..].to_vec(), 1e-5);
                let e = f.numerator(grid.lambdas[i]) - grid.hd[i] * f.denominator(grid.lambdas[i]);
                grid.w[i] * e * e
            })
            .sum();
        assert_relative_eq!(quad.objective(&h), direct, max_relative = 1e-12);
    }

    #[test]
    fn true_objective_examples() {
        let grid = build_grid(&DesignSpec::default()).unwrap();
        let zero = ArmaChebFilter::new(vec![0.0; 2], vec![0.0], 1e-5);
        assert_eq!(true_objective(&zero, &grid).unwrap(), 126.0);

        // h ≡ h_d on all weighted points when only the passband is weighted
        let pass_only = DesignGrid {
            w: grid.bands.iter().map(|b| if *b == Band::Passband { 1.0 } else { 0.0 }).collect(),
            ..grid.clone()
        };
        let unity = ArmaChebFilter::all_pass(1, 1, 1e-5);
        assert_eq!(true_objective(&unity, &pass_only).unwrap(), 0.0);
    }
}
