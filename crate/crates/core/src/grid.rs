//! Frequency grid, ideal lowpass response and design metrics.

use serde::{Deserialize, Serialize};

use crate::chebyshev::ArmaChebFilter;
use crate::error::{DesignError, Result};

/// Lower bound for every dB figure written out.
pub const DB_FLOOR: f64 = -300.0;

/// Lowpass design problem plus the outer-loop hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub lambda_p: f64,
    pub lambda_s: f64,
    pub order_p: usize,
    pub order_q: usize,
    /// The grid has `grid_l + 1` points.
    pub grid_l: usize,
    pub epsilon: f64,
    /// Relaxation constant.
    pub gamma: f64,
    /// Termination tolerance on `‖x_k - x_{k-1}‖_∞`.
    pub delta_t: f64,
    pub k_max: usize,
    pub passband_weight: f64,
    pub stopband_weight: f64,
}

impl Default for DesignSpec {
    /// The order-(11, 11) lowpass benchmark.
    fn default() -> Self {
        Self {
            lambda_p: 0.5,
            lambda_s: 0.7,
            order_p: 11,
            order_q: 11,
            grid_l: 500,
            epsilon: 1e-5,
            gamma: 0.25,
            delta_t: 2e-8,
            k_max: 25,
            passband_weight: 1.0,
            stopband_weight: 1.0,
        }
    }
}

impl DesignSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(DesignError::InvalidSpec(msg));
        if !(0.0 < self.lambda_p && self.lambda_p < self.lambda_s && self.lambda_s < 2.0) {
            return fail(format!(
                "need 0 < lambda_p < lambda_s < 2, got lambda_p = {}, lambda_s = {}",
                self.lambda_p, self.lambda_s
            ));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail(format!("gamma = {} outside [0, 1]", self.gamma));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail(format!("epsilon = {} outside (0, 1)", self.epsilon));
        }
        if !(self.delta_t > 0.0) {
            return fail(format!("delta_t = {} must be positive", self.delta_t));
        }
        if self.k_max == 0 {
            return fail("k_max must be at least 1".into());
        }
        if self.grid_l < self.order_p + self.order_q + 2 {
            return fail(format!(
                "grid_l = {} must be at least P + Q + 2 = {}",
                self.grid_l,
                self.order_p + self.order_q + 2
            ));
        }
        let weights_ok = |w: f64| w.is_finite() && w >= 0.0;
        if !weights_ok(self.passband_weight) || !weights_ok(self.stopband_weight) {
            return fail("band weights must be finite and nonnegative".into());
        }
        if self.passband_weight == 0.0 && self.stopband_weight == 0.0 {
            return fail("at least one band weight must be positive".into());
        }
        Ok(())
    }

    /// Number of design variables `P + Q + 1`.
    pub fn n_coeffs(&self) -> usize {
        self.order_p + self.order_q + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Passband,
    Transition,
    Stopband,
}

/// Uniform grid `λ_i = 2i / L` with sampled ideal response and weight.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignGrid {
    pub lambdas: Vec<f64>,
    pub hd: Vec<f64>,
    pub w: Vec<f64>,
    pub bands: Vec<Band>,
}

impl DesignGrid {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn count(&self, band: Band) -> usize {
        self.bands.iter().filter(|&&b| b == band).count()
    }

    /// Grid restricted to the given indices, mostly useful in tests.
    pub fn subset(&self, idx: &[usize]) -> DesignGrid {
        DesignGrid {
            lambdas: idx.iter().map(|&i| self.lambdas[i]).collect(),
            hd: idx.iter().map(|&i| self.hd[i]).collect(),
            w: idx.iter().map(|&i| self.w[i]).collect(),
            bands: idx.iter().map(|&i| self.bands[i]).collect(),
        }
    }
}

/// Builds the grid. Band edges are inclusive: `λ ≤ λ_p` is passband and
/// `λ ≥ λ_s` is stopband.
pub fn build_grid(spec: &DesignSpec) -> Result<DesignGrid> {
    spec.validate()?;
    let l = spec.grid_l;
    let mut grid = DesignGrid {
        lambdas: Vec::with_capacity(l + 1),
        hd: Vec::with_capacity(l + 1),
        w: Vec::with_capacity(l + 1),
        bands: Vec::with_capacity(l + 1),
    };
    for i in 0..=l {
        // 2i/L rather than i*(2/L) so the edges land exactly on 0.5, 0.7, ...
        let lambda = 2.0 * i as f64 / l as f64;
        let (band, hd, w) = if lambda <= spec.lambda_p {
            (Band::Passband, 1.0, spec.passband_weight)
        } else if lambda >= spec.lambda_s {
            (Band::Stopband, 0.0, spec.stopband_weight)
        } else {
            (Band::Transition, 0.0, 0.0)
        };
        grid.lambdas.push(lambda);
        grid.hd.push(hd);
        grid.w.push(w);
        grid.bands.push(band);
    }
    Ok(grid)
}

/// Figures of merit of a designed response on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignMetrics {
    /// Worst passband deviation from 0 dB.
    pub delta_p_db: f64,
    /// Minimum stopband attenuation.
    pub delta_s_db: f64,
    /// `10·log10` of the weighted squared error.
    pub sse_db: f64,
    /// Weighted squared error, linear scale.
    pub true_objective: f64,
}

/// `20·log10|x|` floored at [`DB_FLOOR`].
pub fn magnitude_db(x: f64) -> f64 {
    (20.0 * x.abs().log10()).max(DB_FLOOR)
}

/// `10·log10(x)` floored at [`DB_FLOOR`].
pub fn power_db(x: f64) -> f64 {
    (10.0 * x.log10()).max(DB_FLOOR)
}

pub fn compute_metrics(filter: &ArmaChebFilter, grid: &DesignGrid) -> Result<DesignMetrics> {
    let mut ripple: f64 = 0.0;
    let mut stop_gain = f64::NEG_INFINITY;
    let mut sse = 0.0;
    for i in 0..grid.len() {
        let h = filter.freq_response(grid.lambdas[i])?;
        let db = magnitude_db(h);
        match grid.bands[i] {
            Band::Passband => ripple = ripple.max(db.abs()),
            Band::Stopband => stop_gain = stop_gain.max(db),
            Band::Transition => {}
        }
        let e = h - grid.hd[i];
        sse += grid.w[i] * e * e;
    }
    let delta_s_db = if stop_gain.is_finite() { -stop_gain } else { -DB_FLOOR };
    Ok(DesignMetrics {
        delta_p_db: ripple,
        delta_s_db,
        sse_db: power_db(sse),
        true_objective: sse,
    })
}
