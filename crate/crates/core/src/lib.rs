//! Weighted least-squares design of stable ARMA graph filters.
//!
//! Filters are parametrised in a shifted-Chebyshev basis on the graph
//! frequency axis `λ ∈ [0, 2]`. The design minimises the weighted squared
//! error of the rational response by reweighting with the previous
//! denominator, solving one second-order cone program per iteration under
//! linear stability constraints, and relaxing each update toward the
//! previous iterate.
//!
//! ```no_run
//! use arma_wls::{design_wls, DesignSpec};
//!
//! let spec = DesignSpec { k_max: 200, ..DesignSpec::default() };
//! let result = design_wls(&spec, None).unwrap();
//! println!("SSE = {:.2} dB", result.metrics.sse_db);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chebyshev;
#[cfg(feature = "cli")]
pub mod cli;
pub mod designer;
pub mod error;
pub mod graph;
pub mod grid;
pub mod socp;
pub mod wls;

pub use chebyshev::{basis_vectors, cheb_eval, freq_response, to_monomial, ArmaChebFilter, ArmaMonomialFilter};
pub use designer::{
    design_modified_error, design_wls, relax_step, verify_stability, DesignOptions, DesignResult, IterationTrace,
};
pub use error::{DesignError, Result};
pub use graph::{apply_filter, normalized_laplacian, Graph, SpectralDecomposition};
pub use grid::{build_grid, compute_metrics, DesignGrid, DesignMetrics, DesignSpec};
pub use socp::{assemble_socp, check_feasibility, solve, ConeSolver, InteriorPointSolver, SocpProblem, SocpSolution, SolveStatus};
pub use wls::{assemble_quadratic, regressor, true_objective, update_weights, QuadraticData};
