//! `design`, `compare` and `apply` subcommands.
//!
//! Every command reads a JSON [`RunConfig`] and writes its results into the
//! configured output directory. Exit codes: 0 success, 1 error, 2 design
//! stopped at `k_max` without meeting `delta_t`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::chebyshev::{to_monomial, ArmaChebFilter, ArmaMonomialFilter};
use crate::designer::{design_modified_error_with, design_wls_with, verify_stability, DesignOptions, DesignResult};
use crate::grid::{magnitude_db, DesignSpec};
use crate::graph::{apply_filter, Graph};
use crate::wls::DEFAULT_EIG_FLOOR;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

/// Largest orders for which the monomial form is exported.
pub const MONOMIAL_EXPORT_MAX_ORDER: usize = 8;

#[derive(Debug, Parser)]
#[command(name = "arma-wls", version, about = "Design stable ARMA graph filters by weighted least squares")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the reweighted design and write coefficients, response, trace and report.
    Design { config: PathBuf },
    /// Compare the reweighted design with the one-shot modified-error design.
    Compare { config: PathBuf },
    /// Filter a graph signal with previously designed coefficients.
    Apply {
        config: PathBuf,
        graph: PathBuf,
        signal: PathBuf,
    },
}

/// Run configuration. Missing keys fall back to the order-(11, 11) lowpass
/// benchmark; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub lambda_p: f64,
    pub lambda_s: f64,
    pub order_p: usize,
    pub order_q: usize,
    pub grid_l: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub delta_t: f64,
    pub k_max: usize,
    pub passband_weight: f64,
    pub stopband_weight: f64,
    pub solver_tol: f64,
    pub output_dir: PathBuf,
    pub solver_max_iter: usize,
    pub eig_floor: f64,
    /// Points of the exported response curve.
    pub response_points: usize,
    /// Density multiplier of the stability check.
    pub stability_refinement: usize,
    /// Coefficients read by `apply`; defaults to `<output_dir>/coefficients.json`.
    pub coefficients_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = DesignSpec::default();
        Self {
            lambda_p: s.lambda_p,
            lambda_s: s.lambda_s,
            order_p: s.order_p,
            order_q: s.order_q,
            grid_l: s.grid_l,
            epsilon: s.epsilon,
            gamma: s.gamma,
            delta_t: s.delta_t,
            k_max: s.k_max,
            passband_weight: s.passband_weight,
            stopband_weight: s.stopband_weight,
            solver_tol: 1e-9,
            output_dir: PathBuf::from("out"),
            solver_max_iter: 100,
            eig_floor: DEFAULT_EIG_FLOOR,
            response_points: 2001,
            stability_refinement: 10,
            coefficients_path: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| format!("malformed config {}: {e}", path.display()))?;
        cfg.spec().validate().map_err(|e| e.to_string())?;
        if cfg.response_points < 2 {
            return Err("response_points must be at least 2".into());
        }
        if !(cfg.solver_tol > 0.0) || cfg.solver_max_iter == 0 {
            return Err("solver_tol must be positive and solver_max_iter at least 1".into());
        }
        Ok(cfg)
    }

    pub fn spec(&self) -> DesignSpec {
        DesignSpec {
            lambda_p: self.lambda_p,
            lambda_s: self.lambda_s,
            order_p: self.order_p,
            order_q: self.order_q,
            grid_l: self.grid_l,
            epsilon: self.epsilon,
            gamma: self.gamma,
            delta_t: self.delta_t,
            k_max: self.k_max,
            passband_weight: self.passband_weight,
            stopband_weight: self.stopband_weight,
        }
    }

    pub fn options(&self) -> DesignOptions {
        DesignOptions {
            solver_tol: self.solver_tol,
            solver_max_iter: self.solver_max_iter,
            eig_floor: self.eig_floor,
        }
    }

    pub fn coefficients_file(&self) -> PathBuf {
        self.coefficients_path
            .clone()
            .unwrap_or_else(|| self.output_dir.join("coefficients.json"))
    }
}

/// Layout of `coefficients.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientsFile {
    pub basis: String,
    pub order_p: usize,
    pub order_q: usize,
    pub epsilon: f64,
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub monomial: Option<ArmaMonomialFilter>,
}

impl CoefficientsFile {
    pub fn from_filter(filter: &ArmaChebFilter) -> Self {
        let small = filter.order_p() <= MONOMIAL_EXPORT_MAX_ORDER && filter.order_q() <= MONOMIAL_EXPORT_MAX_ORDER;
        Self {
            basis: "shifted_chebyshev".into(),
            order_p: filter.order_p(),
            order_q: filter.order_q(),
            epsilon: filter.epsilon,
            beta: filter.beta.clone(),
            alpha: filter.alpha.clone(),
            monomial: if small { to_monomial(filter).ok() } else { None },
        }
    }

    pub fn filter(&self) -> Result<ArmaChebFilter, String> {
        if self.beta.is_empty() {
            return Err("coefficients need at least beta_0".into());
        }
        if self.beta.len() != self.order_p + 1 || self.alpha.len() != self.order_q {
            return Err(format!(
                "coefficient lengths ({}, {}) do not match orders ({}, {})",
                self.beta.len(),
                self.alpha.len(),
                self.order_p,
                self.order_q
            ));
        }
        Ok(ArmaChebFilter::new(self.beta.clone(), self.alpha.clone(), self.epsilon))
    }
}

/// Layout of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub delta_p_db: f64,
    pub delta_s_db: f64,
    pub sse_db: f64,
    pub true_objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub stability_margin: f64,
    pub stable: bool,
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn response_csv(filter: &ArmaChebFilter, points: usize) -> crate::error::Result<String> {
    let mut out = String::from("lambda,h,mag_db\n");
    for i in 0..points {
        let lambda = 2.0 * i as f64 / (points - 1) as f64;
        let h = filter.freq_response(lambda)?;
        let _ = writeln!(out, "{},{},{}", fmt_f64(lambda), fmt_f64(h), fmt_f64(magnitude_db(h)));
    }
    Ok(out)
}

pub fn trace_csv(result: &DesignResult) -> String {
    let mut out = String::from("k,J,step_inf_norm,eta,status\n");
    for r in &result.trace.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.k,
            fmt_f64(r.objective),
            fmt_f64(r.step_inf_norm),
            fmt_f64(r.eta),
            r.status.as_str()
        );
    }
    out
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), String> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| e.to_string())
}

fn design_outputs(cfg: &RunConfig, result: &DesignResult) -> Result<(), String> {
    let spec = cfg.spec();
    let stability = verify_stability(&result.filter, spec.grid_l, cfg.stability_refinement);
    let report = Report {
        delta_p_db: result.metrics.delta_p_db,
        delta_s_db: result.metrics.delta_s_db,
        sse_db: result.metrics.sse_db,
        true_objective: result.metrics.true_objective,
        converged: result.converged,
        iterations: result.trace.iterations(),
        stability_margin: stability.margin,
        stable: stability.stable,
    };
    let response = response_csv(&result.filter, cfg.response_points).map_err(|e| e.to_string())?;
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| format!("cannot create {}: {e}", cfg.output_dir.display()))?;
    write(&cfg.output_dir, "coefficients.json", &to_json(&CoefficientsFile::from_filter(&result.filter))?)?;
    write(&cfg.output_dir, "response.csv", &response)?;
    write(&cfg.output_dir, "trace.csv", &trace_csv(result))?;
    write(&cfg.output_dir, "report.json", &to_json(&report)?)?;
    Ok(())
}

pub fn cmd_design(config: &Path) -> Result<i32, String> {
    let cfg = RunConfig::load(config)?;
    let result = design_wls_with(&cfg.spec(), None, &cfg.options()).map_err(|e| e.to_string())?;
    design_outputs(&cfg, &result)?;
    Ok(if result.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

pub fn comparison_csv(proposed: &DesignResult, baseline: &DesignResult) -> String {
    let mut out = String::from("method,delta_p_db,delta_s_db,sse_db,objective\n");
    for (name, r) in [("proposed", proposed), ("modified_error", baseline)] {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{name},{},{},{},{}",
            fmt_f64(m.delta_p_db),
            fmt_f64(m.delta_s_db),
            fmt_f64(m.sse_db),
            fmt_f64(m.true_objective)
        );
    }
    out
}

pub fn cmd_compare(config: &Path) -> Result<i32, String> {
    let cfg = RunConfig::load(config)?;
    let spec = cfg.spec();
    let proposed = design_wls_with(&spec, None, &cfg.options()).map_err(|e| e.to_string())?;
    let baseline = design_modified_error_with(&spec, &cfg.options()).map_err(|e| e.to_string())?;
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| format!("cannot create {}: {e}", cfg.output_dir.display()))?;
    write(&cfg.output_dir, "comparison.csv", &comparison_csv(&proposed, &baseline))?;
    Ok(if proposed.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

/// Reads one value per line, skipping blank lines.
pub fn parse_signal(text: &str) -> Result<Vec<f64>, String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| l.parse::<f64>().map_err(|_| format!("signal value {} is not a number: {l:?}", i + 1)))
        .collect()
}

pub fn cmd_apply(config: &Path, graph: &Path, signal: &Path) -> Result<i32, String> {
    let cfg = RunConfig::load(config)?;
    let coeff_path = cfg.coefficients_file();
    let coeff_text =
        fs::read_to_string(&coeff_path).map_err(|e| format!("cannot read {}: {e}", coeff_path.display()))?;
    let coeffs: CoefficientsFile =
        serde_json::from_str(&coeff_text).map_err(|e| format!("malformed {}: {e}", coeff_path.display()))?;
    let filter = coeffs.filter()?;

    let graph_text = fs::read_to_string(graph).map_err(|e| format!("cannot read {}: {e}", graph.display()))?;
    let signal_text = fs::read_to_string(signal).map_err(|e| format!("cannot read {}: {e}", signal.display()))?;
    let x = parse_signal(&signal_text)?;
    // The signal fixes the node count so trailing isolated nodes are allowed.
    let g = Graph::parse_edge_list(&graph_text, Some(x.len())).map_err(|e| e.to_string())?;
    let y = apply_filter(&filter, &g, &x).map_err(|e| e.to_string())?;

    let mut out = String::new();
    for v in y {
        let _ = writeln!(out, "{}", fmt_f64(v));
    }
    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| format!("cannot create {}: {e}", cfg.output_dir.display()))?;
    write(&cfg.output_dir, "filtered.txt", &out)?;
    Ok(EXIT_OK)
}

/// Dispatches a parsed command line and maps errors to exit code 1.
pub fn run(cli: Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Design { config } => cmd_design(config),
        Command::Compare { config } => cmd_compare(config),
        Command::Apply { config, graph, signal } => cmd_apply(config, graph, signal),
    };
    match outcome {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_ERROR
        }
    }
}
