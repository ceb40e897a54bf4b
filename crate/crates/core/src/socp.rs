//! Single-cone SOCP of one outer iteration and its solver.
//!
//! ```text
//!   minimize    fᵀx
//!   subject to  ‖A_kᵀx + b_k‖₂ ≤ fᵀx
//!               Bᵀx ≤ (1 - ε)·e
//! ```
//!
//! with `x = [η; h]`, `A_k = [0 | Q̂_k]ᵀ`, `b_k = -q̂_k`. Since `f` selects η
//! and neither `B` nor `A_k` touch it, the program is the inequality
//! constrained least-squares problem `min ‖Q̂h - q̂‖ s.t. Gh ≤ r`, which is
//! what [`InteriorPointSolver`] solves:
//!
//! 1. whiten with the SVD `Q̂ = UΣVᵀ`, `u = ΣVᵀh`, so the objective becomes
//!    `½‖u - Uᵀq̂‖²` and the Hessian is the identity;
//! 2. run a Mehrotra predictor-corrector interior-point method, started from
//!    the strictly feasible `h = 0` when possible, which keeps every iterate
//!    primal feasible;
//! 3. polish by re-solving the equality-constrained problem on the detected
//!    active set, accepting it only if it is feasible with nonnegative
//!    multipliers.

use log::{debug, trace};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Result};
use crate::grid::{DesignGrid, DesignSpec};
use crate::wls::QuadraticData;

/// Problem data in the standard form above.
#[derive(Debug, Clone, PartialEq)]
pub struct SocpProblem {
    /// Selector `[1, 0, …, 0]`, length `P + Q + 2`.
    pub f: DVector<f64>,
    /// `A_k`, shape `(P+Q+2) × (P+Q+1)`; its first row (the η row) is zero.
    pub a_mat: DMatrix<f64>,
    /// `b_k = -q̂_k`.
    pub b_vec: DVector<f64>,
    /// `B`, shape `(P+Q+2) × m`; column `j` is `[0; g(λ_j)]`.
    pub b_ineq: DMatrix<f64>,
    /// `(1 - ε)·e`, length `m`.
    pub rhs: DVector<f64>,
}

impl SocpProblem {
    pub fn n_vars(&self) -> usize {
        self.f.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.rhs.len()
    }

    /// Builds a problem from `Q̂`, `q̂`, constraint rows `G` (each row acts on
    /// `h`) and right-hand side `r`.
    pub fn from_parts(q_hat: &DMatrix<f64>, q_hat_vec: &DVector<f64>, g: &DMatrix<f64>, rhs: DVector<f64>) -> Self {
        let n = q_hat.ncols();
        assert_eq!(q_hat.nrows(), n, "Q̂ must be square");
        assert_eq!(g.ncols(), n);
        assert_eq!(g.nrows(), rhs.len());
        let mut f = DVector::zeros(n + 1);
        f[0] = 1.0;
        let mut a_mat = DMatrix::zeros(n + 1, n);
        a_mat.rows_mut(1, n).copy_from(&q_hat.transpose());
        let mut b_ineq = DMatrix::zeros(n + 1, g.nrows());
        b_ineq.rows_mut(1, n).copy_from(&g.transpose());
        Self {
            f,
            a_mat,
            b_vec: -q_hat_vec,
            b_ineq,
            rhs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nv = self.n_vars();
        let bad = |m: String| Err(DesignError::MalformedProblem(m));
        if nv < 2 {
            return bad("need at least one variable besides eta".into());
        }
        if self.f[0] != 1.0 || self.f.iter().skip(1).any(|&v| v != 0.0) {
            return bad("f must select the first variable".into());
        }
        if self.a_mat.shape() != (nv, nv - 1) {
            return bad(format!("A has shape {:?}, expected ({nv}, {})", self.a_mat.shape(), nv - 1));
        }
        if self.b_vec.len() != nv - 1 {
            return bad(format!("b has length {}, expected {}", self.b_vec.len(), nv - 1));
        }
        if self.b_ineq.shape() != (nv, self.rhs.len()) {
            return bad(format!(
                "B has shape {:?}, expected ({nv}, {})",
                self.b_ineq.shape(),
                self.rhs.len()
            ));
        }
        if self.a_mat.row(0).iter().any(|&v| v != 0.0) {
            return bad("A must not involve eta".into());
        }
        if self.b_ineq.row(0).iter().any(|&v| v != 0.0) {
            return bad("B must not involve eta".into());
        }
        let finite = |m: &DMatrix<f64>| m.iter().all(|v| v.is_finite());
        if !finite(&self.a_mat) || !finite(&self.b_ineq) || !self.b_vec.iter().all(|v| v.is_finite()) || !self.rhs.iter().all(|v| v.is_finite()) {
            return bad("non-finite entries".into());
        }
        Ok(())
    }

    /// `Q̂` recovered from `A_k`.
    pub fn q_hat(&self) -> DMatrix<f64> {
        let n = self.n_vars() - 1;
        self.a_mat.rows(1, n).transpose()
    }

    /// Constraint rows acting on `h`, one per linear inequality.
    pub fn g_mat(&self) -> DMatrix<f64> {
        let n = self.n_vars() - 1;
        self.b_ineq.rows(1, n).transpose()
    }

    /// `‖A_kᵀx + b_k‖₂`.
    pub fn cone_norm(&self, x: &DVector<f64>) -> f64 {
        (self.a_mat.transpose() * x + &self.b_vec).norm()
    }
}

/// Assembles the iteration's cone program; one stability row per grid point.
pub fn assemble_socp(quad: &QuadraticData, grid: &DesignGrid, spec: &DesignSpec) -> SocpProblem {
    let (p, q) = (spec.order_p, spec.order_q);
    let n = p + q + 1;
    let m = grid.len();
    let mut g = DMatrix::zeros(m, n);
    for (j, &lambda) in grid.lambdas.iter().enumerate() {
        let t = crate::chebyshev::shifted_values(lambda, q);
        for k in 1..=q {
            g[(j, p + k)] = -t[k];
        }
    }
    let rhs = DVector::from_element(m, 1.0 - spec.epsilon);
    SocpProblem::from_parts(&quad.q_hat_mat, &quad.q_hat_vec, &g, rhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocpSolution {
    /// `[η*; h*]`.
    pub x: DVector<f64>,
    pub status: SolveStatus,
    /// `η* = ‖Q̂h* - q̂‖₂`.
    pub objective: f64,
    pub kkt: KktResiduals,
    pub iterations: usize,
    /// Whether the active-set polish replaced the interior-point iterate.
    pub polished: bool,
}

impl SocpSolution {
    pub fn h(&self) -> &[f64] {
        &self.x.as_slice()[1..]
    }
}

/// Anything that can solve an [`SocpProblem`]; lets an external conic
/// solver stand in for the built-in one.
pub trait ConeSolver {
    fn solve(&self, problem: &SocpProblem) -> Result<SocpSolution>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorPointSolver {
    pub tol: f64,
    pub max_iter: usize,
    /// Emit one `log::trace!` line per iteration.
    pub trace: bool,
}

impl Default for InteriorPointSolver {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 100,
            trace: false,
        }
    }
}

pub fn solve(problem: &SocpProblem, tol: f64, max_iter: usize) -> Result<SocpSolution> {
    InteriorPointSolver { tol, max_iter, trace: false }.solve(problem)
}

/// Largest violation among the cone and linear constraints at `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub max_violation: f64,
    pub cone_violation: f64,
    pub linear_violation: f64,
}

pub fn check_feasibility(x: &DVector<f64>, problem: &SocpProblem, tol: f64) -> Result<Feasibility> {
    if x.len() != problem.n_vars() {
        return Err(DesignError::DimensionMismatch {
            expected: problem.n_vars(),
            actual: x.len(),
        });
    }
    let cone = (problem.cone_norm(x) - problem.f.dot(x)).max(0.0);
    let lin = (problem.b_ineq.transpose() * x - &problem.rhs)
        .iter()
        .fold(0.0_f64, |acc, &v| acc.max(v));
    let max_violation = cone.max(lin);
    Ok(Feasibility {
        feasible: max_violation <= tol,
        max_violation,
        cone_violation: cone,
        linear_violation: lin,
    })
}

/// Convex QP `min ½uᵀdiag(hd)u + cᵀu  s.t.  Mu ≤ r` in whitened coordinates.
struct WhitenedQp {
    hdiag: DVector<f64>,
    c: DVector<f64>,
    m: DMatrix<f64>,
    r: DVector<f64>,
}

struct QpPoint {
    u: DVector<f64>,
    s: DVector<f64>,
    z: DVector<f64>,
}

impl WhitenedQp {
    fn objective(&self, u: &DVector<f64>) -> f64 {
        0.5 * u.component_mul(&self.hdiag).dot(u) + self.c.dot(u)
    }

    fn residuals(&self, pt: &QpPoint) -> (DVector<f64>, DVector<f64>) {
        let rd = pt.u.component_mul(&self.hdiag) + &self.c + self.m.tr_mul(&pt.z);
        let rp = &self.m * &pt.u + &pt.s - &self.r;
        (rd, rp)
    }

    fn kkt(&self, pt: &QpPoint) -> KktResiduals {
        let (rd, rp) = self.residuals(pt);
        KktResiduals {
            primal: rp.amax(),
            dual: rd.amax(),
            gap: pt.s.dot(&pt.z),
        }
    }

    fn converged(&self, k: &KktResiduals, pobj: f64, tol: f64) -> bool {
        k.primal <= tol * (1.0 + self.r.amax())
            && k.dual <= tol * (1.0 + self.c.amax())
            && k.gap <= tol * (1.0 + pobj.abs())
    }
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&x, &d)| -x / d)
        .fold(1.0_f64, f64::min)
}

impl InteriorPointSolver {
    fn ipm(&self, qp: &WhitenedQp) -> (QpPoint, usize, bool) {
        let m = qp.r.len();
        let mut pt = self.initial_point(qp);
        if m == 0 {
            // unconstrained: one Newton step is exact
            pt.u = -qp.c.component_div(&qp.hdiag);
            return (pt, 0, true);
        }
        let mut best: Option<(f64, QpPoint)> = None;
        let mut last_merit = f64::INFINITY;
        for iter in 0..self.max_iter {
            let (rd, rp) = qp.residuals(&pt);
            let mu = pt.s.dot(&pt.z) / m as f64;
            let kkt = KktResiduals {
                primal: rp.amax(),
                dual: rd.amax(),
                gap: pt.s.dot(&pt.z),
            };
            let pobj = qp.objective(&pt.u);
            let merit = kkt.primal + kkt.dual + kkt.gap;
            if self.trace {
                trace!(
                    "ipm iter={iter} mu={mu:.3e} primal={:.3e} dual={:.3e} gap={:.3e} merit={merit:.3e}",
                    kkt.primal,
                    kkt.dual,
                    kkt.gap
                );
                if merit > last_merit {
                    trace!("ipm iter={iter} merit increased from {last_merit:.3e}");
                }
            }
            last_merit = merit;
            if qp.converged(&kkt, pobj, self.tol) {
                return (pt, iter, true);
            }
            if best.as_ref().is_none_or(|(bm, _)| merit < *bm) {
                best = Some((
                    merit,
                    QpPoint {
                        u: pt.u.clone(),
                        s: pt.s.clone(),
                        z: pt.z.clone(),
                    },
                ));
            }

            // K = H + Mᵀ diag(z/s) M
            let d = pt.z.component_div(&pt.s);
            let mut k_mat = DMatrix::from_diagonal(&qp.hdiag);
            let mut md = qp.m.clone();
            for (i, mut row) in md.row_iter_mut().enumerate() {
                row *= d[i];
            }
            k_mat += qp.m.tr_mul(&md);
            let chol = match factorize(k_mat) {
                Some(c) => c,
                None => break,
            };

            let newton = |rc: &DVector<f64>| {
                let w = (-rc + pt.z.component_mul(&rp)).component_div(&pt.s);
                let rhs = -&rd - qp.m.tr_mul(&w);
                let du = chol.solve(&rhs);
                let ds = -&rp - &qp.m * &du;
                let dz = (-rc - pt.z.component_mul(&ds)).component_div(&pt.s);
                (du, ds, dz)
            };

            // predictor
            let rc_aff = pt.s.component_mul(&pt.z);
            let (_, ds_a, dz_a) = newton(&rc_aff);
            let a_aff = max_step(&pt.s, &ds_a).min(max_step(&pt.z, &dz_a));
            let mu_aff = (&pt.s + &ds_a * a_aff).dot(&(&pt.z + &dz_a * a_aff)) / m as f64;
            let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

            // corrector
            let rc = &rc_aff + ds_a.component_mul(&dz_a) - DVector::from_element(m, sigma * mu);
            let (du, ds, dz) = newton(&rc);
            let a_p = max_step(&pt.s, &ds);
            let a_d = max_step(&pt.z, &dz);
            let alpha = (0.99 * a_p.min(a_d)).min(1.0);
            if !(alpha > 0.0) || !du.iter().all(|v| v.is_finite()) {
                break;
            }
            pt.u += &du * alpha;
            pt.s += &ds * alpha;
            pt.z += &dz * alpha;
            // keep strict interiority against rounding
            for v in pt.s.iter_mut().chain(pt.z.iter_mut()) {
                if *v <= 0.0 {
                    *v = f64::MIN_POSITIVE;
                }
            }
        }
        let final_merit = {
            let k = qp.kkt(&pt);
            k.primal + k.dual + k.gap
        };
        match best {
            Some((bm, bp)) if bm < final_merit => (bp, self.max_iter, false),
            _ => (pt, self.max_iter, false),
        }
    }

    fn initial_point(&self, qp: &WhitenedQp) -> QpPoint {
        let n = qp.c.len();
        let m = qp.r.len();
        if qp.r.iter().all(|&v| v > 0.0) {
            // u = 0 is strictly feasible
            return QpPoint {
                u: DVector::zeros(n),
                s: qp.r.clone(),
                z: DVector::from_element(m, 1.0),
            };
        }
        // Infeasible start: least-squares fit of the KKT system, shifted
        // into the positive orthant.
        let mut k_mat = DMatrix::from_diagonal(&qp.hdiag);
        k_mat += qp.m.tr_mul(&qp.m);
        let rhs = -&qp.c + qp.m.tr_mul(&qp.r);
        let u = factorize(k_mat).map(|c| c.solve(&rhs)).unwrap_or_else(|| DVector::zeros(n));
        let resid = &qp.m * &u - &qp.r;
        let shift = |v: DVector<f64>| {
            let worst = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(-b));
            if worst < 0.0 {
                v
            } else {
                v.add_scalar(1.0 + worst)
            }
        };
        QpPoint {
            u,
            s: shift(-&resid),
            z: shift(resid),
        }
    }

    /// Re-solves with the constraints that look active treated as equalities.
    fn polish(&self, qp: &WhitenedQp, pt: &QpPoint) -> Option<QpPoint> {
        let active: Vec<usize> = (0..qp.r.len()).filter(|&i| pt.z[i] > pt.s[i]).collect();
        let hinv = qp.hdiag.map(|v| 1.0 / v);
        let u_free = -qp.c.component_mul(&hinv);
        let (u, lambda) = if active.is_empty() {
            (u_free, DVector::zeros(0))
        } else {
            let ma = qp.m.select_rows(active.iter());
            let ra = DVector::from_iterator(active.len(), active.iter().map(|&i| qp.r[i]));
            let mut mh = ma.clone();
            for (j, mut col) in mh.column_iter_mut().enumerate() {
                col *= hinv[j];
            }
            // (M_A H⁻¹ M_Aᵀ) λ = M_A u_free - r_A
            let schur = &mh * ma.transpose();
            let rhs = &ma * &u_free - &ra;
            let svd = schur.svd(true, true);
            let eps = 1e-13 * svd.singular_values.max().max(f64::MIN_POSITIVE);
            let lambda = svd.solve(&rhs, eps).ok()?;
            let u = &u_free - mh.tr_mul(&lambda);
            (u, lambda)
        };
        let scale = 1.0 + qp.r.amax();
        let viol = (&qp.m * &u - &qp.r).max();
        let lambda_ok = lambda.iter().all(|&l| l >= -1e-9 * (1.0 + lambda.amax()));
        if !(viol <= 1e-12 * scale) || !lambda_ok || !u.iter().all(|v| v.is_finite()) {
            return None;
        }
        let s = (&qp.r - &qp.m * &u).map(|v| v.max(0.0));
        let mut z = DVector::zeros(qp.r.len());
        for (k, &i) in active.iter().enumerate() {
            z[i] = lambda[k].max(0.0);
        }
        Some(QpPoint { u, s, z })
    }
}

fn factorize(mut k: DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let base = k.trace().abs() / k.nrows().max(1) as f64;
    let mut bump = 0.0;
    for _ in 0..6 {
        if let Some(c) = k.clone().cholesky() {
            return Some(c);
        }
        let next = if bump == 0.0 { 1e-14 * base.max(1e-300) } else { bump * 100.0 };
        for i in 0..k.nrows() {
            k[(i, i)] += next - bump;
        }
        bump = next;
    }
    None
}

impl ConeSolver for InteriorPointSolver {
    fn solve(&self, problem: &SocpProblem) -> Result<SocpSolution> {
        problem.validate()?;
        let n = problem.n_vars() - 1;
        let q_hat = problem.q_hat();
        let q_hat_vec = -&problem.b_vec;
        let g = problem.g_mat();

        let svd = q_hat.clone().svd(true, true);
        let u_mat = svd.u.expect("requested");
        let v_t = svd.v_t.expect("requested");
        let sigma = svd.singular_values;
        let smax = sigma.max();
        let floor = if smax > 0.0 { smax * 1e-14 } else { 1.0 };
        let sigma_f = sigma.map(|s| s.max(floor));
        let rho = sigma.component_div(&sigma_f);
        // h = V diag(1/σ_f) u
        let mut h_of_u = v_t.transpose();
        for (j, mut col) in h_of_u.column_iter_mut().enumerate() {
            col /= sigma_f[j];
        }
        let t = u_mat.tr_mul(&q_hat_vec);

        // drop constraints that do not involve h, after checking them
        let m_full = &g * &h_of_u;
        let mut keep = Vec::new();
        let mut norms = Vec::new();
        for i in 0..m_full.nrows() {
            let nrm = m_full.row(i).norm();
            if nrm > 0.0 {
                keep.push(i);
                norms.push(nrm);
            } else if problem.rhs[i] < 0.0 {
                return Ok(infeasible_solution(problem));
            }
        }
        let mut m_mat = m_full.select_rows(keep.iter());
        let mut r = DVector::from_iterator(keep.len(), keep.iter().map(|&i| problem.rhs[i]));
        for (k, mut row) in m_mat.row_iter_mut().enumerate() {
            row /= norms[k];
            r[k] /= norms[k];
        }
        let qp = WhitenedQp {
            hdiag: rho.map(|v| (v * v).max(1e-28)),
            c: -rho.component_mul(&t),
            m: m_mat,
            r,
        };

        let (mut pt, iterations, mut converged) = self.ipm(&qp);
        let mut polished = false;
        if let Some(p) = self.polish(&qp, &pt) {
            if qp.objective(&p.u) <= qp.objective(&pt.u) + 1e-12 * (1.0 + qp.objective(&pt.u).abs()) || !converged {
                pt = p;
                polished = true;
                converged = converged || qp.converged(&qp.kkt(&pt), qp.objective(&pt.u), self.tol);
            }
        }
        let kkt = qp.kkt(&pt);
        let primal_viol = (&qp.m * &pt.u - &qp.r).iter().fold(0.0_f64, |a, &b| a.max(b));
        if !converged && primal_viol > 1e-6 * (1.0 + qp.r.amax()) && qp.r.iter().any(|&v| v <= 0.0) {
            debug!("ipm ended with primal violation {primal_viol:.3e}; reporting infeasible");
            return Ok(infeasible_solution(problem));
        }

        let h = &h_of_u * &pt.u;
        let eta = (&q_hat * &h - &q_hat_vec).norm();
        let mut x = DVector::zeros(n + 1);
        x[0] = eta;
        x.rows_mut(1, n).copy_from(&h);
        let status = if converged { SolveStatus::Optimal } else { SolveStatus::MaxIterations };
        debug!(
            "socp solve: status={} iterations={iterations} polished={polished} eta={eta:.6e}",
            status.as_str()
        );
        Ok(SocpSolution {
            x,
            status,
            objective: eta,
            kkt,
            iterations,
            polished,
        })
    }
}

fn infeasible_solution(problem: &SocpProblem) -> SocpSolution {
    SocpSolution {
        x: DVector::zeros(problem.n_vars()),
        status: SolveStatus::Infeasible,
        objective: f64::INFINITY,
        kkt: KktResiduals::default(),
        iterations: 0,
        polished: false,
    }
}
