//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use arma_wls::chebyshev::ArmaMonomialFilter;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// `min ‖Q̂h - q̂‖ s.t. Gh ≤ r`.
#[derive(Debug, Clone)]
pub struct LsInstance {
    pub q_hat: DMatrix<f64>,
    pub q_vec: DVector<f64>,
    pub g: DMatrix<f64>,
    pub r: DVector<f64>,
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Random feasible instance with up to `max_vars` unknowns and
/// `max_cons` inequalities. Feasibility comes from a random interior-or-
/// boundary point `h0`; `r` is not required to be positive, so `h = 0` is
/// not always feasible.
pub fn random_instance(rng: &mut ChaCha8Rng, max_vars: usize, max_cons: usize) -> LsInstance {
    let n = rng.random_range(1..=max_vars);
    let m = rng.random_range(0..=max_cons);
    let q_hat = gaussian_matrix(rng, n, n) + DMatrix::identity(n, n) * 3.0;
    let q_vec = gaussian_vector(rng, n) * 3.0;
    let g = gaussian_matrix(rng, m, n);
    let h0 = gaussian_vector(rng, n) * 0.5;
    let slack = DVector::from_fn(m, |_, _| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..1.0) });
    let r = &g * &h0 + slack;
    LsInstance { q_hat, q_vec, g, r }
}

/// Global optimum by enumerating every candidate active set: each subset of
/// at most `n` rows is solved as an equality-constrained least-squares
/// problem through its KKT system, and the best feasible point wins.
pub fn brute_force(inst: &LsInstance) -> Option<(DVector<f64>, f64)> {
    let n = inst.q_hat.ncols();
    let m = inst.g.nrows();
    let h_mat = inst.q_hat.tr_mul(&inst.q_hat);
    let c = inst.q_hat.tr_mul(&inst.q_vec);
    let feas_tol = 1e-10 * (1.0 + inst.r.amax());
    let mut best: Option<(DVector<f64>, f64)> = None;
    for mask in 0u32..(1u32 << m) {
        let rows: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let k = rows.len();
        if k > n {
            continue;
        }
        let mut kkt = DMatrix::zeros(n + k, n + k);
        let mut rhs = DVector::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&h_mat);
        rhs.rows_mut(0, n).copy_from(&c);
        for (a, &i) in rows.iter().enumerate() {
            for j in 0..n {
                kkt[(n + a, j)] = inst.g[(i, j)];
                kkt[(j, n + a)] = inst.g[(i, j)];
            }
            rhs[n + a] = inst.r[i];
        }
        let Some(z) = kkt.clone().lu().solve(&rhs) else { continue };
        if (&kkt * &z - &rhs).amax() > 1e-9 * (1.0 + rhs.amax()) || !z.iter().all(|v| v.is_finite()) {
            continue;
        }
        let h = z.rows(0, n).into_owned();
        if m > 0 && (&inst.g * &h - &inst.r).max() > feas_tol {
            continue;
        }
        let obj = (&inst.q_hat * &h - &inst.q_vec).norm();
        if best.as_ref().is_none_or(|(_, b)| obj < *b) {
            best = Some((h, obj));
        }
    }
    best
}

/// `b(L) (I + a(L))⁻¹ x` with matrix powers of the Laplacian.
pub fn matrix_rational(filter: &ArmaMonomialFilter, l: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let poly = |coeffs: &[f64], first_power: usize| {
        let mut acc = DMatrix::zeros(n, n);
        let mut power = DMatrix::identity(n, n);
        for _ in 0..first_power {
            power = &power * l;
        }
        for &c in coeffs {
            acc += &power * c;
            power = &power * l;
        }
        acc
    };
    let num = poly(&filter.b, 0);
    let den = DMatrix::identity(n, n) + poly(&filter.a, 1);
    let inner = den.lu().solve(x).expect("stable filter has an invertible denominator");
    num * inner
}

/// Random connected weighted graph: a path backbone plus extra edges.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> arma_wls::Graph {
    let mut edges: Vec<(usize, usize, f64)> = (1..n).map(|i| (i - 1, i, rng.random_range(0.2..2.0))).collect();
    for _ in 0..extra {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            edges.push((i, j, rng.random_range(0.2..2.0)));
        }
    }
    arma_wls::Graph::new(n, edges).expect("valid random graph")
}
