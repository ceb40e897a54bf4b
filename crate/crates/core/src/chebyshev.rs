//! Shifted-Chebyshev bases on the graph frequency axis.
//!
//! Both polynomials of an ARMA response are expanded in `T_n(1 - λ)`, which
//! stays within `[-1, 1]` for every `λ ∈ [0, 2]`:
//!
//! ```text
//!            Σ_{p=0..P} β_p T_p(1-λ)
//!   h(λ) = ---------------------------
//!          1 + Σ_{q=1..Q} α_q T_q(1-λ)
//! ```
//!
//! The monomial form `Σ b_p λ^p / (1 + Σ a_q λ^q)` is only produced for
//! export, with an order cap, since it is badly conditioned on `[0, 2]`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{DesignError, Result};

/// Orders above this are refused by [`to_monomial`] unless a larger cap is passed.
pub const DEFAULT_CONVERSION_CAP: usize = 20;

/// `T_n(x)` by the three-term recursion.
pub fn cheb_eval(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for _ in 2..=n {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `[T_0(1-λ), …, T_max(1-λ)]`, sharing the recursion of [`cheb_eval`] so
/// entries are bitwise equal to it.
pub(crate) fn shifted_values(lambda: f64, max_order: usize) -> Vec<f64> {
    let x = 1.0 - lambda;
    let mut out = Vec::with_capacity(max_order + 1);
    out.push(1.0);
    if max_order >= 1 {
        out.push(x);
    }
    for n in 2..=max_order {
        out.push(2.0 * x * out[n - 1] - out[n - 2]);
    }
    out
}

fn check_frequency(lambda: f64) -> Result<()> {
    if (0.0..=2.0).contains(&lambda) {
        Ok(())
    } else {
        Err(DesignError::FrequencyOutOfRange(lambda))
    }
}

/// A basis vector evaluated at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebBasisVector {
    pub lambda: f64,
    pub values: Vec<f64>,
}

/// Returns `(c_P(λ), c_Q(λ))`: orders `0..=p` for the numerator and `1..=q`
/// for the denominator.
pub fn basis_vectors(lambda: f64, p: usize, q: usize) -> Result<(ChebBasisVector, ChebBasisVector)> {
    check_frequency(lambda)?;
    let all = shifted_values(lambda, p.max(q));
    let num = ChebBasisVector {
        lambda,
        values: all[..=p].to_vec(),
    };
    let den = ChebBasisVector {
        lambda,
        values: all[1..=q].to_vec(),
    };
    Ok((num, den))
}

/// ARMA filter with both polynomials in the shifted-Chebyshev basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaChebFilter {
    /// Numerator coefficients `β_0..β_P`.
    pub beta: Vec<f64>,
    /// Denominator coefficients `α_1..α_Q`; the constant 1 is implicit.
    pub alpha: Vec<f64>,
    /// Stability margin the denominator was designed to respect.
    pub epsilon: f64,
}

impl ArmaChebFilter {
    pub fn new(beta: Vec<f64>, alpha: Vec<f64>, epsilon: f64) -> Self {
        assert!(!beta.is_empty(), "numerator needs at least beta_0");
        Self { beta, alpha, epsilon }
    }

    /// Identity response `h ≡ 1` of the requested orders.
    pub fn all_pass(p: usize, q: usize, epsilon: f64) -> Self {
        let mut beta = vec![0.0; p + 1];
        beta[0] = 1.0;
        Self::new(beta, vec![0.0; q], epsilon)
    }

    pub fn order_p(&self) -> usize {
        self.beta.len() - 1
    }

    pub fn order_q(&self) -> usize {
        self.alpha.len()
    }

    fn parts(&self, lambda: f64) -> (f64, f64) {
        let t = shifted_values(lambda, self.order_p().max(self.order_q()));
        let num = self.beta.iter().zip(&t).map(|(b, v)| b * v).sum();
        let den = 1.0 + self.alpha.iter().zip(&t[1..]).map(|(a, v)| a * v).sum::<f64>();
        (num, den)
    }

    /// `1 + c_Q(λ)ᵀα`, without range checks.
    pub fn denominator(&self, lambda: f64) -> f64 {
        self.parts(lambda).1
    }

    pub fn numerator(&self, lambda: f64) -> f64 {
        self.parts(lambda).0
    }

    /// `h(λ)`. Fails when the denominator magnitude drops below `ε/2`.
    pub fn freq_response(&self, lambda: f64) -> Result<f64> {
        check_frequency(lambda)?;
        let (num, den) = self.parts(lambda);
        if den.abs() < 0.5 * self.epsilon {
            return Err(DesignError::DegenerateDenominator { lambda, value: den });
        }
        Ok(num / den)
    }
}

/// Free-function form of [`ArmaChebFilter::freq_response`].
pub fn freq_response(filter: &ArmaChebFilter, lambda: f64) -> Result<f64> {
    filter.freq_response(lambda)
}

/// ARMA filter in powers of `λ`: `Σ b_p λ^p / (1 + Σ a_q λ^q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaMonomialFilter {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
}

impl ArmaMonomialFilter {
    pub fn numerator(&self, lambda: f64) -> f64 {
        horner(&self.b, lambda)
    }

    /// Denominator including the leading 1.
    pub fn denominator(&self, lambda: f64) -> f64 {
        1.0 + lambda * horner(&self.a, lambda)
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        self.numerator(lambda) / self.denominator(lambda)
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Power-series coefficients of `T_0(1-λ), …, T_n(1-λ)`.
fn shifted_power_coeffs(n: usize) -> Vec<Vec<f64>> {
    let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
    if n >= 1 {
        polys.push(vec![1.0, -1.0]);
    }
    for k in 2..=n {
        // 2(1-λ)T_{k-1} - T_{k-2}
        let mut next = vec![0.0; k + 1];
        for (i, c) in polys[k - 1].iter().enumerate() {
            next[i] += 2.0 * c;
            next[i + 1] -= 2.0 * c;
        }
        for (i, c) in polys[k - 2].iter().enumerate() {
            next[i] -= c;
        }
        polys.push(next);
    }
    polys
}

/// Re-expresses a Chebyshev-form filter in powers of `λ`, normalising the
/// denominator's constant term to 1.
pub fn to_monomial(filter: &ArmaChebFilter) -> Result<ArmaMonomialFilter> {
    to_monomial_capped(filter, DEFAULT_CONVERSION_CAP)
}

pub fn to_monomial_capped(filter: &ArmaChebFilter, cap: usize) -> Result<ArmaMonomialFilter> {
    let (p, q) = (filter.order_p(), filter.order_q());
    if p > cap || q > cap {
        return Err(DesignError::Conversion(format!(
            "orders ({p}, {q}) exceed the conversion cap {cap}"
        )));
    }
    let polys = shifted_power_coeffs(p.max(q));

    let mut num = vec![0.0; p + 1];
    for (beta, poly) in filter.beta.iter().zip(&polys) {
        for (i, c) in poly.iter().enumerate() {
            num[i] += beta * c;
        }
    }
    let mut den = vec![0.0; q + 1];
    den[0] = 1.0;
    for (alpha, poly) in filter.alpha.iter().zip(&polys[1..]) {
        for (i, c) in poly.iter().enumerate() {
            den[i] += alpha * c;
        }
    }

    let lead = den[0];
    if lead.abs() < 1e-12 {
        return Err(DesignError::Conversion(format!(
            "denominator constant term {lead:e} cannot be normalised"
        )));
    }
    Ok(ArmaMonomialFilter {
        b: num.iter().map(|c| c / lead).collect(),
        a: den[1..].iter().map(|c| c / lead).collect(),
    })
}

/// Polynomial family used by [`gram_condition_number`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Monomial,
    ShiftedChebyshev,
}

/// 2-norm condition number of the Gram matrix `ΦᵀΦ`, where `Φ` holds basis
/// functions of orders `0..=order` sampled at `lambdas`.
pub fn gram_condition_number(basis: Basis, order: usize, lambdas: &[f64]) -> f64 {
    let phi = DMatrix::from_fn(lambdas.len(), order + 1, |i, j| match basis {
        Basis::Monomial => lambdas[i].powi(j as i32),
        Basis::ShiftedChebyshev => cheb_eval(j, 1.0 - lambdas[i]),
    });
    let gram = phi.transpose() * &phi;
    let eig = SymmetricEigen::new(gram);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
