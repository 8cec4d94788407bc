//! Standard and generalized Fisher information and the order-β bounds they
//! imply.
//!
//! For Hölder-conjugate orders `1/α + 1/β = 1` the β-th absolute central
//! moment of an unbiased estimator built from M shots obeys
//!
//! ```text
//! Δ_β ≥ M^(−β/2) · f_α^(−β/α),     f_α = Σ_x p(x|φ) |∂_φ log p(x|φ)|^α
//! ```
//!
//! and for β = α = 2 this is the usual 1 / (M F).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{LikelihoodModel, ModelParams, NoonFourSetting};

/// A Hölder-conjugate pair of orders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderPair {
    pub beta: f64,
    pub alpha: f64,
}

impl OrderPair {
    pub fn from_beta(beta: f64) -> Result<Self> {
        Ok(Self {
            beta,
            alpha: conjugate_exponent(beta)?,
        })
    }
}

/// α = β / (β − 1).
pub fn conjugate_exponent(beta: f64) -> Result<f64> {
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(Error::BetaOrder(beta));
    }
    Ok(beta / (beta - 1.0))
}

/// f_α for an arbitrary model.
pub fn generalized_fisher_for<M: LikelihoodModel + ?Sized>(
    model: &M,
    alpha: f64,
    phase: f64,
    params: &ModelParams,
) -> Result<f64> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha = {alpha} must exceed 1")));
    }
    if !phase.is_finite() {
        return Err(Error::Domain(format!("phase {phase} is not finite")));
    }
    Ok((0..model.outcome_count())
        .map(|outcome| model.information_summand(outcome, alpha, phase, params))
        .sum())
}

/// f_α of the N00N four-setting model.
pub fn generalized_fisher(alpha: f64, phase: f64, params: &ModelParams) -> Result<f64> {
    generalized_fisher_for(&NoonFourSetting, alpha, phase, params)
}

/// Fisher information F = f_2.
pub fn fisher(phase: f64, params: &ModelParams) -> Result<f64> {
    generalized_fisher(2.0, phase, params)
}

/// Right-hand side of the order-β bound at one phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    pub beta: f64,
    pub alpha: f64,
    pub f_alpha: f64,
    /// Lower bound on Δ_β; `+inf` when f_α = 0.
    pub bound_on_delta_beta: f64,
    pub shots: u64,
}

impl BoundValue {
    /// Bound on Δ_β^(1/β) · M^(1/2), i.e. f_α^(−1/α).
    pub fn scaled_bound(&self) -> f64 {
        if self.f_alpha > 0.0 {
            self.f_alpha.powf(-1.0 / self.alpha)
        } else {
            f64::INFINITY
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.bound_on_delta_beta.is_infinite()
    }
}

pub(crate) fn bound_from_information(beta: f64, alpha: f64, f_alpha: f64, shots: u64) -> f64 {
    if f_alpha > 0.0 {
        (shots as f64).powf(-beta / 2.0) * f_alpha.powf(-beta / alpha)
    } else {
        f64::INFINITY
    }
}

/// Order-β bound for an arbitrary model.
pub fn crb_bound_for<M: LikelihoodModel + ?Sized>(
    model: &M,
    beta: f64,
    phase: f64,
    params: &ModelParams,
    shots: u64,
) -> Result<BoundValue> {
    let pair = OrderPair::from_beta(beta)?;
    if shots == 0 {
        return Err(Error::Domain("bound needs at least one shot".into()));
    }
    let f_alpha = generalized_fisher_for(model, pair.alpha, phase, params)?;
    Ok(BoundValue {
        beta,
        alpha: pair.alpha,
        f_alpha,
        bound_on_delta_beta: bound_from_information(beta, pair.alpha, f_alpha, shots),
        shots,
    })
}

/// Order-β bound for the N00N model.
pub fn crb_bound(beta: f64, phase: f64, params: &ModelParams, shots: u64) -> Result<BoundValue> {
    crb_bound_for(&NoonFourSetting, beta, phase, params, shots)
}
