//! Plugging a different likelihood into the generic machinery.
//!
//! A single-photon interferometer read out at two settings,
//! p(±|φ) = (1 ± v cos φ) / 2. Its Fisher information is
//! v² sin²φ / (1 − v² cos²φ), which the example checks numerically.

use gcrb::bayes::{self, PhaseDomain, Prior};
use gcrb::fisher::{crb_bound_for, generalized_fisher_for};
use gcrb::model::{LikelihoodModel, ModelParams};

struct SinglePhoton;

impl LikelihoodModel for SinglePhoton {
    fn name(&self) -> &'static str {
        "single-photon-2setting"
    }

    fn outcome_count(&self) -> usize {
        2
    }

    fn prob(&self, outcome: usize, phase: f64, params: &ModelParams) -> f64 {
        let sign = if outcome == 0 { 1.0 } else { -1.0 };
        0.5 * (1.0 + sign * params.visibility() * phase.cos())
    }

    fn prob_derivative(&self, outcome: usize, phase: f64, params: &ModelParams) -> f64 {
        let sign = if outcome == 0 { 1.0 } else { -1.0 };
        -0.5 * sign * params.visibility() * phase.sin()
    }
}

fn main() -> gcrb::error::Result<()> {
    let params = ModelParams::new(0.9)?;
    let phase = 1.1;
    let f = generalized_fisher_for(&SinglePhoton, 2.0, phase, &params)?;
    let v2 = 0.81;
    let closed = v2 * phase.sin().powi(2) / (1.0 - v2 * phase.cos().powi(2));
    println!("F = {f:.12}, closed form {closed:.12}");

    // 1000 shots landing close to the expected frequencies
    let counts = [(1000.0 * SinglePhoton.prob(0, phase, &params)).round() as u64, 0];
    let counts = [counts[0], 1000 - counts[0]];
    let domain = PhaseDomain::new(0.0, std::f64::consts::PI, 2048)?;
    let post = bayes::posterior_for(&SinglePhoton, &counts, &params, &domain, &Prior::Flat)?;
    let moments = bayes::moments(&post, &[2.0, 3.0], 1000)?;
    println!("phi_hat = {:.5}", moments.estimate);
    for &(beta, delta) in &moments.deltas {
        let bound = crb_bound_for(&SinglePhoton, beta, phase, &params, 1000)?;
        println!("beta {beta}: kappa = {:.4}", delta / bound.bound_on_delta_beta);
    }
    Ok(())
}
