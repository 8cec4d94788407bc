//! One simulated experiment from counts to diagnostics.
//!
//! Samples a tally and builds the grid posterior. Each moment Δ_β is then
//! compared with its bound (κ_β) and with the Gaussian of equal variance.

use std::f64::consts::PI;

use gcrb::bayes::{self, PhaseDomain, Prior, DEFAULT_BETAS};
use gcrb::fisher::crb_bound;
use gcrb::model::ModelParams;
use gcrb::montecarlo::{experiment_rng, sample_tally};

fn main() -> gcrb::error::Result<()> {
    let truth = PI / 8.0;
    let params = ModelParams::new(0.95)?;
    let shots = 2000;

    let tally = sample_tally(truth, &params, shots, &mut experiment_rng(42, 0));
    println!("counts {:?}", tally.counts());

    let post = bayes::posterior(&tally, &params, &PhaseDomain::default(), &Prior::Flat)?;
    let moments = bayes::moments(&post, &DEFAULT_BETAS, shots)?;
    println!("phi_hat = {:.6} (true {truth:.6})", moments.estimate);

    let sigma = moments.delta(2.0).expect("beta = 2 requested").sqrt();
    println!("{:>5} {:>12} {:>12} {:>8} {:>8}", "beta", "delta", "bound", "kappa", "gauss");
    for &(beta, delta) in &moments.deltas {
        let bound = crb_bound(beta, truth, &params, shots)?;
        println!(
            "{beta:>5} {delta:>12.4e} {:>12.4e} {:>8.4} {:>8.4}",
            bound.bound_on_delta_beta,
            delta / bound.bound_on_delta_beta,
            delta / bayes::gaussian_abs_moment(beta, sigma),
        );
    }
    Ok(())
}
