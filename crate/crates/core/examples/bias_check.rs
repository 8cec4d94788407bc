//! Bias of the Bayesian estimator under a miscalibrated visibility.
//!
//! With the correct visibility the mean estimate sits on the truth within
//! its standard error; assuming the wrong one pulls it away.

use gcrb::montecarlo::{empirical_bias, run_campaign, CampaignConfig};

fn main() -> gcrb::error::Result<()> {
    let phase = 3.0 * std::f64::consts::PI / 16.0;
    println!("phase_true = {phase:.4}, v_true = 0.95");
    println!("{:>6} {:>12} {:>12} {:>8}", "v_est", "bias", "std_err", "z");
    for v_est in [0.90, 0.93, 0.95, 0.97, 1.0] {
        let config = CampaignConfig {
            phase_true: phase,
            v_est,
            ..CampaignConfig::default()
        };
        let campaign = run_campaign(&config)?;
        let (bias, std_err) = empirical_bias(&campaign.records, phase)?;
        println!("{v_est:>6.2} {bias:>12.3e} {std_err:>12.3e} {:>8.2}", bias / std_err);
    }
    Ok(())
}
