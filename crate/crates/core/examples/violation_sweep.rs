//! Fraction of experiments violating each bound as the assumed visibility
//! sweeps past the true one, averaged over seeds.
//!
//! ```text
//! cargo run --release --example violation_sweep -- 0.7853981633974483 5
//! ```

use std::f64::consts::PI;

use gcrb::bayes::DEFAULT_BETAS;
use gcrb::montecarlo::{violation_fractions, CampaignConfig};

fn main() -> gcrb::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let phase: f64 = args.next().map_or(PI / 8.0, |s| s.parse().expect("phase"));
    let seeds: u64 = args.next().map_or(3, |s| s.parse().expect("seed count"));

    println!("phase_true = {phase:.4}, v_true = 0.95, {seeds} seeds of 400 experiments");
    print!("{:>6}", "v_est");
    for beta in DEFAULT_BETAS {
        print!(" {:>8}", format!("S{beta}"));
    }
    println!();
    for step in 0..=10 {
        let v_est = 0.90 + 0.01 * step as f64;
        let mut mean = [0.0; 4];
        for seed in 0..seeds {
            let config = CampaignConfig {
                phase_true: phase,
                v_est,
                seed,
                ..CampaignConfig::default()
            };
            let stats = violation_fractions(&config)?;
            for (slot, beta) in mean.iter_mut().zip(DEFAULT_BETAS) {
                *slot += stats.fraction(beta).unwrap_or(f64::NAN) / seeds as f64;
            }
        }
        print!("{v_est:>6.2}");
        for s in mean {
            print!(" {s:>8.3}");
        }
        println!();
    }
    Ok(())
}
