//! Generalized Cramér-Rao bounds across one period of the fringe.
//!
//! Prints f_α and the scaled bound f_α^(−1/α) for each β, which is the
//! per-shot floor on Δ_β^(1/β) · √M.
//!
//! ```text
//! cargo run --example bounds_table -- 0.95
//! ```

use std::f64::consts::PI;

use gcrb::bayes::DEFAULT_BETAS;
use gcrb::fisher::{crb_bound, fisher};
use gcrb::model::ModelParams;

fn main() -> gcrb::error::Result<()> {
    let visibility: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("visibility must be a number"))
        .unwrap_or(0.95);
    let params = ModelParams::new(visibility)?;
    let shots = 2000;

    print!("{:>8} {:>10}", "phase", "F");
    for beta in DEFAULT_BETAS {
        print!(" {:>12}", format!("b={beta}"));
    }
    println!();
    for step in 0..=16 {
        let phase = step as f64 * PI / 32.0;
        print!("{phase:>8.4} {:>10.5}", fisher(phase, &params)?);
        for beta in DEFAULT_BETAS {
            print!(" {:>12.5}", crb_bound(beta, phase, &params, shots)?.scaled_bound());
        }
        println!();
    }
    println!("\ninformation is largest at odd multiples of pi/8 and smallest at multiples of pi/4");
    Ok(())
}
