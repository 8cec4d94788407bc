//! Discrete-outcome likelihood models.
//!
//! The shipped instance is the two-photon N00N interferometer read out with
//! four half-wave-plate settings θ ∈ {0, π/16, π/8, 3π/16}. The four settings
//! form the outcome alphabet:
//!
//! ```text
//! p(θ | φ) = ¼ (1 + v cos(8θ − 2φ))
//! ```
//!
//! which sums to one over θ for every φ and v.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of measurement settings of the N00N readout.
pub const SETTING_COUNT: usize = 4;

/// One of the four measurement settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Setting(u8);

impl Setting {
    pub const ALL: [Setting; SETTING_COUNT] = [Setting(0), Setting(1), Setting(2), Setting(3)];

    pub fn new(index: usize) -> Result<Self> {
        if index < SETTING_COUNT {
            Ok(Setting(index as u8))
        } else {
            Err(Error::Domain(format!("setting index {index} not in 0..4")))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Wave-plate angle, `index · π/16`.
    pub fn angle(self) -> f64 {
        self.0 as f64 * PI / 16.0
    }
}

/// Visibility of the interferometer fringe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    visibility: f64,
}

impl ModelParams {
    /// Largest visibility used by the generic information sum; removes the
    /// 0/0 in the score at v = 1.
    pub const INFORMATION_CLAMP: f64 = 1.0 - 1e-9;

    pub fn new(visibility: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&visibility) {
            Ok(Self { visibility })
        } else {
            Err(Error::Visibility(visibility))
        }
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    pub(crate) fn clamped_for_information(&self) -> Self {
        Self {
            visibility: self.visibility.min(Self::INFORMATION_CLAMP),
        }
    }
}

/// Per-setting counts of one experiment; the sufficient statistic of the
/// likelihood.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutcomeTally {
    counts: [u64; SETTING_COUNT],
}

impl OutcomeTally {
    pub fn new(counts: [u64; SETTING_COUNT]) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u64; SETTING_COUNT] {
        &self.counts
    }

    pub fn count(&self, setting: Setting) -> u64 {
        self.counts[setting.index()]
    }

    /// Total number of shots M.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub(crate) fn record(&mut self, outcome: usize) {
        self.counts[outcome] += 1;
    }
}

/// Below this probability an information summand is dropped.
const PROBABILITY_FLOOR: f64 = 1e-300;

/// A parametric model over a finite outcome alphabet.
///
/// `prob` must sum to one over `0..outcome_count()` and `prob_derivative`
/// must be the exact derivative of `prob` with respect to the phase.
pub trait LikelihoodModel: Sync {
    fn name(&self) -> &'static str;

    fn outcome_count(&self) -> usize;

    fn prob(&self, outcome: usize, phase: f64, params: &ModelParams) -> f64;

    fn prob_derivative(&self, outcome: usize, phase: f64, params: &ModelParams) -> f64;

    /// ∂/∂φ log p.
    fn score(&self, outcome: usize, phase: f64, params: &ModelParams) -> Result<f64> {
        let p = self.prob(outcome, phase, params);
        if p <= 0.0 {
            return Err(Error::SingularScore);
        }
        Ok(self.prob_derivative(outcome, phase, params) / p)
    }

    /// p |∂_φ log p|^α for one outcome, evaluated as |∂p|^α p^(1−α) with the
    /// visibility clamped below 1. Outcomes with vanishing p and ∂p add zero.
    fn information_summand(&self, outcome: usize, alpha: f64, phase: f64, params: &ModelParams) -> f64 {
        let params = params.clamped_for_information();
        let p = self.prob(outcome, phase, &params);
        let dp = self.prob_derivative(outcome, phase, &params).abs();
        if dp == 0.0 || p < PROBABILITY_FLOOR {
            return 0.0;
        }
        dp.powf(alpha) * p.powf(1.0 - alpha)
    }

    /// Σ counts · log p, with 0·log 0 = 0 and `-inf` for an observed
    /// impossible outcome.
    fn log_likelihood(&self, counts: &[u64], phase: f64, params: &ModelParams) -> f64 {
        let mut total = 0.0;
        for (outcome, &n) in counts.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let p = self.prob(outcome, phase, params);
            if p <= 0.0 {
                return f64::NEG_INFINITY;
            }
            total += n as f64 * p.ln();
        }
        total
    }
}

/// Two-photon N00N interferometer with the four-setting readout.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NoonFourSetting;

impl NoonFourSetting {
    /// Name used in configuration files.
    pub const NAME: &'static str = "noon2-4setting";
}

fn fringe_argument(outcome: usize, phase: f64) -> f64 {
    8.0 * (outcome as f64 * PI / 16.0) - 2.0 * phase
}

impl LikelihoodModel for NoonFourSetting {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn outcome_count(&self) -> usize {
        SETTING_COUNT
    }

    fn prob(&self, outcome: usize, phase: f64, params: &ModelParams) -> f64 {
        // 1 + v·cos can round to a tiny negative number at v = 1
        (0.25 * (1.0 + params.visibility * fringe_argument(outcome, phase).cos())).max(0.0)
    }

    fn prob_derivative(&self, outcome: usize, phase: f64, params: &ModelParams) -> f64 {
        0.5 * params.visibility * fringe_argument(outcome, phase).sin()
    }

    fn information_summand(&self, outcome: usize, alpha: f64, phase: f64, params: &ModelParams) -> f64 {
        if params.visibility < ModelParams::INFORMATION_CLAMP {
            let p = self.prob(outcome, phase, params);
            let dp = self.prob_derivative(outcome, phase, params).abs();
            if dp == 0.0 || p < PROBABILITY_FLOOR {
                return 0.0;
            }
            return dp.powf(alpha) * p.powf(1.0 - alpha);
        }
        // at v = 1, p = cos²(x/2)/2 and |∂p| = |sin(x/2) cos(x/2)|, so the
        // summand is continuous in φ through the zeros of p
        let (s, c) = (0.5 * fringe_argument(outcome, phase)).sin_cos();
        let (s, c) = (s.abs(), c.abs());
        if s == 0.0 {
            return 0.0;
        }
        2f64.powf(alpha - 1.0) * s.powf(alpha) * c.powf(2.0 - alpha)
    }

    fn log_likelihood(&self, counts: &[u64], phase: f64, params: &ModelParams) -> f64 {
        // the four fringe arguments are quarter periods apart:
        // cos = (c, s, −c, −s) with (s, c) = sincos(2φ)
        let (s, c) = (2.0 * phase).sin_cos();
        let v = params.visibility;
        let fringe = [v * c, v * s, -v * c, -v * s];
        let mut total = 0.0;
        for (&n, f) in counts.iter().zip(fringe) {
            if n == 0 {
                continue;
            }
            let p = 0.25 * (1.0 + f);
            if p <= 0.0 {
                return f64::NEG_INFINITY;
            }
            total += n as f64 * p.ln();
        }
        total
    }
}

/// p(θ | φ) for the N00N model.
pub fn outcome_prob(setting: Setting, phase: f64, params: &ModelParams) -> f64 {
    NoonFourSetting.prob(setting.index(), phase, params)
}

/// All four outcome probabilities at `phase`.
pub fn outcome_probs(phase: f64, params: &ModelParams) -> [f64; SETTING_COUNT] {
    Setting::ALL.map(|s| outcome_prob(s, phase, params))
}

/// Log-likelihood of a whole experiment under the N00N model.
pub fn log_likelihood(tally: &OutcomeTally, phase: f64, params: &ModelParams) -> f64 {
    NoonFourSetting.log_likelihood(tally.counts(), phase, params)
}

/// Analytic derivative of log p(θ | φ) with respect to φ.
pub fn score(setting: Setting, phase: f64, params: &ModelParams) -> Result<f64> {
    NoonFourSetting.score(setting.index(), phase, params)
}
