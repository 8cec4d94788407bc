//! Monte Carlo bias diagnostics.
//!
//! A campaign simulates `n_experiments` independent experiments of `shots`
//! draws each at the true phase and visibility, reconstructs each posterior
//! with the (possibly miscalibrated) estimated visibility, and counts how
//! often the order-β bound evaluated at (φ*, v_est) is violated beyond a
//! `k σ_β` statistical window.
//!
//! Every experiment owns a ChaCha stream selected by its index, so results
//! do not depend on scheduling and campaigns run in parallel.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{self, gaussian_abs_moment, MomentSet, PhaseDomain, Prior, DEFAULT_BETAS};
use crate::error::{Error, Result};
use crate::fisher::{self, BoundValue};
use crate::model::{outcome_probs, ModelParams, OutcomeTally};

/// How the per-experiment uncertainty σ_β of Δ_β is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MomentUncertainty {
    /// Spread of |φ − φ̂|^β under the asymptotic Gaussian posterior,
    /// divided by √M: the standard error of Δ_β estimated from M shots.
    #[default]
    PerShot,
    /// Spread of |φ − φ̂|^β under the asymptotic Gaussian posterior.
    Posterior,
}

/// Which side of the bound counts as a violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WindowSide {
    /// Δ_β + kσ_β < bound.
    #[default]
    Below,
    /// |Δ_β − bound| > kσ_β.
    Both,
}

/// Statistical window around the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolationWindow {
    pub sigmas: f64,
    pub uncertainty: MomentUncertainty,
    pub side: WindowSide,
}

impl Default for ViolationWindow {
    fn default() -> Self {
        Self {
            sigmas: 3.0,
            uncertainty: MomentUncertainty::default(),
            side: WindowSide::default(),
        }
    }
}

impl ViolationWindow {
    pub fn is_violation(&self, delta: f64, bound: f64, sigma_beta: f64) -> bool {
        if bound.is_infinite() {
            return false;
        }
        let margin = self.sigmas * sigma_beta;
        match self.side {
            WindowSide::Below => delta + margin < bound,
            WindowSide::Both => (delta - bound).abs() > margin,
        }
    }
}

/// Parameters of one Monte Carlo campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub phase_true: f64,
    pub v_true: f64,
    pub v_est: f64,
    pub shots: u64,
    pub n_experiments: usize,
    pub betas: Vec<f64>,
    pub domain: PhaseDomain,
    pub seed: u64,
    #[serde(default)]
    pub window: ViolationWindow,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            phase_true: std::f64::consts::PI / 8.0,
            v_true: 0.95,
            v_est: 0.95,
            shots: 2000,
            n_experiments: 400,
            betas: DEFAULT_BETAS.to_vec(),
            domain: PhaseDomain::default(),
            seed: 0,
            window: ViolationWindow::default(),
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        ModelParams::new(self.v_true)?;
        ModelParams::new(self.v_est)?;
        if !self.phase_true.is_finite() {
            return Err(Error::Domain("phase_true must be finite".into()));
        }
        if self.shots == 0 {
            return Err(Error::Domain("shots must be at least 1".into()));
        }
        if self.n_experiments == 0 {
            return Err(Error::Domain("n_experiments must be at least 1".into()));
        }
        if self.betas.is_empty() {
            return Err(Error::Domain("beta list is empty".into()));
        }
        for &beta in &self.betas {
            fisher::conjugate_exponent(beta)?;
        }
        if !(self.window.sigmas >= 0.0) {
            return Err(Error::Domain("window width must be non-negative".into()));
        }
        PhaseDomain::new(
            self.domain.lower(),
            self.domain.upper(),
            self.domain.grid_points(),
        )?;
        Ok(())
    }
}

/// The RNG stream owned by one experiment.
pub fn experiment_rng(seed: u64, experiment_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(experiment_index);
    rng
}

/// M categorical draws over the four settings at (φ*, v_true).
pub fn sample_tally<R: Rng + ?Sized>(
    phase_true: f64,
    params: &ModelParams,
    shots: u64,
    rng: &mut R,
) -> OutcomeTally {
    let mut tally = OutcomeTally::default();
    if shots == 0 {
        return tally;
    }
    let index = WeightedIndex::new(outcome_probs(phase_true, params))
        .expect("outcome probabilities are non-negative and sum to one");
    for _ in 0..shots {
        tally.record(index.sample(rng));
    }
    tally
}

/// σ_β for a Gaussian posterior of width σ = 1/√(M F):
/// √(m_G(2β, σ) − m_G(β, σ)²).
pub fn sigma_beta(beta: f64, shots: u64, fisher_information: f64) -> Result<f64> {
    if !(fisher_information > 0.0) {
        return Err(Error::UndefinedRatio);
    }
    if shots == 0 {
        return Err(Error::Domain("sigma_beta needs at least one shot".into()));
    }
    let sigma = 1.0 / (shots as f64 * fisher_information).sqrt();
    Ok(gaussian_sigma_beta(beta, sigma))
}

fn gaussian_sigma_beta(beta: f64, sigma: f64) -> f64 {
    let m2b = gaussian_abs_moment(2.0 * beta, sigma);
    let mb = gaussian_abs_moment(beta, sigma);
    (m2b - mb * mb).max(0.0).sqrt()
}

/// Per-order bound and window half-width shared by every experiment of a
/// campaign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignReference {
    pub bounds: Vec<BoundValue>,
    /// Uncertainty σ_β of each Δ_β after the window's scaling; `inf` where
    /// F = 0.
    pub sigma_betas: Vec<f64>,
    pub fisher_information: f64,
}

impl CampaignReference {
    pub fn new(config: &CampaignConfig) -> Result<Self> {
        let params = ModelParams::new(config.v_est)?;
        let fisher_information = fisher::fisher(config.phase_true, &params)?;
        let bounds = config
            .betas
            .iter()
            .map(|&beta| fisher::crb_bound(beta, config.phase_true, &params, config.shots))
            .collect::<Result<Vec<_>>>()?;
        let scale = match config.window.uncertainty {
            MomentUncertainty::PerShot => 1.0 / (config.shots as f64).sqrt(),
            MomentUncertainty::Posterior => 1.0,
        };
        let sigma_betas = config
            .betas
            .iter()
            .map(|&beta| match sigma_beta(beta, config.shots, fisher_information) {
                Ok(s) => s * scale,
                Err(_) => f64::INFINITY,
            })
            .collect();
        Ok(Self {
            bounds,
            sigma_betas,
            fisher_information,
        })
    }
}

/// Everything computed for one simulated experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub index: u64,
    pub tally: OutcomeTally,
    /// `None` when the data were impossible under v_est.
    pub moments: Option<MomentSet>,
    pub gauss_ratios: Option<(f64, f64)>,
    pub bounds: Vec<BoundValue>,
    pub sigma_betas: Vec<f64>,
    /// (β, violated) in the config's β order.
    pub violations: Vec<(f64, bool)>,
}

impl ExperimentRecord {
    pub fn is_infeasible(&self) -> bool {
        self.moments.is_none()
    }

    pub fn violated(&self, beta: f64) -> Option<bool> {
        self.violations
            .iter()
            .find(|(b, _)| *b == beta)
            .map(|(_, v)| *v)
    }

    /// κ_β = Δ_β / bound.
    pub fn kappa(&self, beta: f64) -> Option<f64> {
        let delta = self.moments.as_ref()?.delta(beta)?;
        let bound = self.bounds.iter().find(|b| b.beta == beta)?;
        (!bound.is_unbounded()).then(|| delta / bound.bound_on_delta_beta)
    }
}

fn simulate(
    config: &CampaignConfig,
    reference: &CampaignReference,
    experiment_index: u64,
) -> Result<ExperimentRecord> {
    let truth = ModelParams::new(config.v_true)?;
    let assumed = ModelParams::new(config.v_est)?;
    let mut rng = experiment_rng(config.seed, experiment_index);
    let tally = sample_tally(config.phase_true, &truth, config.shots, &mut rng);

    let (moments, gauss_ratios) =
        match bayes::posterior(&tally, &assumed, &config.domain, &Prior::Flat) {
            Ok(post) => {
                let moments = bayes::moments(&post, &config.betas, config.shots)?;
                let delta_2 = match moments.delta(2.0) {
                    Some(d) => d,
                    None => bayes::absolute_moment(&post, 2.0)?,
                };
                let ratios = bayes::ratios_from(&post, &moments, delta_2).ok();
                (Some(moments), ratios)
            }
            Err(Error::InfeasibleData { .. }) => (None, None),
            Err(e) => return Err(e),
        };

    let violations = violation_flags(config, reference, moments.as_ref());

    Ok(ExperimentRecord {
        index: experiment_index,
        tally,
        moments,
        gauss_ratios,
        bounds: reference.bounds.clone(),
        sigma_betas: reference.sigma_betas.clone(),
        violations,
    })
}

/// Infeasible experiments (no moments) violate every order.
fn violation_flags(
    config: &CampaignConfig,
    reference: &CampaignReference,
    moments: Option<&MomentSet>,
) -> Vec<(f64, bool)> {
    config
        .betas
        .iter()
        .enumerate()
        .map(|(i, &beta)| {
            let violated = match moments {
                None => true,
                Some(m) => {
                    let delta = m.delta(beta).expect("moment computed for every beta");
                    config.window.is_violation(
                        delta,
                        reference.bounds[i].bound_on_delta_beta,
                        reference.sigma_betas[i],
                    )
                }
            };
            (beta, violated)
        })
        .collect()
}

/// Runs experiment `experiment_index` of the campaign; deterministic in
/// (seed, index).
pub fn run_experiment(config: &CampaignConfig, experiment_index: u64) -> Result<ExperimentRecord> {
    config.validate()?;
    let reference = CampaignReference::new(config)?;
    simulate(config, &reference, experiment_index)
}

/// Σ_β for each order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationStats {
    pub betas: Vec<f64>,
    pub violation_counts: Vec<usize>,
    pub n_experiments: usize,
    pub infeasible: usize,
}

impl ViolationStats {
    fn from_records(betas: &[f64], records: &[ExperimentRecord]) -> Self {
        let violation_counts = betas
            .iter()
            .enumerate()
            .map(|(i, _)| records.iter().filter(|r| r.violations[i].1).count())
            .collect();
        Self {
            betas: betas.to_vec(),
            violation_counts,
            n_experiments: records.len(),
            infeasible: records.iter().filter(|r| r.is_infeasible()).count(),
        }
    }

    /// Σ_β = violations / N_exp.
    pub fn fraction(&self, beta: f64) -> Option<f64> {
        let i = self.betas.iter().position(|b| *b == beta)?;
        Some(self.violation_counts[i] as f64 / self.n_experiments as f64)
    }

    pub fn fractions(&self) -> Vec<(f64, f64)> {
        self.betas
            .iter()
            .zip(&self.violation_counts)
            .map(|(&b, &c)| (b, c as f64 / self.n_experiments as f64))
            .collect()
    }
}

/// All records of a campaign plus the folded statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Campaign {
    pub config: CampaignConfig,
    pub reference: CampaignReference,
    pub records: Vec<ExperimentRecord>,
    pub stats: ViolationStats,
}

pub fn run_campaign(config: &CampaignConfig) -> Result<Campaign> {
    config.validate()?;
    let reference = CampaignReference::new(config)?;
    let records = (0..config.n_experiments as u64)
        .into_par_iter()
        .map(|i| simulate(config, &reference, i))
        .collect::<Result<Vec<_>>>()?;
    let stats = ViolationStats::from_records(&config.betas, &records);
    Ok(Campaign {
        config: config.clone(),
        reference,
        records,
        stats,
    })
}

pub fn violation_fractions(config: &CampaignConfig) -> Result<ViolationStats> {
    Ok(run_campaign(config)?.stats)
}

/// Mean of φ̂ − φ* over feasible records and its standard error.
pub fn empirical_bias(records: &[ExperimentRecord], phase_true: f64) -> Result<(f64, f64)> {
    let errors: Vec<f64> = records
        .iter()
        .filter_map(|r| r.moments.as_ref())
        .map(|m| m.estimate - phase_true)
        .collect();
    let n = errors.len();
    if n < 2 {
        return Err(Error::Domain(format!(
            "bias needs at least two feasible experiments, got {n}"
        )));
    }
    let mean = errors.iter().sum::<f64>() / n as f64;
    let variance = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok((mean, (variance / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small(phase: f64, v_est: f64) -> CampaignConfig {
        CampaignConfig {
            phase_true: phase,
            v_est,
            n_experiments: 40,
            domain: PhaseDomain::new(0.0, PI / 2.0, 1024).unwrap(),
            ..CampaignConfig::default()
        }
    }

    #[test]
    fn sample_tally_examples() {
        let mut rng = experiment_rng(1, 0);
        let p = ModelParams::new(1.0).unwrap();
        assert_eq!(sample_tally(0.3, &p, 0, &mut rng).total(), 0);
        let t = sample_tally(0.0, &p, 1000, &mut rng);
        assert_eq!(t.total(), 1000);
        assert_eq!(t.counts()[2], 0);
    }

    #[test]
    fn sigma_beta_examples() {
        let (m, f) = (2000, 1.805);
        let sigma = 1.0 / (2000.0 * 1.805f64).sqrt();
        let s2 = sigma_beta(2.0, m, f).unwrap();
        assert!((s2 - 2f64.sqrt() * sigma * sigma).abs() < 1e-12 * s2);
        let s3 = sigma_beta(3.0, m, f).unwrap();
        let want = (15.0 - 8.0 / PI).sqrt() * sigma.powi(3);
        assert!((s3 - want).abs() < 1e-10 * want);
        for beta in [1.5, 2.0, 3.0, 4.0] {
            assert!(sigma_beta(beta, 1 << 40, 1e30).unwrap() < 1e-30);
        }
        assert!(sigma_beta(2.0, 10, 0.0).is_err());
    }

    #[test]
    fn window_sides() {
        let below = ViolationWindow::default();
        assert!(below.is_violation(0.5, 1.0, 0.1));
        assert!(!below.is_violation(0.8, 1.0, 0.1));
        assert!(!below.is_violation(2.0, 1.0, 0.1));
        assert!(!below.is_violation(0.0, f64::INFINITY, 0.1));
        let both = ViolationWindow {
            side: WindowSide::Both,
            ..below
        };
        assert!(both.is_violation(2.0, 1.0, 0.1));
    }

    #[test]
    fn experiment_is_deterministic() {
        let config = small(PI / 8.0, 0.95);
        let a = run_experiment(&config, 7).unwrap();
        let b = run_experiment(&config, 7).unwrap();
        assert_eq!(a, b);
        let c = run_experiment(&config, 8).unwrap();
        assert_ne!(a.tally, c.tally);
    }

    #[test]
    fn campaign_stats_are_exact_fractions() {
        let campaign = run_campaign(&small(PI / 4.0, 1.0)).unwrap();
        let stats = &campaign.stats;
        for (i, &beta) in stats.betas.iter().enumerate() {
            let f = stats.fraction(beta).unwrap();
            assert_eq!(f, stats.violation_counts[i] as f64 / 40.0);
            assert!((0.0..=1.0).contains(&f));
        }
        // records agree with a recomputation of their flags
        for r in &campaign.records {
            let m = r.moments.as_ref().unwrap();
            for (i, &(beta, flagged)) in r.violations.iter().enumerate() {
                let recomputed = campaign.config.window.is_violation(
                    m.delta(beta).unwrap(),
                    r.bounds[i].bound_on_delta_beta,
                    r.sigma_betas[i],
                );
                assert_eq!(flagged, recomputed);
            }
        }
    }

    #[test]
    fn single_experiment_fractions_are_binary() {
        let config = CampaignConfig {
            n_experiments: 1,
            ..small(PI / 4.0, 1.0)
        };
        for (_, f) in violation_fractions(&config).unwrap().fractions() {
            assert!(f == 0.0 || f == 1.0);
        }
    }

    #[test]
    fn infeasible_experiments_count_as_violations() {
        let config = small(PI / 8.0, 1.0);
        let reference = CampaignReference::new(&config).unwrap();
        let flags = violation_flags(&config, &reference, None);
        assert_eq!(flags.len(), config.betas.len());
        assert!(flags.iter().all(|(_, v)| *v));
    }

    #[test]
    fn bias_of_exact_estimates_is_zero() {
        let record = |estimate| ExperimentRecord {
            index: 0,
            tally: OutcomeTally::default(),
            moments: Some(MomentSet {
                estimate,
                deltas: vec![],
                shots: 1,
            }),
            gauss_ratios: None,
            bounds: vec![],
            sigma_betas: vec![],
            violations: vec![],
        };
        let records = vec![record(0.4), record(0.4), record(0.4)];
        assert_eq!(empirical_bias(&records, 0.4).unwrap(), (0.0, 0.0));
        assert!(empirical_bias(&records[..1], 0.4).is_err());
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = CampaignConfig::default();
        c.betas = vec![1.0];
        assert!(c.validate().is_err());
        let c = CampaignConfig {
            v_est: 1.2,
            ..CampaignConfig::default()
        };
        assert!(run_campaign(&c).is_err());
    }
}
