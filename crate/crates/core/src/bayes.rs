//! Grid posterior over the phase, the Bayesian estimator and its absolute
//! central moments, and the saturation/Gaussianity diagnostics built on them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::{bound_from_information, BoundValue};
use crate::model::{LikelihoodModel, ModelParams, NoonFourSetting, OutcomeTally};
use crate::quadrature::{abs_power_moment, trapezoid, trapezoid_weighted};

/// Default number of grid points.
pub const DEFAULT_GRID_POINTS: usize = 4096;
/// Smallest grid accepted.
pub const MIN_GRID_POINTS: usize = 64;
/// Moment orders tracked by default.
pub const DEFAULT_BETAS: [f64; 4] = [1.5, 2.0, 3.0, 4.0];

/// Prior support and its discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseDomain {
    lower: f64,
    upper: f64,
    grid_points: usize,
}

impl PhaseDomain {
    pub fn new(lower: f64, upper: f64, grid_points: usize) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() || lower >= upper {
            return Err(Error::Domain(format!("domain [{lower}, {upper}] is empty")));
        }
        // one model period, with room for a rounded π literal
        if upper - lower > PI * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "domain [{lower}, {upper}] is wider than one period (π)"
            )));
        }
        if grid_points < MIN_GRID_POINTS {
            return Err(Error::Domain(format!(
                "grid_points = {grid_points} below minimum {MIN_GRID_POINTS}"
            )));
        }
        Ok(Self {
            lower,
            upper,
            grid_points,
        })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn spacing(&self) -> f64 {
        self.width() / (self.grid_points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.grid_points {
            self.upper
        } else {
            self.lower + i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.grid_points).map(|i| self.node(i))
    }

    pub fn contains(&self, phase: f64) -> bool {
        (self.lower..=self.upper).contains(&phase)
    }

    pub fn with_grid_points(&self, grid_points: usize) -> Result<Self> {
        Self::new(self.lower, self.upper, grid_points)
    }

    /// Same width, re-centered on `phase`.
    pub fn centered_on(&self, phase: f64) -> Result<Self> {
        let half = 0.5 * self.width();
        Self::new(phase - half, phase + half, self.grid_points)
    }
}

impl Default for PhaseDomain {
    /// Flat support on [0, π/2] with the default resolution.
    fn default() -> Self {
        Self {
            lower: 0.0,
            upper: PI / 2.0,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

/// Prior density over the domain.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Prior {
    #[default]
    Flat,
    /// Unnormalized non-negative values at each grid node.
    Tabulated(Vec<f64>),
}

/// Normalized posterior density sampled on a [`PhaseDomain`].
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    domain: PhaseDomain,
    densities: Vec<f64>,
}

impl PosteriorGrid {
    /// Normalizes `densities` (non-negative, one per node) by trapezoidal
    /// quadrature.
    pub fn from_unnormalized(domain: PhaseDomain, mut densities: Vec<f64>) -> Result<Self> {
        if densities.len() != domain.grid_points() {
            return Err(Error::Domain(format!(
                "{} densities for {} grid points",
                densities.len(),
                domain.grid_points()
            )));
        }
        if densities.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::Domain("densities must be finite and non-negative".into()));
        }
        let mass = trapezoid(&densities, domain.spacing());
        if !(mass > 0.0) {
            return Err(Error::Domain("density has zero mass".into()));
        }
        densities.iter_mut().for_each(|d| *d /= mass);
        Ok(Self { domain, densities })
    }

    pub fn domain(&self) -> &PhaseDomain {
        &self.domain
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn integral(&self) -> f64 {
        trapezoid(&self.densities, self.domain.spacing())
    }
}

/// Posterior for an arbitrary model, p(φ|x) ∝ p(φ) Π p(x_i|φ).
pub fn posterior_for<M: LikelihoodModel + ?Sized>(
    model: &M,
    counts: &[u64],
    params: &ModelParams,
    domain: &PhaseDomain,
    prior: &Prior,
) -> Result<PosteriorGrid> {
    let log_prior = |i: usize| match prior {
        Prior::Flat => 0.0,
        Prior::Tabulated(values) => values[i].ln(),
    };
    if let Prior::Tabulated(values) = prior {
        if values.len() != domain.grid_points() {
            return Err(Error::Domain(format!(
                "tabulated prior has {} values for {} grid points",
                values.len(),
                domain.grid_points()
            )));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain("prior values must be finite and non-negative".into()));
        }
    }

    let mut log_density: Vec<f64> = domain
        .nodes()
        .enumerate()
        .map(|(i, phase)| log_prior(i) + model.log_likelihood(counts, phase, params))
        .collect();
    let peak = log_density.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return Err(Error::InfeasibleData {
            visibility: params.visibility(),
        });
    }
    log_density.iter_mut().for_each(|l| *l = (*l - peak).exp());
    PosteriorGrid::from_unnormalized(*domain, log_density)
}

/// Posterior under the N00N four-setting model.
pub fn posterior(
    tally: &OutcomeTally,
    params: &ModelParams,
    domain: &PhaseDomain,
    prior: &Prior,
) -> Result<PosteriorGrid> {
    posterior_for(&NoonFourSetting, tally.counts(), params, domain, prior)
}

/// Posterior mean, the Bayesian estimator φ̂.
pub fn estimate(post: &PosteriorGrid) -> f64 {
    let d = post.domain();
    let mean = trapezoid_weighted(post.densities(), d.lower(), d.spacing(), |x| x);
    mean.clamp(d.lower(), d.upper())
}

fn moment_about(post: &PosteriorGrid, center: f64, beta: f64) -> f64 {
    let d = post.domain();
    abs_power_moment(post.densities(), d.lower(), d.spacing(), center, beta).max(0.0)
}

/// Δ_β = ∫ |φ − φ̂|^β p(φ|x) dφ.
pub fn absolute_moment(post: &PosteriorGrid, beta: f64) -> Result<f64> {
    if !(beta >= 1.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("moment order {beta} must be at least 1")));
    }
    Ok(moment_about(post, estimate(post), beta))
}

/// Estimator and absolute central moments of one posterior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSet {
    pub estimate: f64,
    /// (β, Δ_β) in the order requested.
    pub deltas: Vec<(f64, f64)>,
    pub shots: u64,
}

impl MomentSet {
    pub fn delta(&self, beta: f64) -> Option<f64> {
        self.deltas.iter().find(|(b, _)| *b == beta).map(|(_, d)| *d)
    }
}

pub fn moments(post: &PosteriorGrid, betas: &[f64], shots: u64) -> Result<MomentSet> {
    let estimate = estimate(post);
    let deltas = betas
        .iter()
        .map(|&beta| {
            if !(beta >= 1.0) || !beta.is_finite() {
                return Err(Error::Domain(format!("moment order {beta} must be at least 1")));
            }
            Ok((beta, moment_about(post, estimate, beta)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentSet {
        estimate,
        deltas,
        shots,
    })
}

/// E|X − μ|^β for X ~ N(μ, σ²): σ^β 2^(β/2) Γ((β+1)/2) / √π.
pub fn gaussian_abs_moment(beta: f64, sigma: f64) -> f64 {
    sigma.powf(beta) * 2f64.powf(beta / 2.0) * libm::tgamma((beta + 1.0) / 2.0) / PI.sqrt()
}

/// κ_β = Δ_β M^(β/2) f_α^(β/α); below 1 the order-β bound is violated.
pub fn kappa(delta_beta: f64, f_alpha: f64, shots: u64, beta: f64) -> Result<f64> {
    let alpha = crate::fisher::conjugate_exponent(beta)?;
    if !(f_alpha > 0.0) {
        return Err(Error::UndefinedRatio);
    }
    if shots == 0 {
        return Err(Error::Domain("kappa needs at least one shot".into()));
    }
    Ok(delta_beta / bound_from_information(beta, alpha, f_alpha, shots))
}

/// (Δ_3 / Δ_3^G, Δ_4 / Δ_4^G) with the Gaussian reference at σ = √Δ_2.
pub fn gaussianity_ratios(post: &PosteriorGrid) -> Result<(f64, f64)> {
    let center = estimate(post);
    ratios_about(post, center, moment_about(post, center, 2.0))
}

/// Ratios reusing Δ_3 and Δ_4 when the moment set already holds them.
pub fn ratios_from(post: &PosteriorGrid, moments: &MomentSet, delta_2: f64) -> Result<(f64, f64)> {
    let sigma = delta_2.sqrt();
    let reference_3 = gaussian_abs_moment(3.0, sigma);
    let reference_4 = gaussian_abs_moment(4.0, sigma);
    if !(reference_4 > 0.0) || !(reference_3 > 0.0) {
        return Err(Error::DegeneratePosterior);
    }
    let center = moments.estimate;
    let delta_3 = moments
        .delta(3.0)
        .unwrap_or_else(|| moment_about(post, center, 3.0));
    let delta_4 = moments
        .delta(4.0)
        .unwrap_or_else(|| moment_about(post, center, 4.0));
    Ok((delta_3 / reference_3, delta_4 / reference_4))
}

fn ratios_about(post: &PosteriorGrid, center: f64, delta_2: f64) -> Result<(f64, f64)> {
    let sigma = delta_2.sqrt();
    let reference_3 = gaussian_abs_moment(3.0, sigma);
    let reference_4 = gaussian_abs_moment(4.0, sigma);
    if !(reference_4 > 0.0) || !(reference_3 > 0.0) {
        return Err(Error::DegeneratePosterior);
    }
    Ok((
        moment_about(post, center, 3.0) / reference_3,
        moment_about(post, center, 4.0) / reference_4,
    ))
}

/// κ_β per order plus the two Gaussianity ratios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaturationReport {
    /// (β, κ_β); κ is `None` where f_α = 0.
    pub kappas: Vec<(f64, Option<f64>)>,
    pub gauss_ratio_3: f64,
    pub gauss_ratio_4: f64,
}

impl SaturationReport {
    pub fn kappa(&self, beta: f64) -> Option<f64> {
        self.kappas
            .iter()
            .find(|(b, _)| *b == beta)
            .and_then(|(_, k)| *k)
    }
}

/// Pairs each moment with the bound of the same order.
pub fn saturation(
    post: &PosteriorGrid,
    moments: &MomentSet,
    bounds: &[BoundValue],
) -> Result<SaturationReport> {
    let kappas = moments
        .deltas
        .iter()
        .filter(|(beta, _)| *beta > 1.0)
        .map(|&(beta, delta)| {
            let bound = bounds
                .iter()
                .find(|b| b.beta == beta)
                .ok_or_else(|| Error::Domain(format!("no bound for beta = {beta}")))?;
            Ok((beta, kappa(delta, bound.f_alpha, moments.shots, beta).ok()))
        })
        .collect::<Result<Vec<_>>>()?;
    let delta_2 = match moments.delta(2.0) {
        Some(d) => d,
        None => moment_about(post, moments.estimate, 2.0),
    };
    let (gauss_ratio_3, gauss_ratio_4) = ratios_from(post, moments, delta_2)?;
    Ok(SaturationReport {
        kappas,
        gauss_ratio_3,
        gauss_ratio_4,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::{crb_bound, fisher};

    fn v(x: f64) -> ModelParams {
        ModelParams::new(x).unwrap()
    }

    fn gaussian_grid(center: f64, sigma: f64) -> PosteriorGrid {
        let domain = PhaseDomain::default();
        let values = domain
            .nodes()
            .map(|x| (-0.5 * ((x - center) / sigma).powi(2)).exp())
            .collect();
        PosteriorGrid::from_unnormalized(domain, values).unwrap()
    }

    fn uniform() -> PosteriorGrid {
        posterior(&OutcomeTally::default(), &v(0.95), &PhaseDomain::default(), &Prior::Flat).unwrap()
    }

    #[test]
    fn domain_validation() {
        assert!(PhaseDomain::new(0.0, PI / 2.0, 64).is_ok());
        assert!(PhaseDomain::new(0.0, PI, 64).is_ok());
        assert!(PhaseDomain::new(0.0, 3.5, 64).is_err());
        assert!(PhaseDomain::new(1.0, 1.0, 64).is_err());
        assert!(PhaseDomain::new(0.0, 1.0, 63).is_err());
        let d = PhaseDomain::default();
        assert_eq!(d.node(d.grid_points() - 1), PI / 2.0);
    }

    #[test]
    fn empty_tally_gives_prior() {
        let post = uniform();
        for d in post.densities() {
            assert!((d - 2.0 / PI).abs() < 1e-12);
        }
        assert!((post.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concentrated_tally_peaks_at_lower_boundary() {
        let tally = OutcomeTally::new([50, 0, 0, 0]);
        let post = posterior(&tally, &v(1.0), &PhaseDomain::default(), &Prior::Flat).unwrap();
        let argmax = post
            .densities()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax, 0);
    }

    #[test]
    fn infeasible_data() {
        // the only phase with prior mass is φ = 0, where setting 2 is impossible at v = 1
        let domain = PhaseDomain::new(0.0, 1e-3, 64).unwrap();
        let mut prior = vec![0.0; 64];
        prior[0] = 1.0;
        let tally = OutcomeTally::new([0, 0, 1, 0]);
        let post = posterior(&tally, &v(1.0), &domain, &Prior::Tabulated(prior));
        assert!(matches!(post, Err(Error::InfeasibleData { .. })));
        assert!(posterior(&tally, &v(1.0), &domain, &Prior::Flat).is_ok());
    }

    #[test]
    fn uniform_moments() {
        let post = uniform();
        assert!((estimate(&post) - PI / 4.0).abs() < 1e-12);
        let l = PI / 2.0;
        assert!((absolute_moment(&post, 2.0).unwrap() - l * l / 12.0).abs() < 1e-7);
        assert!((absolute_moment(&post, 1.0).unwrap() - l / 4.0).abs() < 1e-7);
        assert!(absolute_moment(&post, 0.5).is_err());
    }

    #[test]
    fn gaussian_moments() {
        let sigma = 0.01;
        let post = gaussian_grid(PI / 4.0, sigma);
        assert!((estimate(&post) - PI / 4.0).abs() < 1e-12);
        let d3 = absolute_moment(&post, 3.0).unwrap();
        let want = 2.0 * (2.0 / PI).sqrt() * sigma.powi(3);
        assert!((d3 - want).abs() < 1e-4 * want);
        let (r3, r4) = gaussianity_ratios(&post).unwrap();
        assert!((r3 - 1.0).abs() < 1e-3 && (r4 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn narrow_peak_estimate() {
        let post = gaussian_grid(PI / 8.0, 0.02);
        assert!((estimate(&post) - PI / 8.0).abs() < PI / 2.0 / 4095.0);
    }

    #[test]
    fn gaussian_reference_moments() {
        assert!((gaussian_abs_moment(2.0, 0.3) - 0.09).abs() < 1e-15);
        assert!((gaussian_abs_moment(3.0, 1.0) - 2.0 * (2.0 / PI).sqrt()).abs() < 1e-12);
        assert!((gaussian_abs_moment(4.0, 1.0) - 3.0).abs() < 1e-12);
        assert_eq!(gaussian_abs_moment(3.0, 0.0), 0.0);
    }

    #[test]
    fn uniform_gaussianity() {
        let (_, r4) = gaussianity_ratios(&uniform()).unwrap();
        assert!((r4 - 0.6).abs() < 1e-6);
    }

    #[test]
    fn degenerate_posterior() {
        let post = PosteriorGrid {
            domain: PhaseDomain::default(),
            densities: vec![0.0; DEFAULT_GRID_POINTS],
        };
        assert_eq!(gaussianity_ratios(&post), Err(Error::DegeneratePosterior));
    }

    #[test]
    fn kappa_examples() {
        let bound = crb_bound(3.0, 0.4, &v(0.9), 500).unwrap();
        let k = kappa(bound.bound_on_delta_beta, bound.f_alpha, 500, 3.0).unwrap();
        assert!((k - 1.0).abs() < 1e-12);

        let f = fisher(0.4, &v(0.9)).unwrap();
        let k = kappa(2.0 / (500.0 * f), f, 500, 2.0).unwrap();
        assert!((k - 2.0).abs() < 1e-12);

        assert_eq!(kappa(1e-3, 0.0, 500, 2.0), Err(Error::UndefinedRatio));
    }

    #[test]
    fn saturation_report_pairs_orders() {
        let tally = OutcomeTally::new([500, 700, 500, 300]);
        let params = v(0.95);
        let post = posterior(&tally, &params, &PhaseDomain::default(), &Prior::Flat).unwrap();
        let m = moments(&post, &DEFAULT_BETAS, tally.total()).unwrap();
        let bounds: Vec<_> = DEFAULT_BETAS
            .iter()
            .map(|&b| crb_bound(b, m.estimate, &params, tally.total()).unwrap())
            .collect();
        let report = saturation(&post, &m, &bounds).unwrap();
        assert_eq!(report.kappas.len(), 4);
        for (beta, k) in &report.kappas {
            let want = m.delta(*beta).unwrap()
                / bounds.iter().find(|b| b.beta == *beta).unwrap().bound_on_delta_beta;
            assert!((k.unwrap() - want).abs() < 1e-12 * want);
        }
    }
}
