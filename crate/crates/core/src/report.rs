//! Table builders and writers behind the `simulate`, `bounds` and `analyze`
//! commands, plus the run manifest that accompanies every output file.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bayes::{self, gaussian_abs_moment, PhaseDomain, Prior};
use crate::error::{Error, Result};
use crate::fisher;
use crate::ingest::CountsRecord;
use crate::model::ModelParams;
use crate::montecarlo::{self, CampaignConfig};

/// Parses `a:b:step` (inclusive) or a single number.
pub fn parse_sweep(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Domain(format!("invalid value or range `{text}`, expected x or a:b:step"));
    let parts: Vec<&str> = text.split(':').collect();
    let number = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        [single] => Ok(vec![number(single)?]),
        [start, stop, step] => {
            let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
            if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
                return Err(bad());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            // rounding keeps 0.9 + 5·0.01 printing as 0.95
            Ok((0..count)
                .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        _ => Err(bad()),
    }
}

/// Parses `lo:hi`.
pub fn parse_interval(text: &str) -> Result<(f64, f64)> {
    let bad = || Error::Domain(format!("invalid interval `{text}`, expected lo:hi"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    Ok((lo, hi))
}

/// Records how an output file was produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub model: String,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, config: &C, seed: Option<u64>) -> Result<Self> {
        Ok(Self {
            command: command.to_owned(),
            config: serde_json::to_value(config).map_err(|e| Error::Io(e.to_string()))?,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            model: crate::model::NoonFourSetting::NAME.to_owned(),
            outputs: Vec::new(),
        })
    }

    /// `results.csv` → `results.manifest.json`.
    pub fn path_for(output: &Path) -> PathBuf {
        output.with_extension("manifest.json")
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Writes `bytes` to `path` through a sibling temporary file so a failed run
/// never leaves a partial file behind.
pub fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()))
        .and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Writes the table to `output` and its manifest next to it.
pub fn write_with_manifest(output: &Path, table: &[u8], manifest: &mut RunManifest) -> Result<()> {
    let manifest_path = RunManifest::path_for(output);
    manifest.outputs = vec![output.to_path_buf(), manifest_path.clone()];
    let json = manifest.to_json()?;
    write_atomically(output, table)?;
    write_atomically(&manifest_path, json.as_bytes())
}

fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> Result<Vec<u8>> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    writer.write_record(header).map_err(csv_err)?;
    for row in rows {
        writer.serialize(row).map_err(csv_err)?;
    }
    writer.into_inner().map_err(|e| Error::Io(e.to_string()))
}

/// One row of a Σ_β sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateRow {
    pub v_est: f64,
    pub beta: f64,
    pub sigma_frac: f64,
    pub n_violations: usize,
    pub n_experiments: usize,
}

pub const SIMULATE_HEADER: [&str; 5] = ["v_est", "beta", "sigma_frac", "n_violations", "n_experiments"];

/// Runs one campaign per estimated visibility; the rest of `base` is shared.
pub fn simulate_table(base: &CampaignConfig, v_ests: &[f64]) -> Result<Vec<SimulateRow>> {
    if v_ests.is_empty() {
        return Err(Error::Domain("v_est sweep is empty".into()));
    }
    let mut rows = Vec::with_capacity(v_ests.len() * base.betas.len());
    for &v_est in v_ests {
        let config = CampaignConfig {
            v_est,
            ..base.clone()
        };
        let stats = montecarlo::violation_fractions(&config)?;
        for (i, (beta, fraction)) in stats.fractions().into_iter().enumerate() {
            rows.push(SimulateRow {
                v_est,
                beta,
                sigma_frac: fraction,
                n_violations: stats.violation_counts[i],
                n_experiments: stats.n_experiments,
            });
        }
    }
    Ok(rows)
}

pub fn simulate_csv(rows: &[SimulateRow]) -> Result<Vec<u8>> {
    to_csv(rows, &SIMULATE_HEADER)
}

/// Order-β bound at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRow {
    pub phase: f64,
    pub beta: f64,
    pub alpha: f64,
    pub f_alpha: f64,
    pub bound_delta_beta: f64,
    pub bound_scaled: f64,
}

pub const BOUNDS_HEADER: [&str; 6] = ["phase", "beta", "alpha", "f_alpha", "bound_delta_beta", "bound_scaled"];

/// Bounds for every (phase, β) pair; `bound_scaled` is the bound on
/// Δ_β^(1/β) M^(1/2).
pub fn bounds_table(phases: &[f64], visibility: f64, shots: u64, betas: &[f64]) -> Result<Vec<BoundsRow>> {
    let params = ModelParams::new(visibility)?;
    let mut rows = Vec::with_capacity(phases.len() * betas.len());
    for &phase in phases {
        for &beta in betas {
            let b = fisher::crb_bound(beta, phase, &params, shots)?;
            rows.push(BoundsRow {
                phase,
                beta,
                alpha: b.alpha,
                f_alpha: b.f_alpha,
                bound_delta_beta: b.bound_on_delta_beta,
                bound_scaled: b.scaled_bound(),
            });
        }
    }
    Ok(rows)
}

pub fn bounds_csv(rows: &[BoundsRow]) -> Result<Vec<u8>> {
    to_csv(rows, &BOUNDS_HEADER)
}

/// Options of the measured-data analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeOptions {
    pub v_ests: Vec<f64>,
    pub betas: Vec<f64>,
    pub domain: PhaseDomain,
    /// Reduce each phase label modulo π and center the prior window on it.
    pub fold: bool,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            v_ests: vec![0.98],
            betas: bayes::DEFAULT_BETAS.to_vec(),
            domain: PhaseDomain::default(),
            fold: false,
        }
    }
}

/// Label reduced into [0, π), the period of the model in φ.
pub fn fold_phase(phase: f64) -> f64 {
    phase.rem_euclid(PI)
}

/// Prior window used for a row.
pub fn row_domain(options: &AnalyzeOptions, phase_label: f64) -> Result<PhaseDomain> {
    if options.fold {
        options.domain.centered_on(fold_phase(phase_label))
    } else {
        Ok(options.domain)
    }
}

/// Diagnostic row for one (record, v_est, β).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeRow {
    pub phase_label: f64,
    pub v_est: f64,
    pub beta: f64,
    pub phi_hat: f64,
    pub delta_beta: f64,
    pub kappa_beta: f64,
    pub gauss_ratio: f64,
    pub shots: u64,
    pub status: RowStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Ok,
    /// Counts impossible under v_est; numeric columns are NaN.
    Infeasible,
    /// No shots; the posterior is the prior and κ is undefined.
    Empty,
}

pub const ANALYZE_HEADER: [&str; 9] = [
    "phase_label",
    "v_est",
    "beta",
    "phi_hat",
    "delta_beta",
    "kappa_beta",
    "gauss_ratio",
    "shots",
    "status",
];

/// Moments, κ_β (bound evaluated at φ̂) and Δ_β / Δ_β^G for each record.
pub fn analyze_records(records: &[CountsRecord], options: &AnalyzeOptions) -> Result<Vec<AnalyzeRow>> {
    for &beta in &options.betas {
        fisher::conjugate_exponent(beta)?;
    }
    let mut rows = Vec::new();
    for record in records {
        let tally = record.to_tally();
        let shots = tally.total();
        let domain = row_domain(options, record.phase_label)?;
        for &v_est in &options.v_ests {
            let params = ModelParams::new(v_est)?;
            let post = match bayes::posterior(&tally, &params, &domain, &Prior::Flat) {
                Ok(post) => post,
                Err(Error::InfeasibleData { .. }) => {
                    rows.extend(options.betas.iter().map(|&beta| AnalyzeRow {
                        phase_label: record.phase_label,
                        v_est,
                        beta,
                        phi_hat: f64::NAN,
                        delta_beta: f64::NAN,
                        kappa_beta: f64::NAN,
                        gauss_ratio: f64::NAN,
                        shots,
                        status: RowStatus::Infeasible,
                    }));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let moments = bayes::moments(&post, &options.betas, shots)?;
            let sigma = match moments.delta(2.0) {
                Some(d) => d,
                None => bayes::absolute_moment(&post, 2.0)?,
            }
            .sqrt();
            for &(beta, delta) in &moments.deltas {
                let kappa = if shots == 0 {
                    f64::NAN
                } else {
                    let bound = fisher::crb_bound(beta, moments.estimate, &params, shots)?;
                    bayes::kappa(delta, bound.f_alpha, shots, beta).unwrap_or(f64::NAN)
                };
                rows.push(AnalyzeRow {
                    phase_label: record.phase_label,
                    v_est,
                    beta,
                    phi_hat: moments.estimate,
                    delta_beta: delta,
                    kappa_beta: kappa,
                    gauss_ratio: delta / gaussian_abs_moment(beta, sigma),
                    shots,
                    status: if shots == 0 { RowStatus::Empty } else { RowStatus::Ok },
                });
            }
        }
    }
    Ok(rows)
}

pub fn analyze_csv(rows: &[AnalyzeRow]) -> Result<Vec<u8>> {
    to_csv(rows, &ANALYZE_HEADER)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweeps_and_intervals() {
        let sweep = parse_sweep("0.90:1.00:0.01").unwrap();
        assert_eq!(sweep.len(), 11);
        assert_eq!(sweep[5], 0.95);
        assert_eq!(sweep[10], 1.0);
        assert_eq!(parse_sweep("0.97").unwrap(), vec![0.97]);
        assert!(parse_sweep("1:0:0.1").is_err());
        assert!(parse_sweep("0:1:0").is_err());
        assert!(parse_sweep("a:b").is_err());
        assert_eq!(parse_interval("0:1.5707963267948966").unwrap(), (0.0, PI / 2.0));
        assert!(parse_interval("0").is_err());
    }

    #[test]
    fn bounds_rows() {
        let rows = bounds_table(&[PI / 4.0], 0.95, 2000, &[2.0]).unwrap();
        assert!((rows[0].bound_delta_beta - 1.0 / (2000.0 * 1.805)).abs() < 1e-15);
        let rows = bounds_table(&[0.3], 0.0, 2000, &[1.5, 2.0, 3.0, 4.0]).unwrap();
        assert!(rows.iter().all(|r| r.bound_delta_beta.is_infinite()));
        let text = String::from_utf8(bounds_csv(&rows).unwrap()).unwrap();
        assert!(text.starts_with("phase,beta,alpha,f_alpha,bound_delta_beta,bound_scaled\n"));
        assert!(text.contains("inf"));
    }

    #[test]
    fn fold_reduces_modulo_pi() {
        assert!((fold_phase(2.8) - 2.8).abs() < 1e-15);
        assert!((fold_phase(2.8 + PI) - 2.8).abs() < 1e-12);
        assert!((fold_phase(-0.3) - (PI - 0.3)).abs() < 1e-12);
        let options = AnalyzeOptions {
            fold: true,
            ..AnalyzeOptions::default()
        };
        let d = row_domain(&options, 2.8 + 2.0 * PI).unwrap();
        assert!(d.contains(2.8));
        assert!((d.width() - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn analyze_empty_and_zero_rows() {
        assert!(analyze_records(&[], &AnalyzeOptions::default()).unwrap().is_empty());
        let record = CountsRecord {
            phase_label: 0.5,
            counts: [0; 4],
            acquisition_id: None,
        };
        let rows = analyze_records(&[record], &AnalyzeOptions::default()).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.status == RowStatus::Empty && r.kappa_beta.is_nan()));
        assert!((rows[0].phi_hat - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn simulate_rows_shape() {
        let base = CampaignConfig {
            n_experiments: 3,
            shots: 200,
            domain: PhaseDomain::new(0.0, PI / 2.0, 256).unwrap(),
            ..CampaignConfig::default()
        };
        let rows = simulate_table(&base, &[0.95, 1.0]).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.n_experiments == 3));
        let text = String::from_utf8(simulate_csv(&rows).unwrap()).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.starts_with("v_est,beta,sigma_frac,n_violations,n_experiments\n"));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomically(&path, b"a\n").unwrap();
        write_atomically(&path, b"b\n").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"b\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_atomically(&dir.path().join("missing/out.csv"), b"x").is_err());
    }
}
