//! The experiment layer behind the command-line tool: CSV input and
//! output, the choice of `chi_d`, and the coverage and bias-rate studies.
//!
//! Every report is a serde structure carrying `"schema": "1"` and the seed
//! it was produced with.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chi::{bundled_chi, chi_with, ChiConfig, ChiEstimate};
use crate::density::{DensityModel, Method, ModelSpec, Reference};
use crate::error::{Error, Result};
use crate::estimator::{estimate, EntropyEstimate};
use crate::geometry::NormKind;
use crate::nn::SampleSet;
use crate::richardson::{estimate_extrapolated, plan};
use crate::rng::{stream, Domain};

pub const SCHEMA: &str = "1";

/// Monte-Carlo draws for `chi_d` when neither a value nor a table entry is
/// available.
pub const DEFAULT_CHI_DRAWS: u64 = 1_000_000;

/// Reads a CSV sample: one point per row, an optional header line.
pub fn read_csv<R: Read>(reader: R, norm: NormKind) -> Result<SampleSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut dim = None;
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(f64::from_str).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if line == 0 => {
                dim = Some(record.len());
                continue;
            }
            Err(e) => return Err(Error::InvalidParameter(format!("line {}: {e}", line + 1))),
        };
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                })
            }
            _ => {}
        }
        data.extend(row);
    }
    let dim = dim.ok_or_else(|| Error::InvalidParameter("empty CSV input".into()))?;
    SampleSet::new(data, dim, norm)
}

pub fn read_csv_path(path: &Path, norm: NormKind) -> Result<SampleSet> {
    read_csv(std::fs::File::open(path)?, norm)
}

/// Writes `x1,...,xd` followed by one row per point. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(out: W, s: &SampleSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((1..=s.dim()).map(|k| format!("x{k}")))?;
    for row in s.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Where `chi_d` comes from when no explicit value is given.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiSource {
    /// Bundled table if it has the entry, Monte Carlo otherwise.
    #[default]
    Auto,
    Table,
    Mc,
}

impl FromStr for ChiSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(ChiSource::Auto),
            "table" => Ok(ChiSource::Table),
            "mc" => Ok(ChiSource::Mc),
            other => Err(Error::InvalidParameter(format!(
                "unknown chi source '{other}' (expected auto, table or mc)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiRequest {
    /// Explicit value; overrides `source`.
    pub value: Option<f64>,
    pub source: ChiSource,
    pub draws: u64,
    pub proposal_shape: f64,
    pub inner_draws: u32,
}

impl Default for ChiRequest {
    fn default() -> Self {
        ChiRequest {
            value: None,
            source: ChiSource::Auto,
            draws: DEFAULT_CHI_DRAWS,
            proposal_shape: 1.0,
            inner_draws: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiOrigin {
    Explicit,
    Table,
    Mc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedChi {
    pub value: f64,
    pub origin: ChiOrigin,
    /// Monte-Carlo standard error, when computed.
    pub stderr: Option<f64>,
    pub draws: Option<u64>,
}

/// `chi_d` by precedence: explicit value, then bundled table, then Monte
/// Carlo with `req.draws` draws seeded from `seed`.
pub fn resolve_chi(d: usize, norm: NormKind, req: &ChiRequest, seed: u64) -> Result<ResolvedChi> {
    if let Some(value) = req.value {
        if !value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "chi must be finite, got {value}"
            )));
        }
        return Ok(ResolvedChi {
            value,
            origin: ChiOrigin::Explicit,
            stderr: None,
            draws: None,
        });
    }
    let table = bundled_chi(d, norm);
    match (req.source, table) {
        (ChiSource::Auto | ChiSource::Table, Some(value)) => Ok(ResolvedChi {
            value,
            origin: ChiOrigin::Table,
            stderr: None,
            draws: None,
        }),
        (ChiSource::Table, None) => Err(Error::MissingChi { dim: d, norm }),
        _ => {
            let cfg = ChiConfig {
                draws: req.draws,
                seed,
                proposal_shape: req.proposal_shape,
                inner_draws: req.inner_draws,
            };
            let est = chi_with(d, norm, &cfg)?;
            Ok(ResolvedChi {
                value: est.value,
                origin: ChiOrigin::Mc,
                stderr: Some(est.stderr),
                draws: Some(est.draws),
            })
        }
    }
}

/// Writes `count` draws from `model` as CSV.
pub fn cmd_gen<W: Write>(model: &DensityModel, count: usize, seed: u64, out: W) -> Result<()> {
    let s = model.sample(count, &mut stream(seed, Domain::Sample, 0));
    write_csv(out, &s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateOptions {
    pub alpha: f64,
    pub extrapolate: bool,
    pub chi: ChiRequest,
    pub seed: u64,
    /// Report `h` and its interval in bits instead of nats.
    pub bits: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            alpha: 0.05,
            extrapolate: false,
            chi: ChiRequest::default(),
            seed: 0,
            bits: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Nats,
    Bits,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub schema: String,
    pub command: String,
    pub seed: u64,
    pub points: usize,
    /// Units of `h`, `ci_low`, `ci_high` (and `v`, in squared units).
    pub units: Units,
    pub chi: ResolvedChi,
    #[serde(flatten)]
    pub estimate: EntropyEstimate,
}

/// The estimate for a sample, extrapolated when asked and `d >= 4`.
pub fn cmd_estimate(s: &SampleSet, opts: &EstimateOptions) -> Result<EstimateReport> {
    let chi = resolve_chi(s.dim(), s.norm(), &opts.chi, opts.seed)?;
    let mut est = if opts.extrapolate && s.dim() >= 4 {
        let p = plan(s.dim(), s.len().saturating_sub(1))?;
        estimate_extrapolated(s, &p, chi.value, opts.alpha, opts.seed)?
    } else {
        estimate(s, chi.value, opts.alpha)?
    };
    let units = if opts.bits {
        let ln2 = std::f64::consts::LN_2;
        est.h /= ln2;
        est.ci_low /= ln2;
        est.ci_high /= ln2;
        est.v /= ln2 * ln2;
        Units::Bits
    } else {
        Units::Nats
    };
    Ok(EstimateReport {
        schema: SCHEMA.into(),
        command: "estimate".into(),
        seed: opts.seed,
        points: s.len(),
        units,
        chi,
        estimate: est,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiReport {
    pub schema: String,
    pub command: String,
    /// The bundled value for comparison, if there is one.
    pub table_value: Option<f64>,
    #[serde(flatten)]
    pub estimate: ChiEstimate,
}

pub fn cmd_chi(d: usize, norm: NormKind, cfg: &ChiConfig) -> Result<ChiReport> {
    let estimate = chi_with(d, norm, cfg)?;
    Ok(ChiReport {
        schema: SCHEMA.into(),
        command: "chi".into(),
        table_value: bundled_chi(d, norm),
        estimate,
    })
}

/// The reference entropy of `model`, refusing Monte-Carlo values.
fn trusted_reference(model: &DensityModel) -> Result<Reference> {
    let r = model.reference_entropy();
    match r.method {
        Method::ClosedForm | Method::Quadrature => Ok(r),
        Method::Mc => Err(Error::NoReference(format!(
            "{} has only a Monte-Carlo entropy",
            model.family().name()
        ))),
    }
}

/// One replicate estimate on a fresh sample from the replicate's own stream.
fn replicate_estimate(
    model: &DensityModel,
    points: usize,
    norm: NormKind,
    chi_d: f64,
    alpha: f64,
    extrapolate: bool,
    seed: u64,
    index: u64,
) -> Result<(EntropyEstimate, Option<EntropyEstimate>)> {
    let mut rng = stream(seed, Domain::Replicate, index);
    let s = model.sample(points, &mut rng).with_norm(norm);
    let perm_seed: u64 = rng.random();
    let plain = estimate(&s, chi_d, alpha)?;
    let extra = if extrapolate && s.dim() >= 4 {
        let p = plan(s.dim(), points.saturating_sub(1))?;
        Some(estimate_extrapolated(&s, &p, chi_d, alpha, perm_seed)?)
    } else {
        None
    };
    Ok((plain, extra))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageOptions {
    /// Sample size of each replicate.
    pub points: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub norm: NormKind,
    pub extrapolate: bool,
    pub seed: u64,
    pub chi: ChiRequest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub replicate: usize,
    pub h: f64,
    pub v: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub covered: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub covered: usize,
    pub coverage: f64,
    /// Binomial standard error `sqrt(p (1 - p) / replicates)`.
    pub coverage_se: f64,
    pub mean_h: f64,
    pub sd_h: f64,
    pub mean_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub schema: String,
    pub command: String,
    pub seed: u64,
    pub model: ModelSpec,
    pub points: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub norm: NormKind,
    pub extrapolate: bool,
    pub reference: Reference,
    pub chi: ResolvedChi,
    pub records: Vec<CoverageRecord>,
    pub summary: CoverageSummary,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Fraction of replicate intervals that contain the reference entropy.
pub fn cmd_coverage(model: &DensityModel, opts: &CoverageOptions) -> Result<CoverageReport> {
    if opts.replicates == 0 {
        return Err(Error::InvalidParameter(
            "replicates must be at least 1".into(),
        ));
    }
    let reference = trusted_reference(model)?;
    let chi = resolve_chi(model.dim(), opts.norm, &opts.chi, opts.seed)?;
    let records: Vec<CoverageRecord> = (0..opts.replicates)
        .into_par_iter()
        .map(|r| {
            let (plain, extra) = replicate_estimate(
                model,
                opts.points,
                opts.norm,
                chi.value,
                opts.alpha,
                opts.extrapolate,
                opts.seed,
                r as u64,
            )?;
            let e = extra.unwrap_or(plain);
            Ok(CoverageRecord {
                replicate: r,
                h: e.h,
                v: e.v,
                ci_low: e.ci_low,
                ci_high: e.ci_high,
                covered: e.ci_low <= reference.value && reference.value <= e.ci_high,
            })
        })
        .collect::<Result<_>>()?;
    let summary = summarize_coverage(&records, reference.value);
    Ok(CoverageReport {
        schema: SCHEMA.into(),
        command: "coverage".into(),
        seed: opts.seed,
        model: model.spec(),
        points: opts.points,
        replicates: opts.replicates,
        alpha: opts.alpha,
        norm: opts.norm,
        extrapolate: opts.extrapolate,
        reference,
        chi,
        records,
        summary,
    })
}

/// Summary statistics recomputed from the records alone.
pub fn summarize_coverage(records: &[CoverageRecord], reference: f64) -> CoverageSummary {
    let n = records.len() as f64;
    let covered = records.iter().filter(|r| r.covered).count();
    let p = covered as f64 / n;
    let hs: Vec<f64> = records.iter().map(|r| r.h).collect();
    let (mean_h, sd_h) = mean_sd(&hs);
    CoverageSummary {
        covered,
        coverage: p,
        coverage_se: (p * (1.0 - p) / n).sqrt(),
        mean_h,
        sd_h,
        mean_error: mean_h - reference,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiasScanOptions {
    /// Strictly increasing sample sizes, at least three.
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub norm: NormKind,
    pub seed: u64,
    /// Also run the extrapolated estimator on the same samples.
    pub extrapolate: bool,
    /// A level whose `|mean bias|` is below `power_z` standard errors
    /// counts as indistinguishable from noise.
    pub power_z: f64,
}

pub const DEFAULT_POWER_Z: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasRecord {
    pub points: usize,
    pub replicate: usize,
    pub h: f64,
    pub h_extrapolated: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanBias {
    pub mean_bias: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasLevel {
    pub points: usize,
    pub plain: MeanBias,
    pub extrapolated: Option<MeanBias>,
}

/// Least-squares line `log|bias| = intercept + slope log(points)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasScanReport {
    pub schema: String,
    pub command: String,
    pub seed: u64,
    pub model: ModelSpec,
    pub norm: NormKind,
    pub replicates: usize,
    pub reference: Reference,
    pub power_z: f64,
    pub levels: Vec<BiasLevel>,
    /// Fit of the plain estimator's bias; absent when power is insufficient.
    pub fit: Option<Regression>,
    /// The fit computed regardless of power, for inspection.
    pub unchecked_fit: Regression,
    pub insufficient_power: bool,
    pub records: Vec<BiasRecord>,
}

/// Ordinary least squares with the usual slope standard error.
pub fn ols(x: &[f64], y: &[f64]) -> Regression {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let slope_se = if x.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Regression {
        slope,
        slope_se,
        intercept,
    }
}

/// Mean bias of the estimator at each sample size and the log-log slope.
pub fn cmd_bias_scan(model: &DensityModel, opts: &BiasScanOptions) -> Result<BiasScanReport> {
    if opts.sizes.len() < 3 {
        return Err(Error::InvalidParameter(
            "bias scan needs at least three sample sizes".into(),
        ));
    }
    if opts.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "sample sizes must be strictly increasing".into(),
        ));
    }
    if opts.replicates < 2 {
        return Err(Error::InvalidParameter(
            "bias scan needs at least two replicates".into(),
        ));
    }
    if opts.sizes.len() >= 1 << 16 || opts.replicates >= 1 << 32 {
        return Err(Error::InvalidParameter(
            "too many sizes or replicates".into(),
        ));
    }
    let reference = trusted_reference(model)?;
    // chi_d only enters the intervals, which the scan ignores
    let chi_d = 0.0;
    let jobs: Vec<(usize, usize)> = (0..opts.sizes.len())
        .flat_map(|j| (0..opts.replicates).map(move |r| (j, r)))
        .collect();
    let records: Vec<BiasRecord> = jobs
        .par_iter()
        .map(|&(j, r)| {
            let points = opts.sizes[j];
            let index = ((j as u64) << 32) | r as u64;
            let (plain, extra) = replicate_estimate(
                model,
                points,
                opts.norm,
                chi_d,
                0.05,
                opts.extrapolate,
                opts.seed,
                index,
            )?;
            Ok(BiasRecord {
                points,
                replicate: r,
                h: plain.h,
                h_extrapolated: extra.map(|e| e.h),
            })
        })
        .collect::<Result<_>>()?;
    let levels = summarize_bias(&records, &opts.sizes, reference.value);
    let x: Vec<f64> = levels.iter().map(|l| (l.points as f64).ln()).collect();
    let y: Vec<f64> = levels
        .iter()
        .map(|l| l.plain.mean_bias.abs().ln())
        .collect();
    let unchecked_fit = ols(&x, &y);
    let insufficient_power = levels
        .iter()
        .any(|l| l.plain.mean_bias.abs() < opts.power_z * l.plain.se);
    Ok(BiasScanReport {
        schema: SCHEMA.into(),
        command: "bias-scan".into(),
        seed: opts.seed,
        model: model.spec(),
        norm: opts.norm,
        replicates: opts.replicates,
        reference,
        power_z: opts.power_z,
        levels,
        fit: (!insufficient_power).then_some(unchecked_fit),
        unchecked_fit,
        insufficient_power,
        records,
    })
}

/// Per-size mean bias and its standard error, recomputed from records.
pub fn summarize_bias(records: &[BiasRecord], sizes: &[usize], reference: f64) -> Vec<BiasLevel> {
    let stat = |xs: &[f64]| {
        let (m, sd) = mean_sd(xs);
        MeanBias {
            mean_bias: m - reference,
            se: sd / (xs.len() as f64).sqrt(),
        }
    };
    sizes
        .iter()
        .map(|&points| {
            let at: Vec<&BiasRecord> = records.iter().filter(|r| r.points == points).collect();
            let hs: Vec<f64> = at.iter().map(|r| r.h).collect();
            let ex: Option<Vec<f64>> = at.iter().map(|r| r.h_extrapolated).collect();
            BiasLevel {
                points,
                plain: stat(&hs),
                extrapolated: ex.filter(|v| !v.is_empty()).map(|v| stat(&v)),
            }
        })
        .collect()
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(dim: usize) -> DensityModel {
        DensityModel::from_json(&format!(r#"{{"family":"gaussian","dim":{dim}}}"#)).unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = gaussian(3).sample(200, &mut stream(9, Domain::Sample, 0));
        let mut buf = Vec::new();
        write_csv(&mut buf, &s).unwrap();
        let back = read_csv(buf.as_slice(), NormKind::Euclidean).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn csv_header_is_optional() {
        let with = read_csv("a,b\n1,2\n3,4.5\n".as_bytes(), NormKind::Chebyshev).unwrap();
        let without = read_csv("1,2\n3,4.5\n".as_bytes(), NormKind::Chebyshev).unwrap();
        assert_eq!(with, without);
        assert_eq!(with.len(), 2);
        let header_only = read_csv("x1,x2\n".as_bytes(), NormKind::Euclidean).unwrap();
        assert!(header_only.is_empty());
        assert_eq!(header_only.dim(), 2);
        assert!(read_csv("1,2\n3\n".as_bytes(), NormKind::Euclidean).is_err());
        assert!(read_csv("1,2\n3,x\n".as_bytes(), NormKind::Euclidean).is_err());
        assert!(read_csv("".as_bytes(), NormKind::Euclidean).is_err());
    }

    #[test]
    fn chi_precedence() {
        let mut req = ChiRequest {
            value: Some(2.5),
            ..ChiRequest::default()
        };
        let r = resolve_chi(2, NormKind::Euclidean, &req, 0).unwrap();
        assert_eq!((r.value, r.origin), (2.5, ChiOrigin::Explicit));
        req.value = None;
        let r = resolve_chi(2, NormKind::Euclidean, &req, 0).unwrap();
        assert_eq!((r.value, r.origin), (2.29, ChiOrigin::Table));
        req.source = ChiSource::Table;
        assert!(matches!(
            resolve_chi(11, NormKind::Euclidean, &req, 0),
            Err(Error::MissingChi { dim: 11, .. })
        ));
        req.source = ChiSource::Auto;
        req.draws = 5000;
        let r = resolve_chi(11, NormKind::Euclidean, &req, 3).unwrap();
        assert_eq!(r.origin, ChiOrigin::Mc);
        assert_eq!(r.draws, Some(5000));
        req.source = ChiSource::Mc;
        let r = resolve_chi(2, NormKind::Euclidean, &req, 3).unwrap();
        assert_eq!(r.origin, ChiOrigin::Mc);
    }

    #[test]
    fn estimate_in_bits() {
        let s = SampleSet::new(vec![0.0, 1.0, 3.0], 1, NormKind::Euclidean).unwrap();
        let nats = cmd_estimate(&s, &EstimateOptions::default()).unwrap();
        let bits = cmd_estimate(
            &s,
            &EstimateOptions {
                bits: true,
                ..EstimateOptions::default()
            },
        )
        .unwrap();
        assert_eq!(bits.units, Units::Bits);
        assert!((bits.estimate.h * std::f64::consts::LN_2 - nats.estimate.h).abs() < 1e-14);
    }

    #[test]
    fn extrapolated_estimate_lists_its_plan() {
        let s = gaussian(4).sample(1000, &mut stream(4, Domain::Sample, 0));
        let opts = EstimateOptions {
            extrapolate: true,
            ..EstimateOptions::default()
        };
        let r = cmd_estimate(&s, &opts).unwrap();
        let info = r.estimate.extrapolation.unwrap();
        let p = plan(4, 999).unwrap();
        assert_eq!(info.subsample_sizes, p.subsample_sizes());
        assert_eq!(info.alphas, p.alphas());
        assert_eq!(r.estimate.inflation, p.a_d());
    }

    #[test]
    fn coverage_records_and_summary_agree() {
        let opts = CoverageOptions {
            points: 300,
            replicates: 40,
            alpha: 0.05,
            norm: NormKind::Euclidean,
            extrapolate: false,
            seed: 11,
            chi: ChiRequest::default(),
        };
        let rep = cmd_coverage(&gaussian(1), &opts).unwrap();
        assert_eq!(rep.records.len(), 40);
        assert_eq!(
            rep.summary,
            summarize_coverage(&rep.records, rep.reference.value)
        );
        let again = cmd_coverage(&gaussian(1), &opts).unwrap();
        assert_eq!(rep, again);

        let one = cmd_coverage(
            &gaussian(1),
            &CoverageOptions {
                replicates: 1,
                ..opts
            },
        )
        .unwrap();
        assert_eq!(one.records.len(), 1);
        assert!(one.summary.coverage == 0.0 || one.summary.coverage == 1.0);
    }

    #[test]
    fn ols_recovers_a_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 - 2.0 * v).collect();
        let fit = ols(&x, &y);
        assert!((fit.slope + 2.0).abs() < 1e-14);
        assert!((fit.intercept - 0.5).abs() < 1e-14);
        assert!(fit.slope_se < 1e-12);
    }

    #[test]
    fn bias_scan_validates_sizes() {
        let base = BiasScanOptions {
            sizes: vec![100, 200],
            replicates: 4,
            norm: NormKind::Euclidean,
            seed: 0,
            extrapolate: false,
            power_z: DEFAULT_POWER_Z,
        };
        assert!(cmd_bias_scan(&gaussian(2), &base).is_err());
        let unsorted = BiasScanOptions {
            sizes: vec![100, 300, 200],
            ..base.clone()
        };
        assert!(cmd_bias_scan(&gaussian(2), &unsorted).is_err());
        let ok = BiasScanOptions {
            sizes: vec![100, 200, 400],
            ..base
        };
        let rep = cmd_bias_scan(&gaussian(2), &ok).unwrap();
        assert_eq!(rep.records.len(), 12);
        assert_eq!(
            rep.levels,
            summarize_bias(&rep.records, &ok.sizes, rep.reference.value)
        );
        assert_eq!(rep.fit.is_none(), rep.insufficient_power);
    }
}
