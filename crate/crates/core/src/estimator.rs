//! The nearest-neighbor entropy estimator, its variance estimator and the
//! normal confidence interval built from them.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, NormKind};
use crate::nn::{nn_distances, NNDistances, SampleSet};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `pi^2 / 6`, the variance of `log E` for `E ~ Exp(1)`.
pub const PI_SQUARED_OVER_SIX: f64 = 1.644_934_066_848_226_4;

/// A point estimate with its variance estimate and confidence interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Entropy estimate in nats.
    pub h: f64,
    /// Estimated asymptotic variance of `sqrt(N) (h - H)`.
    pub v: f64,
    /// `N`, one less than the number of points used.
    pub n: usize,
    pub d: usize,
    pub norm: NormKind,
    pub ci_low: f64,
    pub ci_high: f64,
    /// The interval has nominal coverage `1 - alpha`.
    pub alpha: f64,
    /// Variance inflation applied to the interval (1 without extrapolation).
    pub inflation: f64,
    pub chi_d_used: f64,
    /// True when the raw variance estimate was negative and was set to 0.
    pub variance_clamped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extrapolation: Option<ExtrapolationInfo>,
}

/// How an extrapolated estimate was assembled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationInfo {
    pub ell: usize,
    pub alphas: Vec<f64>,
    pub subsample_sizes: Vec<usize>,
    /// Plain estimate on each block, largest block first.
    pub block_estimates: Vec<f64>,
    pub a_d: f64,
    /// Size of the block the variance estimate was computed on.
    pub variance_block_size: usize,
    /// Points not assigned to any block.
    pub discarded: usize,
    pub permutation_seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceEstimate {
    pub value: f64,
    pub clamped: bool,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// `H_N = mean(log Y_i) + gamma + log v_d`.
pub fn entropy_point(nn: &NNDistances, d: usize, norm: NormKind) -> Result<f64> {
    nn.ensure_no_duplicates()?;
    if nn.is_empty() {
        return Err(Error::TooFewPoints(0));
    }
    let vd = unit_ball_volume(d, norm)?;
    Ok(mean(&nn.log_y) + EULER_GAMMA + vd.ln())
}

/// `V_N = var(log Y_i) + chi_d - pi^2/6`, clamped at zero.
///
/// The sample variance uses the `1/(N+1)` normalization.
pub fn variance_point(nn: &NNDistances, chi_d: f64) -> Result<VarianceEstimate> {
    nn.ensure_no_duplicates()?;
    if nn.is_empty() {
        return Err(Error::TooFewPoints(0));
    }
    if !chi_d.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "chi_d must be finite, got {chi_d}"
        )));
    }
    let m = mean(&nn.log_y);
    let var = nn.log_y.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / nn.len() as f64;
    let raw = var + chi_d - PI_SQUARED_OVER_SIX;
    Ok(if raw < 0.0 {
        VarianceEstimate {
            value: 0.0,
            clamped: true,
        }
    } else {
        VarianceEstimate {
            value: raw,
            clamped: false,
        }
    })
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// Symmetric interval `h ± z_{1-alpha/2} sqrt(inflation v / n)`.
pub fn confidence_interval(
    h: f64,
    v: f64,
    n: usize,
    inflation: f64,
    alpha: f64,
) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "variance must be >= 0, got {v}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(inflation > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "inflation must be positive, got {inflation}"
        )));
    }
    let z = normal_quantile(1.0 - alpha / 2.0);
    let half = z * (inflation * v / n as f64).sqrt();
    Ok((h - half, h + half))
}

/// The plain estimator with its interval on the whole sample.
pub fn estimate(s: &SampleSet, chi_d: f64, alpha: f64) -> Result<EntropyEstimate> {
    let nn = nn_distances(s)?;
    estimate_from_nn(&nn, s.dim(), s.norm(), chi_d, alpha)
}

pub fn estimate_from_nn(
    nn: &NNDistances,
    d: usize,
    norm: NormKind,
    chi_d: f64,
    alpha: f64,
) -> Result<EntropyEstimate> {
    let h = entropy_point(nn, d, norm)?;
    let v = variance_point(nn, chi_d)?;
    let (ci_low, ci_high) = confidence_interval(h, v.value, nn.n.max(1), 1.0, alpha)?;
    Ok(EntropyEstimate {
        h,
        v: v.value,
        n: nn.n,
        d,
        norm,
        ci_low,
        ci_high,
        alpha,
        inflation: 1.0,
        chi_d_used: chi_d,
        variance_clamped: v.clamped,
        extrapolation: None,
    })
}
