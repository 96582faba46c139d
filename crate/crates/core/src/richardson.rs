//! Richardson extrapolation over disjoint sub-samples.
//!
//! The plain estimator has bias `sum_i lambda_i N^{-2i/d}`. Running it on
//! blocks of sizes `2^ell n + 1, 2^{ell-1} n + 1, ..., n + 1` and combining
//! with weights `alpha_k` that satisfy `sum alpha_k = 1` and
//! `sum alpha_k 2^{2ki/d} = 0` for `i = 1..ell` cancels the first `ell` bias
//! terms, at the price of inflating the variance by `a_d`.

use rand::seq::SliceRandom;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::estimator::{
    confidence_interval, entropy_point, variance_point, EntropyEstimate, ExtrapolationInfo,
};
use crate::nn::{nn_distances, SampleSet};
use crate::rng::{stream, Domain};

const SUM_TOLERANCE: f64 = 1e-12;
const MOMENT_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RichardsonPlan {
    d: usize,
    ell: usize,
    alphas: Vec<f64>,
    n: usize,
    subsample_sizes: Vec<usize>,
    a_d: f64,
    /// `N`, one less than the number of points the plan was made for.
    big_n: usize,
}

/// Number of cancelled bias terms, `floor(d / 4)`.
pub fn extrapolation_order(d: usize) -> usize {
    d / 4
}

/// `2^(q/d)` in double-double precision.
fn pow2_ratio(q: usize, d: usize) -> TwoFloat {
    let (whole, r) = (q / d, q % d);
    let scale = 2f64.powi(whole as i32);
    if r == 0 {
        return TwoFloat::from(scale);
    }
    // one Newton step on y^d = 2^r from the f64 root
    let y = TwoFloat::from(2f64.powf(r as f64 / d as f64));
    let mut below = TwoFloat::from(1.0);
    for _ in 1..d {
        below *= y;
    }
    let full = below * y;
    let refined = y + dd_div(TwoFloat::from(2f64.powi(r as i32)) - full, below * d as f64);
    refined * scale
}

/// `a / b` by long division; twofloat's own quotient is only f64-accurate.
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::from(q1) + q2 + q3
}

/// Extrapolation weights of dimension `d`: the Lagrange basis at 0 for the
/// nodes `2^(2k/d)`, so that `sum_k alpha_k 2^(2ki/d) = [i == 0]`.
pub fn richardson_weights(d: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let ell = extrapolation_order(d);
    let nodes: Vec<TwoFloat> = (0..=ell).map(|k| pow2_ratio(2 * k, d)).collect();
    Ok((0..=ell)
        .map(|k| {
            let mut w = TwoFloat::from(1.0);
            for (j, &x) in nodes.iter().enumerate() {
                if j != k {
                    w = dd_div(w * x, x - nodes[k]);
                }
            }
            f64::from(w)
        })
        .collect())
}

/// `(2 - 2^{-ell}) sum_k alpha_k^2 2^k`.
fn inflation_from_alphas(alphas: &[f64]) -> f64 {
    let ell = alphas.len() - 1;
    let s: f64 = alphas
        .iter()
        .enumerate()
        .map(|(k, a)| a * a * 2f64.powi(k as i32))
        .sum();
    (2.0 - 2f64.powi(-(ell as i32))) * s
}

/// Plan for a sample of `big_n + 1` points in dimension `d`.
pub fn plan(d: usize, big_n: usize) -> Result<RichardsonPlan> {
    let alphas = richardson_weights(d)?;
    RichardsonPlan::from_alphas(d, big_n, alphas)
}

impl RichardsonPlan {
    /// Builds a plan from explicit weights, checking the moment conditions.
    pub fn from_alphas(d: usize, big_n: usize, alphas: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let ell = extrapolation_order(d);
        if alphas.len() != ell + 1 {
            return Err(Error::PlanMismatch(format!(
                "dimension {d} needs {} weights, got {}",
                ell + 1,
                alphas.len()
            )));
        }
        let r = moment(&alphas, 0, d);
        if r.abs() > SUM_TOLERANCE * moment_scale(&alphas, 0, d) {
            return Err(Error::PlanMismatch(format!("weights sum to 1 + {r:e}")));
        }
        for i in 1..=ell {
            let r = moment(&alphas, i, d);
            if r.abs() > MOMENT_TOLERANCE * moment_scale(&alphas, i, d) {
                return Err(Error::PlanMismatch(format!(
                    "bias term {i} not cancelled: residual {r:e}"
                )));
            }
        }
        // (2^{ell+1} - 1) n + ell + 1 <= N + 1
        let blocks = (1usize << (ell + 1)) - 1;
        let n = big_n.checked_sub(ell).map(|m| m / blocks).unwrap_or(0);
        if n < 1 {
            return Err(Error::SampleTooSmall {
                points: big_n + 1,
                dim: d,
            });
        }
        let subsample_sizes = (0..=ell).map(|k| (n << (ell - k)) + 1).collect();
        let a_d = inflation_from_alphas(&alphas);
        Ok(RichardsonPlan {
            d,
            ell,
            alphas,
            n,
            subsample_sizes,
            a_d,
            big_n,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn big_n(&self) -> usize {
        self.big_n
    }

    /// Block sizes, largest first.
    pub fn subsample_sizes(&self) -> &[usize] {
        &self.subsample_sizes
    }

    pub fn a_d(&self) -> f64 {
        self.a_d
    }

    /// `sum_k alpha_k 2^(2ki/d) - [i == 0]`, evaluated in double-double.
    pub fn moment_residual(&self, i: usize) -> f64 {
        moment(&self.alphas, i, self.d)
    }
}

/// `Σ |α_k| 2^(2ki/d)`, the size of the terms that cancel in moment `i`.
fn moment_scale(alphas: &[f64], i: usize, d: usize) -> f64 {
    alphas
        .iter()
        .enumerate()
        .map(|(k, a)| a.abs() * 2f64.powf(2.0 * (k * i) as f64 / d as f64))
        .sum()
}

fn moment(alphas: &[f64], i: usize, d: usize) -> f64 {
    let target = if i == 0 { 1.0 } else { 0.0 };
    let total = alphas
        .iter()
        .enumerate()
        .fold(TwoFloat::from(-target), |acc, (k, &a)| {
            acc + pow2_ratio(2 * k * i, d) * a
        });
    f64::from(total)
}

pub fn inflation_factor(plan: &RichardsonPlan) -> f64 {
    plan.a_d
}

/// The seeded permutation cut into consecutive blocks of the planned sizes.
pub fn split_blocks(plan: &RichardsonPlan, points: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..points).collect();
    order.shuffle(&mut stream(seed, Domain::Permutation, 0));
    let mut blocks = Vec::with_capacity(plan.subsample_sizes.len());
    let mut start = 0;
    for &size in &plan.subsample_sizes {
        blocks.push(order[start..start + size].to_vec());
        start += size;
    }
    blocks
}

/// Extrapolated estimate `sum_k alpha_k H^k` with interval inflated by `a_d`.
///
/// The variance estimate is computed on the largest block.
pub fn estimate_extrapolated(
    s: &SampleSet,
    plan: &RichardsonPlan,
    chi_d: f64,
    alpha: f64,
    seed: u64,
) -> Result<EntropyEstimate> {
    if plan.d != s.dim() {
        return Err(Error::PlanMismatch(format!(
            "plan is for dimension {}, sample has dimension {}",
            plan.d,
            s.dim()
        )));
    }
    if plan.big_n + 1 != s.len() {
        return Err(Error::PlanMismatch(format!(
            "plan is for {} points, sample has {}",
            plan.big_n + 1,
            s.len()
        )));
    }
    let d = s.dim();
    let norm = s.norm();
    if plan.ell > 0 {
        // duplicates split across blocks would go unseen by the block estimates
        let count = s.duplicate_rows();
        if count > 0 {
            return Err(Error::DuplicatePoints { count });
        }
    }
    let (h, v, block_estimates) = if plan.ell == 0 {
        let nn = nn_distances(s)?;
        let h = entropy_point(&nn, d, norm)?;
        (h, variance_point(&nn, chi_d)?, vec![h])
    } else {
        let blocks = split_blocks(plan, s.len(), seed);
        let mut block_estimates = Vec::with_capacity(blocks.len());
        let mut v = None;
        for (k, idx) in blocks.iter().enumerate() {
            let nn = nn_distances(&s.select(idx))?;
            block_estimates.push(entropy_point(&nn, d, norm)?);
            if k == 0 {
                v = Some(variance_point(&nn, chi_d)?);
            }
        }
        let h = plan
            .alphas
            .iter()
            .zip(&block_estimates)
            .map(|(a, hk)| a * hk)
            .sum();
        (h, v.expect("plan has at least one block"), block_estimates)
    };
    let (ci_low, ci_high) = confidence_interval(h, v.value, plan.big_n.max(1), plan.a_d, alpha)?;
    let used: usize = plan.subsample_sizes.iter().sum();
    Ok(EntropyEstimate {
        h,
        v: v.value,
        n: plan.big_n,
        d,
        norm,
        ci_low,
        ci_high,
        alpha,
        inflation: plan.a_d,
        chi_d_used: chi_d,
        variance_clamped: v.clamped,
        extrapolation: Some(ExtrapolationInfo {
            ell: plan.ell,
            alphas: plan.alphas.clone(),
            subsample_sizes: plan.subsample_sizes.clone(),
            block_estimates,
            a_d: plan.a_d,
            variance_block_size: plan.subsample_sizes[0],
            discarded: s.len() - used,
            permutation_seed: seed,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::estimate;
    use crate::geometry::NormKind;
    use rand::Rng;

    #[test]
    fn low_dimensions_are_the_identity() {
        for d in 1..=3 {
            let p = plan(d, 10).unwrap();
            assert_eq!(p.ell(), 0);
            assert_eq!(p.alphas(), &[1.0]);
            assert_eq!(p.a_d(), 1.0);
            assert_eq!(p.subsample_sizes(), &[11]);
            assert_eq!(inflation_factor(&p), 1.0);
        }
        assert!(plan(3, 0).is_err());
        assert!(plan(3, 1).is_ok());
    }

    #[test]
    fn four_dimensions() {
        let p = plan(4, 100).unwrap();
        assert_eq!(p.ell(), 1);
        let s2 = 2f64.sqrt();
        assert!((p.alphas()[0] - s2 / (s2 - 1.0)).abs() < 1e-12);
        assert!((p.alphas()[1] + 1.0 / (s2 - 1.0)).abs() < 1e-12);
        assert!((p.alphas()[0] - 3.41421).abs() < 1e-5);
        assert!((p.a_d() - 34.97).abs() < 0.01);
        assert_eq!(p.n(), 33);
        assert_eq!(p.subsample_sizes(), &[67, 34]);
    }

    #[test]
    fn block_sizes_never_exceed_the_sample() {
        for d in 1..=24 {
            for big_n in 0..400 {
                if let Ok(p) = plan(d, big_n) {
                    let total: usize = p.subsample_sizes().iter().sum();
                    assert!(total <= big_n + 1, "d={d} N={big_n}");
                    assert!(p.n() >= 1);
                }
            }
        }
        // (N+1-ell) divisible by 2^{ell+1}-1 would overshoot by one point
        let p = plan(4, 99).unwrap();
        assert_eq!(p.subsample_sizes(), &[65, 33]);
    }

    #[test]
    fn printed_inflation_factors() {
        for (d, a) in [(4, 34.97), (5, 54.97), (6, 79.65), (7, 109.01), (1, 1.0)] {
            let p = plan(d, 10_000).unwrap();
            assert!((p.a_d() - a).abs() < 0.01, "d={d}: {}", p.a_d());
        }
    }

    #[test]
    fn double_double_roots_of_two() {
        let x = pow2_ratio(1, 24);
        assert_eq!(x.hi(), 1.029302236643492);
        assert!((x.lo() + 4.568140751696502e-17).abs() < 1e-31);
        assert_eq!(f64::from(pow2_ratio(48, 24)), 4.0);
        let y = pow2_ratio(7, 3) * pow2_ratio(2, 3);
        assert!((f64::from(y - TwoFloat::from(8.0))).abs() < 1e-30);
        let third = dd_div(TwoFloat::from(1.0), TwoFloat::from(3.0));
        assert!(f64::from(third * 3.0 - TwoFloat::from(1.0)).abs() < 1e-31);
    }

    #[test]
    fn moment_conditions_hold() {
        for d in 4..=24 {
            let p = plan(d, 100_000).unwrap();
            for i in 0..=p.ell() {
                let scale = moment_scale(p.alphas(), i, d);
                assert!(p.moment_residual(i).abs() < 1e-12 * scale, "d={d}, i={i}");
            }
        }
    }

    #[test]
    fn perturbed_weights_are_rejected() {
        let mut alphas = richardson_weights(4).unwrap();
        alphas[0] += 1e-6;
        assert!(matches!(
            RichardsonPlan::from_alphas(4, 100, alphas),
            Err(Error::PlanMismatch(_))
        ));
        let alphas = vec![0.5, 0.5];
        assert!(RichardsonPlan::from_alphas(4, 100, alphas).is_err());
        assert!(RichardsonPlan::from_alphas(4, 100, vec![1.0]).is_err());
        assert!(matches!(plan(8, 5), Err(Error::SampleTooSmall { .. })));
    }

    fn gaussian_sample(points: usize, d: usize, seed: u64) -> SampleSet {
        let mut rng = stream(seed, Domain::Sample, 0);
        let data = (0..points * d)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        SampleSet::new(data, d, NormKind::Euclidean).unwrap()
    }

    #[test]
    fn identity_plan_reproduces_plain_estimate() {
        let s = gaussian_sample(500, 3, 1);
        let p = plan(3, 499).unwrap();
        let e = estimate_extrapolated(&s, &p, 2.42, 0.05, 9).unwrap();
        let plain = estimate(&s, 2.42, 0.05).unwrap();
        assert_eq!(e.h, plain.h);
        assert_eq!(e.v, plain.v);
        assert_eq!(e.inflation, 1.0);
    }

    #[test]
    fn blocks_are_disjoint_and_deterministic() {
        let p = plan(9, 1000).unwrap();
        let blocks = split_blocks(&p, 1001, 5);
        let mut seen = vec![false; 1001];
        for (b, &size) in blocks.iter().zip(p.subsample_sizes()) {
            assert_eq!(b.len(), size);
            for &i in b {
                assert!(!seen[i]);
                seen[i] = true;
            }
        }
        assert_eq!(blocks, split_blocks(&p, 1001, 5));
        assert_ne!(blocks, split_blocks(&p, 1001, 6));

        let s = gaussian_sample(1001, 9, 2);
        let a = estimate_extrapolated(&s, &p, 2.8, 0.05, 5).unwrap();
        let b = estimate_extrapolated(&s, &p, 2.8, 0.05, 5).unwrap();
        assert_eq!(a.h.to_bits(), b.h.to_bits());
        let info = a.extrapolation.unwrap();
        assert_eq!(info.subsample_sizes, p.subsample_sizes());
        assert_eq!(info.variance_block_size, p.subsample_sizes()[0]);
        assert_eq!(
            info.discarded,
            1001 - p.subsample_sizes().iter().sum::<usize>()
        );
    }

    #[test]
    fn mismatched_plans_are_rejected() {
        let s = gaussian_sample(101, 4, 3);
        assert!(estimate_extrapolated(&s, &plan(5, 100).unwrap(), 2.6, 0.05, 0).is_err());
        assert!(estimate_extrapolated(&s, &plan(4, 99).unwrap(), 2.6, 0.05, 0).is_err());
        assert!(estimate_extrapolated(&s, &plan(4, 100).unwrap(), 2.6, 0.05, 0).is_ok());
    }
}
