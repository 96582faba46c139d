//! Example densities: samplers, log-densities and reference values.
//!
//! Radial families use the Euclidean norm `|x|`. A model is described in
//! JSON as `{"family": ..., "dim": ..., "params": {...}}`:
//!
//! | family          | params                          | density                                   |
//! |-----------------|---------------------------------|-------------------------------------------|
//! | `gaussian`      | `sigma` (default 1)             | `N(0, sigma^2 I)`                         |
//! | `gen_exp`       | `a > 0`                         | `c exp(-(1+|x|^2)^(a/2))`                 |
//! | `heavy_tail`    | `a > dim`                       | `c (1+|x|^2)^(-(dim+a)/2)`                |
//! | `gamma_radial`  | `a > -dim`                      | `c |x|^a exp(-|x|)`, one-sided if dim = 1 |
//! | `beta_product`  | `a`, `b` (scalars or vectors)   | `c prod x_i^a_i (1-x_i)^b_i` on `[0,1]^d` |
//! | `sine_singular` | `p >= 2`, dim 1                 | `c x^p |sin(pi/x)|` on `(0,1)`            |
//! | `uniform`       | none                            | uniform on `[0,1]^d`                      |
//! | `exponential`   | none                            | independent `Exp(1)` coordinates          |

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Beta, ChiSquared, Distribution, Exp1, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume_unchecked, unit_sphere_point, NormKind};
use crate::nn::SampleSet;
use crate::quad;

/// Relative accuracy asked of every quadrature in this module.
const QUAD_RTOL: f64 = 1e-12;
/// Periods of `sin(pi t)` summed for the sine-singular integrals.
const SINE_MAX_PERIODS: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Gaussian {
        sigma: f64,
    },
    GenExp {
        a: f64,
    },
    HeavyTail {
        a: f64,
    },
    GammaRadial {
        a: f64,
    },
    /// Exponents, so coordinate `i` is `Beta(a[i] + 1, b[i] + 1)`.
    BetaProduct {
        a: Vec<f64>,
        b: Vec<f64>,
    },
    SineSingular {
        p: f64,
    },
    Uniform,
    Exponential,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian { .. } => "gaussian",
            Family::GenExp { .. } => "gen_exp",
            Family::HeavyTail { .. } => "heavy_tail",
            Family::GammaRadial { .. } => "gamma_radial",
            Family::BetaProduct { .. } => "beta_product",
            Family::SineSingular { .. } => "sine_singular",
            Family::Uniform => "uniform",
            Family::Exponential => "exponential",
        }
    }
}

/// JSON form of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: String,
    pub dim: usize,
    #[serde(default)]
    pub params: Map<String, Value>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    Mc,
}

/// A reference value with the method that produced it. `tolerance` is an
/// absolute error bound for quadrature and one standard error for MC.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub value: f64,
    pub method: Method,
    pub tolerance: f64,
}

pub type ReferenceEntropy = Reference;

/// Leading coefficient of the bias of the plain estimator,
/// `E[H_N] - H(f) ≈ value / N^(2/d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasCoefficient {
    pub value: f64,
    pub tolerance: f64,
    /// `∫ f^(-2/d-1) |∇f|^2 dx`.
    pub gradient_integral: f64,
}

#[derive(Clone, Debug)]
enum Draw {
    Gaussian(f64),
    GenExp { a: f64, radius: Gamma<f64> },
    HeavyTail(ChiSquared<f64>),
    GammaRadial(Gamma<f64>),
    BetaProduct(Vec<Beta<f64>>),
    SineSingular(f64),
    Uniform,
    Exponential,
}

#[derive(Clone, Debug)]
pub struct DensityModel {
    family: Family,
    dim: usize,
    log_norm: f64,
    draw: Draw,
    warnings: Vec<String>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn positive_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Surface measure of the unit sphere, with the one-sided convention in d = 1.
fn sphere_area(d: usize, one_sided: bool) -> f64 {
    if d == 1 {
        if one_sided {
            1.0
        } else {
            2.0
        }
    } else {
        d as f64 * unit_ball_volume_unchecked(d, NormKind::Euclidean)
    }
}

fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let z = 1.0 / (x * x);
    let series = 1.0 / 6.0
        - z * (1.0 / 30.0
            - z * (1.0 / 42.0
                - z * (1.0 / 30.0 - z * (5.0 / 66.0 - z * (691.0 / 2730.0 - z * 7.0 / 6.0)))));
    acc + 1.0 / x + z / 2.0 + z * series / x
}

impl DensityModel {
    pub fn new(family: Family, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        let d = dim as f64;
        let mut warnings = Vec::new();
        let (log_norm, draw) = match &family {
            Family::Gaussian { sigma } => {
                positive_finite("sigma", *sigma)?;
                (
                    -0.5 * d * (2.0 * PI * sigma * sigma).ln(),
                    Draw::Gaussian(*sigma),
                )
            }
            Family::GenExp { a } => {
                positive_finite("a", *a)?;
                let m = gen_exp_moments(dim, *a);
                let radius = Gamma::new(d / a, 1.0).map_err(|e| bad(e.to_string()))?;
                (
                    -(sphere_area(dim, false) * m.m0).ln(),
                    Draw::GenExp { a: *a, radius },
                )
            }
            Family::HeavyTail { a } => {
                positive_finite("a", *a)?;
                if *a <= d {
                    return Err(bad(format!(
                        "heavy_tail needs a > dim, got a = {a}, dim = {dim}"
                    )));
                }
                let log_c = ln_gamma((d + a) / 2.0) - 0.5 * d * PI.ln() - ln_gamma(a / 2.0);
                let chi2 = ChiSquared::new(*a).map_err(|e| bad(e.to_string()))?;
                (log_c, Draw::HeavyTail(chi2))
            }
            Family::GammaRadial { a } => {
                if !a.is_finite() || *a <= -d {
                    return Err(bad(format!("gamma_radial needs a > -dim, got {a}")));
                }
                if !gamma_radial_in_range(dim, *a) {
                    warnings.push(format!(
                        "gamma_radial a = {a} in dim {dim} is outside the range where the plain estimator is known to be asymptotically normal"
                    ));
                }
                let k = d + a;
                let log_c = -sphere_area(dim, true).ln() - ln_gamma(k);
                let radius = Gamma::new(k, 1.0).map_err(|e| bad(e.to_string()))?;
                (log_c, Draw::GammaRadial(radius))
            }
            Family::BetaProduct { a, b } => {
                if a.len() != dim || b.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: if a.len() != dim { a.len() } else { b.len() },
                    });
                }
                let mut log_c = 0.0;
                let mut dists = Vec::with_capacity(dim);
                for (&ai, &bi) in a.iter().zip(b) {
                    positive_finite("a", ai)?;
                    positive_finite("b", bi)?;
                    log_c -= ln_beta(ai + 1.0, bi + 1.0);
                    dists.push(Beta::new(ai + 1.0, bi + 1.0).map_err(|e| bad(e.to_string()))?);
                }
                if !beta_product_in_range(a, b) {
                    warnings.push(
                        "beta_product exponents are outside the range where the plain estimator is known to be asymptotically normal"
                            .to_string(),
                    );
                }
                (log_c, Draw::BetaProduct(dists))
            }
            Family::SineSingular { p } => {
                if dim != 1 {
                    return Err(bad(format!(
                        "sine_singular is one-dimensional, got dim = {dim}"
                    )));
                }
                if !p.is_finite() || *p < 2.0 {
                    return Err(bad(format!("sine_singular needs p >= 2, got {p}")));
                }
                let m = sine_moments(*p, 0);
                (-m.m0.ln(), Draw::SineSingular(*p))
            }
            Family::Uniform => (0.0, Draw::Uniform),
            Family::Exponential => (0.0, Draw::Exponential),
        };
        Ok(DensityModel {
            family,
            dim,
            log_norm,
            draw,
            warnings,
        })
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let dim = spec.dim;
        let params = &spec.params;
        let allowed: &[&str] = match spec.family.as_str() {
            "gaussian" => &["sigma"],
            "gen_exp" | "heavy_tail" | "gamma_radial" => &["a"],
            "beta_product" => &["a", "b"],
            "sine_singular" => &["p"],
            "uniform" | "exponential" => &[],
            other => return Err(bad(format!("unknown family '{other}'"))),
        };
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(bad(format!(
                "unknown parameter '{k}' for family {}",
                spec.family
            )));
        }
        let scalar = |name: &str| -> Result<f64> {
            params
                .get(name)
                .ok_or_else(|| bad(format!("family {} needs parameter '{name}'", spec.family)))?
                .as_f64()
                .ok_or_else(|| bad(format!("parameter '{name}' must be a number")))
        };
        let vector = |name: &str| -> Result<Vec<f64>> {
            match params.get(name) {
                Some(Value::Array(items)) => items
                    .iter()
                    .map(|v| {
                        v.as_f64()
                            .ok_or_else(|| bad(format!("parameter '{name}' must hold numbers")))
                    })
                    .collect(),
                Some(_) => Ok(vec![scalar(name)?; dim]),
                None => Err(bad(format!("family beta_product needs parameter '{name}'"))),
            }
        };
        let family = match spec.family.as_str() {
            "gaussian" => Family::Gaussian {
                sigma: if params.contains_key("sigma") {
                    scalar("sigma")?
                } else {
                    1.0
                },
            },
            "gen_exp" => Family::GenExp { a: scalar("a")? },
            "heavy_tail" => Family::HeavyTail { a: scalar("a")? },
            "gamma_radial" => Family::GammaRadial { a: scalar("a")? },
            "beta_product" => Family::BetaProduct {
                a: vector("a")?,
                b: vector("b")?,
            },
            "sine_singular" => Family::SineSingular { p: scalar("p")? },
            "uniform" => Family::Uniform,
            _ => Family::Exponential,
        };
        DensityModel::new(family, dim)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(text)?;
        DensityModel::from_spec(&spec)
    }

    pub fn spec(&self) -> ModelSpec {
        let mut params = Map::new();
        let num = |v: f64| Value::from(v);
        match &self.family {
            Family::Gaussian { sigma } => {
                params.insert("sigma".into(), num(*sigma));
            }
            Family::GenExp { a } | Family::HeavyTail { a } | Family::GammaRadial { a } => {
                params.insert("a".into(), num(*a));
            }
            Family::BetaProduct { a, b } => {
                params.insert("a".into(), Value::from(a.clone()));
                params.insert("b".into(), Value::from(b.clone()));
            }
            Family::SineSingular { p } => {
                params.insert("p".into(), num(*p));
            }
            Family::Uniform | Family::Exponential => {}
        }
        ModelSpec {
            family: self.family.name().to_string(),
            dim: self.dim,
            params,
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Logarithm of the normalizing constant.
    pub fn log_normalizer(&self) -> f64 {
        self.log_norm
    }

    /// Parameter-range warnings; the model is still usable.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Draws one point into `out` (length `dim`).
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let d = self.dim;
        match &self.draw {
            Draw::Gaussian(sigma) => {
                for x in out.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *x = sigma * z;
                }
            }
            Draw::GenExp { a, radius } => {
                // envelope rho^(d-1) exp(-rho^a), i.e. rho^a ~ Gamma(d/a)
                let rho = loop {
                    let rho = radius.sample(rng).powf(1.0 / a);
                    let log_accept = rho.powf(*a) - (0.5 * a * (rho * rho).ln_1p()).exp();
                    let u: f64 = rng.random();
                    if u.ln() < log_accept {
                        break rho;
                    }
                };
                unit_sphere_point(d, NormKind::Euclidean, rng, out);
                out.iter_mut().for_each(|x| *x *= rho);
            }
            Draw::HeavyTail(chi2) => {
                let w = chi2.sample(rng).sqrt();
                for x in out.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *x = z / w;
                }
            }
            Draw::GammaRadial(radius) => {
                let rho = radius.sample(rng);
                if d == 1 {
                    out[0] = rho;
                } else {
                    unit_sphere_point(d, NormKind::Euclidean, rng, out);
                    out.iter_mut().for_each(|x| *x *= rho);
                }
            }
            Draw::BetaProduct(dists) => {
                for (x, dist) in out.iter_mut().zip(dists) {
                    *x = dist.sample(rng);
                }
            }
            Draw::SineSingular(p) => {
                // envelope proportional to x^p on (0, 1)
                out[0] = loop {
                    let u: f64 = rng.random();
                    let x = u.powf(1.0 / (p + 1.0));
                    let v: f64 = rng.random();
                    if x > 0.0 && x < 1.0 && v < (PI / x).sin().abs() {
                        break x;
                    }
                };
            }
            Draw::Uniform => {
                for x in out.iter_mut() {
                    *x = rng.random();
                }
            }
            Draw::Exponential => {
                for x in out.iter_mut() {
                    *x = rng.sample(Exp1);
                }
            }
        }
    }

    /// `count` i.i.d. draws, tagged with the Euclidean norm.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> SampleSet {
        let mut data = vec![0.0; count * self.dim];
        for row in data.chunks_exact_mut(self.dim) {
            self.sample_point(rng, row);
        }
        SampleSet::new(data, self.dim, NormKind::Euclidean).expect("sampler output is finite")
    }

    /// `log f(x)`, or `-inf` outside the support.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self.log_density_unchecked(x))
    }

    fn log_density_unchecked(&self, x: &[f64]) -> f64 {
        let d = self.dim as f64;
        let r2 = || x.iter().map(|v| v * v).sum::<f64>();
        let c = self.log_norm;
        match &self.family {
            Family::Gaussian { sigma } => c - r2() / (2.0 * sigma * sigma),
            Family::GenExp { a } => c - (0.5 * a * r2().ln_1p()).exp(),
            Family::HeavyTail { a } => c - 0.5 * (d + a) * r2().ln_1p(),
            Family::GammaRadial { a } => {
                if self.dim == 1 && x[0] < 0.0 {
                    return f64::NEG_INFINITY;
                }
                let rho = r2().sqrt();
                let power = if *a == 0.0 { 0.0 } else { a * rho.ln() };
                c + power - rho
            }
            Family::BetaProduct { a, b } => {
                let mut acc = c;
                for ((&xi, &ai), &bi) in x.iter().zip(a).zip(b) {
                    if !(0.0..=1.0).contains(&xi) {
                        return f64::NEG_INFINITY;
                    }
                    acc += ai * xi.ln() + bi * (-xi).ln_1p();
                }
                acc
            }
            Family::SineSingular { p } => {
                let t = x[0];
                if !(t > 0.0 && t < 1.0) {
                    return f64::NEG_INFINITY;
                }
                c + p * t.ln() + (PI / t).sin().abs().ln()
            }
            Family::Uniform => {
                if x.iter().all(|v| (0.0..=1.0).contains(v)) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Family::Exponential => {
                if x.iter().all(|&v| v >= 0.0) {
                    -x.iter().sum::<f64>()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// `H(f)`, closed form where one exists and quadrature otherwise.
    pub fn reference_entropy(&self) -> ReferenceEntropy {
        let d = self.dim as f64;
        let closed = |value| Reference {
            value,
            method: Method::ClosedForm,
            tolerance: 0.0,
        };
        match &self.family {
            Family::Gaussian { sigma } => closed(0.5 * d * ((2.0 * PI * sigma * sigma).ln() + 1.0)),
            Family::HeavyTail { a } => {
                let k = 0.5 * (d + a);
                closed(-self.log_norm + k * (digamma(k) - digamma(0.5 * a)))
            }
            Family::GammaRadial { a } => {
                let k = d + a;
                closed(-self.log_norm - a * digamma(k) + k)
            }
            Family::BetaProduct { a, b } => closed(
                a.iter()
                    .zip(b)
                    .map(|(&ai, &bi)| {
                        let (al, be) = (ai + 1.0, bi + 1.0);
                        ln_beta(al, be) - ai * digamma(al) - bi * digamma(be)
                            + (ai + bi) * digamma(al + be)
                    })
                    .sum(),
            ),
            Family::Uniform => closed(0.0),
            Family::Exponential => closed(d),
            Family::GenExp { a } => {
                let m = gen_exp_moments(self.dim, *a);
                let mean_q = m.m1 / m.m0;
                let value = -self.log_norm + mean_q;
                Reference {
                    value,
                    method: Method::Quadrature,
                    tolerance: quad_tolerance(m.rel_error, value.abs().max(mean_q)),
                }
            }
            Family::SineSingular { p } => {
                let m = sine_moments(*p, 1);
                let value = -self.log_norm - m.m1 / m.m0;
                Reference {
                    value,
                    method: Method::Quadrature,
                    tolerance: quad_tolerance(m.rel_error, value.abs().max(self.log_norm.abs())),
                }
            }
        }
    }

    /// `Var(log f(X))`.
    pub fn var_log_density(&self) -> Reference {
        let d = self.dim as f64;
        let closed = |value| Reference {
            value,
            method: Method::ClosedForm,
            tolerance: 0.0,
        };
        match &self.family {
            Family::Gaussian { .. } => closed(0.5 * d),
            Family::HeavyTail { a } => {
                let k = 0.5 * (d + a);
                closed(k * k * (trigamma(0.5 * a) - trigamma(k)))
            }
            Family::GammaRadial { a } => {
                let k = d + a;
                closed(a * a * trigamma(k) + k - 2.0 * a)
            }
            Family::BetaProduct { a, b } => closed(
                a.iter()
                    .zip(b)
                    .map(|(&ai, &bi)| {
                        let (al, be) = (ai + 1.0, bi + 1.0);
                        ai * ai * trigamma(al) + bi * bi * trigamma(be)
                            - (ai + bi).powi(2) * trigamma(al + be)
                    })
                    .sum(),
            ),
            Family::Uniform => closed(0.0),
            Family::Exponential => closed(d),
            Family::GenExp { a } => {
                let m = gen_exp_moments(self.dim, *a);
                let mean = m.m1 / m.m0;
                let value = m.m2 / m.m0 - mean * mean;
                Reference {
                    value,
                    method: Method::Quadrature,
                    tolerance: quad_tolerance(m.rel_error, m.m2 / m.m0),
                }
            }
            Family::SineSingular { p } => {
                let m = sine_moments(*p, 2);
                let mean = m.m1 / m.m0;
                let value = m.m2 / m.m0 - mean * mean;
                Reference {
                    value,
                    method: Method::Quadrature,
                    tolerance: quad_tolerance(m.rel_error, m.m2 / m.m0),
                }
            }
        }
    }

    /// `σ²(f) = Var(log f(X)) + χ_d`.
    pub fn reference_sigma2(&self, chi_d: f64) -> Reference {
        let v = self.var_log_density();
        Reference {
            value: v.value + chi_d,
            ..v
        }
    }

    /// MC estimate of `H(f)` as `-mean log f` over `draws` samples.
    pub fn mc_entropy<R: Rng + ?Sized>(&self, draws: usize, rng: &mut R) -> Reference {
        let (mean, var) = self.mc_log_density_moments(draws, rng);
        Reference {
            value: -mean,
            method: Method::Mc,
            tolerance: (var / draws as f64).sqrt(),
        }
    }

    /// MC estimate of `σ²(f)`, with the standard error of the sample
    /// variance as tolerance.
    pub fn mc_sigma2<R: Rng + ?Sized>(&self, chi_d: f64, draws: usize, rng: &mut R) -> Reference {
        let mut x = vec![0.0; self.dim];
        let values: Vec<f64> = (0..draws)
            .map(|_| {
                self.sample_point(rng, &mut x);
                self.log_density_unchecked(&x)
            })
            .collect();
        let n = draws as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sq: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
        let var = sq.iter().sum::<f64>() / n;
        let var_sq = sq.iter().map(|s| (s - var).powi(2)).sum::<f64>() / n;
        Reference {
            value: var + chi_d,
            method: Method::Mc,
            tolerance: (var_sq / n).sqrt(),
        }
    }

    fn mc_log_density_moments<R: Rng + ?Sized>(&self, draws: usize, rng: &mut R) -> (f64, f64) {
        let mut x = vec![0.0; self.dim];
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for i in 0..draws {
            self.sample_point(rng, &mut x);
            let v = self.log_density_unchecked(&x);
            let delta = v - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (v - mean);
        }
        (mean, m2 / draws.max(1) as f64)
    }

    /// `∫ f^(-2/d-1) |∇f|^2 dx` for the smooth radial families.
    pub fn gradient_integral(&self) -> Result<quad::Integral> {
        let d = self.dim;
        let df = d as f64;
        let expo = 1.0 - 2.0 / df;
        let c = self.log_norm;
        // (log g(rho), d/drho log g(rho)) and a length scale
        let (profile, scale): (Box<dyn Fn(f64) -> (f64, f64) + Sync>, f64) = match self.family {
            Family::Gaussian { sigma } => (
                Box::new(move |r: f64| (c - r * r / (2.0 * sigma * sigma), -r / (sigma * sigma))),
                sigma,
            ),
            Family::GenExp { a } => (
                Box::new(move |r: f64| {
                    let q = (0.5 * a * (r * r).ln_1p()).exp();
                    (c - q, -a * r * q / (1.0 + r * r))
                }),
                (df / a).powf(1.0 / a).max(1.0),
            ),
            Family::HeavyTail { a } => (
                Box::new(move |r: f64| {
                    let l = (r * r).ln_1p();
                    (c - 0.5 * (df + a) * l, -(df + a) * r / (1.0 + r * r))
                }),
                1.0,
            ),
            _ => {
                return Err(Error::Unsupported(format!(
                    "no gradient for family {}",
                    self.family.name()
                )))
            }
        };
        let area = sphere_area(d, false);
        let integrand = |r: f64| {
            if r <= 0.0 {
                return 0.0;
            }
            let (lg, dlg) = profile(r);
            area * ((df - 1.0) * r.ln() + expo * lg).exp() * dlg * dlg
        };
        Ok(relative_half_line(&integrand, scale))
    }

    /// Leading bias coefficient of the plain estimator under `norm`.
    ///
    /// `λ₁ = -(c₂/d) Γ(1+2/d) v_d^(-1-2/d) ∫ f^(-2/d-1)|∇f|²`, where
    /// `c₂ = ∫_{B(0,1)} y₁² dy` over the unit ball of `norm`.
    pub fn leading_bias_coefficient(&self, norm: NormKind) -> Result<BiasCoefficient> {
        if self.dim < 3 {
            return Err(Error::Unsupported(format!(
                "the bias expansion is only available for dim >= 3, got {}",
                self.dim
            )));
        }
        let g = self.gradient_integral()?;
        let d = self.dim as f64;
        let v = unit_ball_volume_unchecked(self.dim, norm);
        let c2 = match norm {
            NormKind::Euclidean => v / (d + 2.0),
            NormKind::Chebyshev => v / 3.0,
        };
        let factor = -(c2 / d) * (ln_gamma(1.0 + 2.0 / d).exp()) * v.powf(-1.0 - 2.0 / d);
        Ok(BiasCoefficient {
            value: factor * g.value,
            tolerance: (factor * g.error).abs(),
            gradient_integral: g.value,
        })
    }
}

fn quad_tolerance(rel_error: f64, magnitude: f64) -> f64 {
    (rel_error * magnitude.max(1.0)).max(1e-12)
}

/// Half-line quadrature to `QUAD_RTOL` relative accuracy.
fn relative_half_line<F: Fn(f64) -> f64>(f: &F, scale: f64) -> quad::Integral {
    let rough = quad::integrate_half_line_scaled(f, scale, 1e-6);
    let tol = (rough.value.abs() * QUAD_RTOL).max(f64::MIN_POSITIVE);
    quad::integrate_half_line_scaled(f, scale, tol)
}

fn gamma_radial_in_range(d: usize, a: f64) -> bool {
    let df = d as f64;
    match d {
        1 => a >= 1.0,
        2 => a >= 2.0,
        3 => (2.0..12.0).contains(&a),
        4..=9 => a > df / 2.0 && a < 4.0 * df / (df - 2.0),
        _ => false,
    }
}

fn beta_product_in_range(a: &[f64], b: &[f64]) -> bool {
    let all = || a.iter().chain(b);
    let tau = all().cloned().fold(f64::INFINITY, f64::min);
    let mu = all().cloned().fold(f64::NEG_INFINITY, f64::max);
    match a.len() {
        1 => tau >= 1.0,
        2 => tau >= 2.0,
        3 => tau >= 2.0 && mu < 4.0,
        _ => false,
    }
}

/// Moments `m_k = ∫ w q^k` of a weight and a statistic, with the relative
/// error of the quadrature behind them.
struct Moments {
    m0: f64,
    m1: f64,
    m2: f64,
    rel_error: f64,
}

/// Radial moments of the generalized exponential family:
/// `m_k = ∫_0^∞ ρ^(d-1) e^(-q) q^k dρ` with `q = (1+ρ²)^(a/2)`.
fn gen_exp_moments(d: usize, a: f64) -> Moments {
    let df = d as f64;
    let scale = (df / a).powf(1.0 / a).max(1.0);
    let q = |r: f64| (0.5 * a * (r * r).ln_1p()).exp();
    let weight = |r: f64| {
        if r <= 0.0 {
            if d == 1 {
                (-1.0f64).exp()
            } else {
                0.0
            }
        } else {
            ((df - 1.0) * r.ln() - q(r)).exp()
        }
    };
    let i0 = relative_half_line(&weight, scale);
    let i1 = relative_half_line(&|r: f64| weight(r) * q(r), scale);
    let i2 = relative_half_line(&|r: f64| weight(r) * q(r).powi(2), scale);
    let rel_error = [i0, i1, i2]
        .iter()
        .map(|i| i.error / i.value.abs())
        .fold(QUAD_RTOL, f64::max);
    Moments {
        m0: i0.value,
        m1: i1.value,
        m2: i2.value,
        rel_error,
    }
}

/// Moments of the sine-singular density after `t = 1/x`:
/// `m_k = ∫_1^∞ t^(-p-2) |sin(πt)| L(t)^k dt`, `L = -p log t + log|sin(πt)|`,
/// summed period by period. Moments above `order` are left at zero.
fn sine_moments(p: f64, order: usize) -> Moments {
    let q = p + 2.0;
    let periods = (1..=SINE_MAX_PERIODS)
        .take_while(|&k| k == 1 || (k as f64).powf(-q) > 1e-18)
        .collect::<Vec<_>>();
    let parts: Vec<[quad::Integral; 3]> = periods
        .par_iter()
        .map(|&k| {
            let kf = k as f64;
            let pieces = |j: usize| {
                if j > order {
                    return quad::Integral::default();
                }
                let f = |s: f64| {
                    let edge = s.min(1.0 - s);
                    if edge <= 0.0 {
                        return 0.0;
                    }
                    let t = kf + s;
                    let sn = (PI * edge).sin();
                    let w = (-q * t.ln()).exp() * sn;
                    match j {
                        0 => w,
                        1 => w * (-p * t.ln() + sn.ln()),
                        _ => w * (-p * t.ln() + sn.ln()).powi(2),
                    }
                };
                let tol = kf.powf(-q) * 1e-15;
                quad::integrate(&f, 0.0, 1.0, tol)
            };
            [pieces(0), pieces(1), pieces(2)]
        })
        .collect();
    let mut sums = [quad::Integral::default(); 3];
    for part in &parts {
        for j in 0..3 {
            sums[j] = sums[j] + part[j];
        }
    }
    // remaining periods, |sin| replaced by its mean 2/π
    let last = (periods.len() + 1) as f64;
    let tail = 2.0 / PI * last.powf(1.0 - q) / (q - 1.0);
    sums[0].value += tail;
    let tail_error = tail * (1.0 + p * last.ln()).powi(2);
    let rel_error = sums
        .iter()
        .take(order + 1)
        .map(|s| (s.error + tail_error) / s.value.abs().max(f64::MIN_POSITIVE))
        .fold(QUAD_RTOL, f64::max);
    Moments {
        m0: sums[0].value,
        m1: sums[1].value,
        m2: sums[2].value,
        rel_error,
    }
}
