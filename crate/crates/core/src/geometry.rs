//! Norms, unit-ball volumes, exact ball-ball intersection volumes and exact
//! uniform sampling on norm shells.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// The two norms supported throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    /// `|x|_2`, root of the sum of squares.
    #[serde(rename = "l2")]
    Euclidean,
    /// `|x|_inf`, largest absolute coordinate.
    #[serde(rename = "linf")]
    Chebyshev,
}

impl NormKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::Euclidean => "l2",
            NormKind::Chebyshev => "linf",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" | "euclidean" => Ok(NormKind::Euclidean),
            "linf" | "chebyshev" | "max" => Ok(NormKind::Chebyshev),
            other => Err(Error::InvalidParameter(format!(
                "unknown norm {other:?} (expected l2 or linf)"
            ))),
        }
    }
}

/// Volume of the unit ball `B(0, 1)` in dimension `d`.
///
/// The Euclidean value uses the recurrence `v_d = v_{d-2} 2 pi / d`, which is
/// the Gamma-function formula without going through `ln_gamma`.
pub fn unit_ball_volume(d: usize, norm: NormKind) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    Ok(unit_ball_volume_unchecked(d, norm))
}

pub(crate) fn unit_ball_volume_unchecked(d: usize, norm: NormKind) -> f64 {
    match norm {
        NormKind::Chebyshev => 2f64.powi(d as i32),
        NormKind::Euclidean => {
            let mut v = if d.is_multiple_of(2) { 1.0 } else { 2.0 };
            let mut k = if d.is_multiple_of(2) { 2 } else { 3 };
            while k <= d {
                v *= 2.0 * PI / k as f64;
                k += 2;
            }
            v
        }
    }
}

/// Distance between two points of equal dimension.
pub fn distance(x: &[f64], y: &[f64], norm: NormKind) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(distance_unchecked(x, y, norm))
}

#[inline]
pub(crate) fn distance_unchecked(x: &[f64], y: &[f64], norm: NormKind) -> f64 {
    match norm {
        NormKind::Euclidean => x
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
        NormKind::Chebyshev => x
            .iter()
            .zip(y)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs())),
    }
}

#[inline]
pub(crate) fn norm_of(x: &[f64], norm: NormKind) -> f64 {
    match norm {
        NormKind::Euclidean => x.iter().map(|a| a * a).sum::<f64>().sqrt(),
        NormKind::Chebyshev => x.iter().fold(0.0, |m, a| f64::max(m, a.abs())),
    }
}

/// Volume of `B(0, r) ∩ B(y, s)`.
pub fn intersection_volume(r: f64, s: f64, y: &[f64], norm: NormKind) -> Result<f64> {
    if !(r > 0.0 && s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radii must be positive, got r={r}, s={s}"
        )));
    }
    if y.is_empty() {
        return Err(Error::InvalidDimension(0));
    }
    Ok(intersection_volume_unchecked(r, s, y, norm))
}

pub(crate) fn intersection_volume_unchecked(r: f64, s: f64, y: &[f64], norm: NormKind) -> f64 {
    match norm {
        NormKind::Chebyshev => {
            let mut vol = 1.0;
            for &c in y {
                let side = f64::min(r, c + s) - f64::max(-r, c - s);
                if side <= 0.0 {
                    return 0.0;
                }
                vol *= side;
            }
            vol
        }
        NormKind::Euclidean => lens_volume(r, s, norm_of(y, NormKind::Euclidean), y.len()),
    }
}

/// Euclidean intersection of two balls with radii `r`, `s` and centers `c` apart.
fn lens_volume(r: f64, s: f64, c: f64, d: usize) -> f64 {
    if c >= r + s {
        return 0.0;
    }
    if c <= (r - s).abs() {
        return unit_ball_volume_unchecked(d, NormKind::Euclidean) * r.min(s).powi(d as i32);
    }
    // Signed distance from each center to the radical hyperplane.
    let x_r = (c * c + r * r - s * s) / (2.0 * c);
    let x_s = c - x_r;
    cap_volume(r, x_r, d) + cap_volume(s, x_s, d)
}

/// Volume of the part of a radius-`radius` ball lying beyond a hyperplane at
/// signed distance `offset` from its center.
fn cap_volume(radius: f64, offset: f64, d: usize) -> f64 {
    let full = unit_ball_volume_unchecked(d, NormKind::Euclidean) * radius.powi(d as i32);
    let t = (offset.abs() / radius).min(1.0);
    let z = (1.0 - t) * (1.0 + t);
    let small = 0.5 * full * beta_reg(0.5 * (d as f64 + 1.0), 0.5, z);
    if offset >= 0.0 {
        small
    } else {
        full - small
    }
}

/// The annulus `{y : inner < |y| <= outer}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShellSpec {
    inner: f64,
    outer: f64,
    dim: usize,
    norm: NormKind,
}

impl ShellSpec {
    pub fn new(inner: f64, outer: f64, dim: usize, norm: NormKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        if !(inner >= 0.0 && inner < outer && outer.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "shell needs 0 <= inner < outer, got inner={inner}, outer={outer}"
            )));
        }
        Ok(ShellSpec {
            inner,
            outer,
            dim,
            norm,
        })
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> NormKind {
        self.norm
    }

    pub fn volume(&self) -> f64 {
        let d = self.dim as i32;
        unit_ball_volume_unchecked(self.dim, self.norm) * (self.outer.powi(d) - self.inner.powi(d))
    }

    /// Draws a point uniformly from the shell into `out`.
    ///
    /// The radius comes from inverting `(x^d - t^d) / (outer^d - t^d)`; the
    /// direction is uniform on the unit sphere of the norm.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        assert_eq!(out.len(), self.dim, "output buffer has the wrong dimension");
        let d = self.dim as i32;
        let lo = self.inner.powi(d);
        let hi = self.outer.powi(d);
        loop {
            // (0, 1] so that the outer boundary is reachable and the inner one is not
            let u = 1.0 - rng.random::<f64>();
            let radius = (lo + u * (hi - lo)).powf(1.0 / self.dim as f64);
            unit_sphere_point(self.dim, self.norm, rng, out);
            for c in out.iter_mut() {
                *c *= radius;
            }
            // rounding can push a draw an ulp across either boundary
            let n = norm_of(out, self.norm);
            if n > self.inner && n <= self.outer {
                return;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.sample_into(rng, &mut out);
        out
    }
}

pub fn shell_volume(spec: &ShellSpec) -> f64 {
    spec.volume()
}

pub fn sample_shell<R: Rng + ?Sized>(spec: &ShellSpec, rng: &mut R) -> Vec<f64> {
    spec.sample(rng)
}

/// Uniform point on `{|y| = 1}` with respect to the cone measure of the norm.
pub(crate) fn unit_sphere_point<R: Rng + ?Sized>(
    d: usize,
    norm: NormKind,
    rng: &mut R,
    out: &mut [f64],
) {
    match norm {
        NormKind::Euclidean => loop {
            let mut sq = 0.0;
            for c in out.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *c = z;
                sq += z * z;
            }
            if sq > 0.0 {
                let inv = sq.sqrt().recip();
                for c in out.iter_mut() {
                    *c *= inv;
                }
                break;
            }
        },
        NormKind::Chebyshev => {
            let face = rng.random_range(0..2 * d);
            for c in out.iter_mut() {
                *c = rng.random_range(-1.0..1.0);
            }
            out[face / 2] = if face % 2 == 0 { 1.0 } else { -1.0 };
        }
    }
}
