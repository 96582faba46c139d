//! Nearest-neighbor distances `R_i = min_{j != i} |X_i - X_j|` of every
//! sample point, by brute force and by k-d tree.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{distance_unchecked, NormKind};
use crate::kdtree::KdTree;

/// An i.i.d. sample stored row-major, with the norm used for distances.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    data: Vec<f64>,
    dim: usize,
    norm: NormKind,
}

impl SampleSet {
    /// Wraps a row-major buffer. Rejects zero dimension, ragged length and
    /// non-finite coordinates.
    pub fn new(data: Vec<f64>, dim: usize, norm: NormKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.len() % dim,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(SampleSet { data, dim, norm })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], norm: NormKind) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        SampleSet::new(data, dim, norm)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> NormKind {
        self.norm
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Same points, different norm.
    pub fn with_norm(mut self, norm: NormKind) -> Self {
        self.norm = norm;
        self
    }

    /// A new sample made of the given rows, in order.
    pub fn select(&self, indices: &[usize]) -> SampleSet {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        SampleSet {
            data,
            dim: self.dim,
            norm: self.norm,
        }
    }

    /// Number of rows that coincide with at least one other row.
    pub fn duplicate_rows(&self) -> usize {
        // +0.0 folds -0.0 into 0.0 so that total_cmp treats them as equal
        let key = |i: usize| self.row(i).iter().map(|v| v + 0.0);
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.par_sort_unstable_by(|&a, &b| {
            key(a)
                .zip(key(b))
                .map(|(x, y)| x.total_cmp(&y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        order
            .chunk_by(|&a, &b| self.row(a) == self.row(b))
            .filter(|run| run.len() > 1)
            .map(|run| run.len())
            .sum()
    }

    /// Applies `f` to every coordinate.
    pub fn map_coords(&self, f: impl Fn(usize, f64) -> f64) -> SampleSet {
        let dim = self.dim;
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(k, &v)| f(k % dim, v))
            .collect();
        SampleSet {
            data,
            dim,
            norm: self.norm,
        }
    }
}

/// Per-point nearest-neighbor distances and the normalized log-gaps
/// `log Y_i = log N + d log R_i`, where `N + 1` is the sample size.
#[derive(Clone, Debug, PartialEq)]
pub struct NNDistances {
    pub r: Vec<f64>,
    pub log_y: Vec<f64>,
    /// `N`, one less than the number of points.
    pub n: usize,
    /// Number of points whose nearest neighbor is at distance zero.
    pub duplicate_count: usize,
}

impl NNDistances {
    pub fn from_radii(r: Vec<f64>, dim: usize) -> Self {
        let n = r.len().saturating_sub(1);
        let log_n = (n as f64).ln();
        let d = dim as f64;
        let log_y = r.iter().map(|&ri| log_n + d * ri.ln()).collect();
        let duplicate_count = r.iter().filter(|&&ri| ri == 0.0).count();
        NNDistances {
            r,
            log_y,
            n,
            duplicate_count,
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Fails with [`Error::DuplicatePoints`] if any `R_i` is zero.
    pub fn ensure_no_duplicates(&self) -> Result<()> {
        if self.duplicate_count > 0 {
            return Err(Error::DuplicatePoints {
                count: self.duplicate_count,
            });
        }
        Ok(())
    }
}

fn check_size(s: &SampleSet) -> Result<()> {
    if s.len() < 2 {
        return Err(Error::TooFewPoints(s.len()));
    }
    Ok(())
}

/// Exact all-pairs minimum, `O(N^2)`.
pub fn nn_bruteforce(s: &SampleSet) -> Result<NNDistances> {
    check_size(s)?;
    let m = s.len();
    let r = (0..m)
        .into_par_iter()
        .map(|i| {
            let xi = s.row(i);
            let mut best = f64::INFINITY;
            for j in 0..m {
                if j != i {
                    best = best.min(distance_unchecked(xi, s.row(j), s.norm()));
                }
            }
            best
        })
        .collect();
    Ok(NNDistances::from_radii(r, s.dim()))
}

/// Same result as [`nn_bruteforce`], through a k-d tree.
pub fn nn_kdtree(s: &SampleSet) -> Result<NNDistances> {
    check_size(s)?;
    let tree = KdTree::build(s);
    let r = (0..s.len())
        .into_par_iter()
        .map(|i| tree.nearest_excluding(s.row(i), i))
        .collect();
    Ok(NNDistances::from_radii(r, s.dim()))
}

/// The default path: k-d tree for low dimension, brute force otherwise.
pub fn nn_distances(s: &SampleSet) -> Result<NNDistances> {
    if s.dim() > 12 && s.len() < 4096 {
        nn_bruteforce(s)
    } else {
        nn_kdtree(s)
    }
}
