//! Nearest-neighbor entropy estimation with confidence intervals.
//!
//! The estimator of the differential entropy `H(f) = -∫ f log f` from an
//! i.i.d. sample `X_1..X_{N+1}` is
//! `H_N = mean(log(N R_i^d)) + γ + log v_d`, with `R_i` the distance from
//! `X_i` to its nearest neighbor. Its variance is estimated by
//! `V_N = var(log(N R_i^d)) + χ_d - π²/6`, and for `d ≥ 4` a Richardson
//! combination over nested subsamples removes the leading bias terms.

pub mod chi;
pub mod density;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod harness;
mod kdtree;
pub mod nn;
pub mod quad;
pub mod richardson;
pub mod rng;

pub use chi::{bundled_chi, chi, chi_with, ChiConfig, ChiEstimate};
pub use density::{DensityModel, Family, Method, ModelSpec, Reference, ReferenceEntropy};
pub use error::{Error, Result};
pub use estimator::{estimate, estimate_from_nn, EntropyEstimate, ExtrapolationInfo};
pub use geometry::{distance, intersection_volume, unit_ball_volume, NormKind, ShellSpec};
pub use nn::{nn_bruteforce, nn_distances, nn_kdtree, NNDistances, SampleSet};
pub use richardson::{estimate_extrapolated, plan, RichardsonPlan};
