//! Penalised piecewise-linear (PPL) generalised Pareto models for non-stationary
//! peaks-over-threshold analysis on periodic covariate domains.
//!
//! Covariates (direction in degrees, season in days of a 360-day year) live on
//! `[0, 360)^D` with `D` equal to 1 or 2. The pipeline is:
//!
//! 1. [`sample`]: load storm peaks or decluster a sea-state series.
//! 2. [`empirical`]: covariate kernel density, local-quantile threshold and local
//!    moment estimates of the GP parameters (for node placement).
//! 3. [`geometry`]: nodes, periodic triangulations and piecewise-linear fields.
//! 4. [`gp`]: GP likelihood over piecewise-linear fields, roughness penalty and
//!    the constrained fit.
//! 5. [`tuning`]: replicated G-fold cross-validation over a penalty grid.
//! 6. [`predict`]: bootstrap, conditional quantiles, simulation and tail curves.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the `parallel`
//! feature is enabled and plain iterators otherwise. Results are identical either way.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod empirical;
pub mod error;
pub mod geometry;
pub mod gp;
pub mod par;
pub mod predict;
pub mod sample;
pub mod synth;
pub mod tuning;

pub use error::{ErrorKind, PplError, Result};

/// Length of one period of every covariate (degrees, or days of the standardised year).
pub const PERIOD: f64 = 360.0;

/// A covariate vector. One-dimensional samples use the first component only and
/// keep the second at zero.
pub type Coord = [f64; 2];

/// Reduce a coordinate into `[0, 360)`.
#[inline]
pub fn wrap(v: f64) -> f64 {
    let r = v.rem_euclid(PERIOD);
    // rem_euclid can return PERIOD for tiny negative inputs
    if r >= PERIOD {
        0.0
    } else {
        r
    }
}
