//! Non-parametric fields on a regular periodic grid: covariate density, the
//! local-quantile threshold and local moment estimates of the GP parameters.

mod grid;
mod kde;
mod moments;
mod smooth;
mod threshold;

pub use grid::GridField;
pub use kde::{kde, CovariateKde};
pub use moments::{local_moment_estimates, moment_estimate, LocalGPEstimates, LocalMomentConfig};
pub use smooth::KernelSmoother;
pub use threshold::{
    empirical_quantile, local_quantile_threshold, ConstantThreshold, Threshold, ThresholdConfig,
    ThresholdField,
};

use crate::geometry::periodic_distance2;
use crate::Coord;

/// Indices of the `c` points nearest to `x` (periodic metric), ties broken by index.
pub(crate) fn nearest_indices(points: &[Coord], x: &Coord, dim: usize, c: usize) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (periodic_distance2(p, x, dim), i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if c < keyed.len() {
        keyed.select_nth_unstable_by(c, cmp);
        keyed.truncate(c);
    }
    keyed.sort_by(cmp);
    keyed.into_iter().map(|(_, i)| i).collect()
}
