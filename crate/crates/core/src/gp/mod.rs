//! Generalised Pareto model with piecewise-linear scale and shape fields.

mod density;
mod exceedance;
mod fit;
mod likelihood;
pub mod optim;
mod params;
mod penalty;
mod stationary;

pub use density::{gp_log_density, gp_quantile, gp_survival, log_density_excess, XI_ZERO};
pub use exceedance::{ExceedanceSet, LocatedExceedances};
pub use fit::{fit, fit_located, voronoi_warm_start, FitOptions, FitResult};
pub use likelihood::{negative_log_likelihood, nll_gradient};
pub use params::{Case, PenaltyVector, ShapeBounds, ShapeParam, Theta};
pub use penalty::roughness_penalty;
pub use stationary::{stationary_mle, stationary_nll, stationary_scale_mle, StationaryFit};
