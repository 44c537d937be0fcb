//! Bootstrap uncertainty, conditional quantiles, simulation and tail curves.

mod bootstrap;
mod quantile;
mod simulate;
mod tail;

pub use bootstrap::{bootstrap_fit, bootstrap_member, BootstrapEnsemble, BootstrapMember};
pub use quantile::{conditional_quantile, gp_conditional_quantile, quantile_grid};
pub use simulate::{simulate, SimulatedSample};
pub use tail::{tail_curves, write_tail_csv, Strata, TailCurve, TailPoint};

use crate::geometry::Triangulation;
use crate::gp::FitResult;
use crate::Coord;

/// A fitted tail model: GP scale and shape at any covariate value.
pub trait TailModel: Sync {
    fn params_at(&self, x: &Coord) -> (f64, f64);
}

/// A fit together with the triangulation it was fitted on.
#[derive(Debug, Clone, Copy)]
pub struct FittedModel<'a> {
    pub fit: &'a FitResult,
    pub tri: &'a Triangulation,
}

impl TailModel for FittedModel<'_> {
    fn params_at(&self, x: &Coord) -> (f64, f64) {
        self.fit.params_at(self.tri, x)
    }
}

/// Covariate-independent GP parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryModel {
    pub scale: f64,
    pub shape: f64,
}

impl TailModel for StationaryModel {
    fn params_at(&self, _x: &Coord) -> (f64, f64) {
        (self.scale, self.shape)
    }
}
