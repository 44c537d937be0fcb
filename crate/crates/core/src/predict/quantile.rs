use super::TailModel;
use crate::empirical::{GridField, Threshold};
use crate::error::{invalid, PplError, Result};
use crate::gp::XI_ZERO;
use crate::Coord;

/// Level with non-exceedance probability `p` given threshold `u`, GP
/// parameters and exceedance probability `zeta`. Levels below the threshold
/// quantile (`p < 1 - zeta`) are outside the tail model.
pub fn gp_conditional_quantile(u: f64, sigma: f64, xi: f64, zeta: f64, p: f64) -> Result<f64> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(invalid(format!("exceedance probability must be in (0, 1], got {zeta}")));
    }
    if !(0.0..1.0).contains(&p) {
        return Err(invalid(format!("non-exceedance probability must be in [0, 1), got {p}")));
    }
    if p < 1.0 - zeta - 1e-12 {
        return Err(PplError::OutOfModel { p, level: 1.0 - zeta });
    }
    let t = ((1.0 - p) / zeta).min(1.0);
    if t == 1.0 {
        return Ok(u);
    }
    Ok(if xi.abs() < XI_ZERO {
        u - sigma * t.ln()
    } else {
        u + sigma / xi * ((-xi * t.ln()).exp() - 1.0)
    })
}

pub fn conditional_quantile(
    model: &dyn TailModel,
    threshold: &dyn Threshold,
    zeta: f64,
    x: &Coord,
    p: f64,
) -> Result<f64> {
    let (sigma, xi) = model.params_at(x);
    gp_conditional_quantile(threshold.threshold_at(x), sigma, xi, zeta, p)
}

/// Conditional quantile surface on a regular grid.
pub fn quantile_grid(
    model: &dyn TailModel,
    threshold: &dyn Threshold,
    zeta: f64,
    p: f64,
    dim: usize,
    resolution: &[usize],
) -> Result<GridField> {
    gp_conditional_quantile(0.0, 1.0, -0.1, zeta, p)?;
    let mut g = GridField::from_fn(dim, resolution, |x| {
        conditional_quantile(model, threshold, zeta, x, p).expect("validated probability")
    })?;
    g.set_meta("quantity", "conditional_quantile");
    g.set_meta("p", p);
    g.set_meta("zeta", zeta);
    Ok(g)
}
