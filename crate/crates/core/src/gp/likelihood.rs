use super::density::{log_density_excess, XI_ZERO};
use super::exceedance::LocatedExceedances;

/// Negative log-likelihood of the excesses under node values `scale`, `shape`
/// (one shape value per node). `+inf` when any excess lies outside the support.
pub fn negative_log_likelihood(ex: &LocatedExceedances, scale: &[f64], shape: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..ex.len() {
        let (s, x) = ex.params_at(i, scale, shape);
        let l = log_density_excess(ex.excess[i], s, x);
        if l == f64::NEG_INFINITY || l.is_nan() {
            return f64::INFINITY;
        }
        total -= l;
    }
    total
}

/// Analytic gradient of [`negative_log_likelihood`] with respect to the node
/// scale and shape values. Only meaningful where the likelihood is finite and
/// `|xi|` is away from zero.
pub fn nll_gradient(ex: &LocatedExceedances, scale: &[f64], shape: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut gs = vec![0.0; scale.len()];
    let mut gx = vec![0.0; shape.len()];
    for i in 0..ex.len() {
        let (s, x) = ex.params_at(i, scale, shape);
        let z = ex.excess[i];
        let (ds, dx) = if x.abs() < XI_ZERO {
            let t = z / s;
            (-1.0 / s + z / (s * s), t * t / 2.0 - t)
        } else {
            let a = 1.0 + x * z / s;
            (
                -1.0 / s + (1.0 + x) * z / (s * (s + x * z)),
                a.ln() / (x * x) - (1.0 + 1.0 / x) * (z / s) / a,
            )
        };
        let (k, w) = (&ex.nodes[i], &ex.weights[i]);
        for j in 0..ex.arity {
            gs[k[j]] -= w[j] * ds;
            gx[k[j]] -= w[j] * dx;
        }
    }
    (gs, gx)
}
