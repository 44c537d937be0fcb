use crate::error::{PplError, Result};

/// Below this magnitude the shape parameter is treated as zero.
pub const XI_ZERO: f64 = 1e-9;

/// Log-density of a GP excess `z = y - u >= 0` with scale `sigma > 0` and shape `xi`.
///
/// Returns `-inf` outside the support. For `|xi| < XI_ZERO` the exponential
/// limit plus its first-order correction in `xi` is used, which is continuous
/// with the general branch.
#[inline]
pub fn log_density_excess(z: f64, sigma: f64, xi: f64) -> f64 {
    if z < 0.0 || sigma <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let t = z / sigma;
    if xi.abs() < XI_ZERO {
        return -sigma.ln() - t + xi * (t * t / 2.0 - t);
    }
    let a = xi * t;
    if a <= -1.0 {
        return f64::NEG_INFINITY;
    }
    -sigma.ln() - (1.0 + 1.0 / xi) * a.ln_1p()
}

/// Log of the GP density of `y` above threshold `u`.
pub fn gp_log_density(y: f64, u: f64, sigma: f64, xi: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(PplError::Domain(format!("GP scale must be positive, got {sigma}")));
    }
    Ok(log_density_excess(y - u, sigma, xi))
}

/// `Pr(Z > z)` for a GP excess.
pub fn gp_survival(z: f64, sigma: f64, xi: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    let t = z / sigma;
    if xi.abs() < XI_ZERO {
        return (-t).exp();
    }
    let a = 1.0 + xi * t;
    if a <= 0.0 {
        0.0
    } else {
        (-a.ln() / xi).exp()
    }
}

/// Inverse of the GP distribution function: the excess with `Pr(Z <= z) = q`.
pub fn gp_quantile(q: f64, sigma: f64, xi: f64) -> f64 {
    let tail = 1.0 - q;
    if xi.abs() < XI_ZERO {
        -sigma * tail.ln()
    } else {
        sigma / xi * ((-xi * tail.ln()).exp() - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_at_threshold_is_inverse_scale() {
        assert!((gp_log_density(3.0, 3.0, 2.0, -0.2).unwrap() - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn exponential_branch() {
        assert!((gp_log_density(1.0, 0.0, 1.0, 0.0).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_shape_closed_form() {
        // (1 + xi t)^(-1 - 1/xi) = 0.8^4
        let v = gp_log_density(1.0, 0.0, 1.0, -0.2).unwrap();
        assert!((v - 4.0 * 0.8f64.ln()).abs() < 1e-14);
        assert!((v + 0.892_574_205_256_839_6).abs() < 1e-12);
    }

    #[test]
    fn beyond_end_point() {
        assert_eq!(gp_log_density(5.1, 0.0, 1.0, -0.2).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn non_positive_scale_is_domain_error() {
        assert!(matches!(gp_log_density(1.0, 0.0, 0.0, -0.2), Err(PplError::Domain(_))));
    }

    #[test]
    fn continuous_through_zero_shape() {
        for &z in &[0.1, 1.0, 3.0] {
            let at0 = log_density_excess(z, 1.3, 0.0);
            let above = log_density_excess(z, 1.3, 2e-9);
            let below = log_density_excess(z, 1.3, 0.5e-9);
            assert!((at0 - above).abs() < 1e-8);
            assert!((below - above).abs() < 1e-8);
        }
    }

    #[test]
    fn quantile_inverts_survival() {
        for &xi in &[-0.4, -0.2, 0.0, 0.1] {
            for &q in &[0.1, 0.5, 0.9, 0.999] {
                let z = gp_quantile(q, 1.7, xi);
                assert!((1.0 - gp_survival(z, 1.7, xi) - q).abs() < 1e-12);
            }
        }
    }
}
