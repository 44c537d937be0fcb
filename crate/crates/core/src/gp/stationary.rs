use serde::{Deserialize, Serialize};

use super::density::log_density_excess;
use super::params::ShapeBounds;
use crate::error::{invalid, PplError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryFit {
    pub scale: f64,
    pub shape: f64,
    pub nll: f64,
}

pub fn stationary_nll(z: &[f64], sigma: f64, xi: f64) -> f64 {
    let mut total = 0.0;
    for &v in z {
        let l = log_density_excess(v, sigma, xi);
        if l == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        total -= l;
    }
    total
}

fn golden<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Coarse scan of `[a, b]` followed by golden-section refinement around the best grid point.
fn scan_then_golden<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, grid: usize, iters: usize) -> (f64, f64) {
    let h = (b - a) / (grid - 1) as f64;
    let mut best = (a, f(a));
    let mut best_i = 0;
    for i in 1..grid {
        let t = a + i as f64 * h;
        let v = f(t);
        if v < best.1 {
            best = (t, v);
            best_i = i;
        }
    }
    let lo = a + best_i.saturating_sub(1) as f64 * h;
    let hi = (a + (best_i + 1) as f64 * h).min(b);
    let refined = golden(&mut f, lo, hi, iters);
    if refined.1 <= best.1 {
        refined
    } else {
        best
    }
}

fn check(z: &[f64]) -> Result<f64> {
    if z.is_empty() {
        return Err(PplError::EmptySample("no excesses to fit".into()));
    }
    if z.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(invalid("excesses must be finite and non-negative"));
    }
    let zmax = z.iter().cloned().fold(0.0, f64::max);
    if zmax <= 0.0 {
        return Err(invalid("at least one excess must be positive"));
    }
    Ok(zmax)
}

/// Profile maximum-likelihood scale for fixed shape `xi`; returns `(sigma, nll)`.
pub fn stationary_scale_mle(z: &[f64], xi: f64) -> Result<(f64, f64)> {
    let zmax = check(z)?;
    Ok(scale_mle(z, xi, zmax))
}

fn scale_mle(z: &[f64], xi: f64, zmax: f64) -> (f64, f64) {
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    let floor = if xi < 0.0 { -xi * zmax } else { 0.0 };
    let s = mean + zmax;
    let sigma = |t: f64| floor + t.exp();
    let (t, v) = scan_then_golden(
        |t| stationary_nll(z, sigma(t), xi),
        (s * 1e-10).ln(),
        (s * 1e3).ln(),
        48,
        90,
    );
    (sigma(t), v)
}

/// Stationary GP maximum-likelihood fit of excesses `z` with the shape
/// restricted to `bounds`: a profile over the shape on a grid refined by
/// golden-section search, with the scale maximised for each shape.
pub fn stationary_mle(z: &[f64], bounds: ShapeBounds) -> Result<StationaryFit> {
    bounds.validate()?;
    let zmax = check(z)?;
    let grid = (((bounds.upper - bounds.lower) / 0.02).ceil() as usize + 1).max(3);
    let (xi, nll) = scan_then_golden(|xi| scale_mle(z, xi, zmax).1, bounds.lower, bounds.upper, grid, 60);
    let (scale, _) = scale_mle(z, xi, zmax);
    if !nll.is_finite() {
        return Err(PplError::NonFiniteObjective("stationary GP likelihood is not finite".into()));
    }
    Ok(StationaryFit { scale, shape: xi, nll })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gp_draw;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recovers_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z: Vec<f64> = (0..20_000).map(|_| gp_draw(&mut rng, 2.0, -0.25)).collect();
        let fit = stationary_mle(&z, ShapeBounds::default()).unwrap();
        assert!((fit.scale - 2.0).abs() < 0.06, "{fit:?}");
        assert!((fit.shape + 0.25).abs() < 0.02, "{fit:?}");
    }

    #[test]
    fn profile_optimum_beats_neighbours() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z: Vec<f64> = (0..500).map(|_| gp_draw(&mut rng, 1.0, -0.15)).collect();
        let fit = stationary_mle(&z, ShapeBounds::default()).unwrap();
        for ds in [-1e-3, 1e-3] {
            for dx in [-1e-3, 0.0, 1e-3] {
                let xi = (fit.shape + dx).clamp(-0.5, -1e-6);
                assert!(stationary_nll(&z, fit.scale + ds, xi) >= fit.nll - 1e-9);
            }
        }
    }

    #[test]
    fn exponential_data_hits_upper_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z: Vec<f64> = (0..5000).map(|_| gp_draw(&mut rng, 1.0, 0.0)).collect();
        let fit = stationary_mle(&z, ShapeBounds::default()).unwrap();
        assert!(fit.shape > -0.05);
        let relaxed = stationary_mle(&z, ShapeBounds::relaxed()).unwrap();
        assert!(relaxed.shape.abs() < 0.05);
        assert!(relaxed.nll <= fit.nll + 1e-9);
    }

    #[test]
    fn empty_input() {
        assert!(stationary_mle(&[], ShapeBounds::default()).is_err());
    }
}
