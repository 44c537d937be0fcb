use serde::{Deserialize, Serialize};

use super::{nearest_indices, GridField, KernelSmoother};
use crate::error::{invalid, Result};
use crate::sample::StormPeakSample;
use crate::Coord;

/// Anything that provides an extreme value threshold `u(x)`.
pub trait Threshold: Sync {
    fn threshold_at(&self, x: &Coord) -> f64;
}

/// A covariate-independent threshold (synthetic studies, tests).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantThreshold(pub f64);

impl Threshold for ConstantThreshold {
    fn threshold_at(&self, _x: &Coord) -> f64 {
        self.0
    }
}

/// Settings for the local-quantile threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    /// Exceedance probability `zeta` in (0, 1).
    pub zeta: f64,
    /// Number of nearest observations `C` per grid point.
    pub neighbours: usize,
    /// Gaussian smoothing bandwidth per dimension.
    pub bandwidth: Vec<f64>,
    pub resolution: Vec<usize>,
}

/// Local-quantile threshold: raw per-grid-point quantiles and their Gaussian
/// smooth. Arbitrary points are evaluated by kernel-weighted averaging of the
/// raw grid values, so grid points of [`ThresholdField::smoothed`] agree with
/// [`Threshold::threshold_at`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdField {
    pub zeta: f64,
    pub neighbours: usize,
    pub raw: GridField,
    pub smoothed: GridField,
    smoother: KernelSmoother,
}

impl Threshold for ThresholdField {
    fn threshold_at(&self, x: &Coord) -> f64 {
        self.smoother.eval(&self.raw, x)
    }
}

impl ThresholdField {
    pub fn bandwidth(&self) -> Vec<f64> {
        self.smoother.bandwidth(self.raw.dims)
    }
}

/// Empirical quantile with linear interpolation between order statistics
/// (`h = (n - 1) p`). `values` need not be sorted.
pub fn empirical_quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Estimate `u(x)` with `Pr(Y > u(x) | X = x) = zeta`: at each grid point take
/// the empirical `(1 - zeta)` quantile of the responses of the `C` periodically
/// nearest observations, then smooth with a periodic Gaussian kernel.
pub fn local_quantile_threshold(sample: &StormPeakSample, cfg: &ThresholdConfig) -> Result<ThresholdField> {
    if !(cfg.zeta > 0.0 && cfg.zeta < 1.0) {
        return Err(invalid(format!("zeta must lie in (0, 1), got {}", cfg.zeta)));
    }
    if cfg.neighbours == 0 || cfg.neighbours > sample.len() {
        return Err(invalid(format!(
            "neighbour count C = {} must lie in 1..={}",
            cfg.neighbours,
            sample.len()
        )));
    }
    if cfg.bandwidth.len() != sample.dim() || cfg.bandwidth.iter().any(|&w| !(w > 0.0)) {
        return Err(invalid("threshold smoothing needs one positive bandwidth per dimension"));
    }
    let dim = sample.dim();
    let xs = sample.covariates();
    let ys = sample.responses();
    let mut raw = GridField::from_fn(dim, &cfg.resolution, |x| {
        let near = nearest_indices(xs, x, dim, cfg.neighbours);
        let vals: Vec<f64> = near.iter().map(|&i| ys[i]).collect();
        empirical_quantile(&vals, 1.0 - cfg.zeta)
    })?;
    raw.set_meta("zeta", cfg.zeta);
    raw.set_meta("C", cfg.neighbours);
    raw.set_meta("bandwidth", &cfg.bandwidth);
    let smoother = KernelSmoother::new(&cfg.bandwidth);
    let smoothed = smoother.smooth(&raw);
    Ok(ThresholdField {
        zeta: cfg.zeta,
        neighbours: cfg.neighbours,
        raw,
        smoothed,
        smoother,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(zeta: f64, c: usize) -> ThresholdConfig {
        ThresholdConfig {
            zeta,
            neighbours: c,
            bandwidth: vec![10.0],
            resolution: vec![72],
        }
    }

    fn sample(x: Vec<f64>, y: Vec<f64>) -> StormPeakSample {
        StormPeakSample::new(vec!["season".into()], x.into_iter().map(|v| [v, 0.0]).collect(), y).unwrap()
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(empirical_quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(empirical_quantile(&[1.0, 2.0], 0.25), 1.25);
        assert_eq!(empirical_quantile(&[4.0], 0.9), 4.0);
    }

    #[test]
    fn constant_response_gives_constant_threshold() {
        let s = sample((0..100).map(|i| i as f64 * 3.6).collect(), vec![2.5; 100]);
        let u = local_quantile_threshold(&s, &cfg(0.3, 10)).unwrap();
        assert!(u.smoothed.values.iter().all(|&v| (v - 2.5).abs() < 1e-12));
        assert!((u.threshold_at(&[123.4, 0.0]) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn exponential_median() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 4000;
        let x = (0..n).map(|_| rng.random_range(0.0..360.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let u = local_quantile_threshold(&sample(x, y.clone()), &cfg(0.5, 2000)).unwrap();
        let global = empirical_quantile(&y, 0.5);
        // C = 2000 gives a binomial standard error of about 0.022 on the median
        for v in &u.smoothed.values {
            assert!((v - global).abs() < 0.08, "{v} vs {global}");
            assert!((v - std::f64::consts::LN_2).abs() < 0.1);
        }
    }

    #[test]
    fn rejects_too_many_neighbours() {
        let s = sample(vec![1.0, 2.0], vec![1.0, 2.0]);
        assert!(local_quantile_threshold(&s, &cfg(0.3, 3)).is_err());
        assert!(local_quantile_threshold(&s, &cfg(1.3, 1)).is_err());
    }

    #[test]
    fn monotone_in_zeta() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 500;
        let x = (0..n).map(|_| rng.random_range(0.0..360.0)).collect();
        let y = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
        let s = sample(x, y);
        let zetas = [0.1, 0.2, 0.3, 0.5, 0.8];
        let fields: Vec<_> = zetas.iter().map(|&z| local_quantile_threshold(&s, &cfg(z, 40)).unwrap()).collect();
        for w in fields.windows(2) {
            for (a, b) in w[0].smoothed.values.iter().zip(&w[1].smoothed.values) {
                assert!(a >= b);
            }
        }
    }
}
