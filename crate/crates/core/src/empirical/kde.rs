use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::GridField;
use crate::error::{invalid, Result};
use crate::sample::StormPeakSample;
use crate::{wrap, Coord, PERIOD};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Gaussian product-kernel density of the covariates, periodic in every dimension
/// (each datum is replicated at offsets -360, 0 and +360).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateKde {
    dim: usize,
    points: Vec<Coord>,
    bandwidth: [f64; 2],
}

impl CovariateKde {
    pub fn new(sample: &StormPeakSample, bandwidth: &[f64]) -> Result<Self> {
        let dim = sample.dim();
        if bandwidth.len() != dim {
            return Err(invalid(format!(
                "{} bandwidths given for a {dim}-D sample",
                bandwidth.len()
            )));
        }
        if bandwidth.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(invalid("kernel bandwidths must be positive"));
        }
        let mut bw = [1.0; 2];
        bw[..dim].copy_from_slice(bandwidth);
        Ok(Self {
            dim,
            points: sample.covariates().to_vec(),
            bandwidth: bw,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> &[f64] {
        &self.bandwidth[..self.dim]
    }

    fn kernel_1d(&self, d: usize, delta: f64) -> f64 {
        let w = self.bandwidth[d];
        [-PERIOD, 0.0, PERIOD]
            .iter()
            .map(|o| {
                let t = (delta + o) / w;
                (-0.5 * t * t).exp()
            })
            .sum::<f64>()
            * INV_SQRT_2PI
    }

    /// Density at `x`; integrates to one over the period.
    pub fn density(&self, x: &Coord) -> f64 {
        let norm: f64 = self.points.len() as f64 * self.bandwidth[..self.dim].iter().product::<f64>();
        let s: f64 = self
            .points
            .iter()
            .map(|p| {
                (0..self.dim)
                    .map(|d| self.kernel_1d(d, x[d] - p[d]))
                    .product::<f64>()
            })
            .sum();
        s / norm
    }

    pub fn grid(&self, resolution: &[usize]) -> Result<GridField> {
        let mut g = GridField::from_fn(self.dim, resolution, |x| self.density(x))?;
        g.set_meta("bandwidth", self.bandwidth());
        g.set_meta("n", self.points.len());
        Ok(g)
    }

    /// Exact draw from the kernel mixture: a datum chosen uniformly plus Gaussian
    /// kernel noise, wrapped onto the period.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Coord {
        let p = self.points[rng.random_range(0..self.points.len())];
        let mut out = [0.0; 2];
        for d in 0..self.dim {
            let e: f64 = rng.sample(StandardNormal);
            out[d] = wrap(p[d] + e * self.bandwidth[d]);
        }
        out
    }
}

/// Covariate density on a regular grid.
pub fn kde(sample: &StormPeakSample, bandwidth: &[f64], resolution: &[usize]) -> Result<GridField> {
    CovariateKde::new(sample, bandwidth)?.grid(resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_1d(x: Vec<f64>) -> StormPeakSample {
        let n = x.len();
        StormPeakSample::new(vec!["direction".into()], x.into_iter().map(|v| [v, 0.0]).collect(), vec![1.0; n])
            .unwrap()
    }

    #[test]
    fn single_kernel_peak() {
        let s = sample_1d(vec![100.0]);
        let k = CovariateKde::new(&s, &[5.0]).unwrap();
        assert!((k.density(&[100.0, 0.0]) - INV_SQRT_2PI / 5.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_points_give_flat_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = sample_1d((0..10_000).map(|_| rng.random_range(0.0..360.0)).collect());
        let g = kde(&s, &[15.0], &[360]).unwrap();
        assert!(g.max() / g.min() < 1.2, "ratio {}", g.max() / g.min());
        assert!((g.integral() - 1.0).abs() < 0.01);
        // analytic uniform density
        assert!((g.values.iter().sum::<f64>() / 360.0 - 1.0 / 360.0).abs() < 1e-4);
    }

    #[test]
    fn wraps_across_zero() {
        let s = sample_1d(vec![359.0]);
        let k = CovariateKde::new(&s, &[5.0]).unwrap();
        assert!((k.density(&[1.0, 0.0]) - k.density(&[357.0, 0.0])).abs() < 1e-15);
    }

    #[test]
    fn two_d_integrates_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Coord> = (0..300).map(|_| [rng.random_range(0.0..360.0), rng.random_range(0.0..90.0)]).collect();
        let s = StormPeakSample::new(vec!["direction".into(), "season".into()], x, vec![1.0; 300]).unwrap();
        let g = kde(&s, &[10.0, 10.0], &[72, 72]).unwrap();
        assert!(g.values.iter().all(|&v| v >= 0.0));
        assert!((g.integral() - 1.0).abs() < 0.01, "{}", g.integral());
    }

    #[test]
    fn rejects_bad_bandwidth() {
        let s = sample_1d(vec![1.0]);
        assert!(kde(&s, &[0.0], &[360]).is_err());
        assert!(kde(&s, &[5.0], &[4]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn translation_equivariance(xs in prop::collection::vec(0.0f64..360.0, 1..30), shift in 0usize..360) {
                let s = sample_1d(xs.clone());
                let shifted = sample_1d(xs.iter().map(|v| v + shift as f64).collect());
                let a = kde(&s, &[7.0], &[360]).unwrap();
                let b = kde(&shifted, &[7.0], &[360]).unwrap();
                for i in 0..360 {
                    let j = (i + shift) % 360;
                    prop_assert!((a.values[i] - b.values[j]).abs() < 1e-12);
                    prop_assert!(a.values[i] >= 0.0);
                }
                prop_assert!((a.integral() - 1.0).abs() < 0.01);
            }
        }
    }
}
