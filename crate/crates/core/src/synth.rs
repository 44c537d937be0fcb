//! Synthetic generators for tests, benchmarks and the bundled example data.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::Triangulation;
use crate::gp::gp_quantile;
use crate::sample::StormPeakSample;
use crate::{wrap, Coord};

/// One GP(`sigma`, `xi`) excess by inversion.
pub fn gp_draw<R: Rng + ?Sized>(rng: &mut R, sigma: f64, xi: f64) -> f64 {
    let u: f64 = rng.random();
    gp_quantile(u, sigma, xi)
}

pub fn default_labels(dim: usize) -> Vec<String> {
    ["direction", "season"][..dim].iter().map(|s| s.to_string()).collect()
}

fn uniform_point<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Coord {
    let mut x = [0.0; 2];
    for v in x.iter_mut().take(dim) {
        *v = rng.random_range(0.0..360.0);
    }
    x
}

/// Uniform covariates with GP(`sigma`, `xi`) responses above a zero threshold.
pub fn stationary_sample<R: Rng + ?Sized>(rng: &mut R, dim: usize, n: usize, sigma: f64, xi: f64) -> StormPeakSample {
    let x: Vec<Coord> = (0..n).map(|_| uniform_point(rng, dim)).collect();
    let y = (0..n).map(|_| gp_draw(rng, sigma, xi)).collect();
    StormPeakSample::new(default_labels(dim), x, y).expect("valid synthetic sample")
}

/// Uniform covariates with responses from piecewise-linear node fields on `tri`.
pub fn piecewise_sample<R: Rng + ?Sized>(
    rng: &mut R,
    tri: &Triangulation,
    scale: &[f64],
    shape: &[f64],
    n: usize,
) -> StormPeakSample {
    let dim = tri.dim();
    let x: Vec<Coord> = (0..n).map(|_| uniform_point(rng, dim)).collect();
    let y = x
        .iter()
        .map(|p| {
            let loc = tri.locate(p);
            gp_draw(rng, tri.interpolate_at(scale, &loc), tri.interpolate_at(shape, &loc))
        })
        .collect();
    StormPeakSample::new(default_labels(dim), x, y).expect("valid synthetic sample")
}

/// 1-D sample whose scale is 1 on `[0, 180)` and 3 on `[180, 360)`, shape -0.2.
pub fn two_regime_sample<R: Rng + ?Sized>(rng: &mut R, n: usize) -> StormPeakSample {
    let x: Vec<Coord> = (0..n).map(|_| uniform_point(rng, 1)).collect();
    let y = x
        .iter()
        .map(|p| gp_draw(rng, if p[0] < 180.0 { 1.0 } else { 3.0 }, -0.2))
        .collect();
    StormPeakSample::new(default_labels(1), x, y).expect("valid synthetic sample")
}

/// Storm-peak-like 2-D sample: directions cluster around two sectors,
/// seasons favour winter, and the response scale varies with both.
pub fn storm_peak_sample<R: Rng + ?Sized>(rng: &mut R, n: usize) -> StormPeakSample {
    let west = Normal::new(250.0, 35.0).expect("finite");
    let north = Normal::new(20.0, 25.0).expect("finite");
    let winter = Normal::new(0.0, 60.0).expect("finite");
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let dir = wrap(if rng.random::<f64>() < 0.7 { west.sample(rng) } else { north.sample(rng) });
        let season = wrap(if rng.random::<f64>() < 0.6 { winter.sample(rng) } else { rng.random_range(0.0..360.0) });
        let (d, s) = (dir.to_radians(), season.to_radians());
        let base = 2.5 + 0.8 * (d - 250f64.to_radians()).cos() + 0.9 * s.cos();
        let sigma = 1.0 + 0.4 * (d - 250f64.to_radians()).cos() + 0.3 * s.cos();
        x.push([dir, season]);
        y.push(base + gp_draw(rng, sigma, -0.2));
    }
    StormPeakSample::new(default_labels(2), x, y).expect("valid synthetic sample")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gp_draws_respect_end_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let z = gp_draw(&mut rng, 2.0, -0.25);
            assert!((0.0..=8.0).contains(&z));
        }
    }

    #[test]
    fn gp_draw_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 200_000;
        let mean = (0..n).map(|_| gp_draw(&mut rng, 2.0, -0.2)).sum::<f64>() / n as f64;
        // sigma / (1 - xi)
        assert!((mean - 2.0 / 1.2).abs() < 0.01);
    }

    #[test]
    fn storm_sample_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = storm_peak_sample(&mut rng, 500);
        assert_eq!(s.dim(), 2);
        assert!(s.responses().iter().all(|&v| v > 0.0));
    }
}
