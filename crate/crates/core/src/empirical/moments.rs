use serde::{Deserialize, Serialize};

use super::{nearest_indices, GridField, KernelSmoother, Threshold};
use crate::error::{invalid, PplError, Result};
use crate::sample::StormPeakSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMomentConfig {
    /// Number of nearest threshold exceedances `C` per grid point.
    pub neighbours: usize,
    pub bandwidth: Vec<f64>,
    pub resolution: Vec<usize>,
}

/// Locally-stationary GP scale and shape estimates, raw and smoothed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalGPEstimates {
    pub neighbours: usize,
    pub scale_raw: GridField,
    pub shape_raw: GridField,
    pub scale: GridField,
    pub shape: GridField,
}

impl LocalGPEstimates {
    /// Smoothed shape clamped into `[-0.5, -1e-6]`, for use as optimiser diagnostics.
    pub fn clamped_shape(&self) -> GridField {
        self.shape
            .with_values(self.shape.values.iter().map(|v| v.clamp(-0.5, -1e-6)).collect())
    }
}

/// Moment estimates of (scale, shape) from the mean `m`, variance `v` and
/// maximum `zmax` of threshold excesses. When the implied upper end point
/// `-scale/shape` falls below `zmax` the shape is reset to `-scale/zmax`.
pub fn moment_estimate(m: f64, v: f64, zmax: f64) -> (f64, f64) {
    let mut shape = (1.0 - m * m / v) / 2.0;
    let scale = m * (1.0 - shape);
    if shape < 0.0 && zmax > -scale / shape {
        shape = -scale / zmax;
    }
    (scale, shape)
}

/// Local moment estimates on a regular grid: each grid point uses the `C`
/// nearest threshold exceedances `z_j = y_j - u(x_j)`.
pub fn local_moment_estimates(
    sample: &StormPeakSample,
    threshold: &dyn Threshold,
    cfg: &LocalMomentConfig,
) -> Result<LocalGPEstimates> {
    let dim = sample.dim();
    if cfg.bandwidth.len() != dim || cfg.bandwidth.iter().any(|&w| !(w > 0.0)) {
        return Err(invalid("local estimates need one positive bandwidth per dimension"));
    }
    if cfg.neighbours < 2 {
        return Err(invalid("local estimates need at least 2 neighbours"));
    }
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for (x, y) in sample.covariates().iter().zip(sample.responses()) {
        let u = threshold.threshold_at(x);
        if *y > u {
            xs.push(*x);
            zs.push(y - u);
        }
    }
    if zs.len() < cfg.neighbours {
        return Err(PplError::EmptySample(format!(
            "{} threshold exceedances, fewer than C = {}",
            zs.len(),
            cfg.neighbours
        )));
    }
    GridField::check_resolution(dim, &cfg.resolution)?;
    let pairs: Vec<(f64, f64)> = {
        let template = GridField::from_fn(dim, &cfg.resolution, |_| 0.0)?;
        crate::par::map_range(template.len(), |i| {
            let near = nearest_indices(&xs, &template.point(i), dim, cfg.neighbours);
            let c = near.len() as f64;
            let m = near.iter().map(|&j| zs[j]).sum::<f64>() / c;
            let v = near.iter().map(|&j| (zs[j] - m).powi(2)).sum::<f64>() / (c - 1.0);
            let zmax = near.iter().map(|&j| zs[j]).fold(f64::NEG_INFINITY, f64::max);
            moment_estimate(m, v.max(f64::MIN_POSITIVE), zmax)
        })
    };
    let mut scale_raw = GridField::from_fn(dim, &cfg.resolution, |_| 0.0)?;
    scale_raw.values = pairs.iter().map(|p| p.0).collect();
    scale_raw.set_meta("C", cfg.neighbours);
    scale_raw.set_meta("bandwidth", &cfg.bandwidth);
    let shape_raw = scale_raw.with_values(pairs.iter().map(|p| p.1).collect());
    let smoother = KernelSmoother::new(&cfg.bandwidth);
    Ok(LocalGPEstimates {
        neighbours: cfg.neighbours,
        scale: smoother.smooth(&scale_raw),
        shape: smoother.smooth(&shape_raw),
        scale_raw,
        shape_raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::ConstantThreshold;
    use crate::synth;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exponential_moments() {
        let (s, x) = moment_estimate(1.0, 1.0, 3.0);
        assert_eq!((s, x), (1.0, 0.0));
    }

    #[test]
    fn endpoint_correction() {
        // xi = (1 - 1/0.8)/2 = -0.125, sigma = 1.125, end point 9 < zmax = 10
        let (s, x) = moment_estimate(1.0, 0.8, 10.0);
        assert!((s - 1.125).abs() < 1e-15);
        assert!((x + 0.1125).abs() < 1e-15);
        let (_, x) = moment_estimate(1.0, 0.8, 8.0);
        assert!((x + 0.125).abs() < 1e-15);
    }

    #[test]
    fn recovers_simulation_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 10_000;
        let x: Vec<_> = (0..n).map(|_| [rng.random_range(0.0..360.0), 0.0]).collect();
        let y: Vec<f64> = (0..n).map(|_| 1.0 + synth::gp_draw(&mut rng, 2.0, -0.2)).collect();
        let s = StormPeakSample::new(vec!["direction".into()], x, y).unwrap();
        let est = local_moment_estimates(
            &s,
            &ConstantThreshold(1.0),
            &LocalMomentConfig { neighbours: n, bandwidth: vec![10.0], resolution: vec![36] },
        )
        .unwrap();
        for (sg, xi) in est.scale_raw.values.iter().zip(&est.shape_raw.values) {
            assert!((sg - 2.0).abs() < 0.1, "sigma {sg}");
            assert!((xi + 0.2).abs() < 0.05, "xi {xi}");
        }
        // the correction keeps every neighbourhood maximum inside the end point
        let zmax = s.responses().iter().cloned().fold(0.0, f64::max) - 1.0;
        let (sg, xi) = (est.scale_raw.values[0], est.shape_raw.values[0]);
        assert!(xi >= 0.0 || zmax <= -sg / xi + 1e-9);
        assert!(est.clamped_shape().values.iter().all(|&v| (-0.5..=-1e-6).contains(&v)));
    }

    #[test]
    fn too_few_exceedances() {
        let s = StormPeakSample::new(vec!["direction".into()], vec![[0.0, 0.0], [1.0, 0.0]], vec![1.0, 2.0]).unwrap();
        let r = local_moment_estimates(
            &s,
            &ConstantThreshold(0.5),
            &LocalMomentConfig { neighbours: 3, bandwidth: vec![10.0], resolution: vec![36] },
        );
        assert!(r.is_err());
    }
}
