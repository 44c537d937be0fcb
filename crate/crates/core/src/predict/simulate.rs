use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TailModel;
use crate::empirical::{CovariateKde, Threshold};
use crate::error::{invalid, Result};
use crate::gp::gp_quantile;
use crate::{par, Coord};

const CHUNK: usize = 1 << 14;

/// Points simulated from the covariate density, threshold and tail model.
///
/// Non-exceedances carry `y = u(x)` as a sentinel; only `y > u` carries tail information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedSample {
    pub labels: Vec<String>,
    pub x: Vec<Coord>,
    pub y: Vec<f64>,
    pub threshold: Vec<f64>,
    pub exceedance: Vec<bool>,
}

impl SimulatedSample {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn exceedance_count(&self) -> usize {
        self.exceedance.iter().filter(|&&e| e).count()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = self.labels.clone();
        header.extend(["y", "threshold", "exceedance"].map(String::from));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.x[i][..self.dim()].iter().map(|v| v.to_string()).collect();
            row.push(self.y[i].to_string());
            row.push(self.threshold[i].to_string());
            row.push(u8::from(self.exceedance[i]).to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Draw `count` points: covariates from the kernel density, then with
/// probability `zeta` a GP excess above `u(x)`.
///
/// Points are generated in fixed-size chunks, each from its own ChaCha stream
/// of `seed`, so the output does not depend on the thread count.
pub fn simulate(
    model: &dyn TailModel,
    density: &CovariateKde,
    threshold: &dyn Threshold,
    labels: &[String],
    zeta: f64,
    count: usize,
    seed: u64,
) -> Result<SimulatedSample> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(invalid(format!("exceedance probability must be in (0, 1], got {zeta}")));
    }
    if labels.len() != density.dim() {
        return Err(invalid("one label per covariate dimension is required"));
    }
    let chunks = count.div_ceil(CHUNK);
    let parts = par::map_range(chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let n = CHUNK.min(count - c * CHUNK);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let x = density.sample_point(&mut rng);
            let u = threshold.threshold_at(&x);
            let exceed = zeta >= 1.0 || rng.random::<f64>() < zeta;
            let y = if exceed {
                let (sigma, xi) = model.params_at(&x);
                u + gp_quantile(rng.random::<f64>(), sigma, xi)
            } else {
                u
            };
            out.push((x, y, u, exceed));
        }
        out
    });
    let mut s = SimulatedSample {
        labels: labels.to_vec(),
        x: Vec::with_capacity(count),
        y: Vec::with_capacity(count),
        threshold: Vec::with_capacity(count),
        exceedance: Vec::with_capacity(count),
    };
    for (x, y, u, e) in parts.into_iter().flatten() {
        s.x.push(x);
        s.y.push(y);
        s.threshold.push(u);
        s.exceedance.push(e);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::ConstantThreshold;
    use crate::predict::StationaryModel;
    use crate::synth;

    fn kde() -> CovariateKde {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        CovariateKde::new(&synth::stationary_sample(&mut rng, 1, 50, 1.0, -0.2), &[10.0]).unwrap()
    }

    #[test]
    fn all_exceed_when_zeta_is_one() {
        let m = StationaryModel { scale: 1.0, shape: -0.2 };
        let s = simulate(&m, &kde(), &ConstantThreshold(1.0), &["d".into()], 1.0, 5000, 3).unwrap();
        assert_eq!(s.exceedance_count(), 5000);
        assert!(s.y.iter().all(|&y| (1.0..=6.0).contains(&y)));
    }

    #[test]
    fn deterministic_and_chunk_stable() {
        let m = StationaryModel { scale: 1.0, shape: -0.2 };
        let a = simulate(&m, &kde(), &ConstantThreshold(0.0), &["d".into()], 0.3, 40_000, 9).unwrap();
        let b = simulate(&m, &kde(), &ConstantThreshold(0.0), &["d".into()], 0.3, 40_000, 9).unwrap();
        assert_eq!(a, b);
        let single = crate::par::with_threads(1, || {
            simulate(&m, &kde(), &ConstantThreshold(0.0), &["d".into()], 0.3, 40_000, 9).unwrap()
        });
        assert_eq!(a, single);
    }

    #[test]
    fn sentinel_marks_non_exceedances() {
        let m = StationaryModel { scale: 1.0, shape: -0.2 };
        let s = simulate(&m, &kde(), &ConstantThreshold(2.0), &["d".into()], 0.2, 10_000, 4).unwrap();
        for i in 0..s.len() {
            assert_eq!(s.exceedance[i], s.y[i] > 2.0);
        }
        let frac = s.exceedance_count() as f64 / s.len() as f64;
        assert!((frac - 0.2).abs() < 3.0 * (0.2f64 * 0.8 / 1e4).sqrt());
    }
}
