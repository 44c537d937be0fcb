use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::empirical::{empirical_quantile, Threshold};
use crate::error::{PplError, Result};
use crate::geometry::Triangulation;
use crate::gp::{fit_located, ExceedanceSet, FitOptions, FitResult, PenaltyVector, Theta};
use crate::par;
use crate::sample::StormPeakSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapMember {
    pub seed: u64,
    pub fit: Option<FitResult>,
    /// Why the member has no fit.
    pub failure: Option<String>,
}

/// Refits on resamples of the storm-peak sample, threshold held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapEnsemble {
    pub penalty: PenaltyVector,
    pub master_seed: u64,
    /// Always `"fixed"`: the threshold is not re-estimated per resample.
    pub threshold: String,
    pub members: Vec<BootstrapMember>,
}

impl BootstrapEnsemble {
    pub fn fits(&self) -> impl Iterator<Item = &FitResult> {
        self.members.iter().filter_map(|m| m.fit.as_ref())
    }

    pub fn failed(&self) -> usize {
        self.members.iter().filter(|m| m.fit.is_none()).count()
    }

    /// Per-node `(lower, upper)` percentiles (`q` in percent) of the scale values.
    pub fn scale_band(&self, lower: f64, upper: f64) -> Vec<(f64, f64)> {
        band(self.fits().map(|f| f.theta.scale.clone()).collect(), lower, upper)
    }

    /// Per-node `(lower, upper)` percentiles of the shape values.
    pub fn shape_band(&self, lower: f64, upper: f64) -> Vec<(f64, f64)> {
        band(self.fits().map(|f| f.theta.shape_values()).collect(), lower, upper)
    }
}

fn band(rows: Vec<Vec<f64>>, lower: f64, upper: f64) -> Vec<(f64, f64)> {
    let Some(k) = rows.first().map(Vec::len) else {
        return Vec::new();
    };
    (0..k)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            (empirical_quantile(&col, lower / 100.0), empirical_quantile(&col, upper / 100.0))
        })
        .collect()
}

/// Fit the rows `indices` of `sample`, with `thresholds` evaluated at every row of `sample`.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_member(
    sample: &StormPeakSample,
    thresholds: &[f64],
    indices: &[usize],
    tri: &Triangulation,
    penalty: &PenaltyVector,
    warm_start: &Theta,
    options: &FitOptions,
) -> Result<FitResult> {
    let resample = sample.select(indices);
    let u: Vec<f64> = indices.iter().map(|&i| thresholds[i]).collect();
    let exc = ExceedanceSet::with_thresholds(&resample, &u)?;
    fit_located(&exc.locate(tri), tri, penalty, warm_start, options, None)
}

/// `b` resamples with replacement of the full sample, each refitted from the
/// baseline parameters. Member `i` uses seed `master_seed + i`. Members whose
/// resample has no exceedances or no finite likelihood are kept as failures.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_fit(
    sample: &StormPeakSample,
    tri: &Triangulation,
    threshold: &dyn Threshold,
    penalty: &PenaltyVector,
    baseline: &FitResult,
    b: usize,
    master_seed: u64,
    options: &FitOptions,
) -> Result<BootstrapEnsemble> {
    if b == 0 {
        return Err(crate::error::invalid("bootstrap needs at least one resample"));
    }
    let thresholds = par::map_slice(sample.covariates(), |x| threshold.threshold_at(x));
    let n = sample.len();
    let results = par::map_range(b, |i| {
        let seed = master_seed.wrapping_add(i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        (seed, bootstrap_member(sample, &thresholds, &idx, tri, penalty, &baseline.theta, options))
    });
    let mut members = Vec::with_capacity(b);
    for (i, (seed, r)) in results.into_iter().enumerate() {
        members.push(match r {
            Ok(fit) => BootstrapMember { seed, fit: Some(fit), failure: None },
            Err(e @ (PplError::EmptySample(_) | PplError::NonFiniteObjective(_))) => {
                log::warn!("bootstrap member {i} failed: {e}");
                BootstrapMember { seed, fit: None, failure: Some(e.to_string()) }
            }
            Err(e) => return Err(e),
        });
    }
    Ok(BootstrapEnsemble { penalty: penalty.clone(), master_seed, threshold: "fixed".into(), members })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::ConstantThreshold;
    use crate::geometry::NodeSet;
    use crate::gp::fit;
    use crate::synth;

    fn setup() -> (StormPeakSample, Triangulation, FitResult) {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let s = synth::stationary_sample(&mut rng, 1, 800, 2.0, -0.2);
        let tri = Triangulation::build_irregular_grid(&NodeSet::new(1, vec![[60.0, 0.0], [240.0, 0.0]]).unwrap()).unwrap();
        let f = fit(&s, &tri, &ConstantThreshold(0.0), &PenaltyVector::case_a(1, 10.0), &FitOptions::default()).unwrap();
        (s, tri, f)
    }

    #[test]
    fn identity_resample_reproduces_baseline() {
        let (s, tri, base) = setup();
        let idx: Vec<usize> = (0..s.len()).collect();
        let m = bootstrap_member(&s, &vec![0.0; s.len()], &idx, &tri, &base.penalty, &base.theta, &FitOptions::default()).unwrap();
        for (a, b) in m.theta.scale.iter().zip(&base.theta.scale) {
            assert!((a - b).abs() < 1e-3);
        }
        assert!((m.nll - base.nll).abs() < 1e-4);
    }

    #[test]
    fn deterministic_given_seed() {
        let (s, tri, base) = setup();
        let run = || bootstrap_fit(&s, &tri, &ConstantThreshold(0.0), &base.penalty, &base, 4, 77, &FitOptions::default()).unwrap();
        let a = run();
        assert_eq!(a, run());
        assert_eq!(a.failed(), 0);
        assert_eq!(a.scale_band(2.5, 97.5).len(), 2);
    }

    #[test]
    fn empty_resample_is_flagged() {
        let (s, tri, base) = setup();
        let e = bootstrap_fit(&s, &tri, &ConstantThreshold(1e9), &base.penalty, &base, 2, 1, &FitOptions::default()).unwrap();
        assert_eq!(e.failed(), 2);
        assert!(e.scale_band(2.5, 97.5).is_empty());
    }
}
