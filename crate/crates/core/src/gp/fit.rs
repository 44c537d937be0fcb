use std::sync::atomic::AtomicUsize;

use serde::{Deserialize, Serialize};

use super::exceedance::{ExceedanceSet, LocatedExceedances};
use super::likelihood::negative_log_likelihood;
use super::optim::{minimize_bounded, NelderMeadOptions};
use super::params::{PenaltyVector, ShapeBounds, ShapeParam, Theta};
use super::penalty::roughness_penalty;
use super::stationary::{stationary_mle, stationary_scale_mle};
use crate::empirical::Threshold;
use crate::error::{invalid, PplError, Result};
use crate::geometry::{voronoi_assign, NodeSet, Triangulation};
use crate::sample::StormPeakSample;
use crate::Coord;

const SCALE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub shape_bounds: ShapeBounds,
    pub max_evals: usize,
    pub restart_tol: f64,
    /// Weight each bin's roughness term by its relative measure.
    pub volume_weighted: bool,
    /// Force a single scale value shared by all nodes.
    pub tie_scale: bool,
    /// Voronoi cells with fewer exceedances take the global stationary fit as warm start.
    pub min_cell_exceedances: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            shape_bounds: ShapeBounds::default(),
            max_evals: 10_000,
            restart_tol: 1e-6,
            volume_weighted: false,
            tie_scale: false,
            min_cell_exceedances: 5,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        self.shape_bounds.validate()?;
        if self.max_evals == 0 {
            return Err(invalid("max_evals must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub nodes: Vec<Vec<f64>>,
    pub theta: Theta,
    pub penalty: PenaltyVector,
    pub nll: f64,
    pub penalised_nll: f64,
    pub exceedances: usize,
    pub evaluations: usize,
    pub restarts: usize,
    pub converged: bool,
    pub warm_start: Theta,
}

impl FitResult {
    /// Interpolated `(sigma, xi)` at `x`.
    pub fn params_at(&self, tri: &Triangulation, x: &Coord) -> (f64, f64) {
        let loc = tri.locate(x);
        let xi = match &self.theta.shape {
            ShapeParam::Stationary(v) => *v,
            ShapeParam::Field(v) => tri.interpolate_at(v, &loc),
        };
        (tri.interpolate_at(&self.theta.scale, &loc), xi)
    }
}

/// Fit the penalised model to the exceedances of `sample` over `threshold`,
/// starting from the Voronoi warm start.
pub fn fit(
    sample: &StormPeakSample,
    tri: &Triangulation,
    threshold: &dyn Threshold,
    penalty: &PenaltyVector,
    options: &FitOptions,
) -> Result<FitResult> {
    if sample.dim() != tri.dim() {
        return Err(invalid("sample and triangulation dimensions differ"));
    }
    let exc = ExceedanceSet::from_sample(sample, threshold)?;
    let warm = voronoi_warm_start(&exc, tri, penalty.case.stationary_shape(), options)?;
    fit_located(&exc.locate(tri), tri, penalty, &warm, options, None)
}

/// Warm start from independent stationary fits in the Voronoi cell of each node.
///
/// In stationary-shape mode the shape is the exceedance-weighted mean of the
/// cell shapes and each cell scale is re-profiled at that shape.
pub fn voronoi_warm_start(
    exc: &ExceedanceSet,
    tri: &Triangulation,
    stationary_shape: bool,
    options: &FitOptions,
) -> Result<Theta> {
    let k = tri.node_count();
    if k < 2 {
        return Err(invalid("warm start needs at least two nodes"));
    }
    let nodes = NodeSet::new(tri.dim(), tri.nodes().to_vec())?;
    let z = exc.excesses();
    let global = stationary_mle(&z, options.shape_bounds)?;
    let cell = voronoi_assign(&nodes, &exc.x);
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); k];
    for (i, &c) in cell.iter().enumerate() {
        members[c].push(z[i]);
    }
    let fits: Vec<Option<super::StationaryFit>> = members
        .iter()
        .enumerate()
        .map(|(j, m)| {
            if m.len() < options.min_cell_exceedances.max(2) {
                log::warn!("warm start: node {j} has {} exceedances, using the global fit", m.len());
                None
            } else {
                stationary_mle(m, options.shape_bounds).ok()
            }
        })
        .collect();

    if stationary_shape {
        let (num, den) = fits
            .iter()
            .zip(&members)
            .filter_map(|(f, m)| f.map(|f| (f.shape * m.len() as f64, m.len() as f64)))
            .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        let xi = if den > 0.0 { num / den } else { global.shape };
        let global_scale = stationary_scale_mle(&z, xi)?.0;
        let scale = fits
            .iter()
            .zip(&members)
            .map(|(f, m)| match f {
                Some(_) => stationary_scale_mle(m, xi).map(|r| r.0).unwrap_or(global_scale),
                None => global_scale,
            })
            .collect();
        Ok(Theta { scale, shape: ShapeParam::Stationary(xi) })
    } else {
        let scale = fits.iter().map(|f| f.map_or(global.scale, |f| f.scale)).collect();
        let shape = fits.iter().map(|f| f.map_or(global.shape, |f| f.shape)).collect();
        Ok(Theta { scale, shape: ShapeParam::Field(shape) })
    }
}

fn conform(theta: &Theta, stationary: bool, tie_scale: bool) -> Theta {
    let shape = match (&theta.shape, stationary) {
        (ShapeParam::Stationary(x), false) => ShapeParam::Field(vec![*x; theta.scale.len()]),
        (ShapeParam::Field(v), true) => ShapeParam::Stationary(v.iter().sum::<f64>() / v.len() as f64),
        (s, _) => s.clone(),
    };
    let scale = if tie_scale {
        let mean = theta.scale.iter().sum::<f64>() / theta.scale.len() as f64;
        vec![mean; theta.scale.len()]
    } else {
        theta.scale.clone()
    };
    Theta { scale, shape }
}

/// Move the shape toward its upper bound until every excess is inside the
/// support, which widens the support under negative shape.
fn repair(ex: &LocatedExceedances, mut theta: Theta, bounds: &ShapeBounds) -> Result<Theta> {
    for attempt in 0..60 {
        if negative_log_likelihood(ex, &theta.scale, &theta.shape_values()).is_finite() {
            if attempt > 0 {
                log::warn!("warm start was infeasible; shape moved toward its upper bound ({attempt} steps)");
            }
            return Ok(theta);
        }
        theta.shape = match theta.shape {
            ShapeParam::Stationary(x) => ShapeParam::Stationary(x + 0.5 * (bounds.upper - x)),
            ShapeParam::Field(v) => ShapeParam::Field(v.iter().map(|x| x + 0.5 * (bounds.upper - x)).collect()),
        };
    }
    Err(PplError::NonFiniteObjective("no feasible warm start: likelihood is not finite".into()))
}

/// Minimise the penalised negative log-likelihood for already-located excesses.
///
/// `progress` is incremented once per objective evaluation.
pub fn fit_located(
    ex: &LocatedExceedances,
    tri: &Triangulation,
    penalty: &PenaltyVector,
    warm_start: &Theta,
    options: &FitOptions,
    progress: Option<&AtomicUsize>,
) -> Result<FitResult> {
    options.validate()?;
    let k = tri.node_count();
    if penalty.dim() != tri.dim() {
        return Err(invalid("penalty vector dimension differs from the triangulation"));
    }
    if warm_start.node_count() != k {
        return Err(invalid(format!("warm start has {} nodes, triangulation {k}", warm_start.node_count())));
    }
    if ex.is_empty() {
        return Err(PplError::EmptySample("no exceedances to fit".into()));
    }
    let bounds = options.shape_bounds;
    let stationary = penalty.case.stationary_shape();
    let mut start = conform(warm_start, stationary, options.tie_scale);
    start.shape = match start.shape {
        ShapeParam::Stationary(x) => ShapeParam::Stationary(bounds.clamp(x)),
        ShapeParam::Field(v) => ShapeParam::Field(v.into_iter().map(|x| bounds.clamp(x)).collect()),
    };
    let start = repair(ex, start, &bounds)?;

    let ns = if options.tie_scale { 1 } else { k };
    let nx = if stationary { 1 } else { k };
    let unpack = |p: &[f64], scale: &mut Vec<f64>, shape: &mut Vec<f64>| {
        if options.tie_scale {
            scale.iter_mut().for_each(|s| *s = p[0]);
        } else {
            scale.copy_from_slice(&p[..k]);
        }
        if stationary {
            shape.iter_mut().for_each(|x| *x = p[ns]);
        } else {
            shape.copy_from_slice(&p[ns..]);
        }
    };
    let mut x0: Vec<f64> = start.scale[..ns].to_vec();
    x0.extend(if stationary { vec![start.shape_values()[0]] } else { start.shape_values() });
    let mut lower = vec![SCALE_FLOOR; ns];
    lower.extend(vec![bounds.lower; nx]);
    let mut upper = vec![f64::INFINITY; ns];
    upper.extend(vec![bounds.upper; nx]);
    let mut steps: Vec<f64> = x0[..ns].iter().map(|s| (0.1 * s).max(1e-3)).collect();
    steps.extend(vec![0.05; nx]);

    let mut scale = vec![0.0; k];
    let mut shape = vec![0.0; k];
    let mut objective = |p: &[f64]| {
        unpack(p, &mut scale, &mut shape);
        let nll = negative_log_likelihood(ex, &scale, &shape);
        if !nll.is_finite() {
            return f64::INFINITY;
        }
        nll + roughness_penalty(tri, penalty, &scale, (!stationary).then_some(&shape[..]), options.volume_weighted)
    };
    let nm = NelderMeadOptions { max_evals: options.max_evals, restart_tol: options.restart_tol };
    let min = minimize_bounded(&mut objective, &x0, &lower, &upper, &steps, &nm, progress);
    if !min.value.is_finite() {
        return Err(PplError::NonFiniteObjective("penalised likelihood is not finite at the optimum".into()));
    }

    let mut scale = vec![0.0; k];
    let mut shape = vec![0.0; k];
    unpack(&min.x, &mut scale, &mut shape);
    let nll = negative_log_likelihood(ex, &scale, &shape);
    let theta = Theta {
        scale,
        shape: if stationary { ShapeParam::Stationary(shape[0]) } else { ShapeParam::Field(shape) },
    };
    Ok(FitResult {
        nodes: tri.nodes().iter().map(|n| n[..tri.dim()].to_vec()).collect(),
        theta,
        penalty: penalty.clone(),
        nll,
        penalised_nll: min.value,
        exceedances: ex.len(),
        evaluations: min.evaluations,
        restarts: min.restarts,
        converged: min.converged,
        warm_start: start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::ConstantThreshold;
    use crate::gp::{Case, stationary_mle};
    use crate::synth;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tied_fit_matches_stationary_mle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = synth::stationary_sample(&mut rng, 1, 2000, 1.5, -0.2);
        let tri = Triangulation::build_irregular_grid(&NodeSet::new(1, vec![[40.0, 0.0], [160.0, 0.0], [280.0, 0.0]]).unwrap()).unwrap();
        let opts = FitOptions { tie_scale: true, ..Default::default() };
        let r = fit(&s, &tri, &ConstantThreshold(0.0), &PenaltyVector::case_a(1, 0.0), &opts).unwrap();
        let st = stationary_mle(s.responses(), ShapeBounds::default()).unwrap();
        assert!((r.nll - st.nll).abs() < 1e-4, "{} vs {}", r.nll, st.nll);
        assert!(r.converged);
    }

    #[test]
    fn large_penalty_flattens_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = synth::two_regime_sample(&mut rng, 3000);
        let tri = Triangulation::build_irregular_grid(&NodeSet::new(1, vec![[45.0, 0.0], [135.0, 0.0], [225.0, 0.0], [315.0, 0.0]]).unwrap()).unwrap();
        let rough = fit(&s, &tri, &ConstantThreshold(0.0), &PenaltyVector::case_a(1, 0.0), &FitOptions::default()).unwrap();
        let smooth = fit(&s, &tri, &ConstantThreshold(0.0), &PenaltyVector::case_a(1, 1e7), &FitOptions::default()).unwrap();
        let spread = |t: &Theta| {
            t.scale.iter().cloned().fold(f64::MIN, f64::max) - t.scale.iter().cloned().fold(f64::MAX, f64::min)
        };
        assert!(spread(&rough.theta) > 0.5);
        assert!(spread(&smooth.theta) < 1e-3 * spread(&rough.theta));
        assert!(rough.nll <= smooth.nll);
    }

    #[test]
    fn field_shape_result_serialises() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = synth::stationary_sample(&mut rng, 1, 600, 1.0, -0.1);
        let tri = Triangulation::build_irregular_grid(&NodeSet::new(1, vec![[0.0, 0.0], [180.0, 0.0]]).unwrap()).unwrap();
        let r = fit(&s, &tri, &ConstantThreshold(0.0), &PenaltyVector::case_b(1, 1.0, 1.0), &FitOptions::default()).unwrap();
        assert!(matches!(r.theta.shape, ShapeParam::Field(ref v) if v.len() == 2));
        let back: FitResult = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back.theta, r.theta);
        assert_eq!(back.penalty.case, Case::B);
    }

    #[test]
    fn infeasible_warm_start_is_repaired() {
        let ex = LocatedExceedances {
            excess: vec![1.0, 9.0],
            nodes: vec![[0, 1, 0], [0, 1, 0]],
            weights: vec![[0.5, 0.5, 0.0], [0.5, 0.5, 0.0]],
            arity: 2,
            node_count: 2,
        };
        let theta = Theta { scale: vec![1.0, 1.0], shape: ShapeParam::Stationary(-0.5) };
        let fixed = repair(&ex, theta, &ShapeBounds::default()).unwrap();
        assert!(negative_log_likelihood(&ex, &fixed.scale, &fixed.shape_values()).is_finite());
    }
}
