//! Penalty selection by replicated G-fold cross-validation.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::empirical::Threshold;
use crate::error::{invalid, PplError, Result};
use crate::geometry::Triangulation;
use crate::gp::{fit_located, voronoi_warm_start, Case, ExceedanceSet, FitOptions, PenaltyVector};
use crate::par;
use crate::sample::StormPeakSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CVConfig {
    pub folds: usize,
    pub replicates: usize,
    /// Grid values per penalty component.
    pub grid_size: usize,
    /// Base-10 exponent range `[a, b]` of the grid.
    pub exponent_range: [f64; 2],
    pub case: Case,
    pub seed: u64,
    pub fit: FitOptions,
}

impl Default for CVConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            replicates: 5,
            grid_size: 10,
            exponent_range: [-1.0, 5.0],
            case: Case::A,
            seed: 0,
            fit: FitOptions::default(),
        }
    }
}

impl CVConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(invalid("cross-validation needs at least 2 folds"));
        }
        if self.replicates < 1 {
            return Err(invalid("cross-validation needs at least 1 replicate"));
        }
        if self.grid_size < 2 {
            return Err(invalid("penalty grid needs at least 2 values per component"));
        }
        let [a, b] = self.exponent_range;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(invalid(format!("invalid penalty exponent range [{a}, {b}]")));
        }
        self.fit.validate()
    }

    /// Grid exponents `a + j (b - a) / (S - 1)` for one component.
    pub fn exponents(&self) -> Vec<f64> {
        let [a, b] = self.exponent_range;
        let s = self.grid_size;
        (0..s).map(|j| a + j as f64 * (b - a) / (s - 1) as f64).collect()
    }
}

/// Cartesian product of per-component grids, last component varying fastest,
/// returned as exponent vectors.
pub fn lambda_exponent_grid(config: &CVConfig, dim: usize) -> Vec<Vec<f64>> {
    let e = config.exponents();
    let c = config.case.components(dim);
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..c {
        out = out
            .into_iter()
            .flat_map(|p| e.iter().map(move |&v| {
                let mut q = p.clone();
                q.push(v);
                q
            }))
            .collect();
    }
    out
}

/// The penalty grid: every component takes the values `10^{a + j (b - a) / (S - 1)}`.
pub fn make_lambda_grid(config: &CVConfig, dim: usize) -> Result<Vec<PenaltyVector>> {
    config.validate()?;
    lambda_exponent_grid(config, dim)
        .into_iter()
        .map(|e| {
            let comps: Vec<f64> = e.iter().map(|v| 10f64.powf(*v)).collect();
            PenaltyVector::from_components(config.case, dim, &comps)
        })
        .collect()
}

/// Random partition of `0..n` into `folds` groups whose sizes differ by at most one.
pub fn partition(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (0..folds)
        .map(|g| idx[g * n / folds..(g + 1) * n / folds].to_vec())
        .collect()
}

/// Range of the leave-one-out means of `values`; `+inf` if any value is
/// infinite, 0 with fewer than two values.
pub fn jackknife_uncertainty(values: &[f64]) -> f64 {
    let r = values.len();
    if r < 2 {
        return 0.0;
    }
    if values.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let means: Vec<f64> = (0..r)
        .map(|i| {
            let mut s = 0.0;
            for (j, v) in values.iter().enumerate() {
                if j != i {
                    s += v;
                }
            }
            s / (r - 1) as f64
        })
        .collect();
    let max = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = means.iter().cloned().fold(f64::INFINITY, f64::min);
    max - min
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Indices `(optimal, selected)` on a penalty grid given by its component
/// vectors. `optimal` minimises `mean` (ties to the lexicographically largest
/// components); `selected` maximises the sum of log-components among points that
/// dominate `optimal` componentwise with `mean <= mean[optimal] + uncertainty[optimal]`.
pub fn select_penalty(components: &[Vec<f64>], mean: &[f64], uncertainty: &[f64]) -> Result<(usize, usize)> {
    assert!(components.len() == mean.len() && mean.len() == uncertainty.len());
    let mut opt: Option<usize> = None;
    for (i, &m) in mean.iter().enumerate() {
        if !m.is_finite() {
            continue;
        }
        opt = match opt {
            None => Some(i),
            Some(o) if m < mean[o] => Some(i),
            Some(o) if m == mean[o] && lex_cmp(&components[i], &components[o]).is_gt() => Some(i),
            keep => keep,
        };
    }
    let opt = opt.ok_or_else(|| PplError::TuningFailure("no penalty has finite predictive performance".into()))?;
    let band = mean[opt] + uncertainty[opt];
    let score = |i: usize| components[i].iter().map(|c| c.ln()).sum::<f64>();
    let mut sel = opt;
    for i in 0..mean.len() {
        let dominates = components[i].iter().zip(&components[opt]).all(|(a, b)| a >= b);
        if !dominates || !mean[i].is_finite() || mean[i] > band {
            continue;
        }
        let (si, ss) = (score(i), score(sel));
        if si > ss || (si == ss && lex_cmp(&components[i], &components[sel]).is_gt()) {
            sel = i;
        }
    }
    Ok((opt, sel))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVResult {
    pub config: CVConfig,
    pub grid: Vec<PenaltyVector>,
    /// Base-10 exponents of each grid point's free components.
    pub exponents: Vec<Vec<f64>>,
    /// `P_r(lambda)`, indexed `[r][grid point]`; `null` in JSON when infinite.
    #[serde(with = "nonfinite::matrix")]
    pub per_replicate: Vec<Vec<f64>>,
    #[serde(with = "nonfinite::vector")]
    pub mean: Vec<f64>,
    #[serde(with = "nonfinite::vector")]
    pub uncertainty: Vec<f64>,
    /// Number of replicates with infinite held-out NLL, per grid point.
    pub infinite_count: Vec<usize>,
    pub optimal: usize,
    pub selected: usize,
    pub exceedances: usize,
}

impl CVResult {
    pub fn optimal_penalty(&self) -> &PenaltyVector {
        &self.grid[self.optimal]
    }

    pub fn selected_penalty(&self) -> &PenaltyVector {
        &self.grid[self.selected]
    }

    /// Component names for table headers.
    pub fn component_names(&self) -> Vec<String> {
        match self.config.case {
            Case::A => vec!["sigma".into()],
            Case::B => vec!["sigma".into(), "xi".into()],
            Case::C => (1..=self.grid[0].dim()).map(|d| format!("sigma_{d}")).collect(),
        }
    }

    /// Summary table: penalty exponents, mean predictive NLL, jackknife
    /// uncertainty, number of infinite replicates and a selection flag.
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = self.component_names().iter().map(|n| format!("log10_lambda_{n}")).collect();
        header.extend(["mean_nll", "jackknife", "infinite_replicates", "flag"].map(String::from));
        w.write_record(&header)?;
        for i in 0..self.grid.len() {
            let mut row: Vec<String> = self.exponents[i].iter().map(|e| format!("{e:.2}")).collect();
            row.push(format!("{:.3}", self.mean[i]));
            row.push(format!("{:.3}", self.uncertainty[i]));
            row.push(self.infinite_count[i].to_string());
            let flag = match (i == self.optimal, i == self.selected) {
                (true, true) => "optimal;selected",
                (true, false) => "optimal",
                (false, true) => "selected",
                _ => "",
            };
            row.push(flag.into());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn cross_validate(
    sample: &StormPeakSample,
    tri: &Triangulation,
    threshold: &dyn Threshold,
    config: &CVConfig,
) -> Result<CVResult> {
    cross_validate_with_progress(sample, tri, threshold, config, None)
}

/// Number of fits [`cross_validate`] performs for `config`.
pub fn fit_count(config: &CVConfig, dim: usize) -> usize {
    config.replicates * config.folds * config.grid_size.pow(config.case.components(dim) as u32)
}

/// [`cross_validate`], incrementing `progress` once per completed fit.
pub fn cross_validate_with_progress(
    sample: &StormPeakSample,
    tri: &Triangulation,
    threshold: &dyn Threshold,
    config: &CVConfig,
    progress: Option<&AtomicUsize>,
) -> Result<CVResult> {
    config.validate()?;
    let dim = tri.dim();
    let grid = make_lambda_grid(config, dim)?;
    let exponents = lambda_exponent_grid(config, dim);
    let exc = ExceedanceSet::from_sample(sample, threshold)?;
    let n = exc.len();
    if n < config.folds {
        return Err(invalid(format!("{n} exceedances is fewer than {} folds", config.folds)));
    }
    log::info!("cross-validation warm start is shared by all folds and penalties");
    let warm = voronoi_warm_start(&exc, tri, config.case.stationary_shape(), &config.fit)?;
    let located = exc.locate(tri);

    let (r_count, g_count, l_count) = (config.replicates, config.folds, grid.len());
    let folds: Vec<Vec<Vec<usize>>> =
        (0..r_count).map(|r| partition(n, g_count, config.seed.wrapping_add(r as u64))).collect();
    let tasks = r_count * g_count * l_count;
    let held_out: Vec<Result<f64>> = par::map_range(tasks, |t| {
        let (r, rest) = (t / (g_count * l_count), t % (g_count * l_count));
        let (g, l) = (rest / l_count, rest % l_count);
        let test = &folds[r][g];
        let train: Vec<usize> = folds[r]
            .iter()
            .enumerate()
            .filter(|(h, _)| *h != g)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        let result = fit_located(&located.subset(&train), tri, &grid[l], &warm, &config.fit, None).map(|fit| {
            let test_set = located.subset(test);
            crate::gp::negative_log_likelihood(&test_set, &fit.theta.scale, &fit.theta.shape_values())
        });
        if let Some(p) = progress {
            p.fetch_add(1, Ordering::Relaxed);
        }
        result
    });

    let mut per_replicate = vec![vec![0.0; l_count]; r_count];
    for (t, v) in held_out.into_iter().enumerate() {
        let (r, rest) = (t / (g_count * l_count), t % (g_count * l_count));
        let l = rest % l_count;
        let v = match v {
            Ok(v) => v,
            Err(PplError::NonFiniteObjective(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        // folds accumulate in ascending order of g because t increases with g
        per_replicate[r][l] += v;
    }
    let mean: Vec<f64> = (0..l_count)
        .map(|l| (0..r_count).map(|r| per_replicate[r][l]).sum::<f64>() / r_count as f64)
        .collect();
    let uncertainty: Vec<f64> = (0..l_count)
        .map(|l| jackknife_uncertainty(&(0..r_count).map(|r| per_replicate[r][l]).collect::<Vec<_>>()))
        .collect();
    let infinite_count: Vec<usize> = (0..l_count)
        .map(|l| (0..r_count).filter(|&r| !per_replicate[r][l].is_finite()).count())
        .collect();
    let comps: Vec<Vec<f64>> = grid.iter().map(PenaltyVector::components).collect();
    let (optimal, selected) = select_penalty(&comps, &mean, &uncertainty)?;
    debug_assert!(mean[selected] <= mean[optimal] + uncertainty[optimal]);
    Ok(CVResult {
        config: config.clone(),
        grid,
        exponents,
        per_replicate,
        mean,
        uncertainty,
        infinite_count,
        optimal,
        selected,
        exceedances: n,
    })
}

/// Infinite values serialise as JSON `null` and read back as `+inf`.
mod nonfinite {
    fn enc(v: &f64) -> Option<f64> {
        v.is_finite().then_some(*v)
    }

    fn dec(v: Option<f64>) -> f64 {
        v.unwrap_or(f64::INFINITY)
    }

    pub mod vector {
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            v.iter().map(super::enc).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Ok(Vec::<Option<f64>>::deserialize(d)?.into_iter().map(super::dec).collect())
        }
    }

    pub mod matrix {
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(v: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
            v.iter()
                .map(|r| r.iter().map(super::enc).collect::<Vec<_>>())
                .collect::<Vec<_>>()
                .serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
            Ok(Vec::<Vec<Option<f64>>>::deserialize(d)?
                .into_iter()
                .map(|r| r.into_iter().map(super::dec).collect())
                .collect())
        }
    }
}
