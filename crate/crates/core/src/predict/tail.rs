use std::io::Write;

use serde::{Deserialize, Serialize};

use super::SimulatedSample;
use crate::empirical::empirical_quantile;
use crate::error::{invalid, PplError, Result};
use crate::sample::StormPeakSample;
use crate::{wrap, Coord};

/// Covariate partitions for tail plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strata {
    All,
    /// Twelve 30-day months of the standardised year.
    Months,
    /// Eight 45-degree sectors, the first `[-22.5, 22.5)`.
    Octants,
}

impl std::str::FromStr for Strata {
    type Err = PplError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Strata::All),
            "months" => Ok(Strata::Months),
            "octants" => Ok(Strata::Octants),
            other => Err(invalid(format!("unknown stratum `{other}` (expected all, months or octants)"))),
        }
    }
}

impl Strata {
    fn count(self) -> usize {
        match self {
            Strata::All => 1,
            Strata::Months => 12,
            Strata::Octants => 8,
        }
    }

    fn label(self, k: usize) -> String {
        match self {
            Strata::All => "all".into(),
            Strata::Months => format!("month-{:02}", k + 1),
            Strata::Octants => format!("octant-{}", k + 1),
        }
    }

    /// Covariate column used for stratification.
    fn column(self, labels: &[String]) -> Result<usize> {
        let wanted = match self {
            Strata::All => return Ok(0),
            Strata::Months => "season",
            Strata::Octants => "direction",
        };
        if let Some(i) = labels.iter().position(|l| l == wanted) {
            Ok(i)
        } else if labels.len() == 1 {
            Ok(0)
        } else {
            Err(invalid(format!("no `{wanted}` covariate to stratify by")))
        }
    }

    fn index(self, v: f64) -> usize {
        match self {
            Strata::All => 0,
            Strata::Months => ((wrap(v) / 30.0) as usize).min(11),
            Strata::Octants => ((wrap(v + 22.5) / 45.0) as usize).min(7),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub y: f64,
    pub probability: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// `Pr(Y > y)` against `y` for one stratum and source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub stratum: String,
    /// `"observed"` or `"simulated"`.
    pub source: String,
    /// Stratum size the probabilities are relative to.
    pub count: usize,
    pub empty: bool,
    /// Simulated curves only: the largest threshold in the stratum. Below it,
    /// non-exceedances sitting at their own higher threshold count as exceeding
    /// `y`, so the curve there is an upper bound.
    #[serde(default)]
    pub exact_from: Option<f64>,
    pub points: Vec<TailPoint>,
}

/// Rank survival: the `k`-th largest of `n` values gets probability `k / n`.
fn rank_survival(mut ys: Vec<f64>) -> Vec<TailPoint> {
    ys.sort_by(|a, b| b.total_cmp(a));
    let n = ys.len() as f64;
    let mut pts: Vec<TailPoint> = ys
        .into_iter()
        .enumerate()
        .map(|(k, y)| TailPoint { y, probability: (k + 1) as f64 / n, lower: None, upper: None })
        .collect();
    pts.reverse();
    pts
}

fn survival_on(ys: &mut [f64], grid: &[f64]) -> Vec<f64> {
    ys.sort_by(|a, b| a.total_cmp(b));
    let n = ys.len() as f64;
    grid.iter()
        .map(|&g| {
            let below = ys.partition_point(|&v| v <= g);
            (ys.len() - below) as f64 / n
        })
        .collect()
}

const SIM_GRID: usize = 200;

fn group(x: &[Coord], y: &[f64], strata: Strata, col: usize) -> Vec<Vec<usize>> {
    let mut g = vec![Vec::new(); strata.count()];
    for i in 0..y.len() {
        g[strata.index(x[i][col])].push(i);
    }
    g
}

/// Observed and simulated tail curves per stratum.
///
/// Observed curves use rank survival. Simulated curves are evaluated on a
/// grid from the smallest simulated threshold in the stratum to the largest
/// simulated value; see [`TailCurve::exact_from`]. With `bootstrap`, simulated curves carry 2.5% and 97.5% bands
/// over the bootstrap simulations evaluated on the same grid.
pub fn tail_curves(
    observed: &StormPeakSample,
    simulated: &SimulatedSample,
    strata: Strata,
    bootstrap: Option<&[SimulatedSample]>,
) -> Result<Vec<TailCurve>> {
    let oc = strata.column(observed.labels())?;
    let sc = strata.column(&simulated.labels)?;
    let og = group(observed.covariates(), observed.responses(), strata, oc);
    let sg = group(&simulated.x, &simulated.y, strata, sc);
    let bg: Vec<Vec<Vec<usize>>> = bootstrap
        .unwrap_or(&[])
        .iter()
        .map(|b| group(&b.x, &b.y, strata, sc))
        .collect();
    let mut out = Vec::with_capacity(2 * strata.count());
    for k in 0..strata.count() {
        let label = strata.label(k);
        let obs: Vec<f64> = og[k].iter().map(|&i| observed.responses()[i]).collect();
        out.push(TailCurve {
            stratum: label.clone(),
            source: "observed".into(),
            count: obs.len(),
            empty: obs.is_empty(),
            exact_from: None,
            points: rank_survival(obs),
        });

        let idx = &sg[k];
        let mut curve = TailCurve {
            stratum: label,
            source: "simulated".into(),
            count: idx.len(),
            empty: idx.is_empty(),
            exact_from: None,
            points: Vec::new(),
        };
        if !idx.is_empty() {
            let lo = idx.iter().map(|&i| simulated.threshold[i]).fold(f64::INFINITY, f64::min);
            curve.exact_from = Some(idx.iter().map(|&i| simulated.threshold[i]).fold(f64::NEG_INFINITY, f64::max));
            let hi = idx.iter().map(|&i| simulated.y[i]).fold(f64::NEG_INFINITY, f64::max);
            let grid: Vec<f64> = if hi > lo {
                (0..SIM_GRID).map(|j| lo + (hi - lo) * j as f64 / (SIM_GRID - 1) as f64).collect()
            } else {
                vec![lo]
            };
            let mut ys: Vec<f64> = idx.iter().map(|&i| simulated.y[i]).collect();
            let main = survival_on(&mut ys, &grid);
            let members: Vec<Vec<f64>> = bg
                .iter()
                .zip(bootstrap.unwrap_or(&[]))
                .filter(|(g, _)| !g[k].is_empty())
                .map(|(g, b)| {
                    let mut ys: Vec<f64> = g[k].iter().map(|&i| b.y[i]).collect();
                    survival_on(&mut ys, &grid)
                })
                .collect();
            curve.points = grid
                .iter()
                .enumerate()
                .map(|(j, &y)| {
                    let (lower, upper) = if members.is_empty() {
                        (None, None)
                    } else {
                        let col: Vec<f64> = members.iter().map(|m| m[j]).collect();
                        (Some(empirical_quantile(&col, 0.025)), Some(empirical_quantile(&col, 0.975)))
                    };
                    TailPoint { y, probability: main[j], lower, upper }
                })
                .collect();
        }
        out.push(curve);
    }
    Ok(out)
}

/// One row per curve point: stratum, source, count, y, probability, lower,
/// upper, and whether the point lies in the exact range.
pub fn write_tail_csv<W: Write>(curves: &[TailCurve], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["stratum", "source", "count", "y", "probability", "lower", "upper", "exact"])?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for c in curves {
        for p in &c.points {
            w.write_record([
                c.stratum.clone(),
                c.source.clone(),
                c.count.to_string(),
                p.y.to_string(),
                p.probability.to_string(),
                opt(p.lower),
                opt(p.upper),
                c.exact_from.is_none_or(|e| p.y >= e).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
