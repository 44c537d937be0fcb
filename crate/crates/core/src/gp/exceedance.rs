use crate::empirical::Threshold;
use crate::error::{PplError, Result};
use crate::geometry::Triangulation;
use crate::sample::StormPeakSample;
use crate::{par, Coord};

/// Observations strictly above the threshold, with the threshold value at each.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceSet {
    pub dim: usize,
    pub x: Vec<Coord>,
    pub y: Vec<f64>,
    pub threshold: Vec<f64>,
    /// Row of each exceedance in the source sample.
    pub source: Vec<usize>,
}

impl ExceedanceSet {
    pub fn from_sample(sample: &StormPeakSample, threshold: &dyn Threshold) -> Result<Self> {
        let u = par::map_slice(sample.covariates(), |x| threshold.threshold_at(x));
        Self::with_thresholds(sample, &u)
    }

    /// Exceedances given the threshold already evaluated at every observation.
    pub fn with_thresholds(sample: &StormPeakSample, thresholds: &[f64]) -> Result<Self> {
        assert_eq!(thresholds.len(), sample.len());
        let mut out = Self {
            dim: sample.dim(),
            x: Vec::new(),
            y: Vec::new(),
            threshold: Vec::new(),
            source: Vec::new(),
        };
        for (i, ((x, &y), &u)) in sample.covariates().iter().zip(sample.responses()).zip(thresholds).enumerate() {
            if y > u {
                out.x.push(*x);
                out.y.push(y);
                out.threshold.push(u);
                out.source.push(i);
            }
        }
        if out.x.is_empty() {
            return Err(PplError::EmptySample("no observations exceed the threshold".into()));
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn excesses(&self) -> Vec<f64> {
        self.y.iter().zip(&self.threshold).map(|(y, u)| y - u).collect()
    }

    pub fn max_excess(&self) -> f64 {
        self.excesses().into_iter().fold(0.0, f64::max)
    }

    pub fn locate(&self, tri: &Triangulation) -> LocatedExceedances {
        let locs = par::map_slice(&self.x, |x| tri.locate(x));
        let n = tri.dim() + 1;
        let mut nodes = Vec::with_capacity(locs.len());
        let mut weights = Vec::with_capacity(locs.len());
        for loc in &locs {
            let b = &tri.bins()[loc.bin];
            let mut k = [0usize; 3];
            k[..n].copy_from_slice(&b.nodes[..n]);
            nodes.push(k);
            weights.push(loc.weights);
        }
        LocatedExceedances {
            excess: self.excesses(),
            nodes,
            weights,
            arity: n,
            node_count: tri.node_count(),
        }
    }
}

/// Excesses with their interpolation stencil in a fixed triangulation: the
/// real nodes of the containing bin and the barycentric weights over them.
#[derive(Debug, Clone, PartialEq)]
pub struct LocatedExceedances {
    pub excess: Vec<f64>,
    pub nodes: Vec<[usize; 3]>,
    pub weights: Vec<[f64; 3]>,
    pub arity: usize,
    pub node_count: usize,
}

impl LocatedExceedances {
    pub fn len(&self) -> usize {
        self.excess.len()
    }

    pub fn is_empty(&self) -> bool {
        self.excess.is_empty()
    }

    /// Rows `idx` (repeats allowed).
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            excess: idx.iter().map(|&i| self.excess[i]).collect(),
            nodes: idx.iter().map(|&i| self.nodes[i]).collect(),
            weights: idx.iter().map(|&i| self.weights[i]).collect(),
            arity: self.arity,
            node_count: self.node_count,
        }
    }

    /// Interpolated `(sigma, xi)` at exceedance `i`.
    #[inline]
    pub fn params_at(&self, i: usize, scale: &[f64], shape: &[f64]) -> (f64, f64) {
        let (k, w) = (&self.nodes[i], &self.weights[i]);
        let mut s = 0.0;
        let mut x = 0.0;
        for j in 0..self.arity {
            s += w[j] * scale[k[j]];
            x += w[j] * shape[k[j]];
        }
        (s, x)
    }
}
