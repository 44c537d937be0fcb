use serde::{Deserialize, Serialize};

use super::GridField;
use crate::geometry::periodic_delta;
use crate::Coord;

/// Periodic Gaussian kernel average of values on a regular grid.
///
/// The kernel is truncated at six bandwidths per dimension; the weights are
/// renormalised, so constants are reproduced exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSmoother {
    bandwidth: [f64; 2],
}

const CUTOFF: f64 = 6.0;

impl KernelSmoother {
    pub fn new(bandwidth: &[f64]) -> Self {
        let mut bw = [1.0; 2];
        for (d, &w) in bandwidth.iter().take(2).enumerate() {
            bw[d] = w;
        }
        Self { bandwidth: bw }
    }

    pub fn bandwidth(&self, dim: usize) -> Vec<f64> {
        self.bandwidth[..dim].to_vec()
    }

    fn axis_weights(&self, grid: &GridField, d: usize, x: f64) -> Vec<(usize, f64)> {
        let h = grid.spacing(d);
        let w = self.bandwidth[d];
        let res = grid.resolution[d];
        let reach = CUTOFF * w / h;
        let candidates: Vec<usize> = if 2.0 * reach + 3.0 >= res as f64 {
            (0..res).collect()
        } else {
            let c = ((x - grid.origin[d]) / h).floor() as i64;
            let r = reach.ceil() as i64 + 1;
            let mut v: Vec<usize> = (c - r..=c + r + 1).map(|i| i.rem_euclid(res as i64) as usize).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        candidates
            .into_iter()
            .filter_map(|i| {
                let delta = periodic_delta(x, grid.origin[d] + i as f64 * h);
                (delta <= CUTOFF * w).then(|| {
                    let t = delta / w;
                    (i, (-0.5 * t * t).exp())
                })
            })
            .collect()
    }

    /// Kernel-weighted average of `grid` values at `x`.
    pub fn eval(&self, grid: &GridField, x: &Coord) -> f64 {
        let wa = self.axis_weights(grid, 0, x[0]);
        let (mut num, mut den) = (0.0, 0.0);
        if grid.dims == 1 {
            for &(i, w) in &wa {
                num += w * grid.values[i];
                den += w;
            }
        } else {
            let wb = self.axis_weights(grid, 1, x[1]);
            let r1 = grid.resolution[1];
            for &(i, w0) in &wa {
                for &(j, w1) in &wb {
                    let w = w0 * w1;
                    num += w * grid.values[i * r1 + j];
                    den += w;
                }
            }
        }
        if den > 0.0 {
            num / den
        } else {
            // bandwidth far below the grid spacing: nearest grid value
            let i = ((x[0] / grid.spacing(0)).round() as usize) % grid.resolution[0];
            if grid.dims == 1 {
                grid.values[i]
            } else {
                let j = ((x[1] / grid.spacing(1)).round() as usize) % grid.resolution[1];
                grid.values[i * grid.resolution[1] + j]
            }
        }
    }

    /// Smooth a grid onto itself.
    pub fn smooth(&self, grid: &GridField) -> GridField {
        let values = crate::par::map_range(grid.len(), |i| self.eval(grid, &grid.point(i)));
        grid.with_values(values)
    }
}
