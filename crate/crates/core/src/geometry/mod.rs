//! Nodes, periodic triangulations and piecewise-linear fields on `[0, 360)^D`.

mod delaunay;
mod field;
mod triangulation;
mod voronoi;

pub use delaunay::delaunay;
pub use field::ParameterField;
pub use triangulation::{Bin, GridKind, Location, Triangulation, Vertex};
pub use voronoi::voronoi_assign;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, PplError, Result};
use crate::{wrap, Coord, PERIOD};

/// Per-component periodic distance `min(|a-b|, 360-|a-b|)`.
#[inline]
pub fn periodic_delta(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(PERIOD);
    d.min(PERIOD - d)
}

/// Euclidean combination of per-component periodic distances over the first `dim` components.
#[inline]
pub fn periodic_distance2(a: &Coord, b: &Coord, dim: usize) -> f64 {
    (0..dim)
        .map(|d| {
            let t = periodic_delta(a[d], b[d]);
            t * t
        })
        .sum()
}

/// The K nodes at which parameter values are free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSet {
    dim: usize,
    nodes: Vec<Coord>,
}

const DUPLICATE_TOL: f64 = 1e-9;

impl NodeSet {
    /// Validate and wrap a node set. Needs at least 2 nodes in 1-D and 3 in 2-D.
    pub fn new(dim: usize, nodes: Vec<Coord>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(invalid(format!("node dimension must be 1 or 2, got {dim}")));
        }
        let min = if dim == 1 { 2 } else { 3 };
        if nodes.len() < min {
            return Err(invalid(format!(
                "at least {min} nodes are required in {dim}-D, got {}",
                nodes.len()
            )));
        }
        let mut out: Vec<Coord> = Vec::with_capacity(nodes.len());
        for n in nodes {
            if n[..dim].iter().any(|v| !v.is_finite()) {
                return Err(invalid("node coordinates must be finite"));
            }
            let mut w = [0.0; 2];
            for d in 0..dim {
                w[d] = wrap(n[d]);
            }
            if let Some(j) = out
                .iter()
                .position(|o| periodic_distance2(o, &w, dim) < DUPLICATE_TOL * DUPLICATE_TOL)
            {
                return Err(invalid(format!("node {:?} duplicates node {j}", &w[..dim])));
            }
            out.push(w);
        }
        Ok(Self { dim, nodes: out })
    }

    /// Build from coordinate vectors (`[[x], ...]` or `[[x, y], ...]`).
    pub fn from_vectors(vectors: &[Vec<f64>]) -> Result<Self> {
        let dim = vectors.first().map(Vec::len).unwrap_or(0);
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(invalid("all node coordinate vectors must have the same length"));
        }
        let nodes = vectors
            .iter()
            .map(|v| {
                let mut c = [0.0; 2];
                c[..dim.min(2)].copy_from_slice(&v[..dim.min(2)]);
                c
            })
            .collect();
        Self::new(dim, nodes)
    }

    pub fn to_vectors(&self) -> Vec<Vec<f64>> {
        self.nodes.iter().map(|n| n[..self.dim].to_vec()).collect()
    }

    /// Parse the JSON node-file format: an array of coordinate vectors.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Vec<Vec<f64>> = serde_json::from_str(text)?;
        Self::from_vectors(&v)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_vectors()).expect("node vectors serialise")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Coord] {
        &self.nodes
    }
}

pub(crate) fn degenerate(msg: impl Into<String>) -> PplError {
    PplError::DegenerateTriangulation(msg.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_delta_wraps() {
        assert_eq!(periodic_delta(350.0, 0.0), 10.0);
        assert_eq!(periodic_delta(0.0, 180.0), 180.0);
        assert_eq!(periodic_delta(10.0, 20.0), 10.0);
    }

    #[test]
    fn duplicate_after_wrap_rejected() {
        assert!(NodeSet::new(1, vec![[10.0, 0.0], [370.0, 0.0]]).is_err());
        assert!(NodeSet::new(1, vec![[10.0, 0.0]]).is_err());
        assert!(NodeSet::new(2, vec![[10.0, 0.0], [20.0, 5.0]]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let ns = NodeSet::from_json("[[20.0, 10.0], [200.0, 100.0], [90.0, 300.0]]").unwrap();
        assert_eq!(ns.dim(), 2);
        assert_eq!(NodeSet::from_json(&ns.to_json()).unwrap(), ns);
    }
}
