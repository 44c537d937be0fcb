use serde::{Deserialize, Serialize};

use super::delaunay::{delaunay, orient};
use super::{degenerate, NodeSet};
use crate::error::{invalid, Result};
use crate::{wrap, Coord, PERIOD};

/// Barycentric tolerance for closed-bin membership.
const CONTAINS_EPS: f64 = 1e-11;

type Key = Vec<(usize, i32, i32)>;

/// A vertex of the extended (unwrapped) triangulation. Wrapping vertices sit at
/// a real node shifted by multiples of 360 and alias that node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub position: Coord,
    pub alias: usize,
}

/// One simplex bin `B_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    /// `D+1` indices into [`Triangulation::vertices`].
    pub vertices: Vec<usize>,
    /// The index vector `t_m`: the real node aliased by each vertex.
    pub nodes: Vec<usize>,
    /// `A_m^{-1}`, with `A_m` rows `(1, vertex position)`; only the leading
    /// `(D+1) x (D+1)` block is used.
    inverse: [[f64; 3]; 3],
    lo: Coord,
    hi: Coord,
    measure: f64,
}

impl Bin {
    /// Length (1-D) or area (2-D).
    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn inverse(&self) -> &[[f64; 3]; 3] {
        &self.inverse
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum GridKind {
    Regular { marginals: Vec<Vec<f64>> },
    Irregular,
}

/// Result of point location: the bin, the point's representative in the bin's
/// (possibly shifted) coordinates, and its barycentric weights over the bin vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub bin: usize,
    pub point: Coord,
    pub weights: [f64; 3],
}

/// A periodic triangulation of `[0, 360)^D` with precomputed interpolation matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triangulation {
    dim: usize,
    kind: GridKind,
    nodes: Vec<Coord>,
    vertices: Vec<Vertex>,
    bins: Vec<Bin>,
}

fn invert(a: &[[f64; 3]; 3], n: usize) -> Option<[[f64; 3]; 3]> {
    let mut m = *a;
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate().take(n) {
        row[i] = 1.0;
    }
    let scale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a[i][j].abs())
        .fold(0.0, f64::max)
        .max(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-12 * scale {
            return None;
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let p = m[col][col];
        for j in 0..n {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for j in 0..n {
                        m[r][j] -= f * m[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

fn shifts(dim: usize) -> Vec<Coord> {
    let offs = [0.0, -PERIOD, PERIOD];
    if dim == 1 {
        offs.iter().map(|&o| [o, 0.0]).collect()
    } else {
        offs.iter().flat_map(|&a| offs.iter().map(move |&b| [a, b])).collect()
    }
}

impl Triangulation {
    fn from_parts(
        dim: usize,
        kind: GridKind,
        nodes: Vec<Coord>,
        vertices: Vec<Vertex>,
        simplices: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let nv = dim + 1;
        let mut bins = Vec::with_capacity(simplices.len());
        for (m, s) in simplices.into_iter().enumerate() {
            debug_assert_eq!(s.len(), nv);
            let mut a = [[0.0; 3]; 3];
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for (r, &v) in s.iter().enumerate() {
                let p = vertices[v].position;
                a[r][0] = 1.0;
                for d in 0..dim {
                    a[r][d + 1] = p[d];
                    lo[d] = lo[d].min(p[d]);
                    hi[d] = hi[d].max(p[d]);
                }
            }
            if dim == 1 {
                lo[1] = 0.0;
                hi[1] = 0.0;
            }
            let inverse = invert(&a, nv).ok_or_else(|| degenerate(format!("bin {m} is singular")))?;
            let measure = if dim == 1 {
                hi[0] - lo[0]
            } else {
                let p: Vec<Coord> = s.iter().map(|&v| vertices[v].position).collect();
                orient(p[0], p[1], p[2]).abs() / 2.0
            };
            let nodes_m = s.iter().map(|&v| vertices[v].alias).collect();
            bins.push(Bin {
                vertices: s,
                nodes: nodes_m,
                inverse,
                lo,
                hi,
                measure,
            });
        }
        Ok(Self {
            dim,
            kind,
            nodes,
            vertices,
            bins,
        })
    }

    /// Regular 2-D grid from marginal node locations: a rectangular lattice
    /// (wrapping at the first node plus 360 in each margin) with an extra node at
    /// each rectangle centre and four triangles per rectangle, giving
    /// `K = 2 K1 K2` nodes and `M = 4 K1 K2` bins.
    pub fn build_regular_grid(marginals: &[Vec<f64>]) -> Result<Self> {
        if marginals.len() != 2 {
            return Err(invalid("regular grids need exactly two marginal node lists"));
        }
        let mut margins: Vec<Vec<f64>> = Vec::with_capacity(2);
        for (d, m) in marginals.iter().enumerate() {
            if m.is_empty() {
                return Err(invalid(format!("marginal node list {d} is empty")));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(invalid("marginal node locations must be finite"));
            }
            let mut w: Vec<f64> = m.iter().map(|&v| wrap(v)).collect();
            w.sort_by(f64::total_cmp);
            if w.windows(2).any(|p| p[1] - p[0] < 1e-9) {
                return Err(invalid(format!("duplicate marginal locations in dimension {d}")));
            }
            margins.push(w);
        }
        let (a, b) = (&margins[0], &margins[1]);
        let (k1, k2) = (a.len(), b.len());
        let ext = |m: &Vec<f64>, i: usize| if i < m.len() { m[i] } else { m[0] + PERIOD };

        let mut nodes = Vec::with_capacity(2 * k1 * k2);
        for &ai in a {
            for &bj in b {
                nodes.push([ai, bj]);
            }
        }
        for i in 0..k1 {
            for j in 0..k2 {
                let c = [(ext(a, i) + ext(a, i + 1)) / 2.0, (ext(b, j) + ext(b, j + 1)) / 2.0];
                nodes.push([wrap(c[0]), wrap(c[1])]);
            }
        }

        let mut vertices = Vec::new();
        let lattice_vertex = |i: usize, j: usize| i * (k2 + 1) + j;
        for i in 0..=k1 {
            for j in 0..=k2 {
                vertices.push(Vertex {
                    position: [ext(a, i), ext(b, j)],
                    alias: (i % k1) * k2 + (j % k2),
                });
            }
        }
        let mut simplices = Vec::with_capacity(4 * k1 * k2);
        for i in 0..k1 {
            for j in 0..k2 {
                let centre = vertices.len();
                vertices.push(Vertex {
                    position: [(ext(a, i) + ext(a, i + 1)) / 2.0, (ext(b, j) + ext(b, j + 1)) / 2.0],
                    alias: k1 * k2 + i * k2 + j,
                });
                let ll = lattice_vertex(i, j);
                let lr = lattice_vertex(i + 1, j);
                let ur = lattice_vertex(i + 1, j + 1);
                let ul = lattice_vertex(i, j + 1);
                simplices.push(vec![centre, ll, lr]);
                simplices.push(vec![centre, lr, ur]);
                simplices.push(vec![centre, ur, ul]);
                simplices.push(vec![centre, ul, ll]);
            }
        }
        Self::from_parts(
            2,
            GridKind::Regular { marginals: margins },
            nodes,
            vertices,
            simplices,
        )
    }

    /// Periodic triangulation of freely placed nodes. In 1-D the bins are the
    /// intervals between consecutive nodes plus one interval wrapping through 360.
    /// In 2-D the nodes are replicated at +-360 offsets, the extended set is
    /// Delaunay-triangulated and one representative of each periodic class of
    /// triangles is retained.
    pub fn build_irregular_grid(nodes: &NodeSet) -> Result<Self> {
        match nodes.dim() {
            1 => Self::irregular_1d(nodes),
            2 => Self::irregular_2d(nodes),
            d => Err(invalid(format!("unsupported dimension {d}"))),
        }
    }

    fn irregular_1d(nodes: &NodeSet) -> Result<Self> {
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by(|&i, &j| nodes.nodes()[i][0].total_cmp(&nodes.nodes()[j][0]));
        let mut vertices: Vec<Vertex> = order
            .iter()
            .map(|&k| Vertex {
                position: [nodes.nodes()[k][0], 0.0],
                alias: k,
            })
            .collect();
        let first = order[0];
        vertices.push(Vertex {
            position: [nodes.nodes()[first][0] + PERIOD, 0.0],
            alias: first,
        });
        let simplices = (0..order.len()).map(|i| vec![i, i + 1]).collect();
        Self::from_parts(1, GridKind::Irregular, nodes.nodes().to_vec(), vertices, simplices)
    }

    fn irregular_2d(nodes: &NodeSet) -> Result<Self> {
        let pts = nodes.nodes();
        let collinear = pts.iter().all(|p| orient(pts[0], pts[1], *p).abs() < 1e-9 * PERIOD * PERIOD);
        if collinear {
            return Err(degenerate("2-D nodes are collinear"));
        }
        // (ring radius, jitter) attempts; jitter only breaks cocircular ties
        let attempts = [(1i32, 0.0), (1, 1e-9), (2, 0.0), (2, 1e-9), (2, 1e-7)];
        for (attempt, &(ring, jitter)) in attempts.iter().enumerate() {
            if attempt > 0 {
                log::warn!(
                    "periodic Delaunay attempt {attempt} (ring {ring}, jitter {jitter:e}): previous attempt did not tile the period"
                );
            }
            if let Some(t) = Self::try_periodic_delaunay(nodes, ring, jitter) {
                return Ok(t);
            }
        }
        Err(degenerate("could not build a periodic triangulation of the nodes"))
    }

    fn try_periodic_delaunay(nodes: &NodeSet, ring: i32, jitter: f64) -> Option<Self> {
        let pts = nodes.nodes();
        let k = pts.len();
        let mut ext: Vec<(Coord, usize, [i32; 2])> = Vec::new();
        for (alias, p) in pts.iter().enumerate() {
            for ox in -ring..=ring {
                for oy in -ring..=ring {
                    let pos = [p[0] + PERIOD * ox as f64, p[1] + PERIOD * oy as f64];
                    ext.push((pos, alias, [ox, oy]));
                }
            }
        }
        let mut seed = 0x9E37_79B9_7F4A_7C15u64;
        let mut rnd = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let jit: Vec<Coord> = (0..k).map(|_| [rnd() * jitter * PERIOD, rnd() * jitter * PERIOD]).collect();
        let dpts: Vec<Coord> = ext
            .iter()
            .map(|(p, a, _)| [p[0] + jit[*a][0], p[1] + jit[*a][1]])
            .collect();
        let tris = delaunay(&dpts);

        let tol = 1e-9;
        let mut chosen: Vec<(Key, [usize; 3], f64)> = Vec::new();
        for t in tris {
            let c = [
                (ext[t[0]].0[0] + ext[t[1]].0[0] + ext[t[2]].0[0]) / 3.0,
                (ext[t[0]].0[1] + ext[t[1]].0[1] + ext[t[2]].0[1]) / 3.0,
            ];
            if !(c[0] >= -tol && c[0] < PERIOD + tol && c[1] >= -tol && c[1] < PERIOD + tol) {
                continue;
            }
            let mut key: Key = t
                .iter()
                .map(|&v| (ext[v].1, ext[v].2[0], ext[v].2[1]))
                .collect();
            key.sort();
            let (ox, oy) = (key[0].1, key[0].2);
            for e in key.iter_mut() {
                e.1 -= ox;
                e.2 -= oy;
            }
            let dist = (c[0] - PERIOD / 2.0).abs().max((c[1] - PERIOD / 2.0).abs());
            match chosen.iter_mut().find(|(k2, _, _)| *k2 == key) {
                Some(entry) => {
                    if dist < entry.2 {
                        entry.1 = t;
                        entry.2 = dist;
                    }
                }
                None => chosen.push((key, t, dist)),
            }
        }

        let mut vertices: Vec<Vertex> = Vec::new();
        let mut remap = std::collections::HashMap::new();
        let mut simplices = Vec::with_capacity(chosen.len());
        for (_, t, _) in &chosen {
            let s: Vec<usize> = t
                .iter()
                .map(|&v| {
                    *remap.entry(v).or_insert_with(|| {
                        vertices.push(Vertex {
                            position: ext[v].0,
                            alias: ext[v].1,
                        });
                        vertices.len() - 1
                    })
                })
                .collect();
            simplices.push(s);
        }
        let tri = Self::from_parts(2, GridKind::Irregular, pts.to_vec(), vertices, simplices).ok()?;
        let area: f64 = tri.bins.iter().map(|b| b.measure).sum();
        let tiles = (area - PERIOD * PERIOD).abs() < 1e-9 * PERIOD * PERIOD
            && tri.bins.iter().all(|b| b.measure > 1e-12 * PERIOD * PERIOD);
        tiles.then_some(tri)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &GridKind {
        &self.kind
    }

    /// The K real nodes (coordinates in `[0, 360)`).
    pub fn nodes(&self) -> &[Coord] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    /// Barycentric weights of `p` (already in the bin's coordinates) over bin `m`'s vertices.
    #[inline]
    pub fn weights_in_bin(&self, m: usize, p: &Coord) -> [f64; 3] {
        let b = &self.bins[m];
        let x = [1.0, p[0], p[1]];
        let n = self.dim + 1;
        let mut w = [0.0; 3];
        for (j, wj) in w.iter_mut().enumerate().take(n) {
            *wj = (0..n).map(|i| x[i] * b.inverse[i][j]).sum();
        }
        w
    }

    /// Locate `x` (components in `[0, 360)`). Bins are closed; points on shared
    /// faces resolve to the lowest bin index.
    pub fn locate(&self, x: &Coord) -> Location {
        let shifts = shifts(self.dim);
        let mut best: Option<Location> = None;
        let mut best_min = f64::NEG_INFINITY;
        for (m, b) in self.bins.iter().enumerate() {
            for s in &shifts {
                let p = [x[0] + s[0], if self.dim == 2 { x[1] + s[1] } else { 0.0 }];
                let slack = 1e-9;
                if (0..self.dim).any(|d| p[d] < b.lo[d] - slack || p[d] > b.hi[d] + slack) {
                    continue;
                }
                let w = self.weights_in_bin(m, &p);
                let wmin = w[..=self.dim].iter().cloned().fold(f64::INFINITY, f64::min);
                if wmin >= -CONTAINS_EPS {
                    return Location { bin: m, point: p, weights: w };
                }
                if wmin > best_min {
                    best_min = wmin;
                    best = Some(Location { bin: m, point: p, weights: w });
                }
            }
        }
        // unreachable for a valid tiling except through rounding at the tolerance edge
        best.expect("triangulation has at least one bin")
    }

    /// Piecewise-linear interpolation of node values at `x`.
    #[inline]
    pub fn interpolate(&self, node_values: &[f64], x: &Coord) -> f64 {
        let loc = self.locate(x);
        self.interpolate_at(node_values, &loc)
    }

    #[inline]
    pub fn interpolate_at(&self, node_values: &[f64], loc: &Location) -> f64 {
        let b = &self.bins[loc.bin];
        b.nodes
            .iter()
            .zip(&loc.weights)
            .map(|(&k, w)| w * node_values[k])
            .sum()
    }

    /// Coefficients `beta_m = A_m^{-1} c_m` for bin `m`; entry 0 is the intercept,
    /// entries `1..=D` the partial derivatives.
    pub fn coefficients(&self, m: usize, node_values: &[f64]) -> [f64; 3] {
        let b = &self.bins[m];
        let n = self.dim + 1;
        let mut beta = [0.0; 3];
        for (i, bi) in beta.iter_mut().enumerate().take(n) {
            *bi = (0..n).map(|j| b.inverse[i][j] * node_values[b.nodes[j]]).sum();
        }
        beta
    }

    /// Per-bin gradients `(d psi / d x_1, d psi / d x_2)`; the second component is 0 in 1-D.
    pub fn bin_gradients(&self, node_values: &[f64]) -> Vec<[f64; 2]> {
        (0..self.bins.len())
            .map(|m| {
                let beta = self.coefficients(m, node_values);
                [beta[1], if self.dim == 2 { beta[2] } else { 0.0 }]
            })
            .collect()
    }
}
