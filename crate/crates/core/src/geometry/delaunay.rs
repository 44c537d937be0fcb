//! Incremental Bowyer-Watson Delaunay triangulation for small planar point sets.

/// Twice the signed area of triangle (a, b, c); positive when counter-clockwise.
#[inline]
pub(crate) fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Positive when `d` lies strictly inside the circumcircle of the counter-clockwise
/// triangle (a, b, c).
#[inline]
fn in_circle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

/// Delaunay triangles of `points` as counter-clockwise index triples.
///
/// Quadratic in the number of points, which is fine for node sets of a few
/// hundred (including periodic copies). Cocircular configurations are resolved
/// arbitrarily but consistently with the insertion order.
pub fn delaunay(points: &[[f64; 2]]) -> Vec<[usize; 3]> {
    let n = points.len();
    if n < 3 {
        return Vec::new();
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
    let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.push([mid[0] - 20.0 * span, mid[1] - 10.0 * span]);
    pts.push([mid[0] + 20.0 * span, mid[1] - 10.0 * span]);
    pts.push([mid[0], mid[1] + 20.0 * span]);

    let mut tris: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];
    for i in 0..n {
        let p = pts[i];
        let (bad, keep): (Vec<[usize; 3]>, Vec<[usize; 3]>) = tris
            .into_iter()
            .partition(|t| in_circle(pts[t[0]], pts[t[1]], pts[t[2]], p) > 0.0);
        tris = keep;
        // boundary of the cavity: edges of bad triangles not shared by another bad one
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(bad.len() * 3);
        for t in &bad {
            for k in 0..3 {
                edges.push((t[k], t[(k + 1) % 3]));
            }
        }
        for &(a, b) in &edges {
            if !edges.iter().any(|&(c, d)| c == b && d == a) {
                let t = [a, b, i];
                if orient(pts[a], pts[b], pts[i]) > 0.0 {
                    tris.push(t);
                } else {
                    tris.push([b, a, i]);
                }
            }
        }
    }
    tris.retain(|t| t.iter().all(|&v| v < n));
    tris
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_with_centre_gives_four_triangles() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let t = delaunay(&pts);
        assert_eq!(t.len(), 4);
        let area: f64 = t.iter().map(|t| orient(pts[t[0]], pts[t[1]], pts[t[2]]) / 2.0).sum();
        assert!((area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_circumcircles() {
        let mut pts = Vec::new();
        let mut s = 12345u64;
        for _ in 0..60 {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = (s >> 11) as f64 / (1u64 << 53) as f64;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = (s >> 11) as f64 / (1u64 << 53) as f64;
            pts.push([a * 100.0, b * 100.0]);
        }
        let t = delaunay(&pts);
        // Euler for a triangulated point set: 2n - 2 - h triangles, h = hull size >= 3
        assert!(t.len() <= 2 * pts.len() - 5);
        for tri in &t {
            assert!(orient(pts[tri[0]], pts[tri[1]], pts[tri[2]]) > 0.0);
            for (j, p) in pts.iter().enumerate() {
                if !tri.contains(&j) {
                    assert!(in_circle(pts[tri[0]], pts[tri[1]], pts[tri[2]], *p) <= 1e-6);
                }
            }
        }
    }
}
