use super::{periodic_distance2, NodeSet};
use crate::Coord;

/// Nearest node (periodic metric) for every point; ties go to the lowest node index.
pub fn voronoi_assign(nodes: &NodeSet, points: &[Coord]) -> Vec<usize> {
    let dim = nodes.dim();
    points
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (k, n) in nodes.nodes().iter().enumerate() {
                let d = periodic_distance2(p, n, dim);
                if d < best_d {
                    best_d = d;
                    best = k;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraps_around() {
        let ns = NodeSet::new(1, vec![[0.0, 0.0], [180.0, 0.0]]).unwrap();
        assert_eq!(voronoi_assign(&ns, &[[350.0, 0.0]]), vec![0]);
    }

    #[test]
    fn tie_goes_to_lower_index() {
        let ns = NodeSet::new(1, vec![[100.0, 0.0], [0.0, 0.0]]).unwrap();
        assert_eq!(voronoi_assign(&ns, &[[50.0, 0.0], [230.0, 0.0]]), vec![0, 0]);
    }
}
