use super::params::PenaltyVector;
use crate::geometry::Triangulation;
use crate::PERIOD;

/// `sum_d sum_m lambda_{sigma,d} |beta^sigma_{m,d}| + lambda_{xi,d} |beta^xi_{m,d}|`.
///
/// With `volume_weighted`, each bin's term is scaled by its measure relative
/// to the mean bin measure, so uniform bins give the unweighted value.
pub fn roughness_penalty(
    tri: &Triangulation,
    penalty: &PenaltyVector,
    scale: &[f64],
    shape: Option<&[f64]>,
    volume_weighted: bool,
) -> f64 {
    let dim = tri.dim();
    let mean_measure = PERIOD.powi(dim as i32) / tri.bin_count() as f64;
    let mut total = 0.0;
    for (m, bin) in tri.bins().iter().enumerate() {
        let mut term = 0.0;
        let bs = tri.coefficients(m, scale);
        for d in 0..dim {
            term += penalty.scale[d] * bs[d + 1].abs();
        }
        if let (Some(xi), false) = (shape, penalty.shape.is_empty()) {
            let bx = tri.coefficients(m, xi);
            for d in 0..dim {
                term += penalty.shape[d] * bx[d + 1].abs();
            }
        }
        if volume_weighted {
            term *= bin.measure() / mean_measure;
        }
        total += term;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::NodeSet;

    #[test]
    fn one_dimensional_penalty_by_hand() {
        let tri = Triangulation::build_irregular_grid(&NodeSet::new(1, vec![[20.0, 0.0], [200.0, 0.0]]).unwrap()).unwrap();
        let p = PenaltyVector::case_a(1, 2.0);
        // slopes +-1/180 on both bins
        let v = roughness_penalty(&tri, &p, &[1.0, 2.0], None, false);
        assert!((v - 2.0 * 2.0 / 180.0).abs() < 1e-14);
        let w = roughness_penalty(&tri, &p, &[1.0, 2.0], None, true);
        assert!((v - w).abs() < 1e-14);
    }

    #[test]
    fn wrap_bin_slope_counts() {
        let tri = Triangulation::build_irregular_grid(&NodeSet::new(1, vec![[0.0, 0.0], [180.0, 0.0]]).unwrap()).unwrap();
        let v = roughness_penalty(&tri, &PenaltyVector::case_a(1, 90.0), &[1.0, 2.0], None, false);
        assert!((v - 1.0).abs() < 1e-14);
        assert_eq!(roughness_penalty(&tri, &PenaltyVector::case_a(1, 0.0), &[1.0, 2.0], None, false), 0.0);
    }

    #[test]
    fn constant_fields_are_free() {
        let tri = Triangulation::build_regular_grid(&[vec![0.0, 120.0, 240.0], vec![0.0, 180.0]]).unwrap();
        let k = tri.node_count();
        let p = PenaltyVector::case_b(2, 5.0, 5.0);
        assert!(roughness_penalty(&tri, &p, &vec![1.3; k], Some(&vec![-0.2; k]), false).abs() < 1e-12);
    }
}
