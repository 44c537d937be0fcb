//! JSON and CSV shapes served to the node-placement UI and written by the pipeline.

use std::io::Write;

use ppl_core::empirical::GridField;
use ppl_core::geometry::{GridKind, Triangulation};
use ppl_core::gp::FitResult;
use ppl_core::predict::BootstrapEnsemble;
use ppl_core::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinView {
    /// Real node index of each bin vertex.
    pub nodes: Vec<usize>,
    /// Vertex positions in unwrapped coordinates, so wrapping bins draw as one piece.
    pub vertices: Vec<Vec<f64>>,
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangulationView {
    pub dim: usize,
    pub kind: String,
    pub nodes: Vec<Vec<f64>>,
    pub bins: Vec<BinView>,
}

impl TriangulationView {
    pub fn new(tri: &Triangulation) -> Self {
        let dim = tri.dim();
        let bins = tri
            .bins()
            .iter()
            .map(|b| BinView {
                nodes: b.nodes.clone(),
                vertices: b.vertices.iter().map(|&v| tri.vertices()[v].position[..dim].to_vec()).collect(),
                measure: b.measure(),
            })
            .collect();
        Self {
            dim,
            kind: match tri.kind() {
                GridKind::Regular { .. } => "regular".into(),
                GridKind::Irregular => "irregular".into(),
            },
            nodes: tri.nodes().iter().map(|n| n[..dim].to_vec()).collect(),
            bins,
        }
    }
}

/// Interpolated scale and shape surfaces of a fit.
pub fn fitted_fields(fit: &FitResult, tri: &Triangulation, resolution: &[usize]) -> Result<(GridField, GridField)> {
    let mut scale = GridField::from_fn(tri.dim(), resolution, |x| fit.params_at(tri, x).0)?;
    let mut shape = GridField::from_fn(tri.dim(), resolution, |x| fit.params_at(tri, x).1)?;
    scale.set_meta("quantity", "scale");
    shape.set_meta("quantity", "shape");
    Ok((scale, shape))
}

fn io(e: std::io::Error) -> ppl_core::PplError {
    e.into()
}

pub fn write_node_values<W: Write>(mut w: W, fit: &FitResult, labels: &[String]) -> Result<()> {
    writeln!(w, "node,{},scale,shape", labels.join(",")).map_err(io)?;
    let shape = fit.theta.shape_values();
    for (k, (x, s)) in fit.nodes.iter().zip(&fit.theta.scale).enumerate() {
        let coords: Vec<String> = x.iter().map(f64::to_string).collect();
        writeln!(w, "{k},{},{s},{}", coords.join(","), shape[k]).map_err(io)?;
    }
    Ok(())
}

/// One row per bootstrap member and node.
pub fn write_bootstrap_nodes<W: Write>(mut w: W, ens: &BootstrapEnsemble) -> Result<()> {
    writeln!(w, "member,seed,node,scale,shape").map_err(io)?;
    for (i, m) in ens.members.iter().enumerate() {
        if let Some(f) = &m.fit {
            let shape = f.theta.shape_values();
            for (k, s) in f.theta.scale.iter().enumerate() {
                writeln!(w, "{i},{},{k},{s},{}", m.seed, shape[k]).map_err(io)?;
            }
        }
    }
    Ok(())
}

/// Baseline node values with 2.5% and 97.5% bootstrap percentiles.
pub fn write_bootstrap_band<W: Write>(
    mut w: W,
    ens: &BootstrapEnsemble,
    base: &FitResult,
    labels: &[String],
) -> Result<()> {
    writeln!(w, "node,{},scale,scale_lower,scale_upper,shape,shape_lower,shape_upper", labels.join(","))
        .map_err(io)?;
    let sb = ens.scale_band(2.5, 97.5);
    let xb = ens.shape_band(2.5, 97.5);
    let shape = base.theta.shape_values();
    for (k, x) in base.nodes.iter().enumerate() {
        let coords: Vec<String> = x.iter().map(f64::to_string).collect();
        let (sl, su) = sb.get(k).copied().unwrap_or((f64::NAN, f64::NAN));
        let (xl, xu) = xb.get(k).copied().unwrap_or((f64::NAN, f64::NAN));
        writeln!(w, "{k},{},{},{sl},{su},{},{xl},{xu}", coords.join(","), base.theta.scale[k], shape[k])
            .map_err(io)?;
    }
    Ok(())
}

/// Quantile surfaces side by side, one column per probability.
pub fn write_quantiles<W: Write>(mut w: W, grids: &[GridField], labels: &[String]) -> Result<()> {
    let Some(first) = grids.first() else {
        return Ok(());
    };
    let probs: Vec<String> = grids
        .iter()
        .map(|g| format!("q_{}", g.metadata.get("p").map(|v| v.to_string()).unwrap_or_default()))
        .collect();
    writeln!(w, "{},{}", labels[..first.dims].join(","), probs.join(",")).map_err(io)?;
    for (i, x) in first.points().enumerate() {
        let coords: Vec<String> = x[..first.dims].iter().map(f64::to_string).collect();
        let vals: Vec<String> = grids.iter().map(|g| g.values[i].to_string()).collect();
        writeln!(w, "{},{}", coords.join(","), vals.join(",")).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ppl_core::geometry::NodeSet;

    #[test]
    fn six_irregular_nodes_give_twelve_bins() {
        let ns = NodeSet::from_vectors(&[
            vec![30.0, 40.0],
            vec![150.0, 60.0],
            vec![270.0, 30.0],
            vec![90.0, 200.0],
            vec![210.0, 250.0],
            vec![330.0, 190.0],
        ])
        .unwrap();
        let tri = Triangulation::build_irregular_grid(&ns).unwrap();
        let v = TriangulationView::new(&tri);
        assert_eq!(v.bins.len(), 12);
        assert_eq!(v.kind, "irregular");
        let area: f64 = v.bins.iter().map(|b| b.measure).sum();
        assert!((area - 360.0 * 360.0).abs() < 1e-6);
        let back: TriangulationView = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn regular_view_lists_marginal_nodes() {
        let tri = Triangulation::build_regular_grid(&[vec![0.0, 180.0], vec![0.0, 120.0, 240.0]]).unwrap();
        let v = TriangulationView::new(&tri);
        assert_eq!(v.dim, 2);
        assert_eq!(v.kind, "regular");
        assert_eq!(v.nodes.len(), 12);
        assert_eq!(v.bins.len(), 24);
        assert!(v.bins.iter().all(|b| b.nodes.len() == 3 && (b.measure - 360.0 * 360.0 / 24.0).abs() < 1e-9));
    }
}
