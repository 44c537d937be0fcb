use crate::error::{invalid, Result};
use crate::Coord;

use super::Triangulation;

/// A piecewise-linear field (GP scale or shape) given by one value per real node.
#[derive(Debug, Clone)]
pub struct ParameterField<'a> {
    tri: &'a Triangulation,
    values: Vec<f64>,
}

impl<'a> ParameterField<'a> {
    pub fn new(tri: &'a Triangulation, values: Vec<f64>) -> Result<Self> {
        if values.len() != tri.node_count() {
            return Err(invalid(format!(
                "field has {} values for {} nodes",
                values.len(),
                tri.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("field values must be finite"));
        }
        Ok(Self { tri, values })
    }

    pub fn triangulation(&self) -> &Triangulation {
        self.tri
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolate(&self, x: &Coord) -> f64 {
        self.tri.interpolate(&self.values, x)
    }

    pub fn bin_gradients(&self) -> Vec<[f64; 2]> {
        self.tri.bin_gradients(&self.values)
    }
}
