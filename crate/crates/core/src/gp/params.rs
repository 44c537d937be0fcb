use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Penalty archetypes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    /// Stationary shape; one scale penalty shared across dimensions.
    A,
    /// Piecewise-linear shape; one shared scale penalty and one shared shape penalty.
    B,
    /// Stationary shape; a separate scale penalty per dimension.
    C,
}

impl Case {
    pub fn stationary_shape(self) -> bool {
        !matches!(self, Case::B)
    }

    /// Number of free penalty components.
    pub fn components(self, dim: usize) -> usize {
        match self {
            Case::A => 1,
            Case::B => 2,
            Case::C => dim,
        }
    }
}

impl std::str::FromStr for Case {
    type Err = crate::PplError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Case::A),
            "B" => Ok(Case::B),
            "C" => Ok(Case::C),
            other => Err(invalid(format!("unknown case `{other}` (expected A, B or C)"))),
        }
    }
}

/// Roughness penalty coefficients `lambda_{sigma,d}` and `lambda_{xi,d}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyVector {
    pub case: Case,
    /// One coefficient per dimension for the scale field.
    pub scale: Vec<f64>,
    /// One coefficient per dimension for the shape field; empty when the shape is stationary.
    pub shape: Vec<f64>,
}

impl PenaltyVector {
    /// Expand the free components of `case` into a full penalty vector.
    pub fn from_components(case: Case, dim: usize, comps: &[f64]) -> Result<Self> {
        if comps.len() != case.components(dim) {
            return Err(invalid(format!(
                "case {case:?} in {dim}-D needs {} penalty components, got {}",
                case.components(dim),
                comps.len()
            )));
        }
        if comps.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return Err(invalid("penalty components must be finite and non-negative"));
        }
        Ok(match case {
            Case::A => Self { case, scale: vec![comps[0]; dim], shape: Vec::new() },
            Case::B => Self { case, scale: vec![comps[0]; dim], shape: vec![comps[1]; dim] },
            Case::C => Self { case, scale: comps.to_vec(), shape: Vec::new() },
        })
    }

    pub fn case_a(dim: usize, lambda: f64) -> Self {
        Self::from_components(Case::A, dim, &[lambda]).expect("valid case A penalty")
    }

    pub fn case_b(dim: usize, scale: f64, shape: f64) -> Self {
        Self::from_components(Case::B, dim, &[scale, shape]).expect("valid case B penalty")
    }

    pub fn zero(case: Case, dim: usize) -> Self {
        Self::from_components(case, dim, &vec![0.0; case.components(dim)]).expect("zero penalty")
    }

    /// The free components, in the order accepted by [`PenaltyVector::from_components`].
    pub fn components(&self) -> Vec<f64> {
        match self.case {
            Case::A => vec![self.scale[0]],
            Case::B => vec![self.scale[0], self.shape[0]],
            Case::C => self.scale.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }
}

/// Box constraint on the shape parameter. The default realises `-0.5 <= xi < 0`
/// as `[-0.5, -1e-6]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeBounds {
    pub lower: f64,
    pub upper: f64,
}

impl Default for ShapeBounds {
    fn default() -> Self {
        Self { lower: -0.5, upper: -1e-6 }
    }
}

impl ShapeBounds {
    /// Bounds allowing moderately heavy tails, for non-metocean data.
    pub fn relaxed() -> Self {
        Self { lower: -0.5, upper: 0.5 }
    }

    pub fn clamp(&self, xi: f64) -> f64 {
        xi.clamp(self.lower, self.upper)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower < self.upper) || self.lower < -1.0 {
            return Err(invalid(format!("invalid shape bounds [{}, {}]", self.lower, self.upper)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeParam {
    Stationary(f64),
    Field(Vec<f64>),
}

/// Node values of the scale and shape fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub scale: Vec<f64>,
    pub shape: ShapeParam,
}

impl Theta {
    pub fn node_count(&self) -> usize {
        self.scale.len()
    }

    /// Shape value at every node (a stationary shape is repeated).
    pub fn shape_values(&self) -> Vec<f64> {
        match &self.shape {
            ShapeParam::Stationary(x) => vec![*x; self.scale.len()],
            ShapeParam::Field(v) => v.clone(),
        }
    }

    pub fn is_stationary_shape(&self) -> bool {
        matches!(self.shape, ShapeParam::Stationary(_))
    }

    pub fn validate(&self, bounds: &ShapeBounds) -> Result<()> {
        if self.scale.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(invalid("scale node values must be positive and finite"));
        }
        if self.shape_values().iter().any(|&x| x < bounds.lower || x > bounds.upper) {
            return Err(invalid("shape node values outside the shape bounds"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_expansion() {
        let p = PenaltyVector::from_components(Case::C, 2, &[1.0, 2.0]).unwrap();
        assert_eq!(p.scale, vec![1.0, 2.0]);
        assert!(p.shape.is_empty());
        let p = PenaltyVector::from_components(Case::B, 2, &[3.0, 4.0]).unwrap();
        assert_eq!(p.shape, vec![4.0, 4.0]);
        assert_eq!(p.components(), vec![3.0, 4.0]);
        assert!(PenaltyVector::from_components(Case::A, 1, &[-1.0]).is_err());
        assert!(PenaltyVector::from_components(Case::A, 1, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn cases_a_and_c_coincide_in_1d() {
        let a = PenaltyVector::from_components(Case::A, 1, &[5.0]).unwrap();
        let c = PenaltyVector::from_components(Case::C, 1, &[5.0]).unwrap();
        assert_eq!(a.scale, c.scale);
        assert_eq!(a.shape, c.shape);
    }
}
