use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::{Coord, PERIOD};

/// Values on a regular grid over `[0, 360)^D`, stored row-major (first
/// dimension slowest). Grid point `i` along dimension `d` sits at
/// `origin[d] + i * 360 / resolution[d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub dims: usize,
    pub resolution: Vec<usize>,
    pub origin: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl GridField {
    pub const MIN_RESOLUTION: usize = 8;

    /// Default resolutions: 360 points in 1-D, 72 x 72 in 2-D.
    pub fn default_resolution(dim: usize) -> Vec<usize> {
        if dim == 1 {
            vec![360]
        } else {
            vec![72, 72]
        }
    }

    pub fn check_resolution(dim: usize, resolution: &[usize]) -> Result<()> {
        if resolution.len() != dim {
            return Err(invalid(format!(
                "grid resolution has {} entries for dimension {dim}",
                resolution.len()
            )));
        }
        if resolution.iter().any(|&r| r < Self::MIN_RESOLUTION) {
            return Err(invalid(format!(
                "grid resolution must be at least {} per dimension",
                Self::MIN_RESOLUTION
            )));
        }
        Ok(())
    }

    /// Evaluate `f` at every grid point (in parallel, results in grid order).
    pub fn from_fn<F>(dim: usize, resolution: &[usize], f: F) -> Result<Self>
    where
        F: Fn(&Coord) -> f64 + Sync + Send,
    {
        Self::check_resolution(dim, resolution)?;
        let shape = Self {
            dims: dim,
            resolution: resolution.to_vec(),
            origin: vec![0.0; dim],
            values: Vec::new(),
            metadata: BTreeMap::new(),
        };
        let n = shape.len();
        let values = crate::par::map_range(n, |i| f(&shape.point(i)));
        Ok(Self { values, ..shape })
    }

    /// A field with the same layout and new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.len());
        Self {
            values,
            metadata: self.metadata.clone(),
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, d: usize) -> f64 {
        PERIOD / self.resolution[d] as f64
    }

    /// Coordinates of flat grid index `i`.
    pub fn point(&self, i: usize) -> Coord {
        if self.dims == 1 {
            [self.origin[0] + i as f64 * self.spacing(0), 0.0]
        } else {
            let r1 = self.resolution[1];
            [
                self.origin[0] + (i / r1) as f64 * self.spacing(0),
                self.origin[1] + (i % r1) as f64 * self.spacing(1),
            ]
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Trapezoidal integral over one period (the periodic trapezoid rule is a plain sum).
    pub fn integral(&self) -> f64 {
        let cell: f64 = (0..self.dims).map(|d| self.spacing(d)).product();
        self.values.iter().sum::<f64>() * cell
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn set_meta(&mut self, key: &str, value: impl Serialize) {
        self.metadata
            .insert(key.to_string(), serde_json::to_value(value).expect("metadata serialises"));
    }

    /// CSV with one row per grid point: coordinates then value.
    pub fn write_csv<W: Write>(&self, writer: W, labels: &[String], value_label: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.dims)
            .map(|d| labels.get(d).cloned().unwrap_or_else(|| format!("x{}", d + 1)))
            .collect();
        header.push(value_label.to_string());
        w.write_record(&header)?;
        for (i, v) in self.values.iter().enumerate() {
            let p = self.point(i);
            let mut rec: Vec<String> = p[..self.dims].iter().map(|c| c.to_string()).collect();
            rec.push(v.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
