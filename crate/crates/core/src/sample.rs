//! Sample ingestion: storm-peak samples, sea-state series and storm-peak declustering.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, PplError, Result};
use crate::{wrap, Coord, PERIOD};

/// Column mapping for CSV input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    /// Covariate column names, one per dimension (1 or 2).
    pub covariates: Vec<String>,
    /// Response column name (storm peak Hs, metres).
    pub response: String,
}

impl ColumnSchema {
    pub fn new<S: Into<String>>(covariates: Vec<S>, response: S) -> Self {
        Self {
            covariates: covariates.into_iter().map(Into::into).collect(),
            response: response.into(),
        }
    }
}

/// Storm-peak observations on the periodic covariate domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StormPeakSample {
    dim: usize,
    labels: Vec<String>,
    x: Vec<Coord>,
    y: Vec<f64>,
}

impl StormPeakSample {
    /// Build a validated sample. Covariates are reduced modulo 360.
    pub fn new(labels: Vec<String>, x: Vec<Coord>, y: Vec<f64>) -> Result<Self> {
        let dim = labels.len();
        if dim != 1 && dim != 2 {
            return Err(invalid(format!("covariate dimension must be 1 or 2, got {dim}")));
        }
        if x.len() != y.len() {
            return Err(invalid("covariate and response lengths differ"));
        }
        if x.is_empty() {
            return Err(PplError::EmptySample("no observations".into()));
        }
        let mut xs = Vec::with_capacity(x.len());
        for (i, (c, v)) in x.iter().zip(&y).enumerate() {
            if !v.is_finite() || c[..dim].iter().any(|a| !a.is_finite()) {
                return Err(PplError::Parse {
                    row: i + 1,
                    message: "non-finite value".into(),
                });
            }
            let mut w = [0.0; 2];
            for d in 0..dim {
                w[d] = wrap(c[d]);
            }
            xs.push(w);
        }
        Ok(Self { dim, labels, x: xs, y })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn covariates(&self) -> &[Coord] {
        &self.x
    }

    pub fn responses(&self) -> &[f64] {
        &self.y
    }

    /// Index of the covariate with the given label.
    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Keep only the named covariates, in the given order.
    pub fn project(&self, labels: &[&str]) -> Result<Self> {
        let idx: Vec<usize> = labels
            .iter()
            .map(|l| {
                self.label_index(l)
                    .ok_or_else(|| PplError::Schema(format!("unknown covariate `{l}`")))
            })
            .collect::<Result<_>>()?;
        let x = self
            .x
            .iter()
            .map(|c| {
                let mut p = [0.0; 2];
                for (k, &d) in idx.iter().enumerate() {
                    p[k] = c[d];
                }
                p
            })
            .collect();
        Self::new(labels.iter().map(|s| s.to_string()).collect(), x, self.y.clone())
    }

    /// Sub-sample by observation indices (repeats allowed, as in bootstrap resamples).
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            dim: self.dim,
            labels: self.labels.clone(),
            x: indices.iter().map(|&i| self.x[i]).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Write as CSV with columns `covariates..., y`.
    pub fn write_csv<W: Write>(&self, writer: W, response_label: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.labels.iter().map(String::as_str).collect();
        header.push(response_label);
        w.write_record(&header)?;
        for (c, y) in self.x.iter().zip(&self.y) {
            let mut rec: Vec<String> = c[..self.dim].iter().map(|v| v.to_string()).collect();
            rec.push(y.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| PplError::Schema(format!("missing column `{name}`")))
}

fn parse_field(rec: &csv::StringRecord, col: usize, row: usize, name: &str) -> Result<f64> {
    let raw = rec.get(col).unwrap_or("").trim();
    let v: f64 = raw.parse().map_err(|_| PplError::Parse {
        row,
        message: format!("column `{name}`: cannot parse `{raw}` as a number"),
    })?;
    if !v.is_finite() {
        return Err(PplError::Parse {
            row,
            message: format!("column `{name}`: non-finite value"),
        });
    }
    Ok(v)
}

/// Read a storm-peak sample from CSV. Rows are numbered from 1 (the first data row).
pub fn read_sample<R: Read>(reader: R, schema: &ColumnSchema) -> Result<StormPeakSample> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let xcols: Vec<usize> = schema
        .covariates
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<_>>()?;
    let ycol = column_index(&headers, &schema.response)?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let mut c = [0.0; 2];
        for (d, (&col, name)) in xcols.iter().zip(&schema.covariates).enumerate() {
            c[d] = parse_field(&rec, col, row, name)?;
        }
        x.push(c);
        y.push(parse_field(&rec, ycol, row, &schema.response)?);
    }
    if x.is_empty() {
        return Err(PplError::EmptySample("CSV contains no data rows".into()));
    }
    StormPeakSample::new(schema.covariates.clone(), x, y)
}

/// Load a storm-peak sample from a CSV file.
pub fn load_sample(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<StormPeakSample> {
    let f = std::fs::File::open(path.as_ref())?;
    read_sample(f, schema)
}

/// Map a calendar day of year onto the standardised 360-day year.
pub fn standardise_day(day_of_year: f64, year_length: f64) -> f64 {
    wrap(day_of_year * PERIOD / year_length)
}

/// One sea state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeaState {
    pub timestamp: f64,
    pub hs: f64,
    pub direction: f64,
    pub season: f64,
}

/// Column names for sea-state CSV input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeaStateSchema {
    pub timestamp: String,
    pub hs: String,
    pub direction: String,
    pub season: String,
}

impl Default for SeaStateSchema {
    fn default() -> Self {
        Self {
            timestamp: "time".into(),
            hs: "hs".into(),
            direction: "direction".into(),
            season: "season".into(),
        }
    }
}

/// Time-ordered sea-state records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeaStateSeries {
    records: Vec<SeaState>,
}

impl SeaStateSeries {
    /// Validate and build a series. Direction and season are reduced modulo 360.
    pub fn new(records: Vec<SeaState>) -> Result<Self> {
        let mut out = Vec::with_capacity(records.len());
        let mut last = f64::NEG_INFINITY;
        for (i, r) in records.into_iter().enumerate() {
            let row = i + 1;
            if !(r.timestamp.is_finite() && r.direction.is_finite() && r.season.is_finite()) {
                return Err(PplError::Parse { row, message: "non-finite value".into() });
            }
            if !r.hs.is_finite() || r.hs < 0.0 {
                return Err(PplError::Parse {
                    row,
                    message: format!("hs must be finite and non-negative, got {}", r.hs),
                });
            }
            if r.timestamp <= last {
                return Err(PplError::Parse {
                    row,
                    message: "timestamps must be strictly increasing".into(),
                });
            }
            last = r.timestamp;
            out.push(SeaState {
                direction: wrap(r.direction),
                season: wrap(r.season),
                ..r
            });
        }
        if out.is_empty() {
            return Err(PplError::EmptySample("sea-state series is empty".into()));
        }
        Ok(Self { records: out })
    }

    pub fn records(&self) -> &[SeaState] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The series viewed as a (direction, season) sample of all sea states, used
    /// to estimate a peak-picking threshold.
    pub fn as_sample(&self) -> Result<StormPeakSample> {
        StormPeakSample::new(
            vec!["direction".into(), "season".into()],
            self.records.iter().map(|r| [r.direction, r.season]).collect(),
            self.records.iter().map(|r| r.hs).collect(),
        )
    }
}

/// Read a sea-state series from CSV.
pub fn read_sea_states<R: Read>(reader: R, schema: &SeaStateSchema) -> Result<SeaStateSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols = [
        (column_index(&headers, &schema.timestamp)?, &schema.timestamp),
        (column_index(&headers, &schema.hs)?, &schema.hs),
        (column_index(&headers, &schema.direction)?, &schema.direction),
        (column_index(&headers, &schema.season)?, &schema.season),
    ];
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let v: Vec<f64> = cols
            .iter()
            .map(|(c, n)| parse_field(&rec, *c, i + 1, n))
            .collect::<Result<_>>()?;
        records.push(SeaState {
            timestamp: v[0],
            hs: v[1],
            direction: v[2],
            season: v[3],
        });
    }
    SeaStateSeries::new(records)
}

/// Decluster a sea-state series into storm peaks.
///
/// Every maximal run of consecutive records with `hs` strictly above the picking
/// threshold is one storm. The storm peak is the run maximum, taken at its
/// earliest occurrence, with the (direction, season) covariates of that record.
pub fn extract_storm_peaks<F>(series: &SeaStateSeries, picking_threshold: F) -> Result<StormPeakSample>
where
    F: Fn(&Coord) -> f64,
{
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut current: Option<(f64, Coord)> = None;
    for r in &series.records {
        let c = [r.direction, r.season];
        if r.hs > picking_threshold(&c) {
            match current {
                Some((peak, _)) if r.hs <= peak => {}
                _ => current = Some((r.hs, c)),
            }
        } else if let Some((peak, pc)) = current.take() {
            x.push(pc);
            y.push(peak);
        }
    }
    if let Some((peak, pc)) = current {
        x.push(pc);
        y.push(peak);
    }
    if y.is_empty() {
        return Err(PplError::EmptySample(
            "no sea state exceeds the peak-picking threshold".into(),
        ));
    }
    StormPeakSample::new(vec!["direction".into(), "season".into()], x, y)
}
