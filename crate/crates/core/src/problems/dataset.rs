use std::path::Path;

use rand::seq::SliceRandom;

use super::{rng, streams};
use crate::error::{Error, Result};

/// Dense binary-classification data; labels are stored as 0.0 / 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<f64>,
    dim: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || features.len() != labels.len() * dim {
            return Err(Error::Dataset(format!(
                "{} feature values do not form {} rows of width {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 0.0 && y != 1.0) {
            return Err(Error::Dataset(format!("label {bad} is not 0 or 1")));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("dataset features"));
        }
        Ok(Self { features, labels, dim })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    fn subset(&self, idx: &[usize]) -> Self {
        Self {
            features: idx.iter().flat_map(|&i| self.row(i).iter().copied()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
        }
    }

    /// Seeded shuffle into `(train, validation)`.
    pub fn split(&self, valid_frac: f64, seed: u64) -> (Self, Self) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut rng(seed, streams::SPLIT));
        let n_valid = (valid_frac * self.len() as f64).round() as usize;
        let (valid, train) = idx.split_at(n_valid);
        (self.subset(train), self.subset(valid))
    }
}

/// Reads rows of `features..., label`. Labels may be `0/1` or `-1/1`; a
/// non-numeric first row is treated as a header.
pub fn load_csv_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if line == 0 => continue,
            Err(e) => return Err(Error::Dataset(format!("{}:{}: {e}", path.display(), line + 1))),
        };
        if values.len() < 2 {
            return Err(Error::Dataset(format!(
                "{}:{}: need at least one feature and a label",
                path.display(),
                line + 1
            )));
        }
        let w = *width.get_or_insert(values.len());
        if values.len() != w {
            return Err(Error::Dataset(format!(
                "{}:{}: expected {w} columns, found {}",
                path.display(),
                line + 1,
                values.len()
            )));
        }
        let (x, y) = values.split_at(w - 1);
        features.extend_from_slice(x);
        labels.push(if y[0] > 0.0 { 1.0 } else { 0.0 });
    }
    let width = width.ok_or_else(|| Error::Dataset(format!("{}: no rows", path.display())))?;
    Dataset::new(features, labels, width - 1)
}
