//! CSV ingestion, numeric coercion, splitting, scaling, and class balancing.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fully numeric flow dataset: rows are flows, columns are features,
/// labels are 0 (benign) / 1 (malicious).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub x: Array2<f64>,
    pub y: Array1<u8>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, x: Array2<f64>, y: Array1<u8>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        if x.ncols() != feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: feature_names.len(),
                got: x.ncols(),
            });
        }
        Ok(Self {
            feature_names,
            x,
            y,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn column(&self, idx: usize) -> Vec<f64> {
        self.x.column(idx).to_vec()
    }

    /// New dataset containing the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        let x = self.x.select(Axis(0), indices);
        let y = Array1::from_iter(indices.iter().map(|&i| self.y[i]));
        Dataset {
            feature_names: self.feature_names.clone(),
            x,
            y,
        }
    }
}

/// What happened during ingestion: rows read and dropped, per-column
/// coercion failures, and the label encoding that was applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropReport {
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub per_column_failures: BTreeMap<String, usize>,
    pub label_encoding: BTreeMap<String, u8>,
}

/// Loads a CSV flow dataset, coercing every feature column to finite f64.
///
/// Rows containing any non-coercible, missing, or non-finite value are
/// dropped and accounted for in the report. Labels are encoded 0/1: the
/// `benign_label` (when present in the data) maps to 0 and everything else
/// to 1; without a benign label the alphabetically first label maps to 0.
pub fn load_csv<P: AsRef<Path>>(
    path: P,
    label_column: &str,
    benign_label: Option<&str>,
) -> Result<(Dataset, DropReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())?;
    let headers: Vec<String> = reader.headers()?.iter().map(|s| s.to_string()).collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels_raw: Vec<String> = Vec::new();
    let mut rows_read = 0usize;
    let mut rows_dropped = 0usize;
    let mut per_column_failures: BTreeMap<String, usize> = BTreeMap::new();

    for record in reader.records() {
        let record = record?;
        rows_read += 1;
        let mut row = Vec::with_capacity(feature_names.len());
        let mut ok = true;
        let mut feature_pos = 0usize;
        for (i, field) in record.iter().enumerate() {
            if i == label_idx {
                continue;
            }
            match coerce_numeric(field) {
                Some(v) => row.push(v),
                None => {
                    *per_column_failures
                        .entry(feature_names[feature_pos].clone())
                        .or_insert(0) += 1;
                    ok = false;
                }
            }
            feature_pos += 1;
        }
        if ok && record.len() == headers.len() {
            rows.push(row);
            labels_raw.push(record.get(label_idx).unwrap_or("").to_string());
        } else {
            rows_dropped += 1;
        }
    }

    if rows.is_empty() {
        return Err(Error::NoUsableRows);
    }

    let mut distinct: Vec<String> = labels_raw.clone();
    distinct.sort();
    distinct.dedup();
    let zero_label = match benign_label {
        Some(b) if distinct.iter().any(|l| l == b) => b.to_string(),
        _ => distinct[0].clone(),
    };
    let mut label_encoding = BTreeMap::new();
    for label in &distinct {
        let code = if *label == zero_label { 0 } else { 1 };
        label_encoding.insert(label.clone(), code);
    }
    let y = Array1::from_iter(labels_raw.iter().map(|l| label_encoding[l]));

    let n_cols = feature_names.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let x = Array2::from_shape_vec((flat.len() / n_cols, n_cols), flat)
        .expect("row lengths verified during parse");

    let dataset = Dataset::new(feature_names, x, y)?;
    let report = DropReport {
        rows_read,
        rows_dropped,
        per_column_failures,
        label_encoding,
    };
    Ok((dataset, report))
}

// Finite values only; "inf"/"NaN" parse as floats but are not usable features.
fn coerce_numeric(field: &str) -> Option<f64> {
    let trimmed = field.trim();
    if trimmed.is_empty() {
        return None;
    }
    match trimmed.parse::<f64>() {
        Ok(v) if v.is_finite() => Some(v),
        _ => None,
    }
}

/// Deterministic shuffled train/test split; `|test| = round(test_fraction * n)`.
pub fn split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test_fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let n = dataset.n_rows();
    let n_test = (test_fraction * n as f64).round() as usize;
    if n_test == 0 {
        return Err(Error::DegenerateSplit("test"));
    }
    if n_test >= n {
        return Err(Error::DegenerateSplit("train"));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let (test_idx, train_idx) = indices.split_at(n_test);
    Ok((dataset.select_rows(train_idx), dataset.select_rows(test_idx)))
}

/// Scaling method fit on training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalerMethod {
    Standardize,
    MinMax,
}

/// Per-feature scaling parameters.
///
/// Standardize stores (mean, population std); MinMax stores (min, max).
/// Constant features carry std = 1 so scaling maps them to 0 instead of NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub method: ScalerMethod,
    pub per_feature_a: Vec<f64>,
    pub per_feature_b: Vec<f64>,
}

/// Fits scaling parameters on the training split only.
pub fn fit_scaler(train: &Dataset, method: ScalerMethod) -> Result<ScalerParams> {
    if train.n_rows() == 0 {
        return Err(Error::EmptyInput("fit_scaler on empty dataset".into()));
    }
    let n = train.n_rows() as f64;
    let mut a = Vec::with_capacity(train.n_features());
    let mut b = Vec::with_capacity(train.n_features());
    for col in train.x.columns() {
        match method {
            ScalerMethod::Standardize => {
                let mean = col.sum() / n;
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                let std = var.sqrt();
                a.push(mean);
                b.push(if std > 0.0 { std } else { 1.0 });
            }
            ScalerMethod::MinMax => {
                let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                a.push(min);
                b.push(max);
            }
        }
    }
    Ok(ScalerParams {
        method,
        per_feature_a: a,
        per_feature_b: b,
    })
}

/// Applies train-fit parameters to any dataset with the same columns.
///
/// MinMax does not clip out-of-range values; test rows and adversarial
/// perturbations keep their geometry.
pub fn apply_scaler(params: &ScalerParams, dataset: &Dataset) -> Result<Dataset> {
    if params.per_feature_a.len() != dataset.n_features() {
        return Err(Error::DimensionMismatch {
            expected: params.per_feature_a.len(),
            got: dataset.n_features(),
        });
    }
    let mut x = dataset.x.clone();
    for (j, mut col) in x.columns_mut().into_iter().enumerate() {
        let a = params.per_feature_a[j];
        let b = params.per_feature_b[j];
        match params.method {
            ScalerMethod::Standardize => col.mapv_inplace(|v| (v - a) / b),
            ScalerMethod::MinMax => {
                let range = b - a;
                if range == 0.0 {
                    col.fill(0.0);
                } else {
                    col.mapv_inplace(|v| (v - a) / range);
                }
            }
        }
    }
    Dataset::new(dataset.feature_names.clone(), x, dataset.y.clone())
}

/// Randomly downsamples the majority class (without replacement, seeded)
/// until both classes have equal counts. Surviving rows keep their
/// original order.
pub fn undersample(train: &Dataset, seed: u64) -> Result<Dataset> {
    let pos: Vec<usize> = (0..train.n_rows()).filter(|&i| train.y[i] == 1).collect();
    let neg: Vec<usize> = (0..train.n_rows()).filter(|&i| train.y[i] == 0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass);
    }
    let (majority, minority) = if pos.len() > neg.len() {
        (pos, neg)
    } else if neg.len() > pos.len() {
        (neg, pos)
    } else {
        return Ok(train.clone());
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = majority;
    shuffled.shuffle(&mut rng);
    let mut keep: Vec<usize> = shuffled.into_iter().take(minority.len()).collect();
    keep.extend(minority);
    keep.sort_unstable();
    Ok(train.select_rows(&keep))
}
