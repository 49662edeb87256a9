//! Score-guided defenses: feature selection plans and mask plans.
//!
//! Selection (option A) drops perturb-able features before training. Masking
//! (option B) keeps the model's input dimensionality and overwrites masked
//! positions with neutral values; B1 masks at training and inference, B2 at
//! inference only.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::score::{PsClass, ScoreReport};

/// Which classes a selection plan keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionPolicy {
    /// Keep only Low-class features.
    GreenOnly,
    /// Keep Low- and Medium-class features.
    GreenYellow,
}

/// A keep-set of feature indices plus the dropped complement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionPlan {
    pub policy: SelectionPolicy,
    pub keep_indices: Vec<usize>,
    pub keep_names: Vec<String>,
    pub dropped: Vec<(String, PsClass)>,
}

/// Which classes a mask plan masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskScope {
    /// Mask High-class features only.
    HighOnly,
    /// Mask High- and Medium-class features.
    HighAndMedium,
}

/// Whether masking is applied when fitting the model or only at inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskPhase {
    TrainAndInference,
    InferenceOnly,
}

/// How neutral replacement values are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeutralStrategy {
    /// Per-feature mean of the training split.
    TrainMean,
    /// Per-feature median of the training split (lower-middle on even counts).
    TrainMedian,
    /// One constant for every feature (0.5 for min-max models, 0 for standardized).
    Constant(f64),
}

/// Mask vector plus neutral values, ready to apply to any matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskPlan {
    pub scope: MaskScope,
    pub phase: MaskPhase,
    pub strategy: NeutralStrategy,
    /// 0 = masked, 1 = passthrough.
    pub mask: Vec<u8>,
    pub neutral: Vec<f64>,
    pub feature_names: Vec<String>,
}

impl MaskPlan {
    /// Indices of masked features.
    pub fn masked_indices(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m == 0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Builds a selection plan from a score report.
pub fn selection_plan(report: &ScoreReport, policy: SelectionPolicy) -> Result<SelectionPlan> {
    if report.breakdowns.is_empty() {
        return Err(Error::EmptyInput("selection over empty report".into()));
    }
    let keeps = |class: PsClass| match policy {
        SelectionPolicy::GreenOnly => class == PsClass::Low,
        SelectionPolicy::GreenYellow => class != PsClass::High,
    };
    let mut keep_indices = Vec::new();
    let mut keep_names = Vec::new();
    let mut dropped = Vec::new();
    for (i, b) in report.breakdowns.iter().enumerate() {
        if keeps(b.class_label) {
            keep_indices.push(i);
            keep_names.push(b.feature.clone());
        } else {
            dropped.push((b.feature.clone(), b.class_label));
        }
    }
    if keep_indices.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    Ok(SelectionPlan {
        policy,
        keep_indices,
        keep_names,
        dropped,
    })
}

/// Mask vector for a report: 0 exactly on the scoped classes.
pub fn mask_vector(report: &ScoreReport, scope: MaskScope) -> Vec<u8> {
    report
        .breakdowns
        .iter()
        .map(|b| {
            let masked = match scope {
                MaskScope::HighOnly => b.class_label == PsClass::High,
                MaskScope::HighAndMedium => b.class_label != PsClass::Low,
            };
            u8::from(!masked)
        })
        .collect()
}

/// Per-feature neutral values from the training split (in model-input space,
/// so pass the scaled training matrix).
pub fn neutral_values(train: &Dataset, strategy: NeutralStrategy) -> Result<Vec<f64>> {
    if train.n_rows() == 0 {
        return Err(Error::EmptyInput("neutral values of empty dataset".into()));
    }
    let values = match strategy {
        NeutralStrategy::TrainMean => train
            .x
            .columns()
            .into_iter()
            .map(|c| c.sum() / c.len() as f64)
            .collect(),
        NeutralStrategy::TrainMedian => train
            .x
            .columns()
            .into_iter()
            .map(|c| {
                let mut sorted = c.to_vec();
                sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
                sorted[(sorted.len() - 1) / 2]
            })
            .collect(),
        NeutralStrategy::Constant(c) => vec![c; train.n_features()],
    };
    Ok(values)
}

/// Convenience constructor assembling a full mask plan.
pub fn mask_plan(
    report: &ScoreReport,
    train: &Dataset,
    scope: MaskScope,
    phase: MaskPhase,
    strategy: NeutralStrategy,
) -> Result<MaskPlan> {
    if report.breakdowns.len() != train.n_features() {
        return Err(Error::AlignmentMismatch(format!(
            "report covers {} features, dataset has {}",
            report.breakdowns.len(),
            train.n_features()
        )));
    }
    Ok(MaskPlan {
        scope,
        phase,
        strategy,
        mask: mask_vector(report, scope),
        neutral: neutral_values(train, strategy)?,
        feature_names: train.feature_names.clone(),
    })
}

/// Replaces masked columns with their neutral values; the input is untouched.
pub fn apply_mask(mask: &[u8], neutral: &[f64], x: &Array2<f64>) -> Result<Array2<f64>> {
    if mask.len() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            got: mask.len(),
        });
    }
    if neutral.len() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            got: neutral.len(),
        });
    }
    let mut out = x.clone();
    for (j, mut col) in out.columns_mut().into_iter().enumerate() {
        if mask[j] == 0 {
            col.fill(neutral[j]);
        }
    }
    Ok(out)
}

/// Restricts a dataset to the plan's keep-set, preserving column order.
pub fn apply_selection(plan: &SelectionPlan, dataset: &Dataset) -> Result<Dataset> {
    for &idx in &plan.keep_indices {
        if idx >= dataset.n_features() {
            return Err(Error::InvalidParameter(format!(
                "keep index {idx} out of range for {} features",
                dataset.n_features()
            )));
        }
    }
    let x = dataset.x.select(ndarray::Axis(1), &plan.keep_indices);
    let names = plan
        .keep_indices
        .iter()
        .map(|&i| dataset.feature_names[i].clone())
        .collect();
    Dataset::new(names, x, dataset.y.clone())
}
