//! Perturb-ability scoring engine.
//!
//! Every feature gets five field scores in [0, 1]:
//!
//! * field 1 — critical protocol / identifier / functional-integrity flags
//!   zero the feature outright;
//! * field 2 — cardinality, linearly interpolated between the MinR and MaxR
//!   thresholds, zero below MinR;
//! * field 3 — high-correlation count, decaying exponentially toward 0.5;
//! * field 4 — attacker reachability: backward/interflow features score by
//!   how many forward features they are correlated with;
//! * field 5 — flow-wide aggregates are halved.
//!
//! The total is the geometric mean of the five fields, so a single zero
//! field pins the total to exactly zero. Features classify as Low at total
//! zero, High at or above tau, Medium in between.

use serde::{Deserialize, Serialize};

use crate::catalog::{FeatureMetadata, ThresholdConfig};
use crate::error::{Error, Result};

/// Perturb-ability class of one feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PsClass {
    Low,
    Medium,
    High,
}

impl std::fmt::Display for PsClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PsClass::Low => f.write_str("Low"),
            PsClass::Medium => f.write_str("Medium"),
            PsClass::High => f.write_str("High"),
        }
    }
}

/// Data-derived inputs for one feature's score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsInputs {
    /// Effective cardinality (declared or distinct count on the training split).
    pub pv: u64,
    /// Count of highly correlated other features.
    pub cf: u32,
    /// Count of highly correlated forward features.
    pub forward_corr_count: u32,
    /// Annotation snapshot the score was computed from.
    pub flags: FeatureMetadata,
}

/// Five field scores, their geometric mean, and the assigned class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsBreakdown {
    pub feature: String,
    pub ps1: f64,
    pub ps2: f64,
    pub ps3: f64,
    pub ps4: f64,
    pub ps5: f64,
    pub ps_total: f64,
    pub class_label: PsClass,
    pub inputs: PsInputs,
}

/// Full score report: one breakdown per feature plus the threshold snapshot
/// and a fixed-width histogram of the totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub breakdowns: Vec<PsBreakdown>,
    pub thresholds: ThresholdConfig,
    /// (bin lower bound, count) pairs at width 0.05 over [0, 1].
    pub histogram: Vec<(f64, u32)>,
}

impl ScoreReport {
    /// (low, medium, high) feature counts.
    pub fn class_counts(&self) -> (usize, usize, usize) {
        let mut low = 0;
        let mut medium = 0;
        let mut high = 0;
        for b in &self.breakdowns {
            match b.class_label {
                PsClass::Low => low += 1,
                PsClass::Medium => medium += 1,
                PsClass::High => high += 1,
            }
        }
        (low, medium, high)
    }
}

const HISTOGRAM_BIN_WIDTH: f64 = 0.05;

/// Tolerance for "exactly zero" totals; zero fields propagate as literal 0.0
/// so this only guards against caller-constructed near-zero values.
pub const ZERO_TOLERANCE: f64 = 1e-12;

/// Field 1: zero when the feature is a protocol identifier, a critical
/// address/identifier, or a functional-integrity attribute.
pub fn ps1(meta: &FeatureMetadata) -> f64 {
    if meta.is_protocol_id || meta.is_critical_identifier || meta.is_functional_integrity {
        0.0
    } else {
        1.0
    }
}

/// Field 2: cardinality band. 1 above `max_r`, 0 below `min_r`, linear from
/// 0.5 at `min_r` to 1.0 at `max_r` in between.
pub fn ps2(pv: u64, min_r: u64, max_r: u64) -> Result<f64> {
    if pv < 1 {
        return Err(Error::InvalidParameter(format!(
            "cardinality must be >= 1, got {pv}"
        )));
    }
    Ok(if pv > max_r {
        1.0
    } else if pv < min_r {
        0.0
    } else {
        0.5 + 0.5 * ((pv - min_r) as f64) / ((max_r - min_r) as f64)
    })
}

/// Field 3: `0.5 + 0.5 / 2^cf`. Each additional correlated feature halves
/// the chance that gradients agree, so the bonus decays exponentially but
/// never below 0.5.
pub fn ps3(cf: u32) -> f64 {
    0.5 + 0.5 * (-(cf as f64)).exp2()
}

/// Field 4: reachability. Directly accessible directions score 1; a
/// backward/interflow feature scores 1 when it tracks exactly one forward
/// feature, 0.5 when it tracks several, and 0 when it tracks none.
pub fn ps4(meta: &FeatureMetadata, forward_corr_count: u32) -> f64 {
    if !meta.direction.attacker_inaccessible() {
        1.0
    } else {
        match forward_corr_count {
            0 => 0.0,
            1 => 1.0,
            _ => 0.5,
        }
    }
}

/// Field 5: flow-wide aggregates (means, deviations, jitter) cost 0.5.
pub fn ps5(meta: &FeatureMetadata) -> f64 {
    if meta.is_flow_wide_aggregate {
        0.5
    } else {
        1.0
    }
}

/// Geometric mean of the five fields.
///
/// A literal zero in any field short-circuits to exactly 0.0 without going
/// through floating-point exponentiation.
pub fn ps_total(fields: [f64; 5]) -> f64 {
    for (i, v) in fields.iter().enumerate() {
        assert!(
            (0.0..=1.0).contains(v),
            "ps field {} out of [0, 1]: {v}",
            i + 1
        );
    }
    if fields.iter().any(|&v| v == 0.0) {
        return 0.0;
    }
    fields.iter().product::<f64>().powf(1.0 / 5.0)
}

/// Classifies a total: Low at zero, High at or above `tau`, Medium between.
pub fn classify(total: f64, tau: f64) -> PsClass {
    if total <= ZERO_TOLERANCE {
        PsClass::Low
    } else if total >= tau {
        PsClass::High
    } else {
        PsClass::Medium
    }
}

/// Scores one feature from its annotations and data-derived inputs.
pub fn score_feature(inputs: &PsInputs, config: &ThresholdConfig) -> Result<PsBreakdown> {
    let meta = &inputs.flags;
    let p1 = ps1(meta);
    let p2 = ps2(inputs.pv, config.min_r, config.max_r)?;
    let p3 = ps3(inputs.cf);
    let p4 = ps4(meta, inputs.forward_corr_count);
    let p5 = ps5(meta);
    let total = ps_total([p1, p2, p3, p4, p5]);
    Ok(PsBreakdown {
        feature: meta.name.clone(),
        ps1: p1,
        ps2: p2,
        ps3: p3,
        ps4: p4,
        ps5: p5,
        ps_total: total,
        class_label: classify(total, config.tau),
        inputs: inputs.clone(),
    })
}

/// Scores every feature (inputs in dataset column order) and attaches the
/// histogram. Deterministic: identical inputs give an identical report.
pub fn score_all(inputs: &[PsInputs], config: &ThresholdConfig) -> Result<ScoreReport> {
    config.validate()?;
    let breakdowns: Vec<PsBreakdown> = inputs
        .iter()
        .map(|i| score_feature(i, config))
        .collect::<Result<_>>()?;
    let histogram = histogram(&breakdowns);
    Ok(ScoreReport {
        breakdowns,
        thresholds: config.clone(),
        histogram,
    })
}

/// One pinned scoring input, as stored in a fixture file. Fixtures decouple
/// catalog-based scoring from possession of the full dataset: they pin the
/// data-derived quantities per feature, aligned to the catalog by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub name: String,
    pub pv: u64,
    pub cf: u32,
    pub forward_corr_count: u32,
    /// Optional documentation of the class this entry is expected to produce.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_class: Option<PsClass>,
}

/// Loads a fixture file (JSON array of pinned inputs).
pub fn load_fixture<P: AsRef<std::path::Path>>(path: P) -> Result<Vec<FixtureEntry>> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let entries: Vec<FixtureEntry> = serde_json::from_str(&text)?;
    Ok(entries)
}

/// Joins a catalog with fixture entries by name, in catalog order.
pub fn inputs_from_fixture(
    catalog: &crate::catalog::MetadataCatalog,
    fixture: &[FixtureEntry],
) -> Result<Vec<PsInputs>> {
    catalog
        .entries
        .iter()
        .map(|meta| {
            let entry = fixture
                .iter()
                .find(|f| f.name == meta.name)
                .ok_or_else(|| {
                    Error::AlignmentMismatch(format!(
                        "fixture has no entry for feature {:?}",
                        meta.name
                    ))
                })?;
            Ok(PsInputs {
                pv: entry.pv,
                cf: entry.cf,
                forward_corr_count: entry.forward_corr_count,
                flags: meta.clone(),
            })
        })
        .collect()
}

fn histogram(breakdowns: &[PsBreakdown]) -> Vec<(f64, u32)> {
    let n_bins = (1.0 / HISTOGRAM_BIN_WIDTH).round() as usize;
    let mut counts = vec![0u32; n_bins];
    for b in breakdowns {
        let bin = ((b.ps_total / HISTOGRAM_BIN_WIDTH) as usize).min(n_bins - 1);
        counts[bin] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (i as f64 * HISTOGRAM_BIN_WIDTH, c))
        .collect()
}
