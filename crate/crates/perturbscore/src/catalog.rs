//! Per-feature annotation catalog.
//!
//! Each dataset feature carries a small set of hand-curated flags describing
//! how the feature behaves in live traffic: whether it identifies a protocol
//! or endpoint, which direction of the flow it is computed from, and whether
//! it aggregates over the whole flow. These annotations drive the scoring
//! engine; the data itself only contributes cardinalities and correlations.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which side of the flow a feature is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Client-to-server statistics; directly shaped by the attacker.
    Forward,
    /// Server-to-client statistics; only indirectly reachable.
    Backward,
    /// Aggregates across multiple flows or connections.
    Interflow,
    /// Whole-flow aggregates covering both directions.
    Bidirectional,
    /// Non-directional fields (identifiers, timestamps, protocol codes).
    None,
}

impl Direction {
    /// True for the directions an attacker cannot write to directly.
    pub fn attacker_inaccessible(self) -> bool {
        matches!(self, Direction::Backward | Direction::Interflow)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
            Direction::Interflow => "interflow",
            Direction::Bidirectional => "bidirectional",
            Direction::None => "none",
        };
        f.write_str(s)
    }
}

/// Hand-curated annotations for one dataset feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureMetadata {
    /// Column name exactly as it appears in the dataset header.
    pub name: String,
    /// Protocol identification field (e.g. protocol number).
    pub is_protocol_id: bool,
    /// Critical address or identifier (e.g. destination IP, destination port).
    pub is_critical_identifier: bool,
    /// Field defining a network functional-integrity attribute (e.g. service, state).
    pub is_functional_integrity: bool,
    /// Flow direction the feature is computed from.
    pub direction: Direction,
    /// Statistic over many packets of the flow (mean, std, jitter, ...).
    pub is_flow_wide_aggregate: bool,
    /// Domain-known cardinality; overrides the data-derived distinct count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_cardinality: Option<u64>,
}

/// Ordered catalog of feature annotations, aligned by name with dataset columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetadataCatalog {
    pub entries: Vec<FeatureMetadata>,
}

impl MetadataCatalog {
    /// Builds a catalog, rejecting duplicate or empty names and zero cardinalities.
    pub fn new(entries: Vec<FeatureMetadata>) -> Result<Self> {
        let mut seen = HashSet::new();
        for entry in &entries {
            if entry.name.is_empty() {
                return Err(Error::InvalidParameter(
                    "catalog entry with empty name".into(),
                ));
            }
            if !seen.insert(entry.name.clone()) {
                return Err(Error::DuplicateName(entry.name.clone()));
            }
            if entry.declared_cardinality == Some(0) {
                return Err(Error::InvalidParameter(format!(
                    "declared_cardinality of {} must be >= 1",
                    entry.name
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&FeatureMetadata> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }
}

/// Scoring thresholds. Defaults follow the usual calibration: cardinality
/// band [2, 255], high-class cutoff 0.87, high-correlation cutoff 0.80.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub min_r: u64,
    pub max_r: u64,
    pub tau: f64,
    pub corr_threshold: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            min_r: 2,
            max_r: 255,
            tau: 0.87,
            corr_threshold: 0.80,
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_r < 1 || self.min_r >= self.max_r {
            return Err(Error::InvalidParameter(format!(
                "require 1 <= min_r < max_r, got min_r={} max_r={}",
                self.min_r, self.max_r
            )));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tau must be in (0, 1], got {}",
                self.tau
            )));
        }
        if !(self.corr_threshold > 0.0 && self.corr_threshold < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "corr_threshold must be in (0, 1), got {}",
                self.corr_threshold
            )));
        }
        Ok(())
    }
}

/// A problem found while checking a catalog against a dataset header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ValidationIssue {
    /// Dataset column with no catalog entry.
    UnannotatedColumn(String),
    /// Catalog entry with no dataset column.
    MissingColumn(String),
    /// Entry whose flags contradict each other.
    ContradictoryFlags { name: String, detail: String },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::UnannotatedColumn(n) => {
                write!(f, "dataset column {n:?} has no catalog entry")
            }
            ValidationIssue::MissingColumn(n) => {
                write!(f, "catalog entry {n:?} has no dataset column")
            }
            ValidationIssue::ContradictoryFlags { name, detail } => {
                write!(f, "catalog entry {name:?} is self-contradictory: {detail}")
            }
        }
    }
}

/// Loads a catalog from a JSON file (array of annotation records).
///
/// Unknown keys and malformed records are rejected with the parser's
/// line/column context; duplicate names are rejected by name.
pub fn load_catalog<P: AsRef<Path>>(path: P) -> Result<MetadataCatalog> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let entries: Vec<FeatureMetadata> =
        serde_json::from_str(&text).map_err(|e| Error::CatalogParse {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
    MetadataCatalog::new(entries)
}

/// Writes a catalog back out as JSON.
pub fn save_catalog<P: AsRef<Path>>(catalog: &MetadataCatalog, path: P) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&catalog.entries)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Cross-checks a catalog against the dataset's feature names.
///
/// Issues are data, not failures: every missing annotation, stale entry, and
/// self-contradictory flag combination is reported so the operator can fix
/// the catalog before scoring.
pub fn validate_catalog(catalog: &MetadataCatalog, feature_names: &[String]) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let catalog_names: HashSet<&str> = catalog.entries.iter().map(|e| e.name.as_str()).collect();
    let dataset_names: HashSet<&str> = feature_names.iter().map(|s| s.as_str()).collect();

    for name in feature_names {
        if !catalog_names.contains(name.as_str()) {
            issues.push(ValidationIssue::UnannotatedColumn(name.clone()));
        }
    }
    for entry in &catalog.entries {
        if !dataset_names.contains(entry.name.as_str()) {
            issues.push(ValidationIssue::MissingColumn(entry.name.clone()));
        }
    }
    for entry in &catalog.entries {
        if let Some(detail) = contradiction(entry) {
            issues.push(ValidationIssue::ContradictoryFlags {
                name: entry.name.clone(),
                detail,
            });
        }
    }
    issues
}

// An annotation mistake here silently zeroes a score, so catch the
// combinations that cannot describe a real feature.
fn contradiction(entry: &FeatureMetadata) -> Option<String> {
    if entry.direction.attacker_inaccessible()
        && entry.is_critical_identifier
        && entry.declared_cardinality == Some(1)
    {
        return Some(
            "backward/interflow feature flagged as a critical identifier with cardinality 1"
                .into(),
        );
    }
    if entry.is_protocol_id && entry.is_flow_wide_aggregate {
        return Some("protocol identifier flagged as a flow-wide aggregate".into());
    }
    if entry.declared_cardinality == Some(1) && entry.is_flow_wide_aggregate {
        return Some("constant feature flagged as a flow-wide aggregate".into());
    }
    None
}

/// Number of values a feature can take: the declared cardinality when the
/// catalog provides one, otherwise the distinct-value count of the column
/// (callers pass the training split to avoid test leakage).
pub fn effective_cardinality(column: &[f64], declared: Option<u64>) -> Result<u64> {
    if let Some(d) = declared {
        return Ok(d);
    }
    if column.is_empty() {
        return Err(Error::EmptyInput("cardinality of empty column".into()));
    }
    let mut distinct: Vec<u64> = column.iter().map(|v| v.to_bits()).collect();
    distinct.sort_unstable();
    distinct.dedup();
    Ok(distinct.len() as u64)
}
