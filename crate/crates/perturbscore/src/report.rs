//! Stable serialization of reports, plans, and experiment grids.
//!
//! Every emitted file is wrapped in a versioned envelope and written
//! atomically (temp file + rename). Field order is fixed by the struct
//! definitions and floats are rounded to six decimal places before
//! serialization, so equal payloads emit byte-identical files.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::attack::DefenseCell;
use crate::correlation::CorrGraph;
use crate::data::DropReport;
use crate::defense::{MaskPlan, SelectionPlan};
use crate::error::{Error, Result};
use crate::model::Metrics;
use crate::score::ScoreReport;

pub const SCHEMA_VERSION: &str = "1.0.0";
pub const SCHEMA_MAJOR: u64 = 1;

fn produced_by() -> String {
    format!("perturbscore {}", env!("CARGO_PKG_VERSION"))
}

/// Versioned wrapper around any emitted payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: String,
    pub produced_by: String,
    pub payload_kind: String,
    pub payload: T,
}

impl<T> Envelope<T> {
    pub fn new(payload_kind: &str, payload: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            produced_by: produced_by(),
            payload_kind: payload_kind.to_string(),
            payload,
        }
    }
}

/// Output format for `emit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Dot,
}

impl std::fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OutputFormat::Json => f.write_str("json"),
            OutputFormat::Csv => f.write_str("csv"),
            OutputFormat::Dot => f.write_str("dot"),
        }
    }
}

/// Attack outcome summary for serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub attack: String,
    pub seed: u64,
    pub epsilon: Option<f64>,
    pub budget: Option<u64>,
    pub magnitude: Option<f64>,
    pub allowed: Vec<String>,
    pub pre: DefenseCell,
    pub post: Vec<DefenseOutcome>,
}

/// One defense column of an attack or experiment report. Exactly one of
/// `cell` and `error` is set; a defense that failed to build is reported,
/// never silently absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefenseOutcome {
    pub defense: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell: Option<DefenseCell>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// The four-way experiment grid: baseline and one column per defense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub model_kind: String,
    pub scaler: String,
    pub seeds: SeedRecord,
    pub attack: AttackReport,
    pub baseline_metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub split: u64,
    pub undersample: u64,
    pub train: u64,
    pub attack: u64,
}

/// Payloads `emit` knows how to write.
#[derive(Debug, Clone)]
pub enum Payload<'a> {
    Score(&'a ScoreReport),
    Graph(&'a CorrGraph),
    Selection(&'a SelectionPlan),
    Mask(&'a MaskPlan),
    Drop(&'a DropReport),
    Attack(&'a AttackReport),
    Experiment(&'a ExperimentReport),
}

impl Payload<'_> {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Score(_) => "score_report",
            Payload::Graph(_) => "correlation_graph",
            Payload::Selection(_) => "selection_plan",
            Payload::Mask(_) => "mask_plan",
            Payload::Drop(_) => "drop_report",
            Payload::Attack(_) => "attack_report",
            Payload::Experiment(_) => "experiment_report",
        }
    }
}

/// Rounds to six decimal places; applied to every float before emission.
pub fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

fn rounded_score(report: &ScoreReport) -> ScoreReport {
    let mut r = report.clone();
    for b in &mut r.breakdowns {
        b.ps1 = round6(b.ps1);
        b.ps2 = round6(b.ps2);
        b.ps3 = round6(b.ps3);
        b.ps4 = round6(b.ps4);
        b.ps5 = round6(b.ps5);
        b.ps_total = round6(b.ps_total);
    }
    r
}

fn rounded_graph(graph: &CorrGraph) -> CorrGraph {
    let mut g = graph.clone();
    for e in &mut g.edges {
        e.abs_r = round6(e.abs_r);
    }
    g
}

/// Writes the payload to `path` in the requested format.
///
/// JSON accepts every payload; CSV only the score report; DOT only the
/// correlation graph. Unsupported combinations error without touching the
/// filesystem.
pub fn emit(payload: &Payload, format: OutputFormat, path: &Path) -> Result<()> {
    let text = match (payload, format) {
        (Payload::Score(r), OutputFormat::Json) => {
            json_text("score_report", &rounded_score(r))?
        }
        (Payload::Score(r), OutputFormat::Csv) => score_csv(r),
        (Payload::Graph(g), OutputFormat::Json) => {
            json_text("correlation_graph", &rounded_graph(g))?
        }
        (Payload::Graph(g), OutputFormat::Dot) => graph_dot(g),
        (Payload::Selection(p), OutputFormat::Json) => json_text("selection_plan", p)?,
        (Payload::Mask(p), OutputFormat::Json) => {
            let mut rounded = (*p).clone();
            for v in &mut rounded.neutral {
                *v = round6(*v);
            }
            json_text("mask_plan", &rounded)?
        }
        (Payload::Drop(r), OutputFormat::Json) => json_text("drop_report", r)?,
        (Payload::Attack(r), OutputFormat::Json) => json_text("attack_report", r)?,
        (Payload::Experiment(r), OutputFormat::Json) => json_text("experiment_report", r)?,
        _ => {
            return Err(Error::UnsupportedFormat {
                payload: payload.kind().to_string(),
                format: format.to_string(),
            })
        }
    };
    write_atomic(path, &text)
}

fn json_text<T: Serialize>(kind: &str, payload: &T) -> Result<String> {
    let envelope = Envelope::new(kind, payload);
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    Ok(text)
}

/// Parses an enveloped JSON payload, rejecting unknown schema majors.
pub fn parse_envelope<T: DeserializeOwned>(text: &str) -> Result<Envelope<T>> {
    let envelope: Envelope<T> = serde_json::from_str(text)?;
    let major = envelope
        .schema_version
        .split('.')
        .next()
        .and_then(|m| m.parse::<u64>().ok());
    if major != Some(SCHEMA_MAJOR) {
        return Err(Error::SchemaVersion {
            found: envelope.schema_version,
            expected: SCHEMA_MAJOR,
        });
    }
    Ok(envelope)
}

fn score_csv(report: &ScoreReport) -> String {
    let mut out =
        String::from("name,ps1,ps2,ps3,ps4,ps5,ps_total,class,pv,cf,forward_corr_count\n");
    for b in &report.breakdowns {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{},{}\n",
            csv_escape(&b.feature),
            b.ps1,
            b.ps2,
            b.ps3,
            b.ps4,
            b.ps5,
            b.ps_total,
            b.class_label,
            b.inputs.pv,
            b.inputs.cf,
            b.inputs.forward_corr_count,
        ));
    }
    out
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn graph_dot(graph: &CorrGraph) -> String {
    let mut out = String::from("graph correlation {\n");
    for node in &graph.nodes {
        out.push_str(&format!("    \"{}\";\n", node.replace('"', "\\\"")));
    }
    for e in &graph.edges {
        out.push_str(&format!(
            "    \"{}\" -- \"{}\" [weight=\"{:.4}\"];\n",
            e.a.replace('"', "\\\""),
            e.b.replace('"', "\\\""),
            e.abs_r
        ));
    }
    out.push_str("}\n");
    out
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
