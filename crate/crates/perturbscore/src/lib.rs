//! Perturb-ability scoring for flow-based NIDS features, plus the defenses
//! and attack harness built on top of it.
//!
//! The pipeline: load a dataset and its annotation catalog, analyse feature
//! correlations, score every feature's perturb-ability in [0, 1], classify
//! features Low/Medium/High, derive a feature-selection or feature-masking
//! plan, and measure how constrained adversarial attacks fare against the
//! defended pipelines.

pub mod attack;
pub mod catalog;
pub mod correlation;
pub mod data;
pub mod defense;
pub mod error;
pub mod model;
pub mod report;
pub mod score;
pub mod synth;

pub use attack::{
    asr, evaluate_defense, gradient_sign_attack, morph_attack, query_attack, run_attack,
    AttackConstraints, AttackRun, AttackSpec, DefendedPipelines, DefenseCell, DefenseEvaluation,
    MorphDirection, MorphEntry, MorphMap,
};
pub use catalog::{
    effective_cardinality, load_catalog, validate_catalog, Direction, FeatureMetadata,
    MetadataCatalog, ThresholdConfig, ValidationIssue,
};
pub use correlation::{
    correlation_profile, export_graph, forward_corr_profile, high_corr_counts, pearson_matrix,
    CorrGraph, CorrMatrix, CorrelationProfile,
};
pub use data::{
    apply_scaler, fit_scaler, load_csv, split, undersample, Dataset, DropReport, ScalerMethod,
    ScalerParams,
};
pub use defense::{
    apply_mask, apply_selection, mask_plan, mask_vector, neutral_values, selection_plan, MaskPhase,
    MaskPlan, MaskScope, NeutralStrategy, SelectionPlan, SelectionPolicy,
};
pub use error::{Error, Result};
pub use model::{
    evaluate, input_gradient, load_model, predict, save_model, train, Metrics, Model, ModelKind,
    TrainConfig,
};
pub use report::{emit, parse_envelope, Envelope, OutputFormat, Payload};
pub use score::{
    classify, inputs_from_fixture, load_fixture, ps1, ps2, ps3, ps4, ps5, ps_total, score_all,
    FixtureEntry, PsBreakdown, PsClass, PsInputs, ScoreReport,
};
pub use synth::{generate, SynthBundle, SynthConfig};
