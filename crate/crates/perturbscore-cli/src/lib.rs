//! Command implementations behind the `perturbscore` binary.
//!
//! Four subcommands drive the pipeline: `synth` generates a self-contained
//! demo dataset, `score` runs ingestion, correlation analysis, and feature
//! scoring, `defend` emits selection/mask plans, and `experiment` trains the
//! baseline plus defended models, runs one attack, and writes the four-way
//! comparison report. Every source of randomness is a named seed, so a
//! config reproduces its outputs byte for byte.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use perturbscore::attack::{load_morph_map, AttackSpec, DefendedPipelines};
use perturbscore::report::{
    emit, AttackReport, DefenseOutcome, ExperimentReport, OutputFormat, Payload, SeedRecord,
};
use perturbscore::{
    apply_mask, apply_scaler, apply_selection, correlation_profile, effective_cardinality,
    evaluate_defense, export_graph, fit_scaler, inputs_from_fixture, load_catalog, load_csv,
    load_fixture, mask_plan, pearson_matrix, score_all, selection_plan, split, train, undersample,
    validate_catalog, AttackConstraints, CorrGraph, Dataset, DefenseCell, MaskPhase, MaskScope,
    MetadataCatalog, ModelKind, NeutralStrategy, PsClass, PsInputs, ScalerMethod, ScoreReport,
    SelectionPolicy, SynthConfig, ThresholdConfig, TrainConfig,
};

/// Errors mapped onto the process exit codes: usage = 1, data = 2, internal = 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl From<perturbscore::Error> for CliError {
    fn from(e: perturbscore::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "perturbscore",
    version,
    about = "Feature perturb-ability scoring, defenses, and attack evaluation for flow-based NIDS"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every feature and classify it Low/Medium/High.
    Score(ScoreArgs),
    /// Emit a feature-selection or feature-masking plan.
    Defend(DefendArgs),
    /// Train baseline + defended models, run an attack, report the grid.
    Experiment(ExperimentArgs),
    /// Generate the bundled synthetic dataset, catalog, and morph map.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScalerOpt {
    Standardize,
    Minmax,
}

impl From<ScalerOpt> for ScalerMethod {
    fn from(v: ScalerOpt) -> Self {
        match v {
            ScalerOpt::Standardize => ScalerMethod::Standardize,
            ScalerOpt::Minmax => ScalerMethod::MinMax,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DefenseOpt {
    /// Option A keeping only Low-class features.
    AGreen,
    /// Option A keeping Low- and Medium-class features.
    AGreenYellow,
    /// Option B masking High-class features.
    BHigh,
    /// Option B masking High- and Medium-class features.
    BHighMedium,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhaseOpt {
    TrainInference,
    InferenceOnly,
}

impl From<PhaseOpt> for MaskPhase {
    fn from(v: PhaseOpt) -> Self {
        match v {
            PhaseOpt::TrainInference => MaskPhase::TrainAndInference,
            PhaseOpt::InferenceOnly => MaskPhase::InferenceOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackOpt {
    Gradsign,
    Query,
    Morph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelOpt {
    Logreg,
    Mlp,
}

impl From<ModelOpt> for ModelKind {
    fn from(v: ModelOpt) -> Self {
        match v {
            ModelOpt::Logreg => ModelKind::LogReg,
            ModelOpt::Mlp => ModelKind::Mlp,
        }
    }
}

/// Which features an attack may perturb.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AllowedOpt {
    /// Only High-class features.
    High,
    /// High- and Medium-class features.
    HighMedium,
    /// Every feature.
    All,
}

fn parse_neutral(s: &str) -> Result<NeutralStrategy, String> {
    match s {
        "mean" => Ok(NeutralStrategy::TrainMean),
        "median" => Ok(NeutralStrategy::TrainMedian),
        other => match other.strip_prefix("const:") {
            Some(v) => v
                .parse::<f64>()
                .map(NeutralStrategy::Constant)
                .map_err(|e| format!("bad constant in {other:?}: {e}")),
            None => Err(format!(
                "expected mean, median, or const:<value>, got {other:?}"
            )),
        },
    }
}

#[derive(Debug, Args, Clone)]
pub struct InputArgs {
    /// CSV flow dataset (header row, label column included).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Pinned scoring inputs (pv/cf/forward counts per feature); replaces --dataset.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    /// Feature annotation catalog (JSON).
    #[arg(long)]
    pub catalog: PathBuf,
    /// Name of the label column in the CSV.
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// Label string encoded as 0; all other labels become 1.
    #[arg(long)]
    pub benign_label: Option<String>,
    #[arg(long, value_enum, default_value_t = ScalerOpt::Standardize)]
    pub scaler: ScalerOpt,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 1)]
    pub seed_split: u64,
    #[arg(long, default_value_t = 2)]
    pub seed_undersample: u64,
    /// High-class cutoff on the total score.
    #[arg(long, default_value_t = 0.87)]
    pub tau: f64,
    /// |Pearson r| cutoff counting a pair as highly correlated.
    #[arg(long, default_value_t = 0.80)]
    pub corr_threshold: f64,
    /// Cardinality at which the range score starts at 0.5.
    #[arg(long, default_value_t = 2)]
    pub min_r: u64,
    /// Cardinality at which the range score saturates at 1.
    #[arg(long, default_value_t = 255)]
    pub max_r: u64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Parser)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Parser)]
pub struct DefendArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = DefenseOpt::AGreen)]
    pub defense: DefenseOpt,
    #[arg(long, value_enum, default_value_t = PhaseOpt::TrainInference)]
    pub phase: PhaseOpt,
    /// Neutral values for masked features: mean, median, or const:<v>.
    #[arg(long, value_parser = parse_neutral, default_value = "mean")]
    pub neutral: NeutralStrategy,
}

#[derive(Debug, Parser)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Variant pair: a-green/b-high use Low-only keeps and High-only masks;
    /// a-green-yellow/b-high-medium widen both.
    #[arg(long, value_enum, default_value_t = DefenseOpt::AGreen)]
    pub defense: DefenseOpt,
    #[arg(long, value_parser = parse_neutral, default_value = "mean")]
    pub neutral: NeutralStrategy,
    #[arg(long, value_enum, default_value_t = ModelOpt::Logreg)]
    pub model: ModelOpt,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 150)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 32)]
    pub hidden_width: usize,
    #[arg(long, default_value_t = 3)]
    pub seed_train: u64,
    #[arg(long, default_value_t = 4)]
    pub seed_attack: u64,
    #[arg(long, value_enum, default_value_t = AttackOpt::Gradsign)]
    pub attack: AttackOpt,
    /// Per-feature budget for gradient/query attacks; morph shift magnitude.
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    /// Oracle calls per row for the query attack.
    #[arg(long, default_value_t = 400)]
    pub budget: usize,
    #[arg(long)]
    pub morph_map: Option<PathBuf>,
    /// Which score classes the attack may perturb.
    #[arg(long, value_enum, default_value_t = AllowedOpt::High)]
    pub allowed: AllowedOpt,
}

#[derive(Debug, Parser)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 5000)]
    pub rows: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.3)]
    pub malicious_fraction: f64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Score(args) => cmd_score(&args),
        Command::Defend(args) => cmd_defend(&args),
        Command::Experiment(args) => cmd_experiment(&args),
        Command::Synth(args) => cmd_synth(&args),
    }
}

fn thresholds(input: &InputArgs) -> CliResult<ThresholdConfig> {
    let config = ThresholdConfig {
        min_r: input.min_r,
        max_r: input.max_r,
        tau: input.tau,
        corr_threshold: input.corr_threshold,
    };
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

/// Scaled splits and the inputs the scorer needs, derived from a dataset.
struct Prepared {
    report: ScoreReport,
    graph: CorrGraph,
    train_scaled: Dataset,
    test_scaled: Dataset,
}

fn prepare_from_dataset(input: &InputArgs, catalog: &MetadataCatalog) -> CliResult<Prepared> {
    let dataset_path = input
        .dataset
        .as_ref()
        .ok_or_else(|| CliError::Usage("--dataset is required (or pass --fixture)".into()))?;
    let config = thresholds(input)?;
    let (dataset, _drop_report) = load_csv(
        dataset_path,
        &input.label_column,
        input.benign_label.as_deref(),
    )?;

    let issues = validate_catalog(catalog, &dataset.feature_names);
    if !issues.is_empty() {
        let mut msg = String::from("catalog does not match dataset:");
        for issue in &issues {
            msg.push_str(&format!("\n  - {issue}"));
        }
        return Err(CliError::Data(msg));
    }

    let (train, test) = split(&dataset, input.test_fraction, input.seed_split)?;
    let scaler = fit_scaler(&train, input.scaler.into())?;
    let train_scaled = apply_scaler(&scaler, &train)?;
    let test_scaled = apply_scaler(&scaler, &test)?;

    let matrix = pearson_matrix(&train_scaled)?;
    let profile = correlation_profile(&matrix, catalog, config.corr_threshold)?;
    let graph = export_graph(&matrix, config.corr_threshold);

    let inputs: Vec<PsInputs> = catalog
        .entries
        .iter()
        .enumerate()
        .map(|(j, meta)| {
            let pv = effective_cardinality(&train.column(j), meta.declared_cardinality)?;
            Ok(PsInputs {
                pv,
                cf: profile.cf[j],
                forward_corr_count: profile.forward_corr_count[j],
                flags: meta.clone(),
            })
        })
        .collect::<perturbscore::Result<_>>()?;
    let report = score_all(&inputs, &config)?;

    Ok(Prepared {
        report,
        graph,
        train_scaled,
        test_scaled,
    })
}

fn report_from_fixture(input: &InputArgs, catalog: &MetadataCatalog) -> CliResult<ScoreReport> {
    let fixture_path = input.fixture.as_ref().expect("caller checked fixture");
    let config = thresholds(input)?;
    let fixture = load_fixture(fixture_path)?;
    let inputs = inputs_from_fixture(catalog, &fixture)?;
    Ok(score_all(&inputs, &config)?)
}

pub fn cmd_score(args: &ScoreArgs) -> CliResult<()> {
    let input = &args.input;
    let catalog = load_catalog(&input.catalog)?;
    let (report, graph) = if input.fixture.is_some() {
        (report_from_fixture(input, &catalog)?, None)
    } else {
        let prepared = prepare_from_dataset(input, &catalog)?;
        (prepared.report, Some(prepared.graph))
    };

    emit(
        &Payload::Score(&report),
        OutputFormat::Json,
        &input.out_dir.join("score_report.json"),
    )?;
    emit(
        &Payload::Score(&report),
        OutputFormat::Csv,
        &input.out_dir.join("score_report.csv"),
    )?;
    if let Some(graph) = &graph {
        emit(
            &Payload::Graph(graph),
            OutputFormat::Dot,
            &input.out_dir.join("correlation_graph.dot"),
        )?;
        emit(
            &Payload::Graph(graph),
            OutputFormat::Json,
            &input.out_dir.join("correlation_graph.json"),
        )?;
    }

    print_class_table(&report, dataset_label(input));
    Ok(())
}

fn dataset_label(input: &InputArgs) -> String {
    input
        .dataset
        .as_ref()
        .or(input.fixture.as_ref())
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

fn print_class_table(report: &ScoreReport, name: String) {
    let (low, medium, high) = report.class_counts();
    let total = report.breakdowns.len();
    let pct = |n: usize| 100.0 * n as f64 / total as f64;
    println!(
        "{:<24} {:>14} {:>14} {:>14} {:>7}",
        "Dataset", "Low", "Medium", "High", "Total"
    );
    println!(
        "{:<24} {:>4} ({:>5.1}%) {:>4} ({:>5.1}%) {:>4} ({:>5.1}%) {:>7}",
        name,
        low,
        pct(low),
        medium,
        pct(medium),
        high,
        pct(high),
        total
    );
}

pub fn cmd_defend(args: &DefendArgs) -> CliResult<()> {
    let input = &args.input;
    let catalog = load_catalog(&input.catalog)?;

    match args.defense {
        DefenseOpt::AGreen | DefenseOpt::AGreenYellow => {
            let report = if input.fixture.is_some() {
                report_from_fixture(input, &catalog)?
            } else {
                prepare_from_dataset(input, &catalog)?.report
            };
            let policy = match args.defense {
                DefenseOpt::AGreen => SelectionPolicy::GreenOnly,
                _ => SelectionPolicy::GreenYellow,
            };
            let plan = selection_plan(&report, policy)?;
            emit(
                &Payload::Selection(&plan),
                OutputFormat::Json,
                &input.out_dir.join("selection_plan.json"),
            )?;
            println!(
                "selection plan: kept {} of {} features",
                plan.keep_indices.len(),
                report.breakdowns.len()
            );
        }
        DefenseOpt::BHigh | DefenseOpt::BHighMedium => {
            let scope = match args.defense {
                DefenseOpt::BHigh => MaskScope::HighOnly,
                _ => MaskScope::HighAndMedium,
            };
            // mean/median neutrals need training data; a constant does not
            let plan = if input.fixture.is_some() {
                match args.neutral {
                    NeutralStrategy::Constant(c) => {
                        let report = report_from_fixture(input, &catalog)?;
                        let mask = perturbscore::mask_vector(&report, scope);
                        let n = mask.len();
                        perturbscore::MaskPlan {
                            scope,
                            phase: args.phase.into(),
                            strategy: args.neutral,
                            mask,
                            neutral: vec![c; n],
                            feature_names: report
                                .breakdowns
                                .iter()
                                .map(|b| b.feature.clone())
                                .collect(),
                        }
                    }
                    _ => {
                        return Err(CliError::Usage(
                            "mean/median neutral values need --dataset; use const:<v> with --fixture"
                                .into(),
                        ))
                    }
                }
            } else {
                let prepared = prepare_from_dataset(input, &catalog)?;
                mask_plan(
                    &prepared.report,
                    &prepared.train_scaled,
                    scope,
                    args.phase.into(),
                    args.neutral,
                )?
            };
            emit(
                &Payload::Mask(&plan),
                OutputFormat::Json,
                &input.out_dir.join("mask_plan.json"),
            )?;
            println!(
                "mask plan: {} of {} features masked",
                plan.masked_indices().len(),
                plan.mask.len()
            );
        }
    }
    Ok(())
}

fn allowed_indices(report: &ScoreReport, rule: AllowedOpt) -> BTreeSet<usize> {
    report
        .breakdowns
        .iter()
        .enumerate()
        .filter(|(_, b)| match rule {
            AllowedOpt::High => b.class_label == PsClass::High,
            AllowedOpt::HighMedium => b.class_label != PsClass::Low,
            AllowedOpt::All => true,
        })
        .map(|(i, _)| i)
        .collect()
}

fn data_bounds(train: &Dataset) -> (Vec<f64>, Vec<f64>) {
    let lower = train
        .x
        .columns()
        .into_iter()
        .map(|c| c.iter().cloned().fold(f64::INFINITY, f64::min))
        .collect();
    let upper = train
        .x
        .columns()
        .into_iter()
        .map(|c| c.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    (lower, upper)
}

pub fn cmd_experiment(args: &ExperimentArgs) -> CliResult<()> {
    let input = &args.input;
    if input.fixture.is_some() {
        return Err(CliError::Usage(
            "experiment needs --dataset; fixtures carry no rows to train on".into(),
        ));
    }
    let catalog = load_catalog(&input.catalog)?;
    let prepared = prepare_from_dataset(input, &catalog)?;
    let report = &prepared.report;

    let train_balanced = undersample(&prepared.train_scaled, input.seed_undersample)?;
    let train_config = TrainConfig {
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        batch_size: args.batch_size,
        hidden_width: args.hidden_width,
        seed: args.seed_train,
    };
    let kind: ModelKind = args.model.into();
    let baseline = train(kind, &train_balanced, &train_config)?;
    let baseline_metrics = perturbscore::evaluate(&baseline, &prepared.test_scaled)?;

    let (a_policy, b_scope) = match args.defense {
        DefenseOpt::AGreen | DefenseOpt::BHigh => {
            (SelectionPolicy::GreenOnly, MaskScope::HighOnly)
        }
        DefenseOpt::AGreenYellow | DefenseOpt::BHighMedium => {
            (SelectionPolicy::GreenYellow, MaskScope::HighAndMedium)
        }
    };

    // every defense that fails to build becomes an errored column; the
    // baseline row survives regardless
    let mut errors: Vec<(String, String)> = Vec::new();
    let option_a = match selection_plan(report, a_policy).map_err(|e| e.to_string()).and_then(
        |plan| {
            let reduced = apply_selection(&plan, &train_balanced).map_err(|e| e.to_string())?;
            let model = train(kind, &reduced, &train_config).map_err(|e| e.to_string())?;
            Ok((plan, model))
        },
    ) {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(("option-a".into(), e));
            None
        }
    };

    let b_plan = mask_plan(
        report,
        &prepared.train_scaled,
        b_scope,
        MaskPhase::TrainAndInference,
        args.neutral,
    );
    let (option_b1, option_b2) = match b_plan {
        Ok(plan) => {
            let b1 = {
                let masked_x =
                    apply_mask(&plan.mask, &plan.neutral, &train_balanced.x).map_err(|e| e.to_string());
                masked_x
                    .and_then(|x| {
                        Dataset::new(
                            train_balanced.feature_names.clone(),
                            x,
                            train_balanced.y.clone(),
                        )
                        .map_err(|e| e.to_string())
                    })
                    .and_then(|ds| train(kind, &ds, &train_config).map_err(|e| e.to_string()))
            };
            let b1 = match b1 {
                Ok(model) => Some((plan.clone(), model)),
                Err(e) => {
                    errors.push(("option-b1".into(), e));
                    None
                }
            };
            let mut b2_plan = plan;
            b2_plan.phase = MaskPhase::InferenceOnly;
            (b1, Some(b2_plan))
        }
        Err(e) => {
            let msg = e.to_string();
            errors.push(("option-b1".into(), msg.clone()));
            errors.push(("option-b2".into(), msg));
            (None, None)
        }
    };

    let pipelines = DefendedPipelines {
        option_a,
        option_b1,
        option_b2,
    };

    let (lower, upper) = data_bounds(&prepared.train_scaled);
    let allowed = allowed_indices(report, args.allowed);
    let spec = match args.attack {
        AttackOpt::Gradsign | AttackOpt::Query => {
            if allowed.is_empty() {
                return Err(CliError::Data(
                    "allowed-feature rule selected no features".into(),
                ));
            }
            let constraints = AttackConstraints {
                allowed,
                lower: lower.clone(),
                upper: upper.clone(),
                integer_snap: vec![false; report.breakdowns.len()],
                epsilon: args.epsilon,
            };
            if args.attack == AttackOpt::Gradsign {
                AttackSpec::GradientSign { constraints }
            } else {
                AttackSpec::Query {
                    constraints,
                    budget: args.budget,
                    seed: args.seed_attack,
                }
            }
        }
        AttackOpt::Morph => {
            let path = args.morph_map.as_ref().ok_or_else(|| {
                CliError::Usage("--morph-map is required for the morph attack".into())
            })?;
            AttackSpec::Morph {
                map: load_morph_map(path)?,
                magnitude: args.epsilon,
                seed: args.seed_attack,
                lower,
                upper,
            }
        }
    };

    let evaluation = evaluate_defense(&baseline, &pipelines, &prepared.test_scaled, &spec)?;

    let mut post = Vec::new();
    let mut push_cell = |name: &str, cell: &Option<DefenseCell>| {
        if let Some(cell) = cell {
            post.push(DefenseOutcome {
                defense: name.to_string(),
                cell: Some(cell.clone()),
                error: None,
            });
        } else {
            let err = errors
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, e)| e.clone())
                .unwrap_or_else(|| "defense not built".into());
            post.push(DefenseOutcome {
                defense: name.to_string(),
                cell: None,
                error: Some(err),
            });
        }
    };
    push_cell("option-a", &evaluation.post_option_a);
    push_cell("option-b1", &evaluation.post_option_b1);
    push_cell("option-b2", &evaluation.post_option_b2);

    let attack_report = AttackReport {
        attack: evaluation.run.kind.clone(),
        seed: args.seed_attack,
        epsilon: match args.attack {
            AttackOpt::Morph => None,
            _ => Some(args.epsilon),
        },
        budget: match args.attack {
            AttackOpt::Query => Some(args.budget as u64),
            _ => None,
        },
        magnitude: match args.attack {
            AttackOpt::Morph => Some(args.epsilon),
            _ => None,
        },
        allowed: evaluation
            .run
            .allowed
            .iter()
            .map(|&i| report.breakdowns[i].feature.clone())
            .collect(),
        pre: evaluation.pre.clone(),
        post,
    };

    let experiment = ExperimentReport {
        model_kind: format!("{:?}", kind).to_lowercase(),
        scaler: format!("{:?}", ScalerMethod::from(input.scaler)).to_lowercase(),
        seeds: SeedRecord {
            split: input.seed_split,
            undersample: input.seed_undersample,
            train: args.seed_train,
            attack: args.seed_attack,
        },
        attack: attack_report,
        baseline_metrics,
    };

    emit(
        &Payload::Experiment(&experiment),
        OutputFormat::Json,
        &input.out_dir.join("experiment_report.json"),
    )?;
    print_experiment_table(&experiment);
    Ok(())
}

fn print_experiment_table(report: &ExperimentReport) {
    println!(
        "{:<12} {:>9} {:>10} {:>8} {:>8} {:>9}",
        "pipeline", "accuracy", "precision", "recall", "f1", "asr"
    );
    let m = &report.baseline_metrics;
    println!(
        "{:<12} {:>9.4} {:>10.4} {:>8.4} {:>8.4} {:>8.2}%",
        "baseline",
        m.accuracy,
        m.precision,
        m.recall,
        m.f1,
        100.0 * report.attack.pre.asr
    );
    for outcome in &report.attack.post {
        match (&outcome.cell, &outcome.error) {
            (Some(cell), _) => {
                let m = &cell.metrics;
                println!(
                    "{:<12} {:>9.4} {:>10.4} {:>8.4} {:>8.4} {:>8.2}%",
                    outcome.defense,
                    m.accuracy,
                    m.precision,
                    m.recall,
                    m.f1,
                    100.0 * cell.asr
                );
            }
            (None, Some(err)) => {
                println!("{:<12} errored: {err}", outcome.defense);
            }
            _ => {}
        }
    }
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    let config = SynthConfig {
        n_rows: args.rows,
        seed: args.seed,
        malicious_fraction: args.malicious_fraction,
    };
    let bundle = perturbscore::generate(&config)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::Data(e.to_string()))?;
    perturbscore::synth::write_dataset_csv(&bundle.dataset, &args.out_dir.join("dataset.csv"))?;
    perturbscore::catalog::save_catalog(&bundle.catalog, args.out_dir.join("catalog.json"))?;
    write_morph_map(&bundle.morph_map, &args.out_dir.join("morph_map.json"))?;
    println!(
        "wrote {} rows x {} features to {}",
        bundle.dataset.n_rows(),
        bundle.dataset.n_features(),
        args.out_dir.display()
    );
    Ok(())
}

fn write_morph_map(map: &perturbscore::MorphMap, path: &Path) -> CliResult<()> {
    let mut text =
        serde_json::to_string_pretty(map).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}
