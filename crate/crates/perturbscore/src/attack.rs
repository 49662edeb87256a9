//! Constrained adversarial attacks and defense evaluation.
//!
//! Two feature-space attacks cover the white-box/black-box poles: a one-step
//! gradient-sign attack and a query-only coordinate search driven by score
//! differences. A third attack replays traffic-morphing techniques through a
//! morph-to-feature map, shifting every feature a morph touches together
//! (the collateral-damage effect). All attacks respect an allowed-feature
//! set, per-feature box bounds, an L-inf budget, and optional integer grids.

use std::collections::BTreeSet;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::defense::{apply_mask, apply_selection, MaskPlan, SelectionPlan};
use crate::error::{Error, Result};
use crate::model::{metrics_from_predictions, predict, Metrics, Model};

/// What an attack may touch and how far it may move.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackConstraints {
    /// Feature indices the attack may perturb.
    pub allowed: BTreeSet<usize>,
    /// Per-feature lower bounds in model-input space.
    pub lower: Vec<f64>,
    /// Per-feature upper bounds in model-input space.
    pub upper: Vec<f64>,
    /// Per-feature flag: snap perturbed values to the integer grid.
    pub integer_snap: Vec<bool>,
    /// Max per-feature perturbation magnitude.
    pub epsilon: f64,
}

impl AttackConstraints {
    /// Unbounded box over all features with no snapping.
    pub fn unconstrained(n_features: usize, epsilon: f64) -> Self {
        Self {
            allowed: (0..n_features).collect(),
            lower: vec![f64::NEG_INFINITY; n_features],
            upper: vec![f64::INFINITY; n_features],
            integer_snap: vec![false; n_features],
            epsilon,
        }
    }

    fn validate(&self, n_features: usize) -> Result<()> {
        if self.allowed.is_empty() {
            return Err(Error::EmptyAllowedSet);
        }
        if let Some(&max) = self.allowed.iter().next_back() {
            if max >= n_features {
                return Err(Error::InvalidParameter(format!(
                    "allowed index {max} out of range for {n_features} features"
                )));
            }
        }
        for v in [&self.lower, &self.upper, ] {
            if v.len() != n_features {
                return Err(Error::DimensionMismatch {
                    expected: n_features,
                    got: v.len(),
                });
            }
        }
        if self.integer_snap.len() != n_features {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                got: self.integer_snap.len(),
            });
        }
        if self.epsilon < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

// Moves one coordinate toward `proposed` while honouring the budget box
// around the original value, the feature bounds, and (optionally) the
// integer grid. If no grid point fits inside the feasible box the original
// value is kept.
fn constrain_coord(orig: f64, proposed: f64, lower: f64, upper: f64, eps: f64, snap: bool) -> f64 {
    let lo = (orig - eps).max(lower);
    let hi = (orig + eps).min(upper);
    if lo > hi {
        return orig;
    }
    let mut v = proposed.clamp(lo, hi);
    if snap {
        let lo_grid = lo.ceil();
        let hi_grid = hi.floor();
        if lo_grid > hi_grid {
            return orig;
        }
        // ties round half away from zero (f64::round)
        v = v.round().clamp(lo_grid, hi_grid);
    }
    v
}

/// One-step gradient-sign attack: each row moves `epsilon * sign(grad)` on
/// the allowed coordinates, then gets clipped and snapped. Columns outside
/// the allowed set are bit-identical to the input.
pub fn gradient_sign_attack(
    model: &Model,
    x: &Array2<f64>,
    y: &Array1<u8>,
    constraints: &AttackConstraints,
) -> Result<Array2<f64>> {
    constraints.validate(x.ncols())?;
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    let mut adv = x.clone();
    for (i, row) in x.rows().into_iter().enumerate() {
        let grad = crate::model::input_gradient(model, &row, y[i])?;
        for &j in &constraints.allowed {
            let step = constraints.epsilon * grad[j].signum();
            let step = if grad[j] == 0.0 { 0.0 } else { step };
            adv[[i, j]] = constrain_coord(
                x[[i, j]],
                x[[i, j]] + step,
                constraints.lower[j],
                constraints.upper[j],
                constraints.epsilon,
                constraints.integer_snap[j],
            );
        }
    }
    Ok(adv)
}

/// Black-box coordinate search against a score oracle.
///
/// For each row, coordinates are visited in a seeded order; each visit
/// evaluates the oracle at the +epsilon and -epsilon ends of the feasible
/// box (two calls) and keeps whichever strictly improves the evasion
/// objective. Passes repeat until the per-row call budget runs out or a
/// full pass makes no progress, so a row with no improving step comes back
/// unchanged.
pub fn query_attack<F>(
    oracle: &mut F,
    x: &Array2<f64>,
    y: &Array1<u8>,
    constraints: &AttackConstraints,
    budget: usize,
    seed: u64,
) -> Result<Array2<f64>>
where
    F: FnMut(&Array2<f64>) -> Array1<f64>,
{
    constraints.validate(x.ncols())?;
    if budget < 1 {
        return Err(Error::InvalidParameter("budget must be >= 1".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    let mut adv = x.clone();
    let allowed: Vec<usize> = constraints.allowed.iter().copied().collect();

    for i in 0..x.nrows() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        // objective: push the score away from the true class
        let objective = |score: f64| if y[i] == 1 { score } else { -score };

        let mut calls = 0usize;
        let mut row = adv.row(i).to_owned();
        let mut eval = |row: &Array1<f64>, calls: &mut usize| -> f64 {
            *calls += 1;
            let m = row.clone().insert_axis(ndarray::Axis(0));
            objective(oracle(&m)[0])
        };
        let mut current = eval(&row, &mut calls);

        let mut order = allowed.clone();
        loop {
            // deterministic per-row visit order, reshuffled each pass
            for k in (1..order.len()).rev() {
                order.swap(k, rng.gen_range(0..=k));
            }
            let mut improved = false;
            for &j in &order {
                if calls + 2 > budget {
                    break;
                }
                let orig = x[[i, j]];
                let mut best_val = row[j];
                let mut best_obj = current;
                for target in [orig + constraints.epsilon, orig - constraints.epsilon] {
                    let cand = constrain_coord(
                        orig,
                        target,
                        constraints.lower[j],
                        constraints.upper[j],
                        constraints.epsilon,
                        constraints.integer_snap[j],
                    );
                    if cand == row[j] {
                        calls += 1; // the probe still costs a call
                        continue;
                    }
                    let prev = row[j];
                    row[j] = cand;
                    let obj = eval(&row, &mut calls);
                    row[j] = prev;
                    if obj < best_obj - 1e-12 {
                        best_obj = obj;
                        best_val = cand;
                    }
                }
                if best_val != row[j] {
                    row[j] = best_val;
                    current = best_obj;
                    improved = true;
                }
            }
            if !improved || calls + 2 > budget {
                break;
            }
        }
        adv.row_mut(i).assign(&row);
    }
    Ok(adv)
}

/// Direction hint for a traffic morph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphDirection {
    Increase,
    Decrease,
    Either,
}

/// One traffic-morphing technique and the features it drags along.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphEntry {
    pub morph: String,
    pub features: Vec<String>,
    pub direction: MorphDirection,
}

/// Mapping from problem-space morphing techniques to feature columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MorphMap {
    pub entries: Vec<MorphEntry>,
}

impl MorphMap {
    /// All feature names any morph touches, deduplicated, in first-use order.
    pub fn touched_features(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for entry in &self.entries {
            for f in &entry.features {
                if seen.insert(f.clone()) {
                    out.push(f.clone());
                }
            }
        }
        out
    }

    pub fn resolve(&self, feature_names: &[String]) -> Result<Vec<(usize, MorphDirection)>> {
        let mut resolved = Vec::new();
        for entry in &self.entries {
            for f in &entry.features {
                let idx = feature_names
                    .iter()
                    .position(|n| n == f)
                    .ok_or_else(|| Error::UnknownMorphFeature(f.clone()))?;
                resolved.push((idx, entry.direction));
            }
        }
        Ok(resolved)
    }
}

/// Loads a morph map from a JSON array of `{morph, features, direction}`.
pub fn load_morph_map<P: AsRef<Path>>(path: P) -> Result<MorphMap> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let map: MorphMap = serde_json::from_str(&text)?;
    Ok(map)
}

/// Applies every morph in the map to every row: each morph shifts all of its
/// features by `magnitude` in the hinted direction (seeded random sign for
/// `either`), clipped to the per-feature bounds.
pub fn morph_attack(
    x: &Array2<f64>,
    morph_map: &MorphMap,
    feature_names: &[String],
    magnitude: f64,
    seed: u64,
    lower: &[f64],
    upper: &[f64],
) -> Result<Array2<f64>> {
    if morph_map.entries.is_empty() {
        return Err(Error::EmptyInput("morph map has no entries".into()));
    }
    if lower.len() != x.ncols() || upper.len() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            got: lower.len().min(upper.len()),
        });
    }
    // resolve before touching any row so a bad name fails the whole run
    for entry in &morph_map.entries {
        for f in &entry.features {
            if !feature_names.iter().any(|n| n == f) {
                return Err(Error::UnknownMorphFeature(f.clone()));
            }
        }
    }
    let mut adv = x.clone();
    for i in 0..x.nrows() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        for entry in &morph_map.entries {
            let sign = match entry.direction {
                MorphDirection::Increase => 1.0,
                MorphDirection::Decrease => -1.0,
                MorphDirection::Either => {
                    if rng.gen_bool(0.5) {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
            for f in &entry.features {
                let j = feature_names.iter().position(|n| n == f).unwrap();
                let v = adv[[i, j]] + sign * magnitude;
                adv[[i, j]] = v.clamp(lower[j], upper[j]);
            }
        }
    }
    Ok(adv)
}

/// Revised attack success rate: the fraction of all attempts where the
/// original prediction was correct and the perturbed prediction differs.
pub fn asr(pred_orig: &Array1<u8>, pred_adv: &Array1<u8>, y: &Array1<u8>) -> Result<f64> {
    let n = pred_orig.len();
    if n == 0 {
        return Err(Error::EmptyInput("asr of zero attempts".into()));
    }
    if pred_adv.len() != n || y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: pred_adv.len().min(y.len()),
        });
    }
    let successes = (0..n)
        .filter(|&i| pred_orig[i] == y[i] && pred_orig[i] != pred_adv[i])
        .count();
    Ok(successes as f64 / n as f64)
}

/// Which attack to run and with what knobs.
#[derive(Debug, Clone)]
pub enum AttackSpec {
    GradientSign {
        constraints: AttackConstraints,
    },
    Query {
        constraints: AttackConstraints,
        budget: usize,
        seed: u64,
    },
    Morph {
        map: MorphMap,
        magnitude: f64,
        seed: u64,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl AttackSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AttackSpec::GradientSign { .. } => "gradsign",
            AttackSpec::Query { .. } => "query",
            AttackSpec::Morph { .. } => "morph",
        }
    }

    fn seed(&self) -> u64 {
        match self {
            AttackSpec::GradientSign { .. } => 0,
            AttackSpec::Query { seed, .. } => *seed,
            AttackSpec::Morph { seed, .. } => *seed,
        }
    }

    fn allowed_indices(&self, feature_names: &[String]) -> Result<Vec<usize>> {
        Ok(match self {
            AttackSpec::GradientSign { constraints } | AttackSpec::Query { constraints, .. } => {
                constraints.allowed.iter().copied().collect()
            }
            AttackSpec::Morph { map, .. } => {
                let mut set = BTreeSet::new();
                for (idx, _) in map.resolve(feature_names)? {
                    set.insert(idx);
                }
                set.into_iter().collect()
            }
        })
    }
}

/// One executed attack: originals, perturbed matrix, and the success rate
/// against the model that was attacked.
#[derive(Debug, Clone)]
pub struct AttackRun {
    pub x_orig: Array2<f64>,
    pub x_adv: Array2<f64>,
    pub y: Array1<u8>,
    pub allowed: Vec<usize>,
    pub kind: String,
    pub seed: u64,
    pub asr: f64,
}

/// Runs the configured attack against a model on the given test data.
pub fn run_attack(model: &Model, test: &Dataset, spec: &AttackSpec) -> Result<AttackRun> {
    let x_adv = match spec {
        AttackSpec::GradientSign { constraints } => {
            gradient_sign_attack(model, &test.x, &test.y, constraints)?
        }
        AttackSpec::Query {
            constraints,
            budget,
            seed,
        } => {
            let oracle_model = model.clone();
            let mut oracle = move |m: &Array2<f64>| {
                let (_, scores) = predict(&oracle_model, m).expect("oracle dimension");
                scores
            };
            query_attack(&mut oracle, &test.x, &test.y, constraints, *budget, *seed)?
        }
        AttackSpec::Morph {
            map,
            magnitude,
            seed,
            lower,
            upper,
        } => morph_attack(
            &test.x,
            map,
            &test.feature_names,
            *magnitude,
            *seed,
            lower,
            upper,
        )?,
    };
    let (pred_orig, _) = predict(model, &test.x)?;
    let (pred_adv, _) = predict(model, &x_adv)?;
    let rate = asr(&pred_orig, &pred_adv, &test.y)?;
    Ok(AttackRun {
        x_orig: test.x.clone(),
        x_adv,
        y: test.y.clone(),
        allowed: spec.allowed_indices(&test.feature_names)?,
        kind: spec.kind_name().to_string(),
        seed: spec.seed(),
        asr: rate,
    })
}

/// ASR and clean metrics for one pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefenseCell {
    pub asr: f64,
    pub metrics: Metrics,
}

/// The defended pipelines to evaluate alongside the baseline.
#[derive(Debug, Clone, Default)]
pub struct DefendedPipelines {
    /// Selection plan plus a model retrained on the kept features.
    pub option_a: Option<(SelectionPlan, Model)>,
    /// Mask plan plus a model retrained on masked training data.
    pub option_b1: Option<(MaskPlan, Model)>,
    /// Mask plan applied at inference in front of the baseline model.
    pub option_b2: Option<MaskPlan>,
}

/// Attack outcome against the baseline and through each defense.
#[derive(Debug, Clone)]
pub struct DefenseEvaluation {
    pub run: AttackRun,
    pub pre: DefenseCell,
    pub post_option_a: Option<DefenseCell>,
    pub post_option_b1: Option<DefenseCell>,
    pub post_option_b2: Option<DefenseCell>,
}

/// Runs the attack against the baseline model, then routes the same
/// adversarial matrix through every configured defense, reporting pre and
/// post ASR plus clean-data metrics per pipeline.
pub fn evaluate_defense(
    baseline: &Model,
    defenses: &DefendedPipelines,
    test: &Dataset,
    spec: &AttackSpec,
) -> Result<DefenseEvaluation> {
    let run = run_attack(baseline, test, spec)?;
    let (pred_orig, _) = predict(baseline, &run.x_orig)?;
    let pre = DefenseCell {
        asr: run.asr,
        metrics: metrics_from_predictions(&pred_orig, &test.y),
    };

    let post_option_a = match &defenses.option_a {
        Some((plan, model)) => {
            let orig = apply_selection(plan, test)?;
            let adv_ds = Dataset::new(
                test.feature_names.clone(),
                run.x_adv.clone(),
                test.y.clone(),
            )?;
            let adv = apply_selection(plan, &adv_ds)?;
            Some(defense_cell(model, &orig.x, &adv.x, &test.y)?)
        }
        None => None,
    };

    let post_option_b1 = match &defenses.option_b1 {
        Some((plan, model)) => {
            let orig = apply_mask(&plan.mask, &plan.neutral, &run.x_orig)?;
            let adv = apply_mask(&plan.mask, &plan.neutral, &run.x_adv)?;
            Some(defense_cell(model, &orig, &adv, &test.y)?)
        }
        None => None,
    };

    let post_option_b2 = match &defenses.option_b2 {
        Some(plan) => {
            let orig = apply_mask(&plan.mask, &plan.neutral, &run.x_orig)?;
            let adv = apply_mask(&plan.mask, &plan.neutral, &run.x_adv)?;
            Some(defense_cell(baseline, &orig, &adv, &test.y)?)
        }
        None => None,
    };

    Ok(DefenseEvaluation {
        run,
        pre,
        post_option_a,
        post_option_b1,
        post_option_b2,
    })
}

fn defense_cell(
    model: &Model,
    x_orig: &Array2<f64>,
    x_adv: &Array2<f64>,
    y: &Array1<u8>,
) -> Result<DefenseCell> {
    let (pred_orig, _) = predict(model, x_orig)?;
    let (pred_adv, _) = predict(model, x_adv)?;
    Ok(DefenseCell {
        asr: asr(&pred_orig, &pred_adv, y)?,
        metrics: metrics_from_predictions(&pred_orig, y),
    })
}
