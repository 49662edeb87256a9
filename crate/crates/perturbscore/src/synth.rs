//! Synthetic flow-feature dataset with planted scoring structure.
//!
//! The generator produces a labelled dataset whose columns deliberately hit
//! every scoring path: identifier/service columns (zeroed by flags), backward
//! columns with and without forward correlation, a correlated forward
//! cluster, a low-cardinality forward column, flow-wide aggregates, and a
//! constant column. The class signal is carried mostly by the low-class
//! columns so models restricted to them stay accurate, while the high-class
//! columns carry enough signal that attacks on an undefended model work.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ndarray::{Array1, Array2};

use crate::attack::{MorphDirection, MorphEntry, MorphMap};
use crate::catalog::{Direction, FeatureMetadata, MetadataCatalog};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Generator knobs. Defaults give a 5000-row set with a 30% malicious share.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_rows: usize,
    pub seed: u64,
    pub malicious_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_rows: 5000,
            seed: 7,
            malicious_fraction: 0.3,
        }
    }
}

/// Generated dataset plus the catalog and morph map that describe it.
#[derive(Debug, Clone)]
pub struct SynthBundle {
    pub dataset: Dataset,
    pub catalog: MetadataCatalog,
    pub morph_map: MorphMap,
}

pub const MIN_ROWS: usize = 100;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; the log argument is kept away from zero
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Generates the bundled synthetic dataset.
pub fn generate(config: &SynthConfig) -> Result<SynthBundle> {
    if config.n_rows < MIN_ROWS {
        return Err(Error::InvalidParameter(format!(
            "synthetic generation needs at least {MIN_ROWS} rows, got {}",
            config.n_rows
        )));
    }
    if !(config.malicious_fraction > 0.0 && config.malicious_fraction < 1.0) {
        return Err(Error::InvalidParameter(
            "malicious_fraction must be in (0, 1)".into(),
        ));
    }

    let n = config.n_rows;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let names: Vec<String> = feature_catalog()
        .entries
        .iter()
        .map(|e| e.name.clone())
        .collect();
    let d = names.len();

    let mut x = Array2::zeros((n, d));
    let mut y = Array1::zeros(n);

    for i in 0..n {
        let malicious = rng.gen_bool(config.malicious_fraction);
        let yf = if malicious { 1.0 } else { 0.0 };
        y[i] = u8::from(malicious);

        // shared latent for the correlated forward cluster
        let u = normal(&mut rng);

        // strong class signal lives in the identifier/service/backward columns
        let dst_port_sel = (if malicious { 700.0 } else { 420.0 } + 80.0 * normal(&mut rng)).round();
        let service_code = if malicious {
            rng.gen_range(3..10) as f64
        } else {
            rng.gen_range(0..7) as f64
        };
        let bwd_resp_bytes =
            (if malicious { 420.0 } else { 1200.0 }) + 300.0 * normal(&mut rng);

        // low-cardinality forward column driving a continuous one
        let fwd_tos_class = rng.gen_range(0..6) as f64;
        let fwd_payload_total =
            600.0 + 250.0 * fwd_tos_class + 120.0 * normal(&mut rng) + 80.0 * yf;

        // correlated cluster: one backward echo of two forward columns
        let bwd_ack_bytes = 400.0 + 50.0 * u + 15.0 * normal(&mut rng);
        let fwd_iat_total = 300.0 + 30.0 * u + 9.0 * normal(&mut rng) + 12.0 * yf;
        let fwd_pkt_count = (60.0 + 20.0 * u + 6.0 * normal(&mut rng) + 8.0 * yf).round();

        let fwd_ttl = {
            let p_high = if malicious { 0.3 } else { 0.7 };
            if rng.gen_bool(p_high) {
                128.0
            } else {
                64.0
            }
        };
        let flow_pkt_size_mean = 800.0 + 150.0 * normal(&mut rng) + 60.0 * yf;
        let bwd_jitter_ms = 5.0 * normal(&mut rng).abs();
        let legacy_flag = 0.0;

        for (j, v) in [
            dst_port_sel,
            service_code,
            bwd_resp_bytes,
            fwd_tos_class,
            fwd_payload_total,
            bwd_ack_bytes,
            fwd_iat_total,
            fwd_pkt_count,
            fwd_ttl,
            flow_pkt_size_mean,
            bwd_jitter_ms,
            legacy_flag,
        ]
        .into_iter()
        .enumerate()
        {
            x[[i, j]] = v;
        }
    }

    Ok(SynthBundle {
        dataset: Dataset::new(names, x, y)?,
        catalog: feature_catalog(),
        morph_map: morph_map(),
    })
}

fn meta(
    name: &str,
    direction: Direction,
    declared: Option<u64>,
) -> FeatureMetadata {
    FeatureMetadata {
        name: name.into(),
        is_protocol_id: false,
        is_critical_identifier: false,
        is_functional_integrity: false,
        direction,
        is_flow_wide_aggregate: false,
        declared_cardinality: declared,
    }
}

/// Catalog matching the generated columns.
pub fn feature_catalog() -> MetadataCatalog {
    let mut dst_port_sel = meta("dst_port_sel", Direction::None, None);
    dst_port_sel.is_critical_identifier = true;
    let mut service_code = meta("service_code", Direction::None, None);
    service_code.is_functional_integrity = true;
    let mut flow_pkt_size_mean = meta("flow_pkt_size_mean", Direction::Forward, Some(1_000_000));
    flow_pkt_size_mean.is_flow_wide_aggregate = true;

    MetadataCatalog::new(vec![
        dst_port_sel,
        service_code,
        meta("bwd_resp_bytes", Direction::Backward, None),
        meta("fwd_tos_class", Direction::Forward, None),
        meta("fwd_payload_total", Direction::Forward, Some(1_000_000)),
        meta("bwd_ack_bytes", Direction::Backward, None),
        meta("fwd_iat_total", Direction::Forward, Some(1_000_000)),
        meta("fwd_pkt_count", Direction::Forward, Some(100_000)),
        meta("fwd_ttl", Direction::Forward, Some(256)),
        flow_pkt_size_mean,
        meta("bwd_jitter_ms", Direction::Backward, None),
        meta("legacy_flag", Direction::None, None),
    ])
    .expect("static catalog is well-formed")
}

/// Morph map confined to the high-class columns, mirroring the usual
/// padding/delay/injection techniques.
pub fn morph_map() -> MorphMap {
    MorphMap {
        entries: vec![
            MorphEntry {
                morph: "payload_padding".into(),
                features: vec!["fwd_payload_total".into(), "flow_pkt_size_mean".into()],
                direction: MorphDirection::Increase,
            },
            MorphEntry {
                morph: "timing_delay".into(),
                features: vec!["fwd_iat_total".into()],
                direction: MorphDirection::Increase,
            },
            MorphEntry {
                morph: "packet_injection".into(),
                features: vec!["fwd_pkt_count".into(), "fwd_ttl".into()],
                direction: MorphDirection::Either,
            },
        ],
    }
}

/// Writes the dataset as CSV with a trailing string label column.
pub fn write_dataset_csv(dataset: &Dataset, path: &std::path::Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&dataset.feature_names.join(","));
    out.push_str(",label\n");
    for i in 0..dataset.n_rows() {
        for j in 0..dataset.n_features() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", dataset.x[[i, j]]));
        }
        out.push(',');
        out.push_str(if dataset.y[i] == 1 { "malicious" } else { "benign" });
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
