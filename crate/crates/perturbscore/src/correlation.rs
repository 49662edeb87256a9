//! Pearson correlation analysis over feature columns.
//!
//! Scoring needs two aggregates of the correlation matrix: for every feature
//! the number of other features it is highly correlated with (CF), and the
//! number of those that are forward-direction features. Both use the absolute
//! coefficient against a configurable cutoff.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::catalog::{Direction, MetadataCatalog};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Symmetric Pearson correlation matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrix {
    pub feature_names: Vec<String>,
    pub r: Array2<f64>,
}

impl CorrMatrix {
    pub fn n(&self) -> usize {
        self.feature_names.len()
    }
}

/// Per-feature correlation aggregates consumed by the scoring engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationProfile {
    /// CF: count of other features with |r| at or above the cutoff.
    pub cf: Vec<u32>,
    /// Count of forward-direction features among those.
    pub forward_corr_count: Vec<u32>,
}

/// Computes the Pearson matrix using population moments.
///
/// Pairs involving a constant column get r = 0 off-diagonal so downstream
/// counts stay well-defined; such features are flagged for dropping by the
/// cardinality rule anyway.
pub fn pearson_matrix(dataset: &Dataset) -> Result<CorrMatrix> {
    let n_rows = dataset.n_rows();
    if n_rows < 2 {
        return Err(Error::EmptyInput(
            "pearson_matrix needs at least 2 rows".into(),
        ));
    }
    let n = dataset.n_features();
    let nf = n_rows as f64;

    let means: Vec<f64> = (0..n).map(|j| dataset.x.column(j).sum() / nf).collect();
    let stds: Vec<f64> = (0..n)
        .map(|j| {
            let m = means[j];
            (dataset
                .x
                .column(j)
                .iter()
                .map(|v| (v - m) * (v - m))
                .sum::<f64>()
                / nf)
                .sqrt()
        })
        .collect();

    let mut r = Array2::zeros((n, n));
    for i in 0..n {
        r[[i, i]] = 1.0;
        for j in (i + 1)..n {
            let value = if stds[i] == 0.0 || stds[j] == 0.0 {
                0.0
            } else {
                let cov = dataset
                    .x
                    .column(i)
                    .iter()
                    .zip(dataset.x.column(j).iter())
                    .map(|(a, b)| (a - means[i]) * (b - means[j]))
                    .sum::<f64>()
                    / nf;
                cov / (stds[i] * stds[j])
            };
            r[[i, j]] = value;
            r[[j, i]] = value;
        }
    }
    Ok(CorrMatrix {
        feature_names: dataset.feature_names.clone(),
        r,
    })
}

/// CF per feature: `cf[i] = |{ j != i : |r[i][j]| >= corr_threshold }|`.
pub fn high_corr_counts(matrix: &CorrMatrix, corr_threshold: f64) -> Result<Vec<u32>> {
    if !(corr_threshold > 0.0 && corr_threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "corr_threshold must be in (0, 1), got {corr_threshold}"
        )));
    }
    let n = matrix.n();
    let mut cf = vec![0u32; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && matrix.r[[i, j]].abs() >= corr_threshold {
                cf[i] += 1;
            }
        }
    }
    Ok(cf)
}

/// For each feature, how many forward-direction features it is highly
/// correlated with. The catalog must be name-aligned with the matrix.
pub fn forward_corr_profile(
    matrix: &CorrMatrix,
    catalog: &MetadataCatalog,
    corr_threshold: f64,
) -> Result<Vec<u32>> {
    if catalog.len() != matrix.n() {
        return Err(Error::AlignmentMismatch(format!(
            "catalog has {} entries, matrix has {} features",
            catalog.len(),
            matrix.n()
        )));
    }
    for (entry, name) in catalog.entries.iter().zip(&matrix.feature_names) {
        if &entry.name != name {
            return Err(Error::AlignmentMismatch(format!(
                "catalog entry {:?} does not match matrix feature {:?}",
                entry.name, name
            )));
        }
    }
    let n = matrix.n();
    let mut counts = vec![0u32; n];
    for i in 0..n {
        for j in 0..n {
            if i != j
                && catalog.entries[j].direction == Direction::Forward
                && matrix.r[[i, j]].abs() >= corr_threshold
            {
                counts[i] += 1;
            }
        }
    }
    Ok(counts)
}

/// Convenience wrapper producing both aggregates at once.
pub fn correlation_profile(
    matrix: &CorrMatrix,
    catalog: &MetadataCatalog,
    corr_threshold: f64,
) -> Result<CorrelationProfile> {
    Ok(CorrelationProfile {
        cf: high_corr_counts(matrix, corr_threshold)?,
        forward_corr_count: forward_corr_profile(matrix, catalog, corr_threshold)?,
    })
}

/// One undirected high-correlation edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrEdge {
    pub a: String,
    pub b: String,
    pub abs_r: f64,
}

/// Node and edge lists of the high-correlation graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<CorrEdge>,
}

/// Extracts the undirected edge list `(i, j, |r|)` for pairs at or above the
/// cutoff, i < j in column order.
pub fn export_graph(matrix: &CorrMatrix, corr_threshold: f64) -> CorrGraph {
    let n = matrix.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let abs_r = matrix.r[[i, j]].abs();
            if abs_r >= corr_threshold {
                edges.push(CorrEdge {
                    a: matrix.feature_names[i].clone(),
                    b: matrix.feature_names[j].clone(),
                    abs_r,
                });
            }
        }
    }
    CorrGraph {
        nodes: matrix.feature_names.clone(),
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::FeatureMetadata;
    use approx::assert_abs_diff_eq;
    use ndarray::{Array1, Array2};

    fn dataset(cols: Vec<Vec<f64>>) -> Dataset {
        let n_rows = cols[0].len();
        let n_cols = cols.len();
        let mut x = Array2::zeros((n_rows, n_cols));
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                x[[i, j]] = *v;
            }
        }
        Dataset::new(
            (0..n_cols).map(|j| format!("f{j}")).collect(),
            x,
            Array1::zeros(n_rows).mapv(|_: f64| 0u8),
        )
        .unwrap()
    }

    fn matrix_from(names: &[&str], pairs: &[(usize, usize, f64)]) -> CorrMatrix {
        let n = names.len();
        let mut r = Array2::zeros((n, n));
        for i in 0..n {
            r[[i, i]] = 1.0;
        }
        for &(i, j, v) in pairs {
            r[[i, j]] = v;
            r[[j, i]] = v;
        }
        CorrMatrix {
            feature_names: names.iter().map(|s| s.to_string()).collect(),
            r,
        }
    }

    #[test]
    fn exact_linear_dependence_gives_unit_correlation() {
        let ds = dataset(vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]);
        let m = pearson_matrix(&ds).unwrap();
        assert_abs_diff_eq!(m.r[[0, 1]], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn anti_correlation_gives_minus_one() {
        let ds = dataset(vec![vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]]);
        let m = pearson_matrix(&ds).unwrap();
        assert_abs_diff_eq!(m.r[[0, 1]], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_is_one() {
        let ds = dataset(vec![vec![1.0, 5.0, 2.0], vec![0.5, 0.1, 0.9]]);
        let m = pearson_matrix(&ds).unwrap();
        assert_eq!(m.r[[0, 0]], 1.0);
        assert_eq!(m.r[[1, 1]], 1.0);
    }

    #[test]
    fn constant_column_correlates_with_nothing() {
        let ds = dataset(vec![vec![1.0, 2.0, 3.0], vec![7.0, 7.0, 7.0]]);
        let m = pearson_matrix(&ds).unwrap();
        assert_eq!(m.r[[0, 1]], 0.0);
        assert_eq!(m.r[[1, 1]], 1.0);
    }

    #[test]
    fn fewer_than_two_rows_errors() {
        let ds = dataset(vec![vec![1.0], vec![2.0]]);
        assert!(pearson_matrix(&ds).is_err());
    }

    #[test]
    fn high_corr_counts_matches_brute_force_example() {
        // |r| pairs: (0,1)=0.9, (0,2)=0.1, (1,2)=0.85 at threshold 0.8
        let m = matrix_from(&["a", "b", "c"], &[(0, 1, 0.9), (0, 2, 0.1), (1, 2, 0.85)]);
        assert_eq!(high_corr_counts(&m, 0.8).unwrap(), vec![1, 2, 1]);
    }

    #[test]
    fn identity_matrix_has_zero_counts() {
        let m = matrix_from(&["a", "b", "c"], &[]);
        assert_eq!(high_corr_counts(&m, 0.8).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn threshold_above_everything_zeroes_counts() {
        let m = matrix_from(&["a", "b"], &[(0, 1, 0.7)]);
        assert_eq!(high_corr_counts(&m, 0.9).unwrap(), vec![0, 0]);
    }

    fn catalog_with_directions(dirs: &[Direction]) -> MetadataCatalog {
        MetadataCatalog::new(
            dirs.iter()
                .enumerate()
                .map(|(i, &direction)| FeatureMetadata {
                    name: format!("f{i}"),
                    is_protocol_id: false,
                    is_critical_identifier: false,
                    is_functional_integrity: false,
                    direction,
                    is_flow_wide_aggregate: false,
                    declared_cardinality: None,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn forward_counts_respect_direction_and_threshold() {
        let m = matrix_from(&["f0", "f1", "f2"], &[(0, 1, 0.92), (0, 2, 0.3)]);
        let catalog = catalog_with_directions(&[
            Direction::Backward,
            Direction::Forward,
            Direction::Forward,
        ]);
        let counts = forward_corr_profile(&m, &catalog, 0.8).unwrap();
        // f0 is backward and correlated with exactly one forward feature
        assert_eq!(counts[0], 1);
    }

    #[test]
    fn forward_counts_zero_without_strong_edges() {
        let m = matrix_from(&["f0", "f1"], &[(0, 1, 0.5)]);
        let catalog = catalog_with_directions(&[Direction::Backward, Direction::Forward]);
        assert_eq!(forward_corr_profile(&m, &catalog, 0.8).unwrap()[0], 0);
    }

    #[test]
    fn forward_counts_two_forward_neighbours() {
        let m = matrix_from(&["f0", "f1", "f2"], &[(0, 1, 0.85), (0, 2, 0.81)]);
        let catalog = catalog_with_directions(&[
            Direction::Backward,
            Direction::Forward,
            Direction::Forward,
        ]);
        assert_eq!(forward_corr_profile(&m, &catalog, 0.8).unwrap()[0], 2);
    }

    #[test]
    fn misaligned_catalog_is_rejected() {
        let m = matrix_from(&["f0", "f1"], &[]);
        let catalog = catalog_with_directions(&[Direction::Forward]);
        assert!(forward_corr_profile(&m, &catalog, 0.8).is_err());
    }

    #[test]
    fn graph_of_identity_matrix_is_empty() {
        let m = matrix_from(&["a", "b", "c"], &[]);
        assert!(export_graph(&m, 0.8).edges.is_empty());
    }

    #[test]
    fn single_strong_pair_gives_one_edge() {
        let m = matrix_from(&["a", "b"], &[(0, 1, 0.95)]);
        let g = export_graph(&m, 0.8);
        assert_eq!(g.edges.len(), 1);
        assert_abs_diff_eq!(g.edges[0].abs_r, 0.95);
    }

    #[test]
    fn complete_graph_edge_count() {
        let m = matrix_from(
            &["a", "b", "c", "d"],
            &[
                (0, 1, 0.9),
                (0, 2, 0.9),
                (0, 3, 0.9),
                (1, 2, 0.9),
                (1, 3, 0.9),
                (2, 3, 0.9),
            ],
        );
        assert_eq!(export_graph(&m, 0.8).edges.len(), 6);
    }
}
