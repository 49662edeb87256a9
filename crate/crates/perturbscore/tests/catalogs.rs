//! Checks on the shipped feature catalogs, fixtures, and morph maps.

use std::path::PathBuf;

use perturbscore::{
    inputs_from_fixture, load_catalog, load_fixture, score_all, validate_catalog, PsClass,
    ThresholdConfig,
};

fn data_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(rel)
}

#[test]
fn unsw_catalog_reproduces_published_class_counts() {
    let catalog = load_catalog(data_path("catalogs/unsw_nb15.json")).unwrap();
    assert_eq!(catalog.len(), 47);
    let fixture = load_fixture(data_path("fixtures/unsw_nb15_inputs.json")).unwrap();
    let inputs = inputs_from_fixture(&catalog, &fixture).unwrap();
    let report = score_all(&inputs, &ThresholdConfig::default()).unwrap();
    let (low, medium, high) = report.class_counts();
    assert_eq!((low, medium, high), (25, 4, 18));
}

#[test]
fn unsw_fixture_classes_match_per_feature() {
    let catalog = load_catalog(data_path("catalogs/unsw_nb15.json")).unwrap();
    let fixture = load_fixture(data_path("fixtures/unsw_nb15_inputs.json")).unwrap();
    let inputs = inputs_from_fixture(&catalog, &fixture).unwrap();
    let report = score_all(&inputs, &ThresholdConfig::default()).unwrap();
    for (b, f) in report.breakdowns.iter().zip(&fixture) {
        assert_eq!(
            Some(b.class_label),
            f.expected_class,
            "feature {} scored {} (ps_total {:.6})",
            b.feature,
            b.class_label,
            b.ps_total
        );
    }
}

#[test]
fn cse_catalog_reproduces_published_class_counts() {
    let catalog = load_catalog(data_path("catalogs/cse_cic_ids2018.json")).unwrap();
    assert_eq!(catalog.len(), 88);
    let fixture = load_fixture(data_path("fixtures/cse_cic_ids2018_inputs.json")).unwrap();
    let inputs = inputs_from_fixture(&catalog, &fixture).unwrap();
    let report = score_all(&inputs, &ThresholdConfig::default()).unwrap();
    let (low, medium, high) = report.class_counts();
    assert_eq!((low, medium, high), (38, 19, 31));
    for (b, f) in report.breakdowns.iter().zip(&fixture) {
        assert_eq!(
            Some(b.class_label),
            f.expected_class,
            "feature {} scored {} (ps_total {:.6})",
            b.feature,
            b.class_label,
            b.ps_total
        );
    }
}

#[test]
fn shipped_catalogs_are_self_consistent() {
    for name in ["catalogs/unsw_nb15.json", "catalogs/cse_cic_ids2018.json"] {
        let catalog = load_catalog(data_path(name)).unwrap();
        let names: Vec<String> = catalog.entries.iter().map(|e| e.name.clone()).collect();
        let issues = validate_catalog(&catalog, &names);
        assert!(issues.is_empty(), "{name}: {issues:?}");
    }
}

#[test]
fn fixtures_respect_forward_count_bound() {
    for name in [
        "fixtures/unsw_nb15_inputs.json",
        "fixtures/cse_cic_ids2018_inputs.json",
    ] {
        let fixture = load_fixture(data_path(name)).unwrap();
        for entry in &fixture {
            assert!(
                entry.forward_corr_count <= entry.cf,
                "{name}: {} has forward count {} > cf {}",
                entry.name,
                entry.forward_corr_count,
                entry.cf
            );
        }
    }
}

#[test]
fn fixture_pv_matches_declared_cardinality() {
    for (cat, fix) in [
        ("catalogs/unsw_nb15.json", "fixtures/unsw_nb15_inputs.json"),
        (
            "catalogs/cse_cic_ids2018.json",
            "fixtures/cse_cic_ids2018_inputs.json",
        ),
    ] {
        let catalog = load_catalog(data_path(cat)).unwrap();
        let fixture = load_fixture(data_path(fix)).unwrap();
        for entry in &catalog.entries {
            if let Some(declared) = entry.declared_cardinality {
                let f = fixture.iter().find(|f| f.name == entry.name).unwrap();
                assert_eq!(f.pv, declared, "{}", entry.name);
            }
        }
    }
}

#[test]
fn shipped_morph_maps_resolve_against_their_catalogs() {
    for (cat, map) in [
        ("catalogs/unsw_nb15.json", "morph_maps/unsw_nb15.json"),
        (
            "catalogs/cse_cic_ids2018.json",
            "morph_maps/cse_cic_ids2018.json",
        ),
    ] {
        let catalog = load_catalog(data_path(cat)).unwrap();
        let names: Vec<String> = catalog.entries.iter().map(|e| e.name.clone()).collect();
        let morphs = perturbscore::attack::load_morph_map(data_path(map)).unwrap();
        assert!(morphs.resolve(&names).is_ok(), "{map}");
    }
}

#[test]
fn every_morph_reaches_a_high_class_feature() {
    // each published morphing technique moves at least one feature the
    // scoring classifies as highly perturb-able; collateral backward
    // features in the lists may still score lower
    for (cat, fix, map) in [
        (
            "catalogs/unsw_nb15.json",
            "fixtures/unsw_nb15_inputs.json",
            "morph_maps/unsw_nb15.json",
        ),
        (
            "catalogs/cse_cic_ids2018.json",
            "fixtures/cse_cic_ids2018_inputs.json",
            "morph_maps/cse_cic_ids2018.json",
        ),
    ] {
        let catalog = load_catalog(data_path(cat)).unwrap();
        let fixture = load_fixture(data_path(fix)).unwrap();
        let inputs = inputs_from_fixture(&catalog, &fixture).unwrap();
        let report = score_all(&inputs, &ThresholdConfig::default()).unwrap();
        let morphs = perturbscore::attack::load_morph_map(data_path(map)).unwrap();
        for entry in &morphs.entries {
            let hits_high = entry.features.iter().any(|feature| {
                report
                    .breakdowns
                    .iter()
                    .any(|b| &b.feature == feature && b.class_label == PsClass::High)
            });
            assert!(hits_high, "{map}: morph {} reaches no high-class feature", entry.morph);
        }
    }
}
