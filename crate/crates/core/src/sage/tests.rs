use std::collections::BTreeSet;

use super::*;
use crate::engine::{AnnotationRecord, PeakAnnotation};
use crate::error::Error;
use crate::ion::MzTolerance;
use crate::spectra::{link_precursors, Scan};

const G1: &str = "G1@1000.0000";
const G2: &str = "G2@1000.0000";
const F1: &str = "B@300.0000";
const F3: &str = "Y@500.0000";
const F5: &str = "Y@520.0000";
const F7: &str = "B+Y@200.0000";

fn example(scan: u64, level: u8, precursor: &str, parent: Option<&str>, features: &[&str]) -> TrainingExample {
    TrainingExample {
        scan_id: scan,
        level,
        precursor: precursor.to_string(),
        parent: parent.map(str::to_string),
        features: features.iter().map(|f| f.to_string()).collect(),
    }
}

fn repeat(n: usize, e: TrainingExample) -> impl Iterator<Item = TrainingExample> {
    std::iter::repeat_n(e, n)
}

/// G1 -> F1: 50, G1 -> F3: 20, G2 -> F3: 40, F3 -> F7: 10, F5 -> F7: 15.
fn worked_graph() -> SageGraph {
    let mut examples: Vec<TrainingExample> = Vec::new();
    examples.extend(repeat(20, example(1, 0, G1, None, &[F1, F3])));
    examples.extend(repeat(30, example(2, 0, G1, None, &[F1])));
    examples.extend(repeat(39, example(3, 0, G2, None, &[F3])));
    examples.extend(repeat(1, example(4, 0, G2, None, &[F3, F5])));
    examples.extend(repeat(10, example(5, 1, F3, Some(G1), &[F7])));
    examples.extend(repeat(15, example(6, 1, F5, Some(G2), &[F7])));
    let mut g = SageGraph::new();
    g.train(&examples).unwrap();
    g
}

fn worked_features() -> FeatureSet {
    let mut f = FeatureSet::new();
    f.insert(1, F1, []);
    f.insert(1, F3, []);
    f.insert(2, F7, [F3.to_string()]);
    f
}

#[test]
fn worked_example_scores() {
    let g = worked_graph();
    assert_eq!(g.child_total(1, F3), 60);
    assert_eq!(g.child_total(2, F7), 25);
    let floor = SmoothingConfig::default();
    let f = worked_features();
    let s1: f64 = g.score(G1, &f, &floor);
    let s2: f64 = g.score(G2, &f, &floor);
    assert!((s1 - 50.0 / 50.0 * 20.0 / 60.0 * 10.0 / 25.0).abs() < 1e-9);
    assert!((s1 - 0.133333333).abs() < 1e-9);
    assert!((s2 - 0.1 * 40.0 / 60.0 * 10.0 / 25.0).abs() < 1e-9);
    assert!((s2 - 0.026666667).abs() < 1e-9);

    let tol = MzTolerance::da(0.05).unwrap();
    let ranked = g.classify(1000.0, &f, &tol, 0.01, &floor, None, None);
    let ids: Vec<&str> = ranked.iter().map(|(g, _)| g.as_str()).collect();
    assert_eq!(ids, vec!["G1", "G2"]);
    assert_eq!(g.classify(1000.0, &f, &tol, 0.01, &floor, Some(1), None).len(), 1);
    assert!(g.classify(1000.2, &f, &tol, 0.01, &floor, None, None).is_empty());
}

#[test]
fn conditional_and_smoothing() {
    let g = worked_graph();
    let root = NodeKey::new(0, G2);
    let child = NodeKey::new(1, F1);
    assert_eq!(g.conditional(&root, &child, &SmoothingConfig::<f64>::default()).unwrap(), 0.1);
    let m = SmoothingConfig::<f64>::m_estimate(2.0, 0.5).unwrap();
    // 2 * 0.5 / (50 + 2)
    assert!((g.conditional(&root, &child, &m).unwrap() - 1.0 / 52.0).abs() < 1e-15);
    let unknown = NodeKey::new(1, "B@1.0000");
    assert!(matches!(g.conditional(&root, &unknown, &m), Err(Error::UnknownNode(_))));
    // unseen features contribute the smoothed value
    let mut f = FeatureSet::new();
    f.insert(1, "B@1.0000", []);
    assert_eq!(g.score::<f64>(G1, &f, &SmoothingConfig::default()), 0.1);
}

#[test]
fn training_counts() {
    let mut g = SageGraph::new();
    let e = example(1, 0, "G@10.0000", None, &["B@1.0000", "Y@2.0000"]);
    g.train(std::slice::from_ref(&e)).unwrap();
    assert_eq!(g.node_frequency(0, "G@10.0000"), Some(1));
    assert_eq!(g.node_frequency(1, "B@1.0000"), Some(1));
    assert_eq!(g.edge_frequency(0, "G@10.0000", "Y@2.0000"), Some(1));
    g.train(std::slice::from_ref(&e)).unwrap();
    assert!(g.nodes().all(|(_, f)| f == 2));
    assert!(g.edges().all(|(_, _, f)| f == 2));

    let mut h = SageGraph::new();
    h.train(&[example(1, 0, "G@10.0000", None, &["B@1.0000"]), example(2, 0, "G@10.0000", None, &["Y@2.0000"])])
        .unwrap();
    assert_eq!(h.node_frequency(0, "G@10.0000"), Some(2));
    assert_eq!(h.edge_count(), 2);
}

#[test]
fn missing_parent_linkage_leaves_graph_unchanged() {
    let mut g = worked_graph();
    let before = g.clone();
    let orphan = example(9, 1, F1, Some(G2), &[F7]);
    assert!(matches!(g.train(&[orphan]), Err(Error::MissingParentLinkage { scan: 9 })));
    assert_eq!(g, before);
}

#[test]
fn model_file_round_trip_and_integrity() {
    let g = worked_graph();
    let mut bytes = Vec::new();
    g.save(&mut bytes).unwrap();
    let loaded = SageGraph::load(bytes.as_slice()).unwrap();
    assert_eq!(loaded, g);
    let mut again = Vec::new();
    loaded.save(&mut again).unwrap();
    assert_eq!(again, bytes);

    let text = String::from_utf8(bytes).unwrap();
    let tampered = text.replace("E 0 G1@1000.0000 B@300.0000 50", "E 0 G1@1000.0000 B@300.0000 51");
    assert!(matches!(SageGraph::load(tampered.as_bytes()), Err(Error::Checksum { .. })));
    let versioned = text.replacen("SAGE v1", "SAGE v9", 1);
    assert!(matches!(SageGraph::load(versioned.as_bytes()), Err(Error::Version(_))));
}

#[test]
fn scaling_frequencies_keeps_scores() {
    let g = worked_graph();
    let f = worked_features();
    let floor = SmoothingConfig::default();
    let s: f64 = g.score(G1, &f, &floor);
    let scaled: f64 = g.scaled(7).score(G1, &f, &floor);
    assert!((s - scaled).abs() < 1e-12);
}

fn record(scan: u64, glycan: &str, level: u8, cand: &str, peaks: &[(&str, f64)]) -> AnnotationRecord {
    AnnotationRecord {
        scan_id: scan,
        glycan_id: glycan.to_string(),
        ion_signature: "Na+*1".to_string(),
        candidate_signature: cand.to_string(),
        ms_level: level,
        score_c: Some(0.5),
        score_i: Some(0.5),
        peak_annotations: peaks
            .iter()
            .enumerate()
            .map(|(i, (sig, mz))| PeakAnnotation {
                peak_index: i,
                fragment_signature: sig.to_string(),
                ion_signature: "Na+*1".to_string(),
                theoretical_mz: *mz,
                delta: 0.0,
            })
            .collect(),
        diagnostic: None,
    }
}

fn archive_fixture() -> (crate::spectra::ScanTree, Vec<AnnotationRecord>) {
    let tree = link_precursors(vec![
        Scan::ms1(1, vec![]),
        Scan::msn(2, 2, Some(1), 1000.0, None, vec![]),
        Scan::msn(3, 3, Some(2), 500.0, None, vec![]),
    ])
    .unwrap();
    let records = vec![
        record(1, "G1", 1, "G1|M|u0", &[]),
        record(2, "G1", 2, "G1|M|u0", &[("G1|B1|u0", 300.0), ("G1|Y2|u0", 500.0)]),
        record(2, "G2", 2, "G2|M|u0", &[("G2|Y1|u0", 500.0)]),
        record(3, "G1", 3, "G1|Y2|u0", &[("G1|B1+Y2|u0", 200.0)]),
        record(3, "G2", 3, "G2|Y1|u0", &[("G2|B1+Y1|u0", 200.0)]),
    ];
    (tree, records)
}

#[test]
fn examples_from_archive_and_selections() {
    let (tree, records) = archive_fixture();
    let key = |r: &AnnotationRecord| (r.scan_id, r.glycan_id.clone(), r.config_key());
    let approved: BTreeSet<AnnotationKey> = [key(&records[1]), key(&records[3])].into_iter().collect();
    assert_eq!(records_needed(&approved, &tree), [2, 3].into_iter().collect());
    let examples = training_examples(&approved, &records, &tree, 0.01).unwrap();
    assert_eq!(examples.len(), 2);
    assert_eq!(examples[0].precursor, G1);
    assert_eq!(examples[0].features, [F1, F3].iter().map(|s| s.to_string()).collect());
    assert_eq!((examples[1].level, examples[1].precursor.as_str(), examples[1].parent.as_deref()), (1, F3, Some(G1)));
    assert_eq!(examples[1].features, [F7.to_string()].into_iter().collect());
    let mut g = SageGraph::new();
    g.train(&examples).unwrap();
    assert_eq!(g.edge_frequency(1, F3, F7), Some(1));

    // MS3 approved but its MS2 parent is not
    let approved: BTreeSet<AnnotationKey> = [key(&records[4])].into_iter().collect();
    let examples = training_examples(&approved, &records, &tree, 0.01).unwrap();
    assert!(matches!(SageGraph::new().train(&examples), Err(Error::MissingParentLinkage { scan: 3 })));
}

#[test]
fn post_filter_policies() {
    let (tree, records) = archive_fixture();
    let g = worked_graph();
    let params = ScoringParams {
        precursor_tolerance: MzTolerance::da(0.01).unwrap(),
        fragment_tolerance: MzTolerance::da(0.05).unwrap(),
        bucket_width: 0.01,
        smoothing: SmoothingConfig::default(),
    };
    let out = post_filter(&g, &tree, &records, &params, FilterPolicy::MinProbability(0.05));
    let ranked = &out.survivors[&2];
    assert_eq!(ranked.len(), 1);
    assert!((ranked[0].1 - 0.133333333).abs() < 1e-9);
    assert_eq!(out.keep, vec![true, true, false, true, false]);
    let out = post_filter(&g, &tree, &records, &params, FilterPolicy::TopK(2));
    assert!(out.keep.iter().all(|k| *k));
    assert!((out.survivors[&2][1].1 - 0.026666667).abs() < 1e-9);
    assert!("top-k=0".parse::<FilterPolicy>().is_err());
    assert_eq!("min-probability=0.05".parse::<FilterPolicy>().unwrap(), FilterPolicy::MinProbability(0.05));
}

#[test]
fn de_novo_features_match_archive_features() {
    let (tree, records) = archive_fixture();
    let g = worked_graph();
    let tol = MzTolerance::da(0.05).unwrap();
    let mut peaks_tree = tree.clone().into_scans().collect::<Vec<_>>();
    peaks_tree[1].peaks = vec![crate::spectra::Peak::new(300.01, 1.0), crate::spectra::Peak::new(499.98, 1.0)];
    peaks_tree[2].peaks = vec![crate::spectra::Peak::new(200.02, 1.0)];
    let peaks_tree = link_precursors(peaks_tree).unwrap();
    let observed = observe_scan(&FeatureIndex::from_graph(&g), &peaks_tree, 2, &tol);
    assert_eq!(observed, worked_features());
    let index = RecordsByScan::new(records.iter());
    let from_archive = archive_features(&index, &tree, 2, &["G1"].into_iter().collect(), 0.01);
    assert_eq!(from_archive, worked_features());
}
