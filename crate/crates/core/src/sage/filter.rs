use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use super::features::{observe_scan, record_features, FeatureIndex, FeatureSet, RecordsByScan};
use super::{SageGraph, SmoothingConfig};
use crate::engine::{AnnotationRecord, RunSettings};
use crate::error::{Error, Result};
use crate::ion::MzTolerance;
use crate::scalar::{parse_scalar, Scalar};
use crate::spectra::{ScanId, ScanTree};

/// Which glycans survive per MS2 scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterPolicy<T: Scalar = f64> {
    TopK(usize),
    MinProbability(T),
}

impl<T: Scalar> fmt::Display for FilterPolicy<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterPolicy::TopK(k) => write!(f, "top-k={k}"),
            FilterPolicy::MinProbability(p) => write!(f, "min-probability={p}"),
        }
    }
}

impl<T: Scalar> FromStr for FilterPolicy<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('=') {
            Some(("top-k", k)) => match k.parse() {
                Ok(k) if k > 0 => Ok(FilterPolicy::TopK(k)),
                _ => Err(Error::Config(format!("top-k must be a positive integer, got `{k}`"))),
            },
            Some(("min-probability", p)) => match parse_scalar::<T>(p) {
                Some(p) if p >= T::zero() && p <= T::one() => Ok(FilterPolicy::MinProbability(p)),
                _ => Err(Error::Config(format!("min-probability must lie in [0, 1], got `{p}`"))),
            },
            _ => Err(Error::Config(format!("bad filter policy `{s}`; expected top-k=<k> or min-probability=<p>"))),
        }
    }
}

/// Parameters shared by classification and post-filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringParams<T: Scalar = f64> {
    pub precursor_tolerance: MzTolerance<T>,
    pub fragment_tolerance: MzTolerance<T>,
    pub bucket_width: T,
    pub smoothing: SmoothingConfig<T>,
}

impl<T: Scalar> ScoringParams<T> {
    pub fn from_settings(settings: &RunSettings<T>) -> Self {
        Self {
            precursor_tolerance: settings.ms1_tolerance,
            fragment_tolerance: settings.msn_tolerance,
            bucket_width: settings.bucket_width,
            smoothing: settings.smoothing,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome<T: Scalar = f64> {
    /// One flag per input record.
    pub keep: Vec<bool>,
    /// Ranked glycans per MS2 scan, after the policy is applied.
    pub survivors: BTreeMap<ScanId, Vec<(String, T)>>,
}

/// Features an archive shows for an MS2 scan and its descendants: the union
/// over every candidate's annotated fragments.
pub fn archive_features<T: Scalar>(
    index: &RecordsByScan<'_, T>,
    tree: &ScanTree<T>,
    scan_id: ScanId,
    glycans: &BTreeSet<&str>,
    bucket_width: T,
) -> FeatureSet {
    let mut features = FeatureSet::new();
    for record in index.scan(scan_id).iter().filter(|r| glycans.contains(r.glycan_id.as_str())) {
        for label in record_features(record) {
            features.insert(1, label, []);
        }
    }
    let mut stack: Vec<ScanId> = tree.children(scan_id).to_vec();
    while let Some(child) = stack.pop() {
        stack.extend_from_slice(tree.children(child));
        for record in index.scan(child).iter().filter(|r| glycans.contains(r.glycan_id.as_str())) {
            if let Some((level, label, _)) = index.precursor_node(record, tree, bucket_width, &|_| true) {
                for feature in record_features(record) {
                    features.insert(level + 1, feature, [label.clone()]);
                }
            }
        }
    }
    features
}

/// Scores the candidate glycans of each annotated MS2 scan and keeps the
/// records of surviving glycans (MS2 records and their descendants). MS1
/// records always survive.
pub fn post_filter<T: Scalar>(
    graph: &SageGraph,
    tree: &ScanTree<T>,
    records: &[AnnotationRecord<T>],
    params: &ScoringParams<T>,
    policy: FilterPolicy<T>,
) -> FilterOutcome<T> {
    let index = RecordsByScan::new(records.iter());
    let mut survivors = BTreeMap::new();
    for (scan_id, scan_records) in index.iter() {
        let Some(scan) = tree.get(scan_id).filter(|s| s.ms_level == 2) else { continue };
        let Some(precursor) = scan.precursor_mz else { continue };
        let glycans: BTreeSet<&str> = scan_records.iter().map(|r| r.glycan_id.as_str()).collect();
        let features = archive_features(&index, tree, scan_id, &glycans, params.bucket_width);
        let allowed: BTreeSet<String> = glycans.iter().map(|g| g.to_string()).collect();
        let k = match policy {
            FilterPolicy::TopK(k) => Some(k),
            FilterPolicy::MinProbability(_) => None,
        };
        let mut ranked = graph.classify(
            precursor,
            &features,
            &params.precursor_tolerance,
            params.bucket_width,
            &params.smoothing,
            k,
            Some(&allowed),
        );
        if let FilterPolicy::MinProbability(p) = policy {
            ranked.retain(|(_, score)| *score >= p);
        }
        survivors.insert(scan_id, ranked);
    }
    let keep = records
        .iter()
        .map(|r| {
            if r.ms_level <= 1 {
                return true;
            }
            let Some(ancestor) = tree.ancestor_at(r.scan_id, 2) else { return false };
            survivors.get(&ancestor.scan_id).is_some_and(|s| s.iter().any(|(g, _)| *g == r.glycan_id))
        })
        .collect();
    FilterOutcome { keep, survivors }
}

/// De novo classification of every MS2 scan with a precursor m/z: features
/// are the graph nodes matching the scan's peaks and those of its children.
pub fn classify_run<T: Scalar>(
    graph: &SageGraph,
    tree: &ScanTree<T>,
    params: &ScoringParams<T>,
    k: Option<usize>,
) -> Vec<(ScanId, Vec<(String, T)>)> {
    let index = FeatureIndex::from_graph(graph);
    tree.scans()
        .filter(|s| s.ms_level == 2)
        .filter_map(|scan| {
            let precursor = scan.precursor_mz?;
            let features = observe_scan(&index, tree, scan.scan_id, &params.fragment_tolerance);
            let ranked = graph.classify(
                precursor,
                &features,
                &params.precursor_tolerance,
                params.bucket_width,
                &params.smoothing,
                k,
                None,
            );
            Some((scan.scan_id, ranked))
        })
        .collect()
}
