use std::collections::{BTreeMap, BTreeSet};

use crate::engine::AnnotationRecord;
use crate::ion::{matches, MzTolerance};
use crate::scalar::Scalar;
use crate::spectra::{Peak, ScanId, ScanTree};

/// Observed features of one scan hierarchy, keyed by graph level (1 and up).
/// Each feature carries the labels of its observed parents one level up;
/// level-1 features hang under the root and carry none.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureSet {
    pub levels: BTreeMap<u8, BTreeMap<String, BTreeSet<String>>>,
}

impl FeatureSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, level: u8, label: impl Into<String>, parents: impl IntoIterator<Item = String>) {
        self.levels.entry(level).or_default().entry(label.into()).or_default().extend(parents);
    }

    pub fn len(&self) -> usize {
        self.levels.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn merge(&mut self, other: &FeatureSet) {
        for (level, features) in &other.levels {
            for (label, parents) in features {
                self.insert(*level, label.clone(), parents.iter().cloned());
            }
        }
    }
}

fn fmt_mz(mz: f64) -> String {
    let text = format!("{mz:.4}");
    if text == "-0.0000" { "0.0000".to_string() } else { text }
}

/// Root label: glycan id and the precursor m/z rounded to its bucket.
pub fn root_label<T: Scalar>(glycan_id: &str, precursor_mz: T, bucket_width: T) -> String {
    let width = bucket_width.as_f64();
    let bucket = (precursor_mz.as_f64() / width).round() * width;
    format!("{glycan_id}@{}", fmt_mz(bucket))
}

/// Feature label: the sorted cleavage types of a fragment signature and its
/// theoretical m/z. Fragments of different glycans with the same types and
/// m/z share a label; an intact precursor is typed `M`.
pub fn feature_label<T: Scalar>(fragment_signature: &str, theoretical_mz: T) -> String {
    let cuts = fragment_signature.split('|').nth(1).unwrap_or("M");
    let mut types: Vec<&str> = cuts.split('+').map(|c| c.get(..1).unwrap_or("M")).collect();
    types.sort_unstable();
    format!("{}@{}", types.join("+"), fmt_mz(theoretical_mz.as_f64()))
}

/// m/z carried by a root or feature label.
pub fn label_mz(label: &str) -> Option<f64> {
    label.rsplit_once('@').and_then(|(_, mz)| mz.parse().ok())
}

/// Glycan id of a root label.
pub fn label_glycan(label: &str) -> Option<&str> {
    label.rsplit_once('@').map(|(g, _)| g)
}

/// m/z lookup over the feature nodes of a graph, per level.
#[derive(Debug, Clone, Default)]
pub struct FeatureIndex {
    levels: BTreeMap<u8, Vec<(f64, String)>>,
}

impl FeatureIndex {
    pub fn from_graph(graph: &super::SageGraph) -> Self {
        let mut levels: BTreeMap<u8, Vec<(f64, String)>> = BTreeMap::new();
        for (key, _) in graph.nodes().filter(|(k, _)| k.level > 0) {
            if let Some(mz) = label_mz(&key.label) {
                levels.entry(key.level).or_default().push((mz, key.label.clone()));
            }
        }
        for entries in levels.values_mut() {
            entries.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        }
        Self { levels }
    }

    /// Labels at `level` whose m/z matches `observed`.
    pub fn matching<T: Scalar>(&self, level: u8, observed: T, tol: &MzTolerance<T>) -> Vec<&str> {
        let Some(entries) = self.levels.get(&level) else { return Vec::new() };
        // widest plausible window, then the exact tolerance test
        let reach = tol.half_width(observed).as_f64() * 2.0 + 1e-6;
        let lo = observed.as_f64() - reach;
        let start = entries.partition_point(|(mz, _)| *mz < lo);
        entries[start..]
            .iter()
            .take_while(|(mz, _)| *mz <= observed.as_f64() + reach)
            .filter(|(mz, _)| matches(observed, T::lit(*mz), tol))
            .map(|(_, label)| label.as_str())
            .collect()
    }

    fn matching_peaks<T: Scalar>(&self, level: u8, peaks: &[Peak<T>], tol: &MzTolerance<T>) -> BTreeSet<String> {
        peaks.iter().flat_map(|p| self.matching(level, p.mz, tol)).map(str::to_string).collect()
    }
}

/// Features of an MS2 scan and its descendants, found by matching peak and
/// precursor m/z values against the graph's feature nodes.
pub fn observe_scan<T: Scalar>(index: &FeatureIndex, tree: &ScanTree<T>, scan_id: ScanId, tol: &MzTolerance<T>) -> FeatureSet {
    let mut features = FeatureSet::new();
    let Some(scan) = tree.get(scan_id) else { return features };
    for label in index.matching_peaks(1, &scan.peaks, tol) {
        features.insert(1, label, []);
    }
    observe_children(index, tree, scan_id, 1, tol, &mut features);
    features
}

fn observe_children<T: Scalar>(
    index: &FeatureIndex,
    tree: &ScanTree<T>,
    scan_id: ScanId,
    level: u8,
    tol: &MzTolerance<T>,
    features: &mut FeatureSet,
) {
    for &child_id in tree.children(scan_id) {
        let Some(child) = tree.get(child_id) else { continue };
        let Some(precursor) = child.precursor_mz else { continue };
        let parents: Vec<String> = index.matching(level, precursor, tol).into_iter().map(str::to_string).collect();
        if parents.is_empty() {
            continue;
        }
        for label in index.matching_peaks(level + 1, &child.peaks, tol) {
            features.insert(level + 1, label, parents.iter().cloned());
        }
        observe_children(index, tree, child_id, level + 1, tol, features);
    }
}

/// Distinct feature labels annotating the peaks of a record.
pub fn record_features<T: Scalar>(record: &AnnotationRecord<T>) -> BTreeSet<String> {
    record.peak_annotations.iter().map(|p| feature_label(&p.fragment_signature, p.theoretical_mz)).collect()
}

/// Archive records grouped by scan, for resolving precursor labels.
pub struct RecordsByScan<'a, T: Scalar> {
    by_scan: BTreeMap<ScanId, Vec<&'a AnnotationRecord<T>>>,
}

impl<'a, T: Scalar> RecordsByScan<'a, T> {
    pub fn new(records: impl IntoIterator<Item = &'a AnnotationRecord<T>>) -> Self {
        let mut by_scan: BTreeMap<ScanId, Vec<&'a AnnotationRecord<T>>> = BTreeMap::new();
        for r in records {
            by_scan.entry(r.scan_id).or_default().push(r);
        }
        Self { by_scan }
    }

    pub fn scan(&self, scan_id: ScanId) -> &[&'a AnnotationRecord<T>] {
        self.by_scan.get(&scan_id).map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ScanId, &[&'a AnnotationRecord<T>])> {
        self.by_scan.iter().map(|(id, v)| (*id, v.as_slice()))
    }

    /// The record of the parent scan whose peaks carry this record's
    /// candidate fragment with the same ion configuration, preferring records
    /// accepted by `prefer`, together with that fragment's theoretical m/z.
    pub fn parent_record(
        &self,
        record: &AnnotationRecord<T>,
        tree: &ScanTree<T>,
        prefer: &dyn Fn(&AnnotationRecord<T>) -> bool,
    ) -> Option<(&'a AnnotationRecord<T>, T)> {
        let parent_id = tree.get(record.scan_id)?.parent_scan_id?;
        let hit = |r: &&'a AnnotationRecord<T>| {
            if r.glycan_id != record.glycan_id {
                return None;
            }
            r.peak_annotations
                .iter()
                .find(|p| p.fragment_signature == record.candidate_signature && p.ion_signature == record.ion_signature)
                .map(|p| (*r, p.theoretical_mz))
        };
        let candidates = self.scan(parent_id);
        candidates.iter().filter(|r| prefer(r)).find_map(hit).or_else(|| candidates.iter().find_map(hit))
    }

    /// Graph level and label of the node a record's peaks hang under, plus
    /// the label of that node's own parent. MS2 records resolve to a root;
    /// deeper records to the feature selected in the parent scan. `None`
    /// when the record is an MS1 record or the chain cannot be resolved.
    pub fn precursor_node(
        &self,
        record: &AnnotationRecord<T>,
        tree: &ScanTree<T>,
        bucket_width: T,
        prefer: &dyn Fn(&AnnotationRecord<T>) -> bool,
    ) -> Option<(u8, String, Option<String>)> {
        match record.ms_level {
            0 | 1 => None,
            2 => {
                let mz = tree.get(record.scan_id)?.precursor_mz?;
                Some((0, root_label(&record.glycan_id, mz, bucket_width), None))
            }
            level => {
                let (parent, mz) = self.parent_record(record, tree, prefer)?;
                let (_, parent_label, _) = self.precursor_node(parent, tree, bucket_width, prefer)?;
                Some((level - 2, feature_label(&record.candidate_signature, mz), Some(parent_label)))
            }
        }
    }
}
