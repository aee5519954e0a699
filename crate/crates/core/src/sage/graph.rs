use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use sha2::{Digest, Sha256};

use super::features::{label_glycan, label_mz, FeatureSet};
use super::smoothing::SmoothingConfig;
use crate::error::{Error, Result};
use crate::ion::MzTolerance;
use crate::scalar::Scalar;
use crate::spectra::ScanId;

/// A node address: graph level (0 for glycan roots) and label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeKey {
    pub level: u8,
    pub label: String,
}

impl NodeKey {
    pub fn new(level: u8, label: impl Into<String>) -> Self {
        Self { level, label: label.into() }
    }
}

/// One approved annotation, reduced to graph labels: the annotated
/// precursor at `level` and the distinct features annotating its peaks at
/// `level + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub scan_id: ScanId,
    pub level: u8,
    pub precursor: String,
    /// Label of the precursor's own parent at `level - 1`; required above level 0.
    pub parent: Option<String>,
    pub features: BTreeSet<String>,
}

/// Layered co-occurrence graph. Edges join level i to level i + 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SageGraph {
    nodes: BTreeMap<NodeKey, u64>,
    /// (parent, child label) -> frequency; the child sits one level below.
    edges: BTreeMap<(NodeKey, String), u64>,
    /// Sum of incoming edge frequencies per child node.
    child_totals: BTreeMap<NodeKey, u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphStats {
    pub nodes_per_level: BTreeMap<u8, usize>,
    pub edges_per_level: BTreeMap<u8, usize>,
    pub nodes: usize,
    pub edges: usize,
}

const HEADER_PREFIX: &str = "SAGE";
const VERSION: &str = "v1";

impl SageGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of levels in use.
    pub fn levels(&self) -> usize {
        self.nodes.keys().map(|k| usize::from(k.level) + 1).max().unwrap_or(0)
    }

    pub fn node_frequency(&self, level: u8, label: &str) -> Option<u64> {
        self.nodes.get(&NodeKey::new(level, label)).copied()
    }

    pub fn edge_frequency(&self, parent_level: u8, parent: &str, child: &str) -> Option<u64> {
        self.edges.get(&(NodeKey::new(parent_level, parent), child.to_string())).copied()
    }

    pub fn child_total(&self, level: u8, label: &str) -> u64 {
        self.child_totals.get(&NodeKey::new(level, label)).copied().unwrap_or(0)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&NodeKey, u64)> {
        self.nodes.iter().map(|(k, f)| (k, *f))
    }

    /// Edges as (parent, child label, frequency).
    pub fn edges(&self) -> impl Iterator<Item = (&NodeKey, &str, u64)> {
        self.edges.iter().map(|((p, c), f)| (p, c.as_str(), *f))
    }

    pub fn roots(&self) -> impl Iterator<Item = (&str, u64)> {
        self.nodes.iter().take_while(|(k, _)| k.level == 0).map(|(k, f)| (k.label.as_str(), *f))
    }

    pub fn stats(&self) -> GraphStats {
        let mut stats = GraphStats { nodes: self.nodes.len(), edges: self.edges.len(), ..GraphStats::default() };
        for key in self.nodes.keys() {
            *stats.nodes_per_level.entry(key.level).or_default() += 1;
        }
        for (parent, _) in self.edges.keys() {
            *stats.edges_per_level.entry(parent.level).or_default() += 1;
        }
        stats
    }

    fn bump_node(&mut self, key: NodeKey, by: u64) {
        *self.nodes.entry(key).or_insert(0) += by;
    }

    fn bump_edge(&mut self, parent: NodeKey, child: &str, by: u64) {
        let child_key = NodeKey::new(parent.level + 1, child);
        *self.edges.entry((parent, child.to_string())).or_insert(0) += by;
        *self.child_totals.entry(child_key).or_insert(0) += by;
    }

    /// Incremental training. Examples are applied level by level; a
    /// precursor above level 0 must already hang under its parent, either
    /// from earlier training or from this batch. On error the graph is left
    /// untouched.
    ///
    /// Each example adds one to its root precursor (level 0 only), one to
    /// each feature node and one to each precursor-feature edge.
    pub fn train(&mut self, examples: &[TrainingExample]) -> Result<()> {
        let mut next = self.clone();
        let mut ordered: Vec<&TrainingExample> = examples.iter().collect();
        ordered.sort_by_key(|e| e.level);
        for example in ordered {
            let precursor = NodeKey::new(example.level, example.precursor.clone());
            if example.level == 0 {
                next.bump_node(precursor.clone(), 1);
            } else {
                let linked = example
                    .parent
                    .as_deref()
                    .is_some_and(|p| next.edges.contains_key(&(NodeKey::new(example.level - 1, p), example.precursor.clone())));
                if !linked {
                    return Err(Error::MissingParentLinkage { scan: example.scan_id });
                }
            }
            for feature in &example.features {
                next.bump_node(NodeKey::new(example.level + 1, feature.clone()), 1);
                next.bump_edge(precursor.clone(), feature, 1);
            }
        }
        *self = next;
        Ok(())
    }

    /// Probability of `parent` given `child`: edge frequency over the
    /// child's incoming total, or the smoothed value when no edge exists.
    pub fn conditional<T: Scalar>(&self, parent: &NodeKey, child: &NodeKey, smoothing: &SmoothingConfig<T>) -> Result<T> {
        if child.level != parent.level + 1 || !self.nodes.contains_key(child) {
            return Err(Error::UnknownNode(format!("{} at level {}", child.label, child.level)));
        }
        Ok(self.conditional_or_floor(parent, child, smoothing))
    }

    fn conditional_or_floor<T: Scalar>(&self, parent: &NodeKey, child: &NodeKey, smoothing: &SmoothingConfig<T>) -> T {
        let total = self.child_totals.get(child).copied().unwrap_or(0);
        match self.edges.get(&(parent.clone(), child.label.clone())) {
            Some(&freq) if total > 0 => T::lit(freq as f64) / T::lit(total as f64),
            _ => smoothing.absent(T::lit(total as f64)),
        }
    }

    /// Score of a root given the observed features: the product over
    /// level-1 features of P(root | feature), times, for each deeper
    /// feature, the largest P(parent | feature) over its observed parents.
    /// Features unknown to the graph contribute the smoothed value.
    pub fn score<T: Scalar>(&self, root: &str, features: &FeatureSet, smoothing: &SmoothingConfig<T>) -> T {
        let root_key = NodeKey::new(0, root);
        let mut score = T::one();
        for (level, level_features) in &features.levels {
            for (label, parents) in level_features {
                let child = NodeKey::new(*level, label.clone());
                let p = if *level == 1 {
                    self.conditional_or_floor(&root_key, &child, smoothing)
                } else {
                    parents
                        .iter()
                        .map(|parent| self.conditional_or_floor(&NodeKey::new(level - 1, parent.clone()), &child, smoothing))
                        .fold(None, |best: Option<T>, p| Some(best.map_or(p, |b| b.max(p))))
                        .unwrap_or_else(|| smoothing.absent(T::lit(self.child_totals.get(&child).copied().unwrap_or(0) as f64)))
                };
                score = score * p;
            }
        }
        score
    }

    /// Ranks glycans for a scan. Roots whose m/z bucket lies within
    /// `tolerance` of the precursor are candidates; a glycan with several
    /// such roots takes its best score. Sorted by descending probability,
    /// then glycan id; truncated to `k` when given. `allowed` restricts the
    /// candidate glycans.
    pub fn classify<T: Scalar>(
        &self,
        precursor_mz: T,
        features: &FeatureSet,
        tolerance: &MzTolerance<T>,
        bucket_width: T,
        smoothing: &SmoothingConfig<T>,
        k: Option<usize>,
        allowed: Option<&BTreeSet<String>>,
    ) -> Vec<(String, T)> {
        let mut best: BTreeMap<&str, T> = BTreeMap::new();
        let half_bucket = bucket_width / T::lit(2.0);
        for (root, _) in self.roots() {
            let (Some(glycan), Some(mz)) = (label_glycan(root), label_mz(root)) else { continue };
            if allowed.is_some_and(|a| !a.contains(glycan)) {
                continue;
            }
            let mz = T::lit(mz);
            if (precursor_mz - mz).abs() > tolerance.half_width(mz) + half_bucket {
                continue;
            }
            let s = self.score(root, features, smoothing);
            best.entry(glycan).and_modify(|b| *b = b.max(s)).or_insert(s);
        }
        let mut ranked: Vec<(String, T)> = best.into_iter().map(|(g, s)| (g.to_string(), s)).collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
        if let Some(k) = k {
            ranked.truncate(k);
        }
        ranked
    }

    fn body(&self) -> String {
        let mut body = String::new();
        for (key, freq) in &self.nodes {
            body.push_str(&format!("N {} {} {}\n", key.level, key.label, freq));
        }
        for ((parent, child), freq) in &self.edges {
            body.push_str(&format!("E {} {} {} {}\n", parent.level, parent.label, child, freq));
        }
        body
    }

    /// Writes the canonical model file: a versioned header with a SHA-256
    /// checksum of the body, then sorted node and edge lines.
    pub fn save<W: Write>(&self, out: &mut W) -> Result<()> {
        let body = self.body();
        let checksum = hex(&Sha256::digest(body.as_bytes()));
        write!(out, "{HEADER_PREFIX} {VERSION} levels={} checksum={checksum}\n{body}", self.levels())?;
        out.flush()?;
        Ok(())
    }

    pub fn load<R: BufRead>(mut input: R) -> Result<Self> {
        let mut header = String::new();
        input.read_line(&mut header)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [HEADER_PREFIX, version, levels, checksum] = fields.as_slice() else {
            return Err(Error::parse(1, "expected `SAGE <version> levels=<n> checksum=<hex>`"));
        };
        if *version != VERSION {
            return Err(Error::Version(version.to_string()));
        }
        let levels: usize = levels
            .strip_prefix("levels=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::parse(1, "bad levels field"))?;
        let expected = checksum.strip_prefix("checksum=").ok_or_else(|| Error::parse(1, "bad checksum field"))?;

        let mut body = String::new();
        input.read_to_string(&mut body)?;
        let actual = hex(&Sha256::digest(body.as_bytes()));
        if actual != expected {
            return Err(Error::Checksum { expected: expected.to_string(), actual });
        }

        let mut graph = SageGraph::new();
        for (idx, line) in body.lines().enumerate() {
            let line_no = idx + 2;
            let fields: Vec<&str> = line.split(' ').collect();
            let bad = || Error::parse(line_no, format!("bad model line `{line}`"));
            match fields.as_slice() {
                ["N", level, label, freq] => {
                    let key = NodeKey::new(level.parse().map_err(|_| bad())?, *label);
                    let freq: u64 = freq.parse().map_err(|_| bad())?;
                    if freq == 0 || graph.nodes.insert(key, freq).is_some() {
                        return Err(bad());
                    }
                }
                ["E", level, parent, child, freq] => {
                    let parent = NodeKey::new(level.parse().map_err(|_| bad())?, *parent);
                    let freq: u64 = freq.parse().map_err(|_| bad())?;
                    let child_key = NodeKey::new(parent.level + 1, *child);
                    if freq == 0 || !graph.nodes.contains_key(&parent) || !graph.nodes.contains_key(&child_key) {
                        return Err(bad());
                    }
                    if graph.edges.contains_key(&(parent.clone(), child.to_string())) {
                        return Err(bad());
                    }
                    graph.bump_edge(parent, child, freq);
                }
                _ => return Err(bad()),
            }
        }
        if graph.levels() != levels {
            return Err(Error::parse(1, format!("header declares {levels} levels, body has {}", graph.levels())));
        }
        Ok(graph)
    }

    /// Recomputes every child total from the edges (consistency check).
    pub fn recomputed_child_totals(&self) -> BTreeMap<NodeKey, u64> {
        let mut totals = BTreeMap::new();
        for ((parent, child), freq) in &self.edges {
            *totals.entry(NodeKey::new(parent.level + 1, child.clone())).or_insert(0) += freq;
        }
        totals
    }

    pub fn child_totals(&self) -> &BTreeMap<NodeKey, u64> {
        &self.child_totals
    }

    /// Multiplies every frequency by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        let mut g = self.clone();
        g.nodes.values_mut().for_each(|f| *f *= factor);
        g.edges.values_mut().for_each(|f| *f *= factor);
        g.child_totals.values_mut().for_each(|f| *f *= factor);
        g
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
