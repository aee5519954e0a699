use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use super::features::{record_features, RecordsByScan};
use super::graph::TrainingExample;
use crate::engine::AnnotationRecord;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectra::{ScanId, ScanTree};

/// Key of one annotation: scan, glycan and `<ion>;<candidate>` configuration.
pub type AnnotationKey = (ScanId, String, String);

/// One curation decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub scan_id: ScanId,
    pub glycan_id: String,
    /// Configuration key of the annotation record (`<ion>;<candidate>`).
    pub config: String,
    pub approved: bool,
    pub reviewer: String,
    pub timestamp: String,
}

impl Selection {
    pub fn key(&self) -> AnnotationKey {
        (self.scan_id, self.glycan_id.clone(), self.config.clone())
    }

    fn parse(line: &str, line_no: usize) -> Result<Self> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |m: &str| Error::parse(line_no, m.to_string());
        let ["SEL", scan, glycan, config, approved, reviewer, timestamp] = fields.as_slice() else {
            return Err(bad("expected `SEL <scan> <glycan> <config> <0|1> <reviewer> <timestamp>`"));
        };
        Ok(Self {
            scan_id: scan.parse().map_err(|_| bad("bad scan id"))?,
            glycan_id: glycan.to_string(),
            config: config.to_string(),
            approved: match *approved {
                "1" => true,
                "0" => false,
                _ => return Err(bad("approval flag must be 0 or 1")),
            },
            reviewer: reviewer.to_string(),
            timestamp: timestamp.to_string(),
        })
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "SEL {} {} {} {} {} {}",
            self.scan_id,
            self.glycan_id,
            self.config,
            u8::from(self.approved),
            self.reviewer,
            self.timestamp
        )
    }
}

/// Append-only log of curation decisions; the latest decision per
/// annotation wins.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApprovedAnnotationSet {
    pub selections: Vec<Selection>,
}

impl ApprovedAnnotationSet {
    pub fn new(selections: Vec<Selection>) -> Self {
        Self { selections }
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut selections = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            selections.push(Selection::parse(&line, idx + 1)?);
        }
        Ok(Self { selections })
    }

    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        for s in &self.selections {
            writeln!(out, "{s}")?;
        }
        Ok(())
    }

    pub fn push(&mut self, selection: Selection) {
        self.selections.push(selection);
    }

    /// Latest decision per annotation.
    pub fn current(&self) -> BTreeMap<AnnotationKey, &Selection> {
        let mut latest = BTreeMap::new();
        for s in &self.selections {
            latest.insert(s.key(), s);
        }
        latest
    }

    pub fn approved_keys(&self) -> BTreeSet<AnnotationKey> {
        self.current().into_iter().filter(|(_, s)| s.approved).map(|(k, _)| k).collect()
    }
}

/// Turns approved annotations into training examples. `records` needs the
/// approved records plus the records of the parent scans of approved MS3+
/// records; [`records_needed`] tells which scans those are. MS1 approvals
/// carry no fragments and are skipped.
pub fn training_examples<T: Scalar>(
    approved: &BTreeSet<AnnotationKey>,
    records: &[AnnotationRecord<T>],
    tree: &ScanTree<T>,
    bucket_width: T,
) -> Result<Vec<TrainingExample>> {
    let index = RecordsByScan::new(records.iter());
    let is_approved = |r: &AnnotationRecord<T>| approved.contains(&(r.scan_id, r.glycan_id.clone(), r.config_key()));
    let mut found = BTreeSet::new();
    let mut examples = Vec::new();
    for record in records.iter().filter(|r| is_approved(r)) {
        found.insert((record.scan_id, record.glycan_id.clone(), record.config_key()));
        if record.ms_level < 2 {
            continue;
        }
        let Some((level, precursor, parent)) = index.precursor_node(record, tree, bucket_width, &is_approved) else {
            return Err(if record.ms_level == 2 {
                Error::InvalidScan { scan: record.scan_id, message: "approved MS2 scan has no precursor m/z".into() }
            } else {
                Error::MissingParentLinkage { scan: record.scan_id }
            });
        };
        examples.push(TrainingExample {
            scan_id: record.scan_id,
            level,
            precursor,
            parent,
            features: record_features(record),
        });
    }
    if let Some((scan, glycan, config)) = approved.difference(&found).next() {
        return Err(Error::InvalidScan {
            scan: *scan,
            message: format!("approved annotation {glycan} {config} not found in the archive"),
        });
    }
    examples.sort_by_key(|a| (a.level, a.scan_id));
    Ok(examples)
}

/// Scans whose records are needed to build training examples: every
/// approved scan plus the ancestors (down to MS2) of approved MS3+ scans.
pub fn records_needed<T: Scalar>(approved: &BTreeSet<AnnotationKey>, tree: &ScanTree<T>) -> BTreeSet<ScanId> {
    let mut scans = BTreeSet::new();
    for (scan_id, _, _) in approved {
        scans.insert(*scan_id);
        let mut current = tree.get(*scan_id);
        while let Some(scan) = current.filter(|s| s.ms_level > 2) {
            current = scan.parent_scan_id.and_then(|p| tree.get(p));
            if let Some(parent) = current {
                scans.insert(parent.scan_id);
            }
        }
    }
    scans
}
