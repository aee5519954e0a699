//! Scans, peaks and the linked MS^n scan forest.

mod canonical;
mod mzxml;

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use canonical::{read_canonical, write_canonical, write_scan, CanonicalReader, ReaderStats};
pub use mzxml::{read_mzxml_subset, read_mzxml_subset_with_report, write_mzxml_subset, MzXmlReport, PeakPrecision};

pub type ScanId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Peak<T: Scalar = f64> {
    pub mz: T,
    pub intensity: T,
}

impl<T: Scalar> Peak<T> {
    pub fn new(mz: T, intensity: T) -> Self {
        Self { mz, intensity }
    }

    fn is_valid(&self) -> bool {
        self.mz.is_finite() && self.mz > T::zero() && self.intensity.is_finite() && self.intensity >= T::zero()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scan<T: Scalar = f64> {
    pub scan_id: ScanId,
    pub ms_level: u8,
    pub precursor_mz: Option<T>,
    /// `None` when the instrument did not assign a charge state.
    pub precursor_charge: Option<i32>,
    pub parent_scan_id: Option<ScanId>,
    pub peaks: Vec<Peak<T>>,
}

impl<T: Scalar> Scan<T> {
    pub fn ms1(scan_id: ScanId, peaks: Vec<Peak<T>>) -> Self {
        Self { scan_id, ms_level: 1, precursor_mz: None, precursor_charge: None, parent_scan_id: None, peaks }
    }

    pub fn msn(
        scan_id: ScanId,
        ms_level: u8,
        parent_scan_id: Option<ScanId>,
        precursor_mz: T,
        precursor_charge: Option<i32>,
        peaks: Vec<Peak<T>>,
    ) -> Self {
        Self { scan_id, ms_level, precursor_mz: Some(precursor_mz), precursor_charge, parent_scan_id, peaks }
    }

    pub fn total_intensity(&self) -> T {
        self.peaks.iter().map(|p| p.intensity).sum()
    }

    /// Sorts peaks ascending by m/z; equal m/z keep input order.
    pub fn sort_peaks(&mut self) {
        self.peaks.sort_by(|a, b| a.mz.partial_cmp(&b.mz).unwrap_or(std::cmp::Ordering::Equal));
    }

    /// Checks the field-level invariants that do not need the rest of the run.
    pub fn validate(&self) -> Result<()> {
        let invalid = |message: &str| Error::InvalidScan { scan: self.scan_id, message: message.into() };
        if self.ms_level == 0 {
            return Err(invalid("MS level must be at least 1"));
        }
        if (self.ms_level == 1) != self.precursor_mz.is_none() {
            return Err(invalid("precursor m/z must be present exactly when MS level is above 1"));
        }
        if self.ms_level == 1 && self.parent_scan_id.is_some() {
            return Err(invalid("MS1 scan cannot have a parent"));
        }
        if let Some(mz) = self.precursor_mz {
            if !(mz.is_finite() && mz > T::zero()) {
                return Err(invalid("precursor m/z must be positive"));
            }
        }
        if self.precursor_charge == Some(0) {
            return Err(invalid("precursor charge cannot be zero"));
        }
        if let Some(bad) = self.peaks.iter().find(|p| !p.is_valid()) {
            return Err(invalid(&format!("invalid peak {}:{}", bad.mz, bad.intensity)));
        }
        Ok(())
    }
}

/// Scans of one run linked into a forest rooted at MS1 scans.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScanTree<T: Scalar = f64> {
    scans: BTreeMap<ScanId, Scan<T>>,
    children: BTreeMap<ScanId, Vec<ScanId>>,
    max_ms_level: u8,
}

impl<T: Scalar> ScanTree<T> {
    pub fn len(&self) -> usize {
        self.scans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scans.is_empty()
    }

    pub fn max_ms_level(&self) -> u8 {
        self.max_ms_level
    }

    pub fn get(&self, id: ScanId) -> Option<&Scan<T>> {
        self.scans.get(&id)
    }

    /// Scans in ascending id order.
    pub fn scans(&self) -> impl Iterator<Item = &Scan<T>> {
        self.scans.values()
    }

    pub fn children(&self, id: ScanId) -> &[ScanId] {
        self.children.get(&id).map_or(&[], Vec::as_slice)
    }

    pub fn roots(&self) -> impl Iterator<Item = &Scan<T>> {
        self.scans.values().filter(|s| s.parent_scan_id.is_none())
    }

    /// The scan's ancestor at `ms_level`, or the scan itself at that level.
    pub fn ancestor_at(&self, id: ScanId, ms_level: u8) -> Option<&Scan<T>> {
        let mut scan = self.scans.get(&id)?;
        while scan.ms_level > ms_level {
            scan = self.scans.get(&scan.parent_scan_id?)?;
        }
        (scan.ms_level == ms_level).then_some(scan)
    }

    pub fn into_scans(self) -> impl Iterator<Item = Scan<T>> {
        self.scans.into_values()
    }
}

/// Links scans into a forest.
///
/// Scans at MS level n ≥ 2 without an explicit parent are attached to the
/// closest preceding scan (in input order) at level n − 1. Peaks are sorted
/// ascending by m/z.
pub fn link_precursors<T: Scalar>(scans: Vec<Scan<T>>) -> Result<ScanTree<T>> {
    let mut last_at_level: HashMap<u8, ScanId> = HashMap::new();
    let mut by_id: BTreeMap<ScanId, Scan<T>> = BTreeMap::new();
    for mut scan in scans {
        scan.validate()?;
        if scan.ms_level >= 2 && scan.parent_scan_id.is_none() {
            let parent = last_at_level
                .get(&(scan.ms_level - 1))
                .copied()
                .ok_or(Error::Orphan { scan: scan.scan_id, level: scan.ms_level })?;
            scan.parent_scan_id = Some(parent);
        }
        last_at_level.insert(scan.ms_level, scan.scan_id);
        scan.sort_peaks();
        let id = scan.scan_id;
        if by_id.insert(id, scan).is_some() {
            return Err(Error::DuplicateScan(id));
        }
    }

    for scan in by_id.values() {
        let mut seen = HashSet::from([scan.scan_id]);
        let mut cursor = scan.parent_scan_id;
        while let Some(parent) = cursor {
            if !seen.insert(parent) {
                return Err(Error::Cycle(parent));
            }
            cursor = by_id.get(&parent).and_then(|p| p.parent_scan_id);
        }
    }

    let mut children: BTreeMap<ScanId, Vec<ScanId>> = BTreeMap::new();
    let mut max_ms_level = 0;
    for scan in by_id.values() {
        max_ms_level = max_ms_level.max(scan.ms_level);
        let Some(parent_id) = scan.parent_scan_id else { continue };
        let parent = by_id.get(&parent_id).ok_or(Error::DanglingParent { scan: scan.scan_id, parent: parent_id })?;
        if parent.ms_level + 1 != scan.ms_level {
            return Err(Error::LevelMismatch { scan: scan.scan_id, level: scan.ms_level, parent_level: parent.ms_level });
        }
        children.entry(parent_id).or_default().push(scan.scan_id);
    }
    Ok(ScanTree { scans: by_id, children, max_ms_level })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn peaks(mzs: &[f64]) -> Vec<Peak> {
        mzs.iter().map(|&mz| Peak::new(mz, 1.0)).collect()
    }

    #[test]
    fn explicit_and_inferred_parents_agree() {
        let explicit = vec![
            Scan::ms1(1, peaks(&[500.0])),
            Scan::msn(2, 2, Some(1), 500.0, None, peaks(&[200.0, 100.0])),
            Scan::msn(3, 3, Some(2), 200.0, Some(1), peaks(&[90.0])),
            Scan::msn(4, 2, Some(1), 500.0, Some(2), vec![]),
        ];
        let mut implicit = explicit.clone();
        for s in &mut implicit {
            s.parent_scan_id = None;
        }
        let a = link_precursors(explicit).unwrap();
        let b = link_precursors(implicit).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.children(1), &[2, 4]);
        assert_eq!(a.children(2), &[3]);
        assert_eq!(a.max_ms_level(), 3);
        assert_eq!(a.get(2).unwrap().peaks[0].mz, 100.0);
        assert_eq!(a.ancestor_at(3, 2).unwrap().scan_id, 2);
        assert_eq!(a.roots().count(), 1);
    }

    #[test]
    fn link_errors() {
        let dangling = vec![Scan::ms1(1, vec![]), Scan::msn(2, 2, Some(9), 500.0, None, vec![])];
        assert!(matches!(link_precursors(dangling), Err(Error::DanglingParent { scan: 2, parent: 9 })));

        let cyclic = vec![Scan::ms1(1, vec![]), Scan::msn(2, 2, Some(2), 500.0, None, vec![])];
        assert!(matches!(link_precursors(cyclic), Err(Error::Cycle(2))));

        let orphan = vec![Scan::<f64>::msn(5, 2, None, 500.0, None, vec![])];
        assert!(matches!(link_precursors(orphan), Err(Error::Orphan { scan: 5, level: 2 })));

        let skip = vec![Scan::ms1(1, vec![]), Scan::msn(2, 3, Some(1), 500.0, None, vec![])];
        assert!(matches!(link_precursors(skip), Err(Error::LevelMismatch { scan: 2, level: 3, parent_level: 1 })));

        let dup = vec![Scan::<f64>::ms1(1, vec![]), Scan::ms1(1, vec![])];
        assert!(matches!(link_precursors(dup), Err(Error::DuplicateScan(1))));

        let bad_peak = vec![Scan::ms1(1, vec![Peak::new(-1.0, 1.0)])];
        assert!(matches!(link_precursors(bad_peak), Err(Error::InvalidScan { scan: 1, .. })));
    }

    #[test]
    fn zero_intensity_peaks_are_kept() {
        let tree = link_precursors(vec![Scan::ms1(1, vec![Peak::new(100.0, 0.0), Peak::new(50.0, 3.0)])]).unwrap();
        assert_eq!(tree.get(1).unwrap().peaks.len(), 2);
    }
}
