use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rayon::prelude::*;

use super::archive::{AnnotationRecord, PeakAnnotation, RecordSink};
use super::database::GlycanDatabase;
use super::settings::RunSettings;
use crate::error::{Error, Result};
use crate::fragment::{enumerate_fragments, fragment_as_precursor, FragmentIon, Precursor};
use crate::glycan::{Chemistry, Derivatization, DerivatizationState, GlycanStructure, MassSource};
use crate::ion::{enumerate_ion_configurations, matches, mz, IonConfiguration, IonSettings, MzTolerance};
use crate::scalar::Scalar;
use crate::spectra::{Peak, Scan, ScanId, ScanTree};

/// A precursor candidate for one scan: what is fragmented and how it is
/// charged.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<T: Scalar = f64> {
    pub precursor: Precursor<T>,
    pub config: IonConfiguration<T>,
    pub theoretical_mz: T,
}

impl<T: Scalar> Candidate<T> {
    pub fn glycan_id(&self) -> &str {
        self.precursor.glycan.id()
    }
}

/// A fragment ion that annotated at least one peak, kept for the next level.
#[derive(Debug, Clone)]
pub struct FragmentHit<T: Scalar = f64> {
    pub fragment: FragmentIon<T>,
    pub config: IonConfiguration<T>,
    pub theoretical_mz: T,
}

#[derive(Debug, Clone)]
pub struct ScanAnnotation<T: Scalar = f64> {
    pub record: AnnotationRecord<T>,
    pub hits: Vec<FragmentHit<T>>,
}

/// A database glycan with its precursor ions precomputed.
#[derive(Debug, Clone)]
pub struct PreparedGlycan<T: Scalar = f64> {
    pub glycan: Arc<GlycanStructure>,
    /// Candidates in (undermethylation, configuration) order.
    pub ions: Vec<Candidate<T>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStats {
    pub scans_annotated: usize,
    /// Scans above the configured maximum MS level.
    pub scans_skipped: usize,
    pub records: usize,
    /// Largest number of records held in memory at once.
    pub max_buffered_records: usize,
    /// MS^n scans without peaks.
    pub empty_spectra: usize,
    /// (scan, candidate) pairs abandoned at the fragment cap.
    pub capped: Vec<(ScanId, String)>,
}

/// Annotation engine for one set of run settings.
pub struct Engine<'a, T: Scalar = f64> {
    settings: &'a RunSettings<T>,
    chem: &'a Chemistry<T>,
    precursor_configs: Vec<IonConfiguration<T>>,
    /// Fragment ion configurations by (MS level, max |z|, max exchanges).
    fragment_configs: HashMap<(u8, u32, u32), Vec<IonConfiguration<T>>>,
}

fn exchange_count<T: Scalar>(config: &IonConfiguration<T>) -> u32 {
    config.exchanges.iter().map(|e| e.count).sum()
}

fn charge_allowed<T: Scalar>(scan: &Scan<T>, config: &IonConfiguration<T>) -> bool {
    scan.precursor_charge.is_none_or(|z| config.abs_charge() == z.unsigned_abs())
}

/// Indices of peaks within `tol` of `theoretical`; peaks sorted by m/z.
fn peaks_near<'p, T: Scalar>(peaks: &'p [Peak<T>], theoretical: T, tol: &MzTolerance<T>) -> impl Iterator<Item = usize> + 'p {
    let half = tol.half_width(theoretical);
    let mut start = peaks.partition_point(|p| p.mz < theoretical - half);
    while start > 0 && matches(peaks[start - 1].mz, theoretical, tol) {
        start -= 1;
    }
    let tol = *tol;
    (start..peaks.len())
        .take_while(move |&i| peaks[i].mz <= theoretical + half || matches(peaks[i].mz, theoretical, &tol))
        .filter(move |&i| matches(peaks[i].mz, theoretical, &tol))
}

impl<'a, T: Scalar> Engine<'a, T> {
    pub fn new(settings: &'a RunSettings<T>, chem: &'a Chemistry<T>) -> Result<Self> {
        let losses = settings.active_losses();
        let precursor_configs = enumerate_ion_configurations(&IonSettings { losses: losses.clone(), ..settings.ion.clone() })?;
        let mut fragment_configs = HashMap::new();
        for (level, level_settings) in settings.fragmentation.levels() {
            let level_losses: Vec<_> = losses.iter().filter(|l| level_settings.losses.contains(&l.name)).cloned().collect();
            for z in 1..=settings.ion.max_charge {
                for x in 0..=settings.ion.max_exchanges {
                    let ion = IonSettings {
                        max_charge: z,
                        carriers: settings.ion.carriers.clone(),
                        exchanges: settings.ion.exchanges.clone(),
                        max_exchanges: x,
                        losses: level_losses.clone(),
                    };
                    fragment_configs.insert((level, z, x), enumerate_ion_configurations(&ion)?);
                }
            }
        }
        Ok(Self { settings, chem, precursor_configs, fragment_configs })
    }

    pub fn settings(&self) -> &RunSettings<T> {
        self.settings
    }

    pub fn precursor_configs(&self) -> &[IonConfiguration<T>] {
        &self.precursor_configs
    }

    fn derivatization_states(&self, glycan: &GlycanStructure) -> Result<Vec<DerivatizationState>> {
        Ok(match self.settings.derivatization {
            Derivatization::Native => vec![DerivatizationState::NATIVE],
            Derivatization::Permethylated => {
                let sites = glycan.methylation_sites(self.chem.registry())?;
                (0..=self.settings.max_undermethylation.min(sites)).map(DerivatizationState::permethylated).collect()
            }
        })
    }

    /// Precomputes every precursor ion of a glycan.
    pub fn prepare(&self, glycan: &Arc<GlycanStructure>) -> Result<PreparedGlycan<T>> {
        let mut ions = Vec::new();
        for deriv in self.derivatization_states(glycan)? {
            let precursor = Precursor::intact(Arc::clone(glycan), deriv, self.chem)?;
            for config in &self.precursor_configs {
                let theoretical_mz = mz(precursor.neutral_mass, config)?;
                ions.push(Candidate { precursor: precursor.clone(), config: config.clone(), theoretical_mz });
            }
        }
        Ok(PreparedGlycan { glycan: Arc::clone(glycan), ions })
    }

    /// Precursor ions of `glycan` that explain the scan's precursor m/z.
    /// A known precursor charge restricts configurations to that |z|.
    pub fn match_precursor(&self, scan: &Scan<T>, glycan: &PreparedGlycan<T>) -> Vec<Candidate<T>> {
        let Some(observed) = scan.precursor_mz else { return Vec::new() };
        glycan
            .ions
            .iter()
            .filter(|c| charge_allowed(scan, &c.config) && matches(observed, c.theoretical_mz, &self.settings.ms1_tolerance))
            .cloned()
            .collect()
    }

    fn fragment_configs_for(&self, level: u8, precursor: &IonConfiguration<T>) -> Result<&[IonConfiguration<T>]> {
        let z = precursor.abs_charge().min(self.settings.ion.max_charge);
        let x = exchange_count(precursor).min(self.settings.ion.max_exchanges);
        self.fragment_configs.get(&(level, z, x)).map(Vec::as_slice).ok_or(Error::UndefinedLevel(level))
    }

    /// Every (fragment, ion configuration) the candidate can produce at
    /// `level`, with its theoretical m/z.
    pub fn theoretical_fragments(&self, candidate: &Candidate<T>, level: u8) -> Result<Vec<(FragmentIon<T>, IonConfiguration<T>, T)>> {
        let fragments = enumerate_fragments(&candidate.precursor, &self.settings.fragmentation, level, self.chem)?;
        let configs = self.fragment_configs_for(level, &candidate.config)?;
        let mut out = Vec::with_capacity(fragments.len() * configs.len());
        for fragment in fragments {
            for config in configs {
                let theo = mz(fragment.neutral_mass, config)?;
                out.push((fragment.clone(), config.clone(), theo));
            }
        }
        Ok(out)
    }

    /// Annotates one MS^n scan with one candidate and scores it by annotated
    /// peak count and annotated intensity. Each peak counts once however
    /// many fragments explain it.
    pub fn annotate_scan(&self, scan: &Scan<T>, candidate: &Candidate<T>) -> Result<ScanAnnotation<T>> {
        let level = scan.ms_level;
        let fragments = enumerate_fragments(&candidate.precursor, &self.settings.fragmentation, level, self.chem)?;
        let configs = self.fragment_configs_for(level, &candidate.config)?;
        let tol = &self.settings.msn_tolerance;
        let mut annotated = vec![false; scan.peaks.len()];
        let mut annotations = Vec::new();
        let mut hits = Vec::new();
        for fragment in &fragments {
            for config in configs {
                let theo = mz(fragment.neutral_mass, config)?;
                let mut hit = false;
                for i in peaks_near(&scan.peaks, theo, tol) {
                    annotated[i] = true;
                    hit = true;
                    annotations.push(PeakAnnotation {
                        peak_index: i,
                        fragment_signature: fragment.signature.clone(),
                        ion_signature: config.signature(),
                        theoretical_mz: theo,
                        delta: scan.peaks[i].mz - theo,
                    });
                }
                if hit {
                    hits.push(FragmentHit { fragment: fragment.clone(), config: config.clone(), theoretical_mz: theo });
                }
            }
        }
        annotations.sort_by_key(|a| a.peak_index);

        let (score_c, score_i, diagnostic) = if scan.peaks.is_empty() {
            (T::zero(), T::zero(), Some("empty spectrum".to_string()))
        } else {
            let count = annotated.iter().filter(|a| **a).count();
            let total = scan.total_intensity();
            let explained: T = scan.peaks.iter().zip(&annotated).filter(|(_, a)| **a).map(|(p, _)| p.intensity).sum();
            let score_i = if total > T::zero() { explained / total } else { T::zero() };
            (T::from_count(count) / T::from_count(scan.peaks.len()), score_i, None)
        };
        let record = AnnotationRecord {
            scan_id: scan.scan_id,
            glycan_id: candidate.glycan_id().to_string(),
            ion_signature: candidate.config.signature(),
            candidate_signature: candidate.precursor.signature.clone(),
            ms_level: level,
            score_c: Some(score_c),
            score_i: Some(score_i),
            peak_annotations: annotations,
            diagnostic,
        };
        Ok(ScanAnnotation { record, hits })
    }

    /// MS1 records: one per precursor ion matching at least one peak.
    pub fn annotate_ms1(&self, scan: &Scan<T>, glycan: &PreparedGlycan<T>) -> Vec<AnnotationRecord<T>> {
        glycan
            .ions
            .iter()
            .filter_map(|c| {
                let ion_signature = c.config.signature();
                let annotations: Vec<PeakAnnotation<T>> = peaks_near(&scan.peaks, c.theoretical_mz, &self.settings.ms1_tolerance)
                    .map(|i| PeakAnnotation {
                        peak_index: i,
                        fragment_signature: c.precursor.signature.clone(),
                        ion_signature: ion_signature.clone(),
                        theoretical_mz: c.theoretical_mz,
                        delta: scan.peaks[i].mz - c.theoretical_mz,
                    })
                    .collect();
                (!annotations.is_empty()).then(|| AnnotationRecord {
                    scan_id: scan.scan_id,
                    glycan_id: glycan.glycan.id().to_string(),
                    ion_signature,
                    candidate_signature: c.precursor.signature.clone(),
                    ms_level: 1,
                    score_c: None,
                    score_i: None,
                    peak_annotations: annotations,
                    diagnostic: None,
                })
            })
            .collect()
    }

    /// Candidates for an MS^n scan (n ≥ 3): fragments annotated in the parent
    /// scan, carrying no neutral loss, whose m/z matches this scan's
    /// precursor within the MS^n tolerance.
    pub fn child_candidates(&self, scan: &Scan<T>, parent_hits: &[FragmentHit<T>]) -> Vec<Candidate<T>> {
        let Some(observed) = scan.precursor_mz else { return Vec::new() };
        let mut seen = HashSet::new();
        parent_hits
            .iter()
            .filter(|h| !h.config.has_losses() && charge_allowed(scan, &h.config))
            .filter(|h| matches(observed, h.theoretical_mz, &self.settings.msn_tolerance))
            .filter(|h| seen.insert((h.fragment.signature.clone(), h.config.signature())))
            .map(|h| Candidate {
                precursor: fragment_as_precursor(&h.fragment),
                config: h.config.clone(),
                theoretical_mz: h.theoretical_mz,
            })
            .collect()
    }

    fn candidates_for(&self, tree: &ScanTree<T>, scan: &Scan<T>, prepared: &[PreparedGlycan<T>], cache: &ParentCache<T>) -> Result<Vec<Candidate<T>>> {
        if scan.ms_level == 2 {
            return Ok(prepared.iter().flat_map(|g| self.match_precursor(scan, g)).collect());
        }
        let parent_id = scan.parent_scan_id.ok_or(Error::Orphan { scan: scan.scan_id, level: scan.ms_level })?;
        let computed;
        let hits = match cache.get(&parent_id) {
            Some((_, hits)) => hits.as_slice(),
            None => {
                // parent not yet visited (it has a larger id): recompute it
                let parent = tree.get(parent_id).ok_or(Error::DanglingParent { scan: scan.scan_id, parent: parent_id })?;
                let candidates = self.candidates_for(tree, parent, prepared, cache)?;
                computed = self.annotate_candidates(parent, &candidates, &mut RunStats::default())?.into_iter().flat_map(|a| a.hits).collect::<Vec<_>>();
                computed.as_slice()
            }
        };
        Ok(self.child_candidates(scan, hits))
    }

    fn annotate_candidates(&self, scan: &Scan<T>, candidates: &[Candidate<T>], stats: &mut RunStats) -> Result<Vec<ScanAnnotation<T>>> {
        let results: Vec<Result<ScanAnnotation<T>>> = if self.settings.parallel {
            candidates.par_iter().map(|c| self.annotate_scan(scan, c)).collect()
        } else {
            candidates.iter().map(|c| self.annotate_scan(scan, c)).collect()
        };
        let mut out = Vec::with_capacity(results.len());
        for (candidate, result) in candidates.iter().zip(results) {
            match result {
                Ok(a) => out.push(a),
                Err(Error::FragmentCap { .. }) => stats.capped.push((scan.scan_id, candidate.precursor.signature.clone())),
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    /// Annotates every scan of the run against the database, streaming
    /// records to `sink` in (scan id, glycan id, configuration) order. Only
    /// one scan's records are held in memory at a time.
    pub fn annotate_run<S: RecordSink<T>>(&self, tree: &ScanTree<T>, db: &GlycanDatabase, sink: &mut S) -> Result<RunStats> {
        if db.is_empty() {
            return Err(Error::Config("glycan database is empty".into()));
        }
        let prepared: Vec<PreparedGlycan<T>> = db.glycans().map(|g| self.prepare(g)).collect::<Result<_>>()?;
        let mut stats = RunStats::default();
        let mut cache: ParentCache<T> = HashMap::new();

        for scan in tree.scans() {
            if scan.ms_level > self.settings.max_ms_level {
                stats.scans_skipped += 1;
                continue;
            }
            stats.scans_annotated += 1;
            let mut buffer: Vec<AnnotationRecord<T>> = Vec::new();
            if scan.ms_level == 1 {
                buffer.extend(prepared.iter().flat_map(|g| self.annotate_ms1(scan, g)));
            } else {
                let candidates = self.candidates_for(tree, scan, &prepared, &cache)?;
                let annotations = self.annotate_candidates(scan, &candidates, &mut stats)?;
                let later_children = tree.children(scan.scan_id).iter().filter(|c| **c > scan.scan_id).count();
                let mut hits = Vec::new();
                if scan.peaks.is_empty() {
                    stats.empty_spectra += 1;
                }
                for a in annotations {
                    if later_children > 0 && scan.ms_level < self.settings.max_ms_level {
                        hits.extend(a.hits);
                    }
                    buffer.push(a.record);
                }
                if later_children > 0 && scan.ms_level < self.settings.max_ms_level {
                    cache.insert(scan.scan_id, (later_children, hits));
                }
                if let Some(parent) = scan.parent_scan_id {
                    if let Some(entry) = cache.get_mut(&parent) {
                        entry.0 -= 1;
                        if entry.0 == 0 {
                            cache.remove(&parent);
                        }
                    }
                }
            }
            stats.max_buffered_records = stats.max_buffered_records.max(buffer.len());
            stats.records += buffer.len();
            for record in buffer {
                sink.accept(record)?;
            }
        }
        Ok(stats)
    }
}

type ParentCache<T> = HashMap<ScanId, (usize, Vec<FragmentHit<T>>)>;
