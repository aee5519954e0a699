use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{Candidate, Engine, GlycanDatabase};
use crate::error::{Error, Result};
use crate::fragment::{fragment_as_precursor, FragmentIon};
use crate::ion::IonConfiguration;
use crate::sage::{ApprovedAnnotationSet, Selection};
use crate::scalar::Scalar;
use crate::spectra::{link_precursors, Peak, Scan, ScanId, ScanTree};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSettings {
    pub scans_per_dataset: usize,
    /// Spurious peaks added per true fragment peak.
    pub noise: f64,
    /// Also emit one MS3 scan per MS2 scan when the settings define level 3.
    pub ms3: bool,
    /// Preferred precursor ion configuration signature.
    pub precursor_ion: String,
}

impl Default for SyntheticSettings {
    fn default() -> Self {
        Self { scans_per_dataset: 24, noise: 0.0, ms3: true, precursor_ion: "Na+*1".to_string() }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset<T: Scalar = f64> {
    pub tree: ScanTree<T>,
    /// Generating annotations, all approved.
    pub selections: ApprovedAnnotationSet,
}

fn pick_candidate<'c, T: Scalar>(ions: &'c [Candidate<T>], preferred: &str) -> Option<&'c Candidate<T>> {
    let intact = |c: &&Candidate<T>| c.precursor.derivatization.missing_methyls == 0;
    ions.iter()
        .filter(intact)
        .find(|c| c.config.signature() == preferred)
        .or_else(|| ions.iter().filter(intact).find(|c| c.config.abs_charge() == 1 && !c.config.has_losses()))
}

fn fragment_peaks<T: Scalar>(
    engine: &Engine<'_, T>,
    candidate: &Candidate<T>,
    level: u8,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(FragmentIon<T>, T, Peak<T>)>> {
    let sig = candidate.config.signature();
    let mut out = Vec::new();
    for (fragment, config, mz) in engine.theoretical_fragments(candidate, level)? {
        if config.signature() == sig {
            let intensity = T::lit(rng.gen_range(10.0..100.0));
            out.push((fragment, mz, Peak::new(mz, intensity)));
        }
    }
    Ok(out)
}

fn finish_peaks<T: Scalar>(mut peaks: Vec<Peak<T>>, noise: f64, upper: T, rng: &mut ChaCha8Rng) -> Vec<Peak<T>> {
    let spurious = (noise * peaks.len() as f64).round() as usize;
    let upper = upper.as_f64().max(150.0);
    for _ in 0..spurious {
        peaks.push(Peak::new(T::lit(rng.gen_range(100.0..upper)), T::lit(rng.gen_range(1.0..100.0))));
    }
    peaks.sort_by(|a, b| a.mz.partial_cmp(&b.mz).unwrap_or(std::cmp::Ordering::Equal));
    // coincident theoretical values become one peak
    peaks.dedup_by(|b, a| {
        let same = (a.mz - b.mz).abs() <= T::lit(1e-9);
        if same {
            a.intensity += b.intensity;
        }
        same
    });
    peaks
}

fn selection(scan_id: ScanId, glycan: &str, config: &IonConfiguration<impl Scalar>, candidate_sig: &str) -> Selection {
    Selection {
        scan_id,
        glycan_id: glycan.to_string(),
        config: format!("{};{}", config.signature(), candidate_sig),
        approved: true,
        reviewer: "synthetic".to_string(),
        timestamp: "1970-01-01T00:00:00Z".to_string(),
    }
}

/// Deterministic synthetic runs: each MS2 scan holds the theoretical
/// fragment peaks of one randomly chosen glycan (plus spurious peaks at the
/// given rate), optionally followed by an MS3 scan of one of its fragments.
/// Glycans are drawn in shuffled blocks that hold every library entry once,
/// so each dataset is balanced up to one partial block. The generating
/// annotations form the approved set.
pub fn generate_synthetic<T: Scalar>(
    seed: u64,
    n_datasets: usize,
    db: &GlycanDatabase,
    engine: &Engine<'_, T>,
    settings: &SyntheticSettings,
) -> Result<Vec<SyntheticDataset<T>>> {
    if db.is_empty() {
        return Err(Error::Config("synthetic generation needs a non-empty glycan database".into()));
    }
    let mut candidates = Vec::with_capacity(db.len());
    for glycan in db.glycans() {
        let prepared = engine.prepare(glycan)?;
        let c = pick_candidate(&prepared.ions, &settings.precursor_ion)
            .ok_or_else(|| Error::Config(format!("no singly charged precursor ion for `{}`", glycan.id())))?
            .clone();
        candidates.push(c);
    }
    let with_ms3 = settings.ms3 && engine.settings().max_ms_level >= 3 && engine.settings().fragmentation.level(3).is_ok();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut datasets = Vec::with_capacity(n_datasets);
    for _ in 0..n_datasets {
        let mut scans = Vec::new();
        let mut ms1_peaks = Vec::new();
        let mut selections = ApprovedAnnotationSet::default();
        let mut next_id: ScanId = 2;
        let mut block: Vec<usize> = Vec::new();
        for _ in 0..settings.scans_per_dataset {
            if block.is_empty() {
                block = (0..candidates.len()).collect();
                block.shuffle(&mut rng);
            }
            let candidate = &candidates[block.pop().expect("refilled above")];
            let glycan = candidate.glycan_id().to_string();
            let z = candidate.config.abs_charge() as i32;
            let ms2_id = next_id;
            next_id += 1;
            ms1_peaks.push(Peak::new(candidate.theoretical_mz, T::lit(rng.gen_range(100.0..1000.0))));
            let fragments = fragment_peaks(engine, candidate, 2, &mut rng)?;
            let peaks = fragments.iter().map(|(_, _, p)| *p).collect();
            let upper = candidate.theoretical_mz * T::lit(f64::from(z));
            scans.push(Scan::msn(ms2_id, 2, Some(1), candidate.theoretical_mz, Some(z), finish_peaks(peaks, settings.noise, upper, &mut rng)));
            selections.push(selection(ms2_id, &glycan, &candidate.config, &candidate.precursor.signature));

            if !with_ms3 {
                continue;
            }
            let selectable: Vec<&(FragmentIon<T>, T, Peak<T>)> = fragments.iter().filter(|(f, _, _)| f.members.len() >= 2).collect();
            if selectable.is_empty() {
                continue;
            }
            let (fragment, mz, _) = selectable[rng.gen_range(0..selectable.len())];
            let child = Candidate { precursor: fragment_as_precursor(fragment), config: candidate.config.clone(), theoretical_mz: *mz };
            let ms3_id = next_id;
            next_id += 1;
            let peaks = fragment_peaks(engine, &child, 3, &mut rng)?.into_iter().map(|(_, _, p)| p).collect();
            scans.push(Scan::msn(ms3_id, 3, Some(ms2_id), *mz, Some(z), finish_peaks(peaks, settings.noise, *mz * T::lit(f64::from(z)), &mut rng)));
            selections.push(selection(ms3_id, &glycan, &child.config, &fragment.signature));
        }
        let ms1 = Scan::ms1(1, finish_peaks(ms1_peaks, 0.0, T::lit(150.0), &mut rng));
        scans.insert(0, ms1);
        datasets.push(SyntheticDataset { tree: link_precursors(scans)?, selections });
    }
    Ok(datasets)
}
