#![allow(dead_code)]

use glycoannot::engine::{Engine, GlycanDatabase, RunSettings};
use glycoannot::eval::{generate_synthetic, Dataset, EvalSettings, SyntheticSettings};
use glycoannot::glycan::{Chemistry, ResidueRegistry};
use glycoannot::ion::MzTolerance;
use glycoannot::sage::{ScoringParams, SmoothingConfig};
use proptest::prelude::*;

/// Small library: one sequence-isomer pair plus unrelated structures.
pub const LIBRARY: &str = "\
G1\tHex(1-4)Hex(1-4)Hex
G2\tHex(1-3)[Hex(1-6)]Hex(1-4)HexNAc
G3\tHex(1-4)HexNAc(1-4)HexNAc
G4\tHexNAc(1-4)Hex(1-4)HexNAc
G5\tdHex(1-6)HexNAc(1-4)HexNAc
G6\tNeuAc(2-3)Hex(1-4)HexNAc
";

pub fn library() -> GlycanDatabase {
    GlycanDatabase::read(LIBRARY.as_bytes(), &ResidueRegistry::default()).unwrap()
}

pub fn chemistry() -> Chemistry<f64> {
    Chemistry::default()
}

pub fn settings(chem: &Chemistry<f64>) -> RunSettings<f64> {
    RunSettings::defaults(chem)
}

pub fn scoring(settings: &RunSettings<f64>) -> ScoringParams<f64> {
    ScoringParams {
        precursor_tolerance: settings.ms1_tolerance,
        fragment_tolerance: settings.msn_tolerance,
        bucket_width: settings.bucket_width,
        smoothing: settings.smoothing,
    }
}

pub fn eval_settings(settings: &RunSettings<f64>, top_k: Option<usize>) -> EvalSettings<f64> {
    EvalSettings { params: scoring(settings), top_k }
}

pub fn floor() -> SmoothingConfig<f64> {
    SmoothingConfig::default()
}

pub fn da(v: f64) -> MzTolerance<f64> {
    MzTolerance::da(v).unwrap()
}

/// Synthetic datasets annotated by the engine.
pub fn curated_datasets(seed: u64, n: usize, synth: &SyntheticSettings) -> Vec<Dataset<f64>> {
    curated_datasets_from(&library(), seed, n, synth)
}

pub fn curated_datasets_from(db: &GlycanDatabase, seed: u64, n: usize, synth: &SyntheticSettings) -> Vec<Dataset<f64>> {
    let chem = chemistry();
    let s = settings(&chem);
    let engine = Engine::new(&s, &chem).unwrap();
    generate_synthetic(seed, n, db, &engine, synth)
        .unwrap()
        .into_iter()
        .map(|d| Dataset::annotate(d.tree, d.selections, &engine, db).unwrap())
        .collect()
}

/// Random, hierarchy-consistent split of a dataset's approvals into two
/// disjoint sets: an MS3 approval is only kept with its MS2 parent, and
/// never lands in the first set when its parent is in the second.
pub fn split_selections(
    dataset: &Dataset<f64>,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> (
    std::collections::BTreeSet<glycoannot::sage::AnnotationKey>,
    std::collections::BTreeSet<glycoannot::sage::AnnotationKey>,
) {
    use rand::Rng;
    use std::collections::{BTreeMap, BTreeSet};
    let keys = dataset.selections.approved_keys();
    let (mut a, mut b) = (BTreeSet::new(), BTreeSet::new());
    let mut placed: BTreeMap<(u64, String), bool> = BTreeMap::new();
    let level = |scan: u64| dataset.tree.get(scan).map_or(0, |s| s.ms_level);
    let mut ordered: Vec<_> = keys.into_iter().collect();
    ordered.sort_by_key(|k| (level(k.0), k.0));
    for key in ordered {
        if !rng.gen_bool(0.7) {
            continue;
        }
        let in_a = if level(key.0) <= 2 {
            rng.gen_bool(0.5)
        } else {
            let parent = dataset.tree.get(key.0).and_then(|s| s.parent_scan_id).unwrap();
            match placed.get(&(parent, key.1.clone())) {
                None => continue,
                Some(false) => false,
                Some(true) => rng.gen_bool(0.5),
            }
        };
        placed.insert((key.0, key.1.clone()), in_a);
        if in_a { a.insert(key) } else { b.insert(key) };
    }
    (a, b)
}

const RESIDUES: [&str; 5] = ["Hex", "HexNAc", "dHex", "NeuAc", "Pent"];
const POSITIONS: [u8; 3] = [3, 4, 6];

/// Turns raw (parent pick, residue) draws into a tree as (parent, residue)
/// per node; node 0 is the reducing end. At most three children per node.
pub fn shape_tree(raw: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut children = vec![0usize; raw.len()];
    raw.iter()
        .enumerate()
        .map(|(i, (pick, residue))| {
            let residue = residue % RESIDUES.len();
            if i == 0 {
                return (usize::MAX, residue);
            }
            let mut parent = pick % i;
            if children[parent] == POSITIONS.len() {
                parent = i - 1;
            }
            children[parent] += 1;
            (parent, residue)
        })
        .collect()
}

pub fn tree_strategy(max: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
    proptest::collection::vec((any::<usize>(), 0..RESIDUES.len()), 2..=max).prop_map(|raw| shape_tree(&raw))
}

pub fn random_tree(rng: &mut rand_chacha::ChaCha8Rng, min: usize, max: usize) -> Vec<(usize, usize)> {
    use rand::Rng;
    let n = rng.gen_range(min..=max);
    let raw: Vec<(usize, usize)> = (0..n).map(|_| (rng.gen::<usize>(), rng.gen_range(0..RESIDUES.len()))).collect();
    shape_tree(&raw)
}

pub fn render(tree: &[(usize, usize)]) -> String {
    fn text(tree: &[(usize, usize)], node: usize) -> String {
        let kids: Vec<usize> = (0..tree.len()).filter(|&c| c != 0 && tree[c].0 == node).collect();
        let mut out = String::new();
        for (k, child) in kids.iter().enumerate() {
            let anomer = if RESIDUES[tree[*child].1] == "NeuAc" { 2 } else { 1 };
            let sub = format!("{}({anomer}-{})", text(tree, *child), POSITIONS[k]);
            out.push_str(&if k == 0 { sub } else { format!("[{sub}]") });
        }
        out.push_str(RESIDUES[tree[node].1]);
        out
    }
    text(tree, 0)
}

/// One randomized (scan, candidate) pair checked against an independent
/// recount of annotated peaks and resum of annotated intensity.
pub fn score_oracle_case(engine: &Engine<'_, f64>, rng: &mut rand_chacha::ChaCha8Rng) -> Result<(), String> {
    use glycoannot::spectra::{Peak, Scan};
    use rand::Rng;
    use std::sync::Arc;
    let text = render(&random_tree(rng, 2, 5));
    let glycan = Arc::new(glycoannot::glycan::GlycanStructure::parse("R", &text, &ResidueRegistry::default()).unwrap());
    let prepared = engine.prepare(&glycan).map_err(|e| e.to_string())?;
    let candidate = &prepared.ions[rng.gen_range(0..prepared.ions.len())];
    let theo: Vec<f64> =
        engine.theoretical_fragments(candidate, 2).map_err(|e| e.to_string())?.into_iter().map(|(_, _, mz)| mz).collect();
    let tol = engine.settings().msn_tolerance;
    let width = tol.half_width(1000.0);
    let mut peaks = Vec::new();
    for _ in 0..rng.gen_range(0..25) {
        let mz = if !theo.is_empty() && rng.gen_bool(0.5) {
            theo[rng.gen_range(0..theo.len())] + rng.gen_range(-1.2..1.2) * width
        } else {
            rng.gen_range(100.0..2000.0)
        };
        peaks.push(Peak::new(mz, rng.gen_range(0.5..500.0)));
    }
    let scan = Scan::msn(2, 2, Some(1), candidate.theoretical_mz, None, peaks);
    let mut scan = scan;
    scan.sort_peaks();
    let record = engine.annotate_scan(&scan, candidate).map_err(|e| e.to_string())?.record;

    let annotated: Vec<bool> = scan.peaks.iter().map(|p| theo.iter().any(|t| (p.mz - t).abs() <= tol.half_width(*t))).collect();
    let count = annotated.iter().filter(|a| **a).count();
    let total: f64 = scan.peaks.iter().map(|p| p.intensity).sum();
    let hit: f64 = scan.peaks.iter().zip(&annotated).filter(|(_, a)| **a).map(|(p, _)| p.intensity).sum();
    let (want_c, want_i) =
        if scan.peaks.is_empty() { (0.0, 0.0) } else { (count as f64 / scan.peaks.len() as f64, hit / total) };
    let (got_c, got_i) = (record.score_c.unwrap(), record.score_i.unwrap());
    if (got_c - want_c).abs() > 1e-12 || (got_i - want_i).abs() > 1e-12 {
        return Err(format!("{text} {}: got ({got_c}, {got_i}) want ({want_c}, {want_i})", candidate.config));
    }
    Ok(())
}
