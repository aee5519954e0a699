#![allow(dead_code)]

use std::path::{Path, PathBuf};

use glycoannot::engine::{ArchiveWriter, Engine, GlycanDatabase, RunSettings};
use glycoannot::eval::{generate_synthetic, SyntheticSettings};
use glycoannot::glycan::{Chemistry, ResidueRegistry};
use glycoannot::spectra::write_canonical;
use glycoannot_cli::commands::{DATASET_ARCHIVE, DATASET_INDEX, DATASET_SELECTIONS, DATASET_SPECTRA};

pub const LIBRARY: &str = "\
G1\tHex(1-4)Hex(1-4)Hex
G2\tHex(1-3)[Hex(1-6)]Hex(1-4)HexNAc
G3\tHex(1-4)HexNAc(1-4)HexNAc
G4\tHexNAc(1-4)Hex(1-4)HexNAc
";

pub fn library() -> GlycanDatabase {
    GlycanDatabase::read(LIBRARY.as_bytes(), &ResidueRegistry::default()).unwrap()
}

pub fn settings(chem: &Chemistry) -> RunSettings {
    RunSettings::defaults(chem)
}

/// Writes `n` synthetic curated datasets (spectra, archive, selections) under
/// `root/run-<i>` and the library under `root/lib.gdb`.
pub fn write_datasets(root: &Path, seed: u64, n: usize, noise: f64) -> Vec<PathBuf> {
    let chem = Chemistry::default();
    let settings = settings(&chem);
    let engine = Engine::new(&settings, &chem).unwrap();
    let db = library();
    std::fs::write(root.join("lib.gdb"), LIBRARY).unwrap();
    let synth = SyntheticSettings { scans_per_dataset: 12, noise, ..SyntheticSettings::default() };
    let mut dirs = Vec::new();
    for (i, d) in generate_synthetic(seed, n, &db, &engine, &synth).unwrap().iter().enumerate() {
        let dir = root.join(format!("run-{i}"));
        std::fs::create_dir_all(&dir).unwrap();
        let mut spectra = Vec::new();
        write_canonical(&mut spectra, &d.tree).unwrap();
        std::fs::write(dir.join(DATASET_SPECTRA), spectra).unwrap();
        let mut writer = ArchiveWriter::with_index(Vec::new(), Vec::new());
        engine.annotate_run(&d.tree, &db, &mut writer).unwrap();
        let (archive, index) = writer.finish().unwrap();
        std::fs::write(dir.join(DATASET_ARCHIVE), archive).unwrap();
        std::fs::write(dir.join(DATASET_INDEX), index.unwrap()).unwrap();
        let mut selections = Vec::new();
        d.selections.write(&mut selections).unwrap();
        std::fs::write(dir.join(DATASET_SELECTIONS), selections).unwrap();
        dirs.push(dir);
    }
    dirs
}

pub fn arg(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}
