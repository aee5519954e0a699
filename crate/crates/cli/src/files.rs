//! Loading and saving the files the commands work on.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use glycoannot::engine::{read_archive, AnnotationRecord, GlycanDatabase, RunSettings};
use glycoannot::glycan::{Chemistry, ElementMassTable, ResidueRegistry};
use glycoannot::sage::{ApprovedAnnotationSet, SageGraph};
use glycoannot::spectra::{read_canonical, read_mzxml_subset, ScanTree};

/// Configuration directory taken from `GLYC_HOME`. It may hold
/// `elements.cfg`, `residues.cfg` and `run.cfg`; each missing file falls
/// back to the shipped default.
#[derive(Debug, Clone, Default)]
pub struct ConfigHome {
    pub dir: Option<PathBuf>,
}

impl ConfigHome {
    pub fn from_env() -> Self {
        Self { dir: std::env::var_os("GLYC_HOME").map(PathBuf::from) }
    }

    fn file(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name)).filter(|p| p.is_file())
    }

    pub fn chemistry(&self) -> Result<Chemistry> {
        let elements = match self.file("elements.cfg") {
            Some(path) => ElementMassTable::from_config(&read_text(&path)?).with_context(|| path.display().to_string())?,
            None => ElementMassTable::default(),
        };
        let residues = match self.file("residues.cfg") {
            Some(path) => ResidueRegistry::from_config(&read_text(&path)?).with_context(|| path.display().to_string())?,
            None => ResidueRegistry::default(),
        };
        Ok(Chemistry::new(elements, residues)?)
    }

    /// Settings from `explicit`, else `run.cfg` in the home directory, else
    /// the shipped defaults.
    pub fn settings(&self, explicit: Option<&Path>, chem: &Chemistry) -> Result<RunSettings> {
        match explicit.map(Path::to_path_buf).or_else(|| self.file("run.cfg")) {
            Some(path) => RunSettings::parse(&read_text(&path)?, chem).with_context(|| path.display().to_string()),
            None => Ok(RunSettings::defaults(chem)),
        }
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

/// Flushes and syncs a buffered file.
pub fn close(out: BufWriter<File>) -> Result<()> {
    let file = out.into_inner().map_err(|e| e.into_error())?;
    file.sync_all()?;
    Ok(())
}

/// Spectra in the mzXML subset (`.mzXML`/`.xml`) or the canonical text form.
pub fn load_spectra(path: &Path) -> Result<ScanTree> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or_default().to_ascii_lowercase();
    let tree = if ext == "mzxml" || ext == "xml" { read_mzxml_subset(open(path)?) } else { read_canonical(open(path)?) };
    tree.with_context(|| format!("reading spectra {}", path.display()))
}

pub fn load_database(path: &Path, chem: &Chemistry) -> Result<GlycanDatabase> {
    let db = GlycanDatabase::read(open(path)?, chem.registry()).with_context(|| format!("reading {}", path.display()))?;
    for bad in &db.errors {
        eprintln!("warning: {}: record {} skipped: {}", path.display(), bad.record, bad.error);
    }
    Ok(db)
}

pub fn load_archive(path: &Path) -> Result<Vec<AnnotationRecord>> {
    read_archive(open(path)?).with_context(|| format!("reading archive {}", path.display()))
}

pub fn load_model(path: &Path) -> Result<SageGraph> {
    SageGraph::load(open(path)?).with_context(|| format!("reading model {}", path.display()))
}

pub fn save_model(path: &Path, graph: &SageGraph) -> Result<()> {
    let mut out = create(path)?;
    graph.save(&mut out)?;
    close(out)
}

/// A missing file is an empty selection log.
pub fn load_selections(path: &Path) -> Result<ApprovedAnnotationSet> {
    if !path.exists() {
        return Ok(ApprovedAnnotationSet::default());
    }
    ApprovedAnnotationSet::read(open(path)?).with_context(|| format!("reading selections {}", path.display()))
}

pub fn save_selections(path: &Path, selections: &ApprovedAnnotationSet) -> Result<()> {
    let mut out = create(path)?;
    selections.write(&mut out)?;
    close(out)
}

pub fn write_lines(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(path) => {
            let mut out = create(path)?;
            out.write_all(text.as_bytes())?;
            close(out)
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
