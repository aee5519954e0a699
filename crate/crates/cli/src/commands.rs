use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use glycoannot::engine::{ArchiveWriter, Engine};
use glycoannot::eval::{generate_synthetic, leave_one_out, Dataset, EvalSettings, SyntheticSettings};
use glycoannot::sage::{classify_run, post_filter, training_examples, FilterPolicy, SageGraph, ScoringParams};
use glycoannot::spectra::write_canonical;

use crate::files::{self, ConfigHome};

/// File names inside a dataset directory (`generate` output, `evaluate` input).
pub const DATASET_SPECTRA: &str = "spectra.scn";
pub const DATASET_ARCHIVE: &str = "annotations.arch";
pub const DATASET_INDEX: &str = "annotations.idx";
pub const DATASET_SELECTIONS: &str = "selections.txt";

#[derive(Debug, Parser)]
#[command(name = "glycoannot", version, about = "Glycan MS^n annotation, graph training and curation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Annotate spectra against a glycan database and write an archive.
    Annotate(AnnotateArgs),
    /// Train a graph model on approved annotations.
    Train(TrainArgs),
    /// Rank glycans for every MS2 scan of a run from its peaks alone.
    Classify(ClassifyArgs),
    /// Keep only the archive records of the best-ranked glycans.
    Filter(FilterArgs),
    /// Leave-one-out evaluation over curated datasets.
    Evaluate(EvaluateArgs),
    /// Write synthetic curated datasets.
    Generate(GenerateArgs),
    /// Run the curation HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SettingsArg {
    /// Run settings file; defaults to $GLYC_HOME/run.cfg, then the built-in defaults.
    #[arg(long, value_name = "FILE")]
    pub settings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[arg(long, value_name = "FILE")]
    pub spectra: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub db: PathBuf,
    #[command(flatten)]
    pub settings: SettingsArg,
    #[arg(long, value_name = "ARCHIVE")]
    pub out: PathBuf,
    /// Per-scan offset index; defaults to the archive path with an `.idx` extension.
    #[arg(long, value_name = "FILE")]
    pub index: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "FILE")]
    pub selections: PathBuf,
    /// Spectra the selections refer to.
    #[arg(long, value_name = "FILE")]
    pub spectra: PathBuf,
    /// Archive the selections refer to.
    #[arg(long, value_name = "ARCHIVE")]
    pub archive: PathBuf,
    /// Model to extend; training starts from an empty graph without it.
    #[arg(long, value_name = "FILE")]
    pub model_in: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub model_out: PathBuf,
    #[command(flatten)]
    pub settings: SettingsArg,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub spectra: PathBuf,
    #[command(flatten)]
    pub settings: SettingsArg,
    /// Glycans reported per scan; defaults to the settings' top_k.
    #[arg(long, conflicts_with = "all")]
    pub top_k: Option<usize>,
    /// Report every candidate passing the precursor gate.
    #[arg(long)]
    pub all: bool,
    /// Output file; standard output without it.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[arg(long, value_name = "ARCHIVE")]
    pub archive: PathBuf,
    /// Spectra the archive was produced from.
    #[arg(long, value_name = "FILE")]
    pub spectra: PathBuf,
    #[command(flatten)]
    pub settings: SettingsArg,
    #[arg(long, conflicts_with = "min_probability")]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub min_probability: Option<f64>,
    #[arg(long, value_name = "ARCHIVE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset directory holding spectra.scn, annotations.arch and selections.txt; repeat for each dataset.
    #[arg(long = "dataset", value_name = "DIR", required = true)]
    pub datasets: Vec<PathBuf>,
    #[command(flatten)]
    pub settings: SettingsArg,
    /// Glycans reported per scan; every gated candidate when absent.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Text report; standard output without it.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Per-fold comma-separated metrics.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_name = "FILE")]
    pub db: PathBuf,
    /// Output directory; one `run-<n>` subdirectory per dataset.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub datasets: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// MS2 scans per dataset.
    #[arg(long, default_value_t = 24)]
    pub scans: usize,
    /// Spurious peaks per true fragment peak.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[command(flatten)]
    pub settings: SettingsArg,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, value_name = "FILE")]
    pub spectra: PathBuf,
    #[arg(long, value_name = "ARCHIVE")]
    pub archive: PathBuf,
    /// Selection log; decisions are appended to it. Created when missing.
    #[arg(long, value_name = "FILE")]
    pub selections: PathBuf,
    /// Model that training extends.
    #[arg(long, value_name = "FILE")]
    pub model_in: Option<PathBuf>,
    /// Where the trained model is saved after each training request.
    #[arg(long, value_name = "FILE")]
    pub model_out: Option<PathBuf>,
    #[command(flatten)]
    pub settings: SettingsArg,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    #[arg(long, default_value_t = 7878)]
    pub port: u16,
}

pub fn execute(cli: Cli, home: &ConfigHome) -> Result<()> {
    match cli.command {
        Command::Annotate(a) => annotate(a, home),
        Command::Train(a) => train(a, home),
        Command::Classify(a) => classify(a, home),
        Command::Filter(a) => filter(a, home),
        Command::Evaluate(a) => evaluate(a, home),
        Command::Generate(a) => generate(a, home),
        Command::Serve(a) => crate::server::serve(a, home),
    }
}

fn annotate(args: AnnotateArgs, home: &ConfigHome) -> Result<()> {
    let chem = home.chemistry()?;
    let settings = home.settings(args.settings.settings.as_deref(), &chem)?;
    let tree = files::load_spectra(&args.spectra)?;
    let db = files::load_database(&args.db, &chem)?;
    let engine = Engine::new(&settings, &chem)?;
    let index_path = args.index.unwrap_or_else(|| args.out.with_extension("idx"));
    let mut writer = ArchiveWriter::with_index(files::create(&args.out)?, files::create(&index_path)?);
    let stats = engine.annotate_run(&tree, &db, &mut writer)?;
    let (out, index) = writer.finish()?;
    files::close(out)?;
    files::close(index.expect("writer built with an index"))?;
    eprintln!(
        "annotated {} scans ({} skipped, {} empty), {} records",
        stats.scans_annotated, stats.scans_skipped, stats.empty_spectra, stats.records
    );
    for (scan, candidate) in &stats.capped {
        eprintln!("warning: scan {scan}: `{candidate}` abandoned at the fragment cap");
    }
    Ok(())
}

fn train(args: TrainArgs, home: &ConfigHome) -> Result<()> {
    let chem = home.chemistry()?;
    let settings = home.settings(args.settings.settings.as_deref(), &chem)?;
    let tree = files::load_spectra(&args.spectra)?;
    let records = files::load_archive(&args.archive)?;
    let selections = files::load_selections(&args.selections)?;
    let mut graph = match &args.model_in {
        Some(path) => files::load_model(path)?,
        None => SageGraph::new(),
    };
    let examples = training_examples(&selections.approved_keys(), &records, &tree, settings.bucket_width)?;
    graph.train(&examples)?;
    files::save_model(&args.model_out, &graph)?;
    eprintln!("trained on {} examples: {} nodes, {} edges", examples.len(), graph.node_count(), graph.edge_count());
    Ok(())
}

/// One line per reported glycan: `<scan> <rank> <glycan> <probability>`.
pub fn format_rankings(rankings: &[(u64, Vec<(String, f64)>)]) -> String {
    let mut text = String::new();
    for (scan, ranked) in rankings {
        for (rank, (glycan, p)) in ranked.iter().enumerate() {
            let _ = writeln!(text, "{scan} {} {glycan} {p:e}", rank + 1);
        }
    }
    text
}

fn classify(args: ClassifyArgs, home: &ConfigHome) -> Result<()> {
    let chem = home.chemistry()?;
    let settings = home.settings(args.settings.settings.as_deref(), &chem)?;
    let graph = files::load_model(&args.model)?;
    let tree = files::load_spectra(&args.spectra)?;
    let k = if args.all { None } else { args.top_k.or(settings.top_k) };
    let rankings = classify_run(&graph, &tree, &ScoringParams::from_settings(&settings), k);
    files::write_lines(args.out.as_deref(), &format_rankings(&rankings))
}

fn filter(args: FilterArgs, home: &ConfigHome) -> Result<()> {
    let chem = home.chemistry()?;
    let settings = home.settings(args.settings.settings.as_deref(), &chem)?;
    let policy = match (args.top_k, args.min_probability, settings.top_k, settings.min_probability) {
        (Some(k), _, _, _) => FilterPolicy::TopK(k),
        (None, Some(p), _, _) => format!("min-probability={p}").parse()?,
        (None, None, _, Some(p)) => FilterPolicy::MinProbability(p),
        (None, None, Some(k), None) => FilterPolicy::TopK(k),
        (None, None, None, None) => bail!("no filter policy: pass --top-k or --min-probability"),
    };
    let graph = files::load_model(&args.model)?;
    let tree = files::load_spectra(&args.spectra)?;
    let records = files::load_archive(&args.archive)?;
    let outcome = post_filter(&graph, &tree, &records, &ScoringParams::from_settings(&settings), policy);
    let mut writer = ArchiveWriter::with_index(files::create(&args.out)?, files::create(&args.out.with_extension("idx"))?);
    for (record, _) in records.iter().zip(&outcome.keep).filter(|(_, keep)| **keep) {
        writer.write_record(record)?;
    }
    let kept = writer.records_written();
    let (out, index) = writer.finish()?;
    files::close(out)?;
    files::close(index.expect("writer built with an index"))?;
    eprintln!("{policy}: kept {kept} of {} records", records.len());
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let spectra = [DATASET_SPECTRA, "spectra.mzXML", "spectra.mzxml"]
        .iter()
        .map(|name| dir.join(name))
        .find(|p| p.is_file())
        .with_context(|| format!("{}: no spectra.scn or spectra.mzXML", dir.display()))?;
    Ok(Dataset {
        tree: files::load_spectra(&spectra)?,
        archive: files::load_archive(&dir.join(DATASET_ARCHIVE))?,
        selections: files::load_selections(&dir.join(DATASET_SELECTIONS))?,
    })
}

fn evaluate(args: EvaluateArgs, home: &ConfigHome) -> Result<()> {
    let chem = home.chemistry()?;
    let settings = home.settings(args.settings.settings.as_deref(), &chem)?;
    let datasets = args.datasets.iter().map(|d| load_dataset(d)).collect::<Result<Vec<_>>>()?;
    let report = leave_one_out(&datasets, &EvalSettings { params: ScoringParams::from_settings(&settings), top_k: args.top_k })?;
    for (idx, reason) in &report.skipped {
        eprintln!("warning: fold {idx} ({}) skipped: {reason}", args.datasets[*idx].display());
    }
    let mut text = Vec::new();
    report.write_text(&mut text)?;
    files::write_lines(args.report.as_deref(), &String::from_utf8(text)?)?;
    if let Some(path) = &args.csv {
        let mut csv = Vec::new();
        report.write_csv(&mut csv)?;
        files::write_lines(Some(path), &String::from_utf8(csv)?)?;
    }
    Ok(())
}

fn generate(args: GenerateArgs, home: &ConfigHome) -> Result<()> {
    let chem = home.chemistry()?;
    let settings = home.settings(args.settings.settings.as_deref(), &chem)?;
    let db = files::load_database(&args.db, &chem)?;
    let engine = Engine::new(&settings, &chem)?;
    let synth = SyntheticSettings { scans_per_dataset: args.scans, noise: args.noise, ..SyntheticSettings::default() };
    let datasets = generate_synthetic(args.seed, args.datasets, &db, &engine, &synth)?;
    for (n, d) in datasets.iter().enumerate() {
        let dir = args.out.join(format!("run-{n}"));
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut spectra = files::create(&dir.join(DATASET_SPECTRA))?;
        write_canonical(&mut spectra, &d.tree)?;
        files::close(spectra)?;
        let mut writer =
            ArchiveWriter::with_index(files::create(&dir.join(DATASET_ARCHIVE))?, files::create(&dir.join(DATASET_INDEX))?);
        engine.annotate_run(&d.tree, &db, &mut writer)?;
        let (out, index) = writer.finish()?;
        files::close(out)?;
        files::close(index.expect("writer built with an index"))?;
        files::save_selections(&dir.join(DATASET_SELECTIONS), &d.selections)?;
    }
    eprintln!("wrote {} datasets to {}", datasets.len(), args.out.display());
    Ok(())
}
