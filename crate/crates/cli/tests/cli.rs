mod common;

use std::path::Path;

use common::*;
use glycoannot::engine::{read_archive, ArchiveWriter, AnnotationRecord, Engine, RunSettings};
use glycoannot::eval::{leave_one_out, EvalSettings};
use glycoannot::glycan::Chemistry;
use glycoannot::sage::{classify_run, post_filter, training_examples, ApprovedAnnotationSet, FilterPolicy, SageGraph, ScoringParams};
use glycoannot::spectra::read_canonical;
use glycoannot_cli::commands::{format_rankings, load_dataset, DATASET_ARCHIVE, DATASET_SELECTIONS, DATASET_SPECTRA};
use glycoannot_cli::{exit_code, run, ConfigHome, EXIT_INPUT, EXIT_INTERNAL, EXIT_OK};

fn glyc(args: &[&str]) -> i32 {
    glyc_home(args, &ConfigHome::default())
}

fn glyc_home(args: &[&str], home: &ConfigHome) -> i32 {
    run(std::iter::once("glycoannot").chain(args.iter().copied()), home)
}

fn defaults() -> (Chemistry, RunSettings) {
    let chem = Chemistry::default();
    let s = settings(&chem);
    (chem, s)
}

fn tree_of(dir: &Path) -> glycoannot::spectra::ScanTree {
    read_canonical(std::fs::read(dir.join(DATASET_SPECTRA)).unwrap().as_slice()).unwrap()
}

fn records_of(path: &Path) -> Vec<AnnotationRecord> {
    read_archive(std::fs::read(path).unwrap().as_slice()).unwrap()
}

fn trained(dir: &Path) -> SageGraph {
    let (_, s) = defaults();
    let selections = ApprovedAnnotationSet::read(std::fs::read(dir.join(DATASET_SELECTIONS)).unwrap().as_slice()).unwrap();
    let examples =
        training_examples(&selections.approved_keys(), &records_of(&dir.join(DATASET_ARCHIVE)), &tree_of(dir), s.bucket_width).unwrap();
    let mut graph = SageGraph::new();
    graph.train(&examples).unwrap();
    graph
}

#[test]
fn annotate_matches_engine_output() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = write_datasets(tmp.path(), 3, 1, 0.3);
    let out = tmp.path().join("a.arch");
    let code = glyc(&[
        "annotate",
        "--spectra",
        &arg(&dirs[0].join(DATASET_SPECTRA)),
        "--db",
        &arg(&tmp.path().join("lib.gdb")),
        "--out",
        &arg(&out),
    ]);
    assert_eq!(code, EXIT_OK);

    let (chem, s) = defaults();
    let engine = Engine::new(&s, &chem).unwrap();
    let mut writer = ArchiveWriter::with_index(Vec::new(), Vec::new());
    engine.annotate_run(&tree_of(&dirs[0]), &library(), &mut writer).unwrap();
    let (archive, index) = writer.finish().unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), archive);
    assert_eq!(std::fs::read(out.with_extension("idx")).unwrap(), index.unwrap());
}

#[test]
fn train_is_incremental_and_matches_direct_training() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = write_datasets(tmp.path(), 5, 2, 0.0);
    let (m1, m2) = (tmp.path().join("m1.sage"), tmp.path().join("m2.sage"));
    let train = |dir: &Path, model_in: Option<&Path>, out: &Path| {
        let mut args = vec![
            "train".to_string(),
            "--selections".into(),
            arg(&dir.join(DATASET_SELECTIONS)),
            "--spectra".into(),
            arg(&dir.join(DATASET_SPECTRA)),
            "--archive".into(),
            arg(&dir.join(DATASET_ARCHIVE)),
            "--model-out".into(),
            arg(out),
        ];
        if let Some(m) = model_in {
            args.extend(["--model-in".to_string(), arg(m)]);
        }
        glyc(&args.iter().map(String::as_str).collect::<Vec<_>>())
    };
    assert_eq!(train(&dirs[0], None, &m1), EXIT_OK);
    assert_eq!(train(&dirs[1], Some(&m1), &m2), EXIT_OK);

    let mut direct = trained(&dirs[0]);
    let mut first = Vec::new();
    direct.save(&mut first).unwrap();
    assert_eq!(std::fs::read(&m1).unwrap(), first);

    let (_, s) = defaults();
    let selections = ApprovedAnnotationSet::read(std::fs::read(dirs[1].join(DATASET_SELECTIONS)).unwrap().as_slice()).unwrap();
    let examples = training_examples(
        &selections.approved_keys(),
        &records_of(&dirs[1].join(DATASET_ARCHIVE)),
        &tree_of(&dirs[1]),
        s.bucket_width,
    )
    .unwrap();
    direct.train(&examples).unwrap();
    let mut second = Vec::new();
    direct.save(&mut second).unwrap();
    assert_eq!(std::fs::read(&m2).unwrap(), second);
}

#[test]
fn classify_and_filter_match_library_calls() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = write_datasets(tmp.path(), 8, 2, 0.5);
    let model = tmp.path().join("m.sage");
    let graph = trained(&dirs[0]);
    let mut bytes = Vec::new();
    graph.save(&mut bytes).unwrap();
    std::fs::write(&model, bytes).unwrap();
    let (_, s) = defaults();
    let params = ScoringParams::from_settings(&s);
    let tree = tree_of(&dirs[1]);

    let ranks = tmp.path().join("ranks.txt");
    let spectra = arg(&dirs[1].join(DATASET_SPECTRA));
    assert_eq!(glyc(&["classify", "--model", &arg(&model), "--spectra", &spectra, "--all", "--out", &arg(&ranks)]), EXIT_OK);
    let expected = format_rankings(&classify_run(&graph, &tree, &params, None));
    assert!(!expected.is_empty());
    assert_eq!(std::fs::read_to_string(&ranks).unwrap(), expected);

    let archive = dirs[1].join(DATASET_ARCHIVE);
    let records = records_of(&archive);
    for (flag, value, policy) in
        [("--top-k", "1", FilterPolicy::TopK(1)), ("--min-probability", "0.000001", FilterPolicy::MinProbability(1e-6))]
    {
        let out = tmp.path().join("f.arch");
        let code = glyc(&[
            "filter", "--model", &arg(&model), "--archive", &arg(&archive), "--spectra", &spectra, flag, value, "--out", &arg(&out),
        ]);
        assert_eq!(code, EXIT_OK);
        let outcome = post_filter(&graph, &tree, &records, &params, policy);
        let mut writer = ArchiveWriter::new(Vec::new());
        for (r, _) in records.iter().zip(&outcome.keep).filter(|(_, k)| **k) {
            writer.write_record(r).unwrap();
        }
        assert_eq!(std::fs::read(&out).unwrap(), writer.finish().unwrap().0, "{flag}");
    }
}

#[test]
fn evaluate_and_generate_match_library_calls() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = write_datasets(tmp.path(), 11, 3, 0.0);
    let (report, csv) = (tmp.path().join("report.txt"), tmp.path().join("folds.csv"));
    let mut args = vec!["evaluate".to_string(), "--top-k".into(), "1".into()];
    for d in &dirs {
        args.extend(["--dataset".to_string(), arg(d)]);
    }
    args.extend(["--report".to_string(), arg(&report), "--csv".into(), arg(&csv)]);
    assert_eq!(glyc(&args.iter().map(String::as_str).collect::<Vec<_>>()), EXIT_OK);

    let (_, s) = defaults();
    let datasets: Vec<_> = dirs.iter().map(|d| load_dataset(d).unwrap()).collect();
    let direct = leave_one_out(&datasets, &EvalSettings { params: ScoringParams::from_settings(&s), top_k: Some(1) }).unwrap();
    let mut text = Vec::new();
    direct.write_text(&mut text).unwrap();
    assert_eq!(std::fs::read(&report).unwrap(), text);
    let csv = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(csv.lines().count(), 1 + direct.fold_count());
    assert!(csv.starts_with("held_out,"));

    let out = tmp.path().join("gen");
    let code = glyc(&[
        "generate", "--db", &arg(&tmp.path().join("lib.gdb")), "--out", &arg(&out), "--datasets", "3", "--seed", "11", "--scans", "12",
    ]);
    assert_eq!(code, EXIT_OK);
    for (i, d) in dirs.iter().enumerate() {
        for name in [DATASET_SPECTRA, DATASET_ARCHIVE, DATASET_SELECTIONS] {
            let generated = out.join(format!("run-{i}")).join(name);
            assert_eq!(std::fs::read(generated).unwrap(), std::fs::read(d.join(name)).unwrap(), "run-{i}/{name}");
        }
    }
}

#[test]
fn exit_codes() {
    assert_eq!(glyc(&["frobnicate"]), EXIT_INPUT);
    assert_eq!(glyc(&["annotate", "--bogus", "x"]), EXIT_INPUT);
    assert_eq!(glyc(&["annotate", "--spectra", "/nonexistent/s.scn", "--db", "x", "--out", "y"]), EXIT_INPUT);
    assert_eq!(glyc(&["filter", "--model", "m", "--archive", "a", "--spectra", "s", "--top-k", "1", "--min-probability", "0.5", "--out", "o"]), EXIT_INPUT);
    assert_eq!(glyc(&["--help"]), EXIT_OK);
    assert_eq!(glyc(&["evaluate", "--dataset", "/nonexistent"]), EXIT_INPUT);

    let capped = anyhow::Error::new(glycoannot::Error::FragmentCap { glycan: "G".into(), cap: 10_000 });
    assert_eq!(exit_code(&capped.context("annotating")), EXIT_INTERNAL);
    let input = anyhow::Error::new(glycoannot::Error::UnknownResidue("Xyz".into()));
    assert_eq!(exit_code(&input), EXIT_INPUT);
    assert_eq!(exit_code(&anyhow::anyhow!("plain")), EXIT_INPUT);

    let tmp = tempfile::tempdir().unwrap();
    let bad_model = tmp.path().join("bad.sage");
    std::fs::write(&bad_model, "SAGE v9 levels=0 checksum=00\n").unwrap();
    let spectra = tmp.path().join("s.scn");
    std::fs::write(&spectra, "").unwrap();
    assert_eq!(glyc(&["classify", "--model", &arg(&bad_model), "--spectra", &arg(&spectra)]), EXIT_INPUT);
}

#[test]
fn config_home_supplies_default_settings() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = write_datasets(tmp.path(), 8, 2, 0.0);
    let model = tmp.path().join("m.sage");
    let mut bytes = Vec::new();
    trained(&dirs[0]).save(&mut bytes).unwrap();
    std::fs::write(&model, bytes).unwrap();
    let home_dir = tmp.path().join("home");
    std::fs::create_dir(&home_dir).unwrap();
    std::fs::write(home_dir.join("run.cfg"), "top_k = 2\n").unwrap();
    let home = ConfigHome { dir: Some(home_dir) };

    let per_scan = |home: &ConfigHome| {
        let out = tmp.path().join("ranks.txt");
        let spectra = arg(&dirs[1].join(DATASET_SPECTRA));
        assert_eq!(glyc_home(&["classify", "--model", &arg(&model), "--spectra", &spectra, "--out", &arg(&out)], home), EXIT_OK);
        let text = std::fs::read_to_string(out).unwrap();
        text.lines().map(|l| l.split(' ').nth(1).unwrap().parse::<usize>().unwrap()).max().unwrap()
    };
    assert_eq!(per_scan(&ConfigHome::default()), 1);
    assert_eq!(per_scan(&home), 2);
}
