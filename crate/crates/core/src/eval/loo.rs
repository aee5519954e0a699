use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;

use super::{evaluate, AnnotationId, EvaluationReport, FoldReport, NaiveBayes};
use crate::engine::{AnnotationRecord, Engine, GlycanDatabase};
use crate::error::{Error, Result};
use crate::sage::{observe_scan, training_examples, ApprovedAnnotationSet, FeatureIndex, SageGraph, ScoringParams, TrainingExample};
use crate::scalar::Scalar;
use crate::spectra::ScanTree;

/// One curated run: spectra, the engine's archive and the analyst's decisions.
#[derive(Debug, Clone)]
pub struct Dataset<T: Scalar = f64> {
    pub tree: ScanTree<T>,
    pub archive: Vec<AnnotationRecord<T>>,
    pub selections: ApprovedAnnotationSet,
}

impl<T: Scalar> Dataset<T> {
    /// Annotates the spectra to build the archive.
    pub fn annotate(tree: ScanTree<T>, selections: ApprovedAnnotationSet, engine: &Engine<'_, T>, db: &GlycanDatabase) -> Result<Self> {
        let mut archive = Vec::new();
        engine.annotate_run(&tree, db, &mut archive)?;
        Ok(Self { tree, archive, selections })
    }

    /// Approved annotations on MS2 scans, the level classified de novo.
    pub fn approved_ms2(&self) -> BTreeSet<AnnotationId> {
        self.selections
            .approved_keys()
            .into_iter()
            .filter(|(scan, _, _)| self.tree.get(*scan).is_some_and(|s| s.ms_level == 2))
            .map(|(scan, glycan, _)| (scan, glycan))
            .collect()
    }

    pub fn training_examples(&self, bucket_width: T) -> Result<Vec<TrainingExample>> {
        training_examples(&self.selections.approved_keys(), &self.archive, &self.tree, bucket_width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings<T: Scalar = f64> {
    pub params: ScoringParams<T>,
    /// Glycans reported per scan; `None` reports every gated candidate.
    pub top_k: Option<usize>,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Trains on all datasets but one, classifies the held-out spectra de novo
/// and scores the result against its approved set; once per dataset.
pub fn leave_one_out<T: Scalar>(datasets: &[Dataset<T>], settings: &EvalSettings<T>) -> Result<EvaluationReport> {
    if datasets.len() < 2 {
        return Err(Error::Config(format!("leave-one-out needs at least 2 datasets, got {}", datasets.len())));
    }
    let params = &settings.params;
    let examples: Vec<Vec<TrainingExample>> =
        datasets.par_iter().map(|d| d.training_examples(params.bucket_width)).collect::<Result<_>>()?;

    let folds: Vec<Result<std::result::Result<FoldReport, (usize, String)>>> = (0..datasets.len())
        .into_par_iter()
        .map(|held_out| {
            let test = &datasets[held_out];
            let approved = test.approved_ms2();
            if approved.is_empty() {
                return Ok(Err((held_out, "no approved MS2 annotations".to_string())));
            }
            let start = Instant::now();
            let mut graph = SageGraph::new();
            let mut training_records = 0;
            for (j, ex) in examples.iter().enumerate().filter(|(j, _)| *j != held_out) {
                graph.train(ex)?;
                training_records += datasets[j].archive.len();
            }
            let pooled: Vec<TrainingExample> =
                examples.iter().enumerate().filter(|(j, _)| *j != held_out).flat_map(|(_, e)| e.iter().cloned()).collect();
            let baseline = NaiveBayes::train(&pooled);
            let train_ms = elapsed_ms(start);

            let start = Instant::now();
            let index = FeatureIndex::from_graph(&graph);
            let (mut predicted, mut baseline_predicted) = (Vec::new(), Vec::new());
            for scan in test.tree.scans().filter(|s| s.ms_level == 2) {
                let Some(precursor) = scan.precursor_mz else { continue };
                let features = observe_scan(&index, &test.tree, scan.scan_id, &params.fragment_tolerance);
                let ranked = graph.classify(
                    precursor,
                    &features,
                    &params.precursor_tolerance,
                    params.bucket_width,
                    &params.smoothing,
                    settings.top_k,
                    None,
                );
                predicted.extend(ranked.into_iter().map(|(g, _)| (scan.scan_id, g)));
                let ranked = baseline.classify(precursor, &features, &params.precursor_tolerance, params.bucket_width, settings.top_k);
                baseline_predicted.extend(ranked.into_iter().map(|(g, _)| (scan.scan_id, g)));
            }
            let classify_ms = elapsed_ms(start);
            Ok(Ok(FoldReport {
                held_out,
                metrics: evaluate(&predicted, &approved),
                baseline: evaluate(&baseline_predicted, &approved),
                train_ms,
                classify_ms,
                training_records,
            }))
        })
        .collect();

    let mut report = EvaluationReport::default();
    for fold in folds {
        match fold? {
            Ok(f) => report.folds.push(f),
            Err(skip) => report.skipped.push(skip),
        }
    }
    Ok(report)
}
