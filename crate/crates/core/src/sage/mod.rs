//! Layered frequency graph trained on approved annotations.

mod features;
mod filter;
mod graph;
mod selections;
mod smoothing;

pub use features::{
    feature_label, label_glycan, label_mz, observe_scan, record_features, root_label, FeatureIndex, FeatureSet,
    RecordsByScan,
};
pub use filter::{archive_features, classify_run, post_filter, FilterOutcome, FilterPolicy, ScoringParams};
pub use graph::{GraphStats, NodeKey, SageGraph, TrainingExample};
pub use selections::{records_needed, training_examples, AnnotationKey, ApprovedAnnotationSet, Selection};
pub use smoothing::SmoothingConfig;

#[cfg(test)]
mod tests;
