//! The annotation engine: precursor matching against database candidates,
//! in-silico fragmentation, recursive peak annotation across MS levels,
//! peak-count and intensity scores, and the streaming archive.

mod annotate;
mod archive;
mod database;
mod settings;

pub use annotate::{Candidate, Engine, FragmentHit, PreparedGlycan, RunStats, ScanAnnotation};
pub use archive::{
    rank_annotations, read_archive, read_index, read_indexed, AnnotationRecord, ArchiveReader, ArchiveWriter,
    IndexEntry, PeakAnnotation, RecordSink,
};
pub use database::{DatabaseEntry, GlycanDatabase, RecordError};
pub use settings::RunSettings;
