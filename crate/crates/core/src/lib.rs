//! Glycan MS^n annotation.
//!
//! Two halves share this crate:
//!
//! * an annotation engine ([`engine`]) that matches observed tandem MS scans
//!   against glycan candidates from a database, simulates glycosidic
//!   fragmentation ([`fragment`]) under user-defined ion chemistry ([`ion`]),
//!   scores every candidate by annotated peak count and annotated intensity,
//!   and streams the results to an append-only archive;
//! * a layered frequency graph ([`sage`]) trained incrementally on
//!   analyst-approved annotations, used to rank candidates de novo or to
//!   post-filter engine output.
//!
//! [`eval`] holds the leave-one-out harness and synthetic data generator.
//!
//! All mass arithmetic is generic over the [`Scalar`] type; the default type
//! parameter everywhere is `f64`, and `f32` aliases are exported below.

pub mod config;
pub mod engine;
pub mod error;
pub mod eval;
pub mod fragment;
pub mod glycan;
pub mod ion;
pub mod sage;
pub mod scalar;
pub mod spectra;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Monoisotopic mass or m/z in daltons at the default precision.
pub type Mass = f64;

pub type Chemistry32 = glycan::Chemistry<f32>;
pub type Peak32 = spectra::Peak<f32>;
pub type Scan32 = spectra::Scan<f32>;
pub type ScanTree32 = spectra::ScanTree<f32>;
pub type FragmentIon32 = fragment::FragmentIon<f32>;
pub type IonConfiguration32 = ion::IonConfiguration<f32>;
pub type RunSettings32 = engine::RunSettings<f32>;
pub type AnnotationRecord32 = engine::AnnotationRecord<f32>;
