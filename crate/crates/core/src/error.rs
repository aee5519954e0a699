use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown residue code `{0}`")]
    UnknownResidue(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("empty composition")]
    EmptyComposition,
    #[error("{missing} missing methyls exceed the {available} methylation sites")]
    TooManyMissingMethyls { missing: u32, available: u32 },
    #[error("ion configuration has zero total charge")]
    ZeroCharge,
    #[error("charge carriers of mixed polarity")]
    MixedPolarity,
    #[error("no charge carriers defined")]
    EmptyCarrierSet,
    #[error("no fragmentation settings for MS level {0}")]
    UndefinedLevel(u8),
    #[error("fragment enumeration for `{glycan}` exceeded {cap} fragments")]
    FragmentCap { glycan: String, cap: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("scan {scan} references missing parent scan {parent}")]
    DanglingParent { scan: u64, parent: u64 },
    #[error("scan {scan} at MS level {level} has parent at MS level {parent_level}")]
    LevelMismatch { scan: u64, level: u8, parent_level: u8 },
    #[error("duplicate scan id {0}")]
    DuplicateScan(u64),
    #[error("scan {scan}: {message}")]
    InvalidScan { scan: u64, message: String },
    #[error("scan link cycle through scan {0}")]
    Cycle(u64),
    #[error("MS{level} scan {scan} has no parent scan")]
    Orphan { scan: u64, level: u8 },
    #[error("unsupported peak encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("truncated or malformed peak payload in scan {scan}: {message}")]
    TruncatedPayload { scan: u64, message: String },
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("unknown graph node `{0}`")]
    UnknownNode(String),
    #[error("unsupported model version `{0}`")]
    Version(String),
    #[error("model checksum mismatch (header {expected}, content {actual})")]
    Checksum { expected: String, actual: String },
    #[error("approved record for scan {scan} has no approved parent annotation")]
    MissingParentLinkage { scan: u64 },
    #[error("invalid setting: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }

    /// True for errors caused by malformed or inconsistent input, as opposed to
    /// internal failures.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::FragmentCap { .. })
    }
}
