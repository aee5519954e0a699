//! Append-only annotation archive and its per-scan index.
//!
//! ```text
//! A <scan_id> <glycan_id> <ion_signature>;<candidate> <score_c> <score_i> <n> <ms_level>
//! p <peak_index> <fragment_signature> <theoretical_mz> <delta> <ion_signature>
//! d <diagnostic text>
//! ```
//!
//! MS1 records carry `-` for both scores. The index file holds one
//! `I <scan_id> <byte_offset> <record_count>` line per contiguous run of
//! records of the same scan.

use std::io::{BufRead, Seek, SeekFrom, Write};

use crate::error::{Error, Result};
use crate::scalar::{parse_scalar, Scalar};
use crate::spectra::ScanId;

#[derive(Debug, Clone, PartialEq)]
pub struct PeakAnnotation<T: Scalar = f64> {
    pub peak_index: usize,
    pub fragment_signature: String,
    /// Ion configuration of the fragment ion.
    pub ion_signature: String,
    pub theoretical_mz: T,
    /// Observed minus theoretical m/z.
    pub delta: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord<T: Scalar = f64> {
    pub scan_id: ScanId,
    pub glycan_id: String,
    /// Ion configuration of the precursor.
    pub ion_signature: String,
    /// Signature of the candidate: `<glycan>|M|u<k>` or a fragment signature.
    pub candidate_signature: String,
    pub ms_level: u8,
    /// Fraction of peaks annotated; `None` on MS1 records.
    pub score_c: Option<T>,
    /// Fraction of total intensity annotated; `None` on MS1 records.
    pub score_i: Option<T>,
    pub peak_annotations: Vec<PeakAnnotation<T>>,
    pub diagnostic: Option<String>,
}

impl<T: Scalar> AnnotationRecord<T> {
    /// Key used to match records with analyst decisions.
    pub fn config_key(&self) -> String {
        format!("{};{}", self.ion_signature, self.candidate_signature)
    }

    /// Distinct fragment signatures used by the peak annotations, sorted.
    pub fn fragment_signatures(&self) -> Vec<&str> {
        let mut sigs: Vec<&str> = self.peak_annotations.iter().map(|a| a.fragment_signature.as_str()).collect();
        sigs.sort_unstable();
        sigs.dedup();
        sigs
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let score = |s: Option<T>| s.map_or_else(|| "-".to_string(), |v| v.to_string());
        writeln!(
            out,
            "A {} {} {} {} {} {} {}",
            self.scan_id,
            self.glycan_id,
            self.config_key(),
            score(self.score_c),
            score(self.score_i),
            self.peak_annotations.len(),
            self.ms_level
        )?;
        for a in &self.peak_annotations {
            writeln!(out, "p {} {} {} {} {}", a.peak_index, a.fragment_signature, a.theoretical_mz, a.delta, a.ion_signature)?;
        }
        if let Some(d) = &self.diagnostic {
            writeln!(out, "d {}", d.replace(['\n', '\r'], " "))?;
        }
        Ok(())
    }
}

/// Orders one scan's records by descending score_i, then descending
/// score_c, then ascending glycan id.
pub fn rank_annotations<T: Scalar>(records: &mut [AnnotationRecord<T>]) {
    let key = |s: Option<T>| s.unwrap_or_else(T::neg_infinity);
    records.sort_by(|a, b| {
        key(b.score_i)
            .partial_cmp(&key(a.score_i))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| key(b.score_c).partial_cmp(&key(a.score_c)).unwrap_or(std::cmp::Ordering::Equal))
            .then_with(|| a.glycan_id.cmp(&b.glycan_id))
    });
}

/// Destination for records produced by the engine, in output order.
pub trait RecordSink<T: Scalar> {
    fn accept(&mut self, record: AnnotationRecord<T>) -> Result<()>;
}

impl<T: Scalar> RecordSink<T> for Vec<AnnotationRecord<T>> {
    fn accept(&mut self, record: AnnotationRecord<T>) -> Result<()> {
        self.push(record);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexEntry {
    pub scan_id: ScanId,
    pub offset: u64,
    pub count: usize,
}

/// Streams records to the archive as they arrive; nothing is kept besides
/// the current scan's index entry.
pub struct ArchiveWriter<W: Write, I: Write = std::io::Sink> {
    out: W,
    index: Option<I>,
    offset: u64,
    current: Option<IndexEntry>,
    records: usize,
    line: Vec<u8>,
}

impl<W: Write> ArchiveWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out, index: None, offset: 0, current: None, records: 0, line: Vec::new() }
    }
}

impl<W: Write, I: Write> ArchiveWriter<W, I> {
    pub fn with_index(out: W, index: I) -> Self {
        Self { out, index: Some(index), offset: 0, current: None, records: 0, line: Vec::new() }
    }

    pub fn records_written(&self) -> usize {
        self.records
    }

    pub fn write_record<T: Scalar>(&mut self, record: &AnnotationRecord<T>) -> Result<()> {
        match &mut self.current {
            Some(entry) if entry.scan_id == record.scan_id => entry.count += 1,
            _ => {
                self.flush_entry()?;
                self.current = Some(IndexEntry { scan_id: record.scan_id, offset: self.offset, count: 1 });
            }
        }
        self.line.clear();
        record.write_to(&mut self.line)?;
        self.out.write_all(&self.line)?;
        self.offset += self.line.len() as u64;
        self.records += 1;
        Ok(())
    }

    fn flush_entry(&mut self) -> Result<()> {
        if let (Some(entry), Some(index)) = (self.current.take(), self.index.as_mut()) {
            writeln!(index, "I {} {} {}", entry.scan_id, entry.offset, entry.count)?;
        }
        Ok(())
    }

    /// Writes the pending index entry and flushes both outputs.
    pub fn finish(mut self) -> Result<(W, Option<I>)> {
        self.flush_entry()?;
        self.out.flush()?;
        if let Some(index) = self.index.as_mut() {
            index.flush()?;
        }
        Ok((self.out, self.index))
    }
}

impl<T: Scalar, W: Write, I: Write> RecordSink<T> for ArchiveWriter<W, I> {
    fn accept(&mut self, record: AnnotationRecord<T>) -> Result<()> {
        self.write_record(&record)
    }
}

pub fn read_index<R: BufRead>(input: R) -> Result<Vec<IndexEntry>> {
    let mut entries = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let bad = || Error::parse(idx + 1, "expected `I <scan_id> <offset> <count>`");
        let ["I", scan, offset, count] = fields.as_slice() else { return Err(bad()) };
        entries.push(IndexEntry {
            scan_id: scan.parse().map_err(|_| bad())?,
            offset: offset.parse().map_err(|_| bad())?,
            count: count.parse().map_err(|_| bad())?,
        });
    }
    Ok(entries)
}

/// Incremental archive reader.
pub struct ArchiveReader<R, T: Scalar = f64> {
    input: R,
    line: String,
    line_no: usize,
    pending: Option<(usize, AnnotationRecord<T>, usize)>,
    finished: bool,
}

impl<R: BufRead, T: Scalar> ArchiveReader<R, T> {
    pub fn new(input: R) -> Self {
        Self { input, line: String::new(), line_no: 0, pending: None, finished: false }
    }

    fn take_pending(&mut self) -> Result<Option<AnnotationRecord<T>>> {
        match self.pending.take() {
            None => Ok(None),
            Some((line, record, expected)) => {
                if record.peak_annotations.len() != expected {
                    return Err(Error::parse(
                        line,
                        format!("record announces {expected} peak annotations, found {}", record.peak_annotations.len()),
                    ));
                }
                Ok(Some(record))
            }
        }
    }

    fn next_record(&mut self) -> Result<Option<AnnotationRecord<T>>> {
        loop {
            self.line.clear();
            if self.input.read_line(&mut self.line)? == 0 {
                return self.take_pending();
            }
            self.line_no += 1;
            let line_no = self.line_no;
            let content = self.line.trim_end_matches(['\n', '\r']);
            if content.trim().is_empty() || content.starts_with('#') {
                continue;
            }
            let (tag, rest) = content.split_once(' ').unwrap_or((content, ""));
            match tag {
                "A" => {
                    let record = parse_record_line(line_no, rest)?;
                    let done = self.take_pending()?;
                    self.pending = Some((line_no, record.0, record.1));
                    if done.is_some() {
                        return Ok(done);
                    }
                }
                "p" => {
                    let annotation = parse_peak_line(line_no, rest)?;
                    let (_, record, _) =
                        self.pending.as_mut().ok_or_else(|| Error::parse(line_no, "peak annotation before any record"))?;
                    record.peak_annotations.push(annotation);
                }
                "d" => {
                    let (_, record, _) =
                        self.pending.as_mut().ok_or_else(|| Error::parse(line_no, "diagnostic before any record"))?;
                    record.diagnostic = Some(rest.to_string());
                }
                other => return Err(Error::parse(line_no, format!("unknown archive line type `{other}`"))),
            }
        }
    }
}

impl<R: BufRead, T: Scalar> Iterator for ArchiveReader<R, T> {
    type Item = Result<AnnotationRecord<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        let item = self.next_record().transpose();
        if !matches!(item, Some(Ok(_))) {
            self.finished = true;
        }
        item
    }
}

fn parse_record_line<T: Scalar>(line: usize, rest: &str) -> Result<(AnnotationRecord<T>, usize)> {
    let fields: Vec<&str> = rest.split(' ').collect();
    let bad = |what: &str| Error::parse(line, format!("bad record line: {what}"));
    let [scan, glycan, key, score_c, score_i, n, level] = fields.as_slice() else {
        return Err(bad("expected 7 fields after `A`"));
    };
    let (ion_signature, candidate_signature) = key.split_once(';').ok_or_else(|| bad("missing `;` in configuration"))?;
    let score = |s: &str| -> Result<Option<T>> {
        match s {
            "-" => Ok(None),
            v => parse_scalar(v).map(Some).ok_or_else(|| bad("score")),
        }
    };
    let record = AnnotationRecord {
        scan_id: scan.parse().map_err(|_| bad("scan id"))?,
        glycan_id: glycan.to_string(),
        ion_signature: ion_signature.to_string(),
        candidate_signature: candidate_signature.to_string(),
        ms_level: level.parse().map_err(|_| bad("MS level"))?,
        score_c: score(score_c)?,
        score_i: score(score_i)?,
        peak_annotations: Vec::new(),
        diagnostic: None,
    };
    Ok((record, n.parse().map_err(|_| bad("annotation count"))?))
}

fn parse_peak_line<T: Scalar>(line: usize, rest: &str) -> Result<PeakAnnotation<T>> {
    let bad = |what: &str| Error::parse(line, format!("bad peak annotation: {what}"));
    let fields: Vec<&str> = rest.split(' ').collect();
    let [index, fragment, theo, delta, ion] = fields.as_slice() else {
        return Err(bad("expected 5 fields after `p`"));
    };
    Ok(PeakAnnotation {
        peak_index: index.parse().map_err(|_| bad("peak index"))?,
        fragment_signature: fragment.to_string(),
        ion_signature: ion.to_string(),
        theoretical_mz: parse_scalar(theo).ok_or_else(|| bad("theoretical m/z"))?,
        delta: parse_scalar(delta).ok_or_else(|| bad("delta"))?,
    })
}

/// Reads every record of an archive.
pub fn read_archive<R: BufRead, T: Scalar>(input: R) -> Result<Vec<AnnotationRecord<T>>> {
    ArchiveReader::new(input).collect()
}

/// Reads the records an index entry points at.
pub fn read_indexed<R: BufRead + Seek, T: Scalar>(input: &mut R, entry: &IndexEntry) -> Result<Vec<AnnotationRecord<T>>> {
    input.seek(SeekFrom::Start(entry.offset))?;
    let records: Vec<AnnotationRecord<T>> =
        ArchiveReader::new(&mut *input).take(entry.count).collect::<Result<_>>()?;
    if records.len() != entry.count || records.iter().any(|r| r.scan_id != entry.scan_id) {
        return Err(Error::Config(format!("archive index entry for scan {} does not match the archive", entry.scan_id)));
    }
    Ok(records)
}
