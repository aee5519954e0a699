//! Line-oriented scan format.
//!
//! ```text
//! # comment
//! S 1 1
//! P 204.0867:1200 366.1395:850.5
//! S 2 2 1 1579.78 1
//! P 1055.52:40
//! S 3 3 2 1055.52 ?
//! P
//! ```
//!
//! Header fields: scan id, MS level, then for MS^n scans the parent id (`-`
//! when it should be inferred), precursor m/z and precursor charge (`?` or
//! absent when unknown).

use std::io::{BufRead, Write};
use std::marker::PhantomData;

use super::{link_precursors, Peak, Scan, ScanTree};
use crate::error::{Error, Result};
use crate::scalar::{parse_scalar, Scalar};

/// Counters exposed by [`CanonicalReader`] to check its memory footprint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReaderStats {
    pub scans: usize,
    /// Largest number of peaks held at once.
    pub max_peaks_buffered: usize,
    /// Longest line read, in bytes.
    pub max_line_len: usize,
}

/// Streaming reader yielding one scan at a time; only the scan being
/// assembled is held in memory.
pub struct CanonicalReader<R, T: Scalar = f64> {
    input: R,
    line: String,
    line_no: usize,
    current: Option<Scan<T>>,
    stats: ReaderStats,
    finished: bool,
    _scalar: PhantomData<T>,
}

impl<R: BufRead, T: Scalar> CanonicalReader<R, T> {
    pub fn new(input: R) -> Self {
        Self {
            input,
            line: String::new(),
            line_no: 0,
            current: None,
            stats: ReaderStats::default(),
            finished: false,
            _scalar: PhantomData,
        }
    }

    pub fn stats(&self) -> ReaderStats {
        self.stats
    }

    fn finish(&mut self, scan: Scan<T>) -> Result<Scan<T>> {
        scan.validate().map_err(|e| Error::parse(self.line_no, e.to_string()))?;
        self.stats.scans += 1;
        Ok(scan)
    }

    fn next_scan(&mut self) -> Result<Option<Scan<T>>> {
        loop {
            self.line.clear();
            if self.input.read_line(&mut self.line)? == 0 {
                return match self.current.take() {
                    Some(scan) => self.finish(scan).map(Some),
                    None => Ok(None),
                };
            }
            self.line_no += 1;
            self.stats.max_line_len = self.stats.max_line_len.max(self.line.len());
            let content = self.line.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let mut words = content.split_whitespace();
            match words.next() {
                Some("S") => {
                    let header = parse_header(self.line_no, words)?;
                    if let Some(done) = self.current.replace(header) {
                        return self.finish(done).map(Some);
                    }
                }
                Some("P") => {
                    let line_no = self.line_no;
                    let scan = self.current.as_mut().ok_or_else(|| Error::parse(line_no, "peak line before any scan header"))?;
                    for word in words {
                        scan.peaks.push(parse_peak(line_no, word)?);
                    }
                    self.stats.max_peaks_buffered = self.stats.max_peaks_buffered.max(scan.peaks.len());
                }
                Some(other) => return Err(Error::parse(self.line_no, format!("unknown record type `{other}`"))),
                None => unreachable!("blank lines are skipped"),
            }
        }
    }
}

impl<R: BufRead, T: Scalar> Iterator for CanonicalReader<R, T> {
    type Item = Result<Scan<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        let item = self.next_scan().transpose();
        if !matches!(item, Some(Ok(_))) {
            self.finished = true;
        }
        item
    }
}

fn parse_header<'a, T: Scalar>(line: usize, mut words: impl Iterator<Item = &'a str>) -> Result<Scan<T>> {
    let mut field = |name: &str| words.next().ok_or_else(|| Error::parse(line, format!("missing {name}")));
    let scan_id = field("scan id")?.parse().map_err(|_| Error::parse(line, "scan id is not a non-negative integer"))?;
    let ms_level: u8 = field("MS level")?.parse().map_err(|_| Error::parse(line, "MS level is not an integer"))?;
    if ms_level == 0 {
        return Err(Error::parse(line, "MS level must be at least 1"));
    }
    let mut scan = Scan::ms1(scan_id, Vec::new());
    scan.ms_level = ms_level;
    if ms_level >= 2 {
        let parent = field("parent scan id")?;
        scan.parent_scan_id = match parent {
            "-" => None,
            p => Some(p.parse().map_err(|_| Error::parse(line, format!("bad parent scan id `{p}`")))?),
        };
        let mz = field("precursor m/z")?;
        scan.precursor_mz = Some(parse_scalar(mz).ok_or_else(|| Error::parse(line, format!("bad precursor m/z `{mz}`")))?);
        scan.precursor_charge = match words.next() {
            None | Some("?") => None,
            Some(z) => Some(z.parse().map_err(|_| Error::parse(line, format!("bad precursor charge `{z}`")))?),
        };
    }
    if let Some(extra) = words.next() {
        return Err(Error::parse(line, format!("unexpected field `{extra}`")));
    }
    Ok(scan)
}

fn parse_peak<T: Scalar>(line: usize, word: &str) -> Result<Peak<T>> {
    let bad = || Error::parse(line, format!("bad peak `{word}`, expected <mz>:<intensity>"));
    let (mz, intensity) = word.split_once(':').ok_or_else(bad)?;
    Ok(Peak::new(parse_scalar(mz).ok_or_else(bad)?, parse_scalar(intensity).ok_or_else(bad)?))
}

/// Reads a whole run and links it.
pub fn read_canonical<R: BufRead, T: Scalar>(input: R) -> Result<ScanTree<T>> {
    let scans = CanonicalReader::new(input).collect::<Result<Vec<_>>>()?;
    link_precursors(scans)
}

pub fn write_scan<W: Write, T: Scalar>(out: &mut W, scan: &Scan<T>) -> std::io::Result<()> {
    write!(out, "S {} {}", scan.scan_id, scan.ms_level)?;
    if let Some(mz) = scan.precursor_mz {
        match scan.parent_scan_id {
            Some(p) => write!(out, " {p}")?,
            None => write!(out, " -")?,
        }
        write!(out, " {mz}")?;
        match scan.precursor_charge {
            Some(z) => write!(out, " {z}")?,
            None => write!(out, " ?")?,
        }
    }
    write!(out, "\nP")?;
    for peak in &scan.peaks {
        write!(out, " {}:{}", peak.mz, peak.intensity)?;
    }
    writeln!(out)
}

pub fn write_canonical<W: Write, T: Scalar>(out: &mut W, tree: &ScanTree<T>) -> std::io::Result<()> {
    for scan in tree.scans() {
        write_scan(out, scan)?;
    }
    Ok(())
}
