//! The subset of mzXML needed for MS^n runs: `scan` elements (nested or with
//! `precursorScanNum`), `precursorMz` with optional `precursorCharge`, and
//! uncompressed base64 `peaks` in network byte order. Anything else is
//! skipped and counted.

use std::io::{BufRead, Write};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{link_precursors, Peak, Scan, ScanId, ScanTree};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeakPrecision {
    Single,
    Double,
}

impl PeakPrecision {
    fn bits(self) -> u32 {
        match self {
            PeakPrecision::Single => 32,
            PeakPrecision::Double => 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MzXmlReport<T: Scalar = f64> {
    pub tree: ScanTree<T>,
    /// Elements outside the supported subset that were skipped.
    pub ignored_elements: usize,
}

struct PendingScan<T: Scalar> {
    slot: usize,
    scan: Scan<T>,
    expected_peaks: Option<usize>,
}

enum Capture {
    None,
    Precursor,
    Peaks { precision: PeakPrecision },
}

fn xml_err(e: impl std::fmt::Display) -> Error {
    Error::Xml(e.to_string())
}

fn attributes(e: &BytesStart<'_>) -> Result<Vec<(String, String)>> {
    e.attributes()
        .map(|a| {
            let a = a.map_err(xml_err)?;
            let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
            let value = a.unescape_value().map_err(xml_err)?.into_owned();
            Ok((key, value))
        })
        .collect()
}

fn attr<'a>(attrs: &'a [(String, String)], name: &str) -> Option<&'a str> {
    attrs.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
}

fn parse_attr<V: std::str::FromStr>(attrs: &[(String, String)], name: &str, element: &str) -> Result<Option<V>> {
    attr(attrs, name)
        .map(|v| v.trim().parse().map_err(|_| Error::Xml(format!("bad `{name}` value `{v}` on <{element}>"))))
        .transpose()
}

fn peaks_encoding(attrs: &[(String, String)]) -> Result<PeakPrecision> {
    let precision = match attr(attrs, "precision").unwrap_or("32") {
        "32" => PeakPrecision::Single,
        "64" => PeakPrecision::Double,
        other => return Err(Error::UnsupportedEncoding(format!("precision {other}"))),
    };
    match attr(attrs, "byteOrder").unwrap_or("network") {
        "network" | "big" => {}
        other => return Err(Error::UnsupportedEncoding(format!("byte order {other}"))),
    }
    match attr(attrs, "compressionType").unwrap_or("none") {
        "none" => {}
        other => return Err(Error::UnsupportedEncoding(format!("compression {other}"))),
    }
    match attr(attrs, "pairOrder").or_else(|| attr(attrs, "contentType")).unwrap_or("m/z-int") {
        "m/z-int" => {}
        other => return Err(Error::UnsupportedEncoding(format!("pair order {other}"))),
    }
    Ok(precision)
}

fn decode_peaks<T: Scalar>(scan: ScanId, text: &str, precision: PeakPrecision) -> Result<Vec<Peak<T>>> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bytes = STANDARD
        .decode(compact.as_bytes())
        .map_err(|e| Error::TruncatedPayload { scan, message: e.to_string() })?;
    let width = (precision.bits() / 8) as usize;
    if bytes.len() % (2 * width) != 0 {
        return Err(Error::TruncatedPayload {
            scan,
            message: format!("{} bytes is not a whole number of {}-bit pairs", bytes.len(), precision.bits()),
        });
    }
    let value = |chunk: &[u8]| -> f64 {
        match precision {
            PeakPrecision::Single => f64::from(f32::from_be_bytes(chunk.try_into().expect("4-byte chunk"))),
            PeakPrecision::Double => f64::from_be_bytes(chunk.try_into().expect("8-byte chunk")),
        }
    };
    Ok(bytes
        .chunks_exact(2 * width)
        .map(|pair| Peak::new(T::lit(value(&pair[..width])), T::lit(value(&pair[width..]))))
        .collect())
}

pub fn read_mzxml_subset<R: BufRead, T: Scalar>(input: R) -> Result<ScanTree<T>> {
    read_mzxml_subset_with_report(input).map(|r| r.tree)
}

pub fn read_mzxml_subset_with_report<R: BufRead, T: Scalar>(input: R) -> Result<MzXmlReport<T>> {
    let mut reader = Reader::from_reader(input);
    reader.config_mut().trim_text(true);
    let mut buf = Vec::new();
    let mut slots: Vec<Option<Scan<T>>> = Vec::new();
    let mut stack: Vec<PendingScan<T>> = Vec::new();
    let mut capture = Capture::None;
    let mut text = String::new();
    let mut ignored = 0;

    loop {
        let event = reader.read_event_into(&mut buf).map_err(xml_err)?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                let attrs = attributes(e)?;
                match e.name().as_ref() {
                    b"mzXML" | b"msRun" => {}
                    b"scan" => {
                        let num: ScanId = parse_attr(&attrs, "num", "scan")?.ok_or_else(|| Error::Xml("<scan> without num".into()))?;
                        let ms_level: u8 =
                            parse_attr(&attrs, "msLevel", "scan")?.ok_or_else(|| Error::Xml(format!("scan {num} without msLevel")))?;
                        let mut scan = Scan::ms1(num, Vec::new());
                        scan.ms_level = ms_level;
                        scan.parent_scan_id = stack.last().map(|p| p.scan.scan_id);
                        let pending = PendingScan { slot: slots.len(), scan, expected_peaks: parse_attr(&attrs, "peaksCount", "scan")? };
                        slots.push(None);
                        if empty {
                            slots[pending.slot] = Some(pending.scan);
                        } else {
                            stack.push(pending);
                        }
                    }
                    b"precursorMz" => {
                        let current = stack.last_mut().ok_or_else(|| Error::Xml("<precursorMz> outside <scan>".into()))?;
                        current.scan.precursor_charge = parse_attr(&attrs, "precursorCharge", "precursorMz")?;
                        if let Some(parent) = parse_attr::<ScanId>(&attrs, "precursorScanNum", "precursorMz")? {
                            current.scan.parent_scan_id = Some(parent);
                        }
                        if !empty {
                            capture = Capture::Precursor;
                            text.clear();
                        }
                    }
                    b"peaks" => {
                        let precision = peaks_encoding(&attrs)?;
                        if stack.is_empty() {
                            return Err(Error::Xml("<peaks> outside <scan>".into()));
                        }
                        if !empty {
                            capture = Capture::Peaks { precision };
                            text.clear();
                        }
                    }
                    _ => ignored += 1,
                }
            }
            Event::Text(t) => {
                if !matches!(capture, Capture::None) {
                    text.push_str(&t.unescape().map_err(xml_err)?);
                }
            }
            Event::CData(t) => {
                if !matches!(capture, Capture::None) {
                    text.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Event::End(ref e) => match e.name().as_ref() {
                b"scan" => {
                    let done = stack.pop().ok_or_else(|| Error::Xml("unbalanced </scan>".into()))?;
                    if let Some(expected) = done.expected_peaks {
                        if done.scan.peaks.len() < expected {
                            return Err(Error::TruncatedPayload {
                                scan: done.scan.scan_id,
                                message: format!("decoded {} of {expected} peaks", done.scan.peaks.len()),
                            });
                        }
                    }
                    slots[done.slot] = Some(done.scan);
                }
                b"precursorMz" => {
                    if let Some(current) = stack.last_mut() {
                        let mz = text.trim();
                        current.scan.precursor_mz =
                            Some(crate::scalar::parse_scalar(mz).ok_or_else(|| Error::Xml(format!("bad precursor m/z `{mz}`")))?);
                    }
                    capture = Capture::None;
                }
                b"peaks" => {
                    if let (Capture::Peaks { precision }, Some(current)) = (&capture, stack.last_mut()) {
                        current.scan.peaks = decode_peaks(current.scan.scan_id, &text, *precision)?;
                    }
                    capture = Capture::None;
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if let Some(open) = stack.last() {
        return Err(Error::Xml(format!("unterminated <scan num=\"{}\">", open.scan.scan_id)));
    }
    let tree = link_precursors(slots.into_iter().flatten().collect())?;
    Ok(MzXmlReport { tree, ignored_elements: ignored })
}

fn encode_peaks<T: Scalar>(peaks: &[Peak<T>], precision: PeakPrecision) -> String {
    let mut bytes = Vec::with_capacity(peaks.len() * 16);
    for p in peaks {
        for v in [p.mz.as_f64(), p.intensity.as_f64()] {
            match precision {
                PeakPrecision::Single => bytes.extend_from_slice(&(v as f32).to_be_bytes()),
                PeakPrecision::Double => bytes.extend_from_slice(&v.to_be_bytes()),
            }
        }
    }
    STANDARD.encode(bytes)
}

/// Writes the run with child scans nested inside their parents.
pub fn write_mzxml_subset<W: Write, T: Scalar>(out: &mut W, tree: &ScanTree<T>, precision: PeakPrecision) -> std::io::Result<()> {
    fn scan<W: Write, T: Scalar>(out: &mut W, tree: &ScanTree<T>, s: &Scan<T>, precision: PeakPrecision, depth: usize) -> std::io::Result<()> {
        let pad = "  ".repeat(depth + 2);
        writeln!(out, "{pad}<scan num=\"{}\" msLevel=\"{}\" peaksCount=\"{}\">", s.scan_id, s.ms_level, s.peaks.len())?;
        if let Some(mz) = s.precursor_mz {
            let charge = s.precursor_charge.map(|z| format!(" precursorCharge=\"{z}\"")).unwrap_or_default();
            writeln!(out, "{pad}  <precursorMz{charge}>{mz}</precursorMz>")?;
        }
        writeln!(
            out,
            "{pad}  <peaks precision=\"{}\" byteOrder=\"network\" pairOrder=\"m/z-int\" compressionType=\"none\">{}</peaks>",
            precision.bits(),
            encode_peaks(&s.peaks, precision)
        )?;
        for child in tree.children(s.scan_id) {
            if let Some(c) = tree.get(*child) {
                scan(out, tree, c, precision, depth + 1)?;
            }
        }
        writeln!(out, "{pad}</scan>")
    }

    writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>")?;
    writeln!(out, "<mzXML>\n  <msRun scanCount=\"{}\">", tree.len())?;
    for root in tree.roots() {
        scan(out, tree, root, precision, 0)?;
    }
    writeln!(out, "  </msRun>\n</mzXML>")
}
