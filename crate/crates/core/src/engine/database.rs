use std::collections::BTreeMap;
use std::io::BufRead;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::glycan::{GlycanStructure, ResidueRegistry};

/// One entry of a glycan database file.
#[derive(Debug, Clone, PartialEq)]
pub struct DatabaseEntry {
    pub glycan: Arc<GlycanStructure>,
    pub class: Option<String>,
}

/// A malformed database record; loading continues past it.
#[derive(Debug)]
pub struct RecordError {
    /// 1-based position among data records (comments and blanks excluded).
    pub record: usize,
    pub line: usize,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct GlycanDatabase {
    /// Entries sorted by glycan id.
    pub entries: Vec<DatabaseEntry>,
    pub errors: Vec<RecordError>,
}

impl GlycanDatabase {
    /// Reads `<id>\t<encoding>[\t<class>]` lines; `#` starts a comment line.
    pub fn read<R: BufRead>(input: R, registry: &ResidueRegistry) -> Result<Self> {
        let mut by_id: BTreeMap<String, DatabaseEntry> = BTreeMap::new();
        let mut errors = Vec::new();
        let mut record = 0;
        for (idx, line) in input.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let content = line.trim_end_matches(['\r', '\n']);
            if content.trim().is_empty() || content.trim_start().starts_with('#') {
                continue;
            }
            record += 1;
            let mut fields = content.split('\t');
            let (id, encoding) = (fields.next().unwrap_or_default().trim(), fields.next().map(str::trim));
            let class = fields.next().map(str::trim).filter(|c| !c.is_empty()).map(str::to_string);
            let result = match encoding {
                None | Some("") => Err(Error::parse(line_no, "expected `<id><TAB><encoding>[<TAB><class>]`")),
                Some(encoding) => GlycanStructure::parse(id, encoding, registry),
            };
            match result {
                Ok(glycan) if by_id.contains_key(glycan.id()) => errors.push(RecordError {
                    record,
                    line: line_no,
                    error: Error::parse(line_no, format!("duplicate glycan id `{}`", glycan.id())),
                }),
                Ok(glycan) => {
                    by_id.insert(glycan.id().to_string(), DatabaseEntry { glycan: Arc::new(glycan), class });
                }
                Err(error) => errors.push(RecordError { record, line: line_no, error }),
            }
        }
        Ok(Self { entries: by_id.into_values().collect(), errors })
    }

    pub fn from_structures(glycans: impl IntoIterator<Item = GlycanStructure>) -> Self {
        let mut entries: Vec<DatabaseEntry> =
            glycans.into_iter().map(|g| DatabaseEntry { glycan: Arc::new(g), class: None }).collect();
        entries.sort_by(|a, b| a.glycan.id().cmp(b.glycan.id()));
        entries.dedup_by(|a, b| a.glycan.id() == b.glycan.id());
        Self { entries, errors: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, id: &str) -> Option<&DatabaseEntry> {
        self.entries.binary_search_by(|e| e.glycan.id().cmp(id)).ok().map(|i| &self.entries[i])
    }

    pub fn glycans(&self) -> impl Iterator<Item = &Arc<GlycanStructure>> {
        self.entries.iter().map(|e| &e.glycan)
    }
}
