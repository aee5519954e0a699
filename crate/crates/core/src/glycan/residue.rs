use std::collections::BTreeMap;

use crate::config::{config_lines, ConfigLine, DEFAULT_RESIDUES};
use crate::error::{Error, Result};

use super::elements::Formula;

/// A monosaccharide kind as it appears inside a chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueKind {
    pub code: String,
    /// Residue formula, i.e. the free monosaccharide minus one water.
    pub base_composition: Formula,
    /// Methylatable positions when the residue is terminal and unsubstituted.
    pub methylation_sites_free: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueRegistry {
    kinds: BTreeMap<String, ResidueKind>,
}

impl ResidueRegistry {
    pub fn new(kinds: impl IntoIterator<Item = ResidueKind>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for kind in kinds {
            if !kind.base_composition.is_non_negative() {
                return Err(Error::Config(format!("residue {} has negative element counts", kind.code)));
            }
            if kind.code.is_empty() || !kind.code.bytes().all(|b| b.is_ascii_alphanumeric()) {
                return Err(Error::Config(format!("residue code `{}` must be alphanumeric", kind.code)));
            }
            map.insert(kind.code.clone(), kind);
        }
        Ok(Self { kinds: map })
    }

    /// Reads `<code> = <formula> <sites>` lines.
    pub fn from_config(text: &str) -> Result<Self> {
        let mut kinds = Vec::new();
        for line in config_lines(text) {
            let (line, key, value) = match line {
                ConfigLine::Entry { line, key, value } => (line, key, value),
                ConfigLine::Directive { line, .. } => {
                    return Err(Error::parse(line, "expected `<code> = <formula> <sites>`"));
                }
            };
            let mut parts = value.split_whitespace();
            let (Some(formula), Some(sites), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(line, "expected `<code> = <formula> <sites>`"));
            };
            let base_composition: Formula =
                formula.parse().map_err(|e: Error| Error::parse(line, e.to_string()))?;
            let methylation_sites_free = sites
                .parse()
                .map_err(|_| Error::parse(line, format!("bad site count `{sites}`")))?;
            kinds.push(ResidueKind { code: key.to_string(), base_composition, methylation_sites_free });
        }
        Self::new(kinds)
    }

    pub fn get(&self, code: &str) -> Result<&ResidueKind> {
        self.kinds.get(code).ok_or_else(|| Error::UnknownResidue(code.to_string()))
    }

    pub fn contains(&self, code: &str) -> bool {
        self.kinds.contains_key(code)
    }

    pub fn kinds(&self) -> impl Iterator<Item = &ResidueKind> {
        self.kinds.values()
    }
}

impl Default for ResidueRegistry {
    fn default() -> Self {
        Self::from_config(DEFAULT_RESIDUES).expect("shipped residue registry is valid")
    }
}
