use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::config::{config_lines, ConfigLine, DEFAULT_ELEMENTS};
use crate::error::{Error, Result};
use crate::scalar::{parse_scalar, Scalar};

/// Elemental formula with signed counts, so formulas can also express deltas.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Formula(BTreeMap<String, i64>);

impl Formula {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, element: &str) -> i64 {
        self.0.get(element).copied().unwrap_or(0)
    }

    pub fn add(&mut self, element: &str, count: i64) {
        let entry = self.0.entry(element.to_string()).or_insert(0);
        *entry += count;
        if *entry == 0 {
            self.0.remove(element);
        }
    }

    pub fn add_formula(&mut self, other: &Formula, times: i64) {
        for (element, count) in &other.0 {
            self.add(element, count * times);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> {
        self.0.iter().map(|(e, c)| (e.as_str(), *c))
    }

    pub fn is_non_negative(&self) -> bool {
        self.0.values().all(|&c| c >= 0)
    }
}

impl FromStr for Formula {
    type Err = Error;

    /// Hill-style formulas without charges or parentheses: `C6H10O5`, `CH4O`.
    fn from_str(text: &str) -> Result<Self> {
        let bytes = text.as_bytes();
        let mut formula = Formula::new();
        let mut pos = 0;
        if bytes.is_empty() {
            return Err(Error::Syntax { offset: 0, message: "empty formula".into() });
        }
        while pos < bytes.len() {
            if !bytes[pos].is_ascii_uppercase() {
                return Err(Error::Syntax { offset: pos, message: format!("expected element symbol in `{text}`") });
            }
            let start = pos;
            pos += 1;
            while pos < bytes.len() && bytes[pos].is_ascii_lowercase() {
                pos += 1;
            }
            let symbol = &text[start..pos];
            let digits_start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            let count = if digits_start == pos {
                1
            } else {
                text[digits_start..pos]
                    .parse::<i64>()
                    .map_err(|e| Error::Syntax { offset: digits_start, message: e.to_string() })?
            };
            formula.add(symbol, count);
        }
        Ok(formula)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (element, count) in &self.0 {
            if *count == 1 {
                write!(f, "{element}")?;
            } else {
                write!(f, "{element}{count}")?;
            }
        }
        Ok(())
    }
}

/// Monoisotopic element masses. Immutable once built; every mass is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMassTable<T: Scalar = f64> {
    entries: BTreeMap<String, T>,
}

impl<T: Scalar> ElementMassTable<T> {
    pub fn new(entries: impl IntoIterator<Item = (String, T)>) -> Result<Self> {
        let entries: BTreeMap<String, T> = entries.into_iter().collect();
        if let Some((symbol, mass)) = entries.iter().find(|(_, m)| !(**m > T::zero())) {
            return Err(Error::Config(format!("element {symbol} has non-positive mass {mass}")));
        }
        Ok(Self { entries })
    }

    pub fn from_config(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for line in config_lines(text) {
            match line {
                ConfigLine::Entry { line, key, value } => {
                    let mass = parse_scalar::<T>(value)
                        .ok_or_else(|| Error::parse(line, format!("bad mass `{value}` for {key}")))?;
                    entries.push((key.to_string(), mass));
                }
                ConfigLine::Directive { line, .. } => {
                    return Err(Error::parse(line, "expected `<symbol> = <mass>`"));
                }
            }
        }
        Self::new(entries)
    }

    pub fn mass(&self, symbol: &str) -> Result<T> {
        self.entries
            .get(symbol)
            .copied()
            .ok_or_else(|| Error::UnknownElement(symbol.to_string()))
    }

    pub fn formula_mass(&self, formula: &Formula) -> Result<T> {
        formula.iter().try_fold(T::zero(), |acc, (symbol, count)| {
            Ok(acc + self.mass(symbol)? * T::lit(count as f64))
        })
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl<T: Scalar> Default for ElementMassTable<T> {
    fn default() -> Self {
        Self::from_config(DEFAULT_ELEMENTS).expect("shipped element table is valid")
    }
}
