//! Shared reader for the `key = value` text configuration files.
//!
//! Blank lines and lines starting with `#` are skipped; trailing `# ...`
//! comments are stripped. Lines without `=` are returned as directives
//! (`carrier ...`, `loss ...`), split on whitespace.

pub const DEFAULT_ELEMENTS: &str = include_str!("../config/elements.cfg");
pub const DEFAULT_RESIDUES: &str = include_str!("../config/residues.cfg");
pub const DEFAULT_RUN_SETTINGS: &str = include_str!("../config/run.cfg");

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigLine<'a> {
    Entry { line: usize, key: &'a str, value: &'a str },
    Directive { line: usize, words: Vec<&'a str> },
}

pub fn config_lines(text: &str) -> impl Iterator<Item = ConfigLine<'_>> {
    text.lines().enumerate().filter_map(|(idx, raw)| {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            return None;
        }
        if let Some((key, value)) = content.split_once('=') {
            let key = key.trim();
            // `carrier Na+ charge=1 mass=...` has `=` inside its words
            if !key.contains(char::is_whitespace) {
                return Some(ConfigLine::Entry { line, key, value: value.trim() });
            }
        }
        Some(ConfigLine::Directive { line, words: content.split_whitespace().collect() })
    })
}
