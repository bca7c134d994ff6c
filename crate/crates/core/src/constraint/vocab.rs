//! Leveled vocabulary lists.
//!
//! TSV layout, one entry per line, `#` lines ignored:
//!
//! ```text
//! surface<TAB>lemma tokens (space separated)<TAB>level<TAB>kind
//! look sth up	look up	A2	phrase
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::level::CefrLevel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntryKind {
    Word,
    Phrase,
}

impl EntryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryKind::Word => "word",
            EntryKind::Phrase => "phrase",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub surface: String,
    pub lemmas: Vec<String>,
    pub level: CefrLevel,
    pub kind: EntryKind,
}

impl VocabEntry {
    /// The kind is derived from the number of lemmas.
    pub fn new(surface: impl Into<String>, lemmas: Vec<String>, level: CefrLevel) -> Result<Self> {
        if lemmas.is_empty() {
            return Err(Error::EmptyInput("vocabulary entry lemmas"));
        }
        let kind = if lemmas.len() == 1 {
            EntryKind::Word
        } else {
            EntryKind::Phrase
        };
        Ok(VocabEntry {
            surface: surface.into(),
            lemmas,
            level,
            kind,
        })
    }
}

pub fn load_vocabulary(path: impl AsRef<Path>) -> Result<Vec<VocabEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_vocabulary(&text)
}

/// Parses vocabulary TSV. Entries sharing a lemma sequence collapse into the
/// first occurrence, which keeps the lowest level seen.
pub fn parse_vocabulary(text: &str) -> Result<Vec<VocabEntry>> {
    let mut entries: Vec<VocabEntry> = Vec::new();
    let mut index: HashMap<Vec<String>, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::parse(line, "columns", format!("expected 4 tab-separated columns, found {}", cols.len())));
        }
        let surface = cols[0].trim();
        if surface.is_empty() {
            return Err(Error::parse(line, "surface", "empty"));
        }
        let lemmas: Vec<String> = cols[1].split_whitespace().map(str::to_lowercase).collect();
        if lemmas.is_empty() {
            return Err(Error::parse(line, "lemma_tokens", "empty"));
        }
        let level: CefrLevel = cols[2]
            .parse()
            .map_err(|_| Error::parse(line, "level", format!("unknown level `{}`", cols[2].trim())))?;
        let kind = match cols[3].trim() {
            "word" => EntryKind::Word,
            "phrase" => EntryKind::Phrase,
            other => return Err(Error::parse(line, "kind", format!("unknown kind `{other}`"))),
        };
        if (kind == EntryKind::Word) != (lemmas.len() == 1) {
            return Err(Error::parse(line, "kind", format!("`{}` does not match {} lemma(s)", kind.as_str(), lemmas.len())));
        }
        match index.get(&lemmas) {
            Some(&at) => {
                let kept = &mut entries[at];
                kept.level = kept.level.min(level);
            }
            None => {
                index.insert(lemmas.clone(), entries.len());
                entries.push(VocabEntry {
                    surface: surface.to_string(),
                    lemmas,
                    level,
                    kind,
                });
            }
        }
    }
    Ok(entries)
}

pub fn vocabulary_to_tsv(entries: &[VocabEntry]) -> String {
    let mut out = String::from("# surface\tlemma_tokens\tlevel\tkind\n");
    for e in entries {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", e.surface, e.lemmas.join(" "), e.level, e.kind.as_str());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_lemmas_keep_lowest_level() {
        let text = "cat\tcat\tA1\tword\na lot of\ta lot of\tA2\tphrase\ncat\tcat\tB1\tword\n";
        let entries = parse_vocabulary(text).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].lemmas, vec!["cat"]);
        assert_eq!(entries[0].level, CefrLevel::A1);
        assert_eq!(entries[1].kind, EntryKind::Phrase);
    }

    #[test]
    fn lower_level_later_wins() {
        let entries = parse_vocabulary("cat\tcat\tB2\tword\ncat\tcat\tA2\tword\n").unwrap();
        assert_eq!(entries[0].level, CefrLevel::A2);
    }

    #[test]
    fn empty_file_is_empty_list() {
        assert!(parse_vocabulary("").unwrap().is_empty());
        assert!(parse_vocabulary("# only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn errors_name_line_and_field() {
        let err = parse_vocabulary("cat\tcat\tA1\tword\ndog\tdog\tD1\tword\n").unwrap_err();
        match err {
            Error::Parse { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "level");
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_vocabulary("cat\tcat\tA1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, field: "columns", .. }));
        let err = parse_vocabulary("look up\tlook up\tA1\tword\n").unwrap_err();
        assert!(matches!(err, Error::Parse { field: "kind", .. }));
    }

    #[test]
    fn tsv_round_trip() {
        let text = "# surface\tlemma_tokens\tlevel\tkind\ncat\tcat\tA1\tword\nlook sth up\tlook up\tA2\tphrase\n";
        let entries = parse_vocabulary(text).unwrap();
        assert_eq!(vocabulary_to_tsv(&entries), text);
    }
}
