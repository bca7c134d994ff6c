use std::fmt::Write as _;
use std::path::Path;

use super::generate::ParallelPair;
use crate::error::{Error, Result};
use crate::level::CefrLevel;
use crate::reward::LabeledSentence;

/// Parses `text<TAB>level` rows in order; blank and `#` lines are skipped.
pub fn parse_labeled(text: &str) -> Result<Vec<LabeledSentence>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((sentence, level)) = line.rsplit_once('\t') else {
            return Err(Error::parse(lineno, "columns", "expected `text<TAB>level`"));
        };
        if sentence.trim().is_empty() {
            return Err(Error::parse(lineno, "text", "empty sentence"));
        }
        let level: CefrLevel = level
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, "level", format!("unknown level code `{}`", level.trim())))?;
        out.push(LabeledSentence {
            text: sentence.to_string(),
            level,
        });
    }
    Ok(out)
}

pub fn load_labeled(path: impl AsRef<Path>) -> Result<Vec<LabeledSentence>> {
    let path = path.as_ref();
    parse_labeled(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn labeled_to_tsv(sentences: &[LabeledSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        let _ = writeln!(out, "{}\t{}", s.text, s.level);
    }
    out
}

pub fn save_labeled(path: impl AsRef<Path>, sentences: &[LabeledSentence]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, labeled_to_tsv(sentences)).map_err(|e| Error::io(path, e))
}

/// Labels each simple side with its band (lower sublevel for even indices,
/// upper for odd) and each complex side as C2.
pub fn labeled_from_corpus(pairs: &[ParallelPair]) -> Vec<LabeledSentence> {
    let mut out = Vec::with_capacity(pairs.len() * 2);
    for (i, p) in pairs.iter().enumerate() {
        out.push(LabeledSentence {
            text: p.simple.clone(),
            level: p.band.sublevels()[i % 2],
        });
        out.push(LabeledSentence {
            text: p.complex.clone(),
            level: CefrLevel::C2,
        });
    }
    out
}
