//! Leveled vocabulary compiled into disjunctive constraint sets.
//!
//! A band's vocabulary is a disjunction of clauses. A word clause holds one
//! lemma; a phrase clause is a conjunction of ordered lemmas that must appear
//! in order within a bounded gap. Alongside the target clauses, a set carries
//! the clauses of every band above it so that above-level matches can be
//! penalized.

mod matcher;
mod normalize;
mod vocab;

use std::collections::HashSet;
use std::path::Path;

pub use matcher::{count_all, count_clause, phrase_spans, ClauseCounts, DEFAULT_GAP};
pub use normalize::{parse_word_list, surface_tokens, NormalizedSequence, Normalizer};
pub use vocab::{load_vocabulary, parse_vocabulary, vocabulary_to_tsv, EntryKind, VocabEntry};

use crate::error::{Error, Result};
use crate::kvtext::KvDoc;
use crate::level::Band;

pub type ClauseKind = EntryKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub id: usize,
    pub literals: Vec<String>,
    pub kind: ClauseKind,
}

impl Clause {
    pub fn new(id: usize, literals: Vec<String>) -> Result<Self> {
        let kind = match literals.len() {
            0 => return Err(Error::EmptyInput("clause literals")),
            1 => ClauseKind::Word,
            _ => ClauseKind::Phrase,
        };
        Ok(Clause { id, literals, kind })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSet {
    band: Band,
    clauses: Vec<Clause>,
    above_level: Vec<Clause>,
}

impl ConstraintSet {
    /// Validates ids (dense, in order) and literal uniqueness. Unlike
    /// [`compile_constraints`] an empty clause list is accepted.
    pub fn new(band: Band, clauses: Vec<Clause>, above_level: Vec<Clause>) -> Result<Self> {
        for list in [&clauses, &above_level] {
            let mut seen = HashSet::new();
            for (i, c) in list.iter().enumerate() {
                if c.id != i {
                    return Err(Error::Config(format!("clause id {} at position {i}", c.id)));
                }
                if !seen.insert(&c.literals) {
                    return Err(Error::Config(format!(
                        "duplicate clause `{}`",
                        c.literals.join(" ")
                    )));
                }
            }
        }
        Ok(ConstraintSet {
            band,
            clauses,
            above_level,
        })
    }

    pub fn band(&self) -> Band {
        self.band
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn above_level(&self) -> &[Clause] {
        &self.above_level
    }

    /// Number of target clauses.
    pub fn m(&self) -> usize {
        self.clauses.len()
    }

    pub fn word_count(&self) -> usize {
        self.clauses
            .iter()
            .filter(|c| c.kind == ClauseKind::Word)
            .count()
    }

    pub fn phrase_count(&self) -> usize {
        self.m() - self.word_count()
    }

    pub fn to_doc(&self) -> KvDoc {
        let mut doc = KvDoc::new("lexalign.constraints", 1);
        doc.push("band", self.band);
        doc.push("m", self.m());
        doc.push("above_m", self.above_level.len());
        for c in &self.clauses {
            doc.push("clause", format!("{} {}", c.kind.as_str(), c.literals.join(" ")));
        }
        for c in &self.above_level {
            doc.push("above", format!("{} {}", c.kind.as_str(), c.literals.join(" ")));
        }
        doc
    }

    pub fn from_doc(doc: &KvDoc) -> Result<Self> {
        doc.expect_format("lexalign.constraints", 1)?;
        let band: Band = doc.parse_key("band")?;
        let read = |key: &str| -> Result<Vec<Clause>> {
            doc.get_all(key)
                .enumerate()
                .map(|(id, v)| {
                    let mut parts = v.split_whitespace();
                    let kind = parts.next().unwrap_or("");
                    let literals: Vec<String> = parts.map(String::from).collect();
                    let clause = Clause::new(id, literals)?;
                    if clause.kind.as_str() != kind {
                        return Err(Error::Mismatch(format!("clause {id}: kind `{kind}`")));
                    }
                    Ok(clause)
                })
                .collect()
        };
        let set = ConstraintSet::new(band, read("clause")?, read("above")?)?;
        if set.m() != doc.parse_key::<usize>("m")? {
            return Err(Error::Mismatch("clause count differs from `m`".into()));
        }
        Ok(set)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_doc().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_doc(&KvDoc::load(path)?)
    }
}

/// Collects the entries of `band` as target clauses and the entries of every
/// higher band as above-level clauses, assigning ids in input order.
pub fn compile_constraints(entries: &[VocabEntry], band: Band) -> Result<ConstraintSet> {
    let collect = |keep: &dyn Fn(&VocabEntry) -> bool| {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for e in entries.iter().filter(|e| keep(e)) {
            if seen.insert(e.lemmas.clone()) {
                out.push(Clause {
                    id: out.len(),
                    literals: e.lemmas.clone(),
                    kind: e.kind,
                });
            }
        }
        out
    };
    let clauses = collect(&|e| band.contains(e.level));
    if clauses.is_empty() {
        return Err(Error::EmptyInput("no vocabulary entries in band"));
    }
    let above = collect(&|e| e.level.band() > band);
    ConstraintSet::new(band, clauses, above)
}
