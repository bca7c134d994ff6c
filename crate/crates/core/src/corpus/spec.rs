use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use crate::constraint::{Normalizer, VocabEntry};
use crate::error::{Error, Result};
use crate::kvtext::KvDoc;
use crate::level::{Band, CefrLevel};
use crate::policy::{PolicyShape, Vocabulary};

/// A lemma and its inflected form (plural for nouns, past for verbs; equal
/// to the lemma for adjectives).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordForm {
    pub lemma: String,
    pub inflected: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseForm {
    pub lemmas: Vec<String>,
    /// Words as they appear in sentences; may interleave extra tokens.
    pub surface: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SlotKind {
    Noun,
    NounPlural,
    Verb,
    VerbPast,
    Adjective,
    Phrase,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Piece {
    Word(String),
    Slot { kind: SlotKind, index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub simple: Vec<Piece>,
    pub complex: Vec<Piece>,
}

/// Banded micro-language: concept rows realized once per band, plus
/// templates pairing a simple and a complex sentence shape.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroLanguageSpec {
    pub seed: u64,
    pub allow_repeats: bool,
    /// Concept rows are drawn with weight `1 / (row + 1)^zipf`; 0 is uniform.
    pub zipf: f64,
    pub stopwords: Vec<String>,
    pub nouns: Vec<[WordForm; 3]>,
    pub verbs: Vec<[WordForm; 3]>,
    pub adjectives: Vec<[WordForm; 3]>,
    pub phrases: Vec<[PhraseForm; 3]>,
    pub templates: Vec<Template>,
}

fn split_cells(raw: &str, key: &str) -> Result<[String; 3]> {
    let cells: Vec<String> = raw.split('|').map(|c| c.trim().to_string()).collect();
    <[String; 3]>::try_from(cells).map_err(|c| Error::Config(format!("`{key}` row needs 3 cells, got {}", c.len())))
}

fn word_cells(raw: &str, key: &str, inflected: bool) -> Result<[WordForm; 3]> {
    let cells = split_cells(raw, key)?;
    let parse = |c: &String| -> Result<WordForm> {
        let parts: Vec<&str> = c.split_whitespace().collect();
        match (inflected, parts.as_slice()) {
            (true, [lemma, form]) => Ok(WordForm {
                lemma: lemma.to_lowercase(),
                inflected: form.to_lowercase(),
            }),
            (false, [lemma]) => Ok(WordForm {
                lemma: lemma.to_lowercase(),
                inflected: lemma.to_lowercase(),
            }),
            _ => Err(Error::Config(format!("malformed `{key}` cell `{c}`"))),
        }
    };
    Ok([parse(&cells[0])?, parse(&cells[1])?, parse(&cells[2])?])
}

fn phrase_cells(raw: &str) -> Result<[PhraseForm; 3]> {
    let cells = split_cells(raw, "phrase")?;
    let parse = |c: &String| -> Result<PhraseForm> {
        let (lemmas, surface) = match c.split_once("->") {
            Some((l, s)) => (l.trim(), s.trim()),
            None => (c.as_str(), c.as_str()),
        };
        let lemmas: Vec<String> = lemmas.split_whitespace().map(str::to_lowercase).collect();
        if lemmas.len() < 2 || surface.is_empty() {
            return Err(Error::Config(format!("phrase cell `{c}` needs two or more lemmas")));
        }
        Ok(PhraseForm {
            lemmas,
            surface: surface.to_lowercase(),
        })
    };
    Ok([parse(&cells[0])?, parse(&cells[1])?, parse(&cells[2])?])
}

fn parse_pieces(side: &str) -> Result<Vec<Piece>> {
    side.split_whitespace()
        .map(|tok| {
            let Some(inner) = tok.strip_prefix('{').and_then(|t| t.strip_suffix('}')) else {
                return Ok(Piece::Word(tok.to_lowercase()));
            };
            let bad = || Error::Config(format!("unknown template slot `{tok}`"));
            let mut chars = inner.chars();
            let head = chars.next().ok_or_else(bad)?;
            let rest: String = chars.collect();
            let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
            let suffix = &rest[digits.len()..];
            let index: usize = digits.parse().map_err(|_| bad())?;
            let kind = match (head, suffix) {
                ('N', "") => SlotKind::Noun,
                ('N', "s") => SlotKind::NounPlural,
                ('V', "") => SlotKind::Verb,
                ('V', "d") => SlotKind::VerbPast,
                ('J', "") => SlotKind::Adjective,
                ('P', "") => SlotKind::Phrase,
                _ => return Err(bad()),
            };
            Ok(Piece::Slot { kind, index })
        })
        .collect()
}

impl SlotKind {
    /// Slots sharing a group draw from the same concept rows.
    pub(crate) fn group(self) -> usize {
        match self {
            SlotKind::Noun | SlotKind::NounPlural => 0,
            SlotKind::Verb | SlotKind::VerbPast => 1,
            SlotKind::Adjective => 2,
            SlotKind::Phrase => 3,
        }
    }
}

impl MicroLanguageSpec {
    pub fn from_doc(doc: &KvDoc) -> Result<Self> {
        doc.expect_format("lexalign.microlang", 1)?;
        let spec = MicroLanguageSpec {
            seed: doc.parse_or("seed", 0)?,
            allow_repeats: doc.parse_or("allow_repeats", false)?,
            zipf: doc.parse_or("zipf", 0.0)?,
            stopwords: doc.require("stopwords")?.split_whitespace().map(str::to_lowercase).collect(),
            nouns: doc.get_all("noun").map(|r| word_cells(r, "noun", true)).collect::<Result<_>>()?,
            verbs: doc.get_all("verb").map(|r| word_cells(r, "verb", true)).collect::<Result<_>>()?,
            adjectives: doc.get_all("adj").map(|r| word_cells(r, "adj", false)).collect::<Result<_>>()?,
            phrases: doc.get_all("phrase").map(phrase_cells).collect::<Result<_>>()?,
            templates: doc
                .get_all("template")
                .map(|r| {
                    let (s, c) = r
                        .split_once('|')
                        .ok_or_else(|| Error::Config(format!("template `{r}` lacks `|`")))?;
                    Ok(Template {
                        simple: parse_pieces(s)?,
                        complex: parse_pieces(c)?,
                    })
                })
                .collect::<Result<_>>()?,
        };
        spec.validate(PolicyShape::default().max_prompt)?;
        Ok(spec)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_doc(&KvDoc::parse(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_doc(&KvDoc::load(path)?)
    }

    /// Checks that band lemma sets are pairwise disjoint, that every slot has
    /// concepts to draw from, and that complex sentences (plus the prompt
    /// markers) fit in `max_prompt` tokens.
    pub fn validate(&self, max_prompt: usize) -> Result<()> {
        if !(self.zipf >= 0.0 && self.zipf.is_finite()) {
            return Err(Error::Config("zipf exponent must be a finite value >= 0".into()));
        }
        if self.templates.is_empty() {
            return Err(Error::Config("micro-language has no templates".into()));
        }
        let lemma_sets: Vec<HashSet<String>> = Band::ALL.iter().map(|&b| self.band_lemmas(b)).collect();
        for i in 0..3 {
            for j in i + 1..3 {
                if let Some(w) = lemma_sets[i].intersection(&lemma_sets[j]).next() {
                    return Err(Error::Config(format!(
                        "`{w}` appears in bands {} and {}",
                        Band::ALL[i],
                        Band::ALL[j]
                    )));
                }
            }
        }
        let longest_phrase = self
            .phrases
            .iter()
            .flatten()
            .map(|p| p.surface.split_whitespace().count())
            .max()
            .unwrap_or(1);
        for t in &self.templates {
            for piece in t.simple.iter().chain(&t.complex) {
                if let Piece::Slot { kind, .. } = piece {
                    if self.rows(*kind) == 0 {
                        return Err(Error::Config(format!("template uses {kind:?} but none are defined")));
                    }
                }
            }
            let len: usize = t
                .complex
                .iter()
                .map(|p| match p {
                    Piece::Slot { kind: SlotKind::Phrase, .. } => longest_phrase,
                    _ => 1,
                })
                .sum();
            if len + 2 > max_prompt {
                return Err(Error::Config(format!(
                    "a complex template expands to {len} tokens, over the {max_prompt}-token prompt bound"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn rows(&self, kind: SlotKind) -> usize {
        match kind.group() {
            0 => self.nouns.len(),
            1 => self.verbs.len(),
            2 => self.adjectives.len(),
            _ => self.phrases.len(),
        }
    }

    pub(crate) fn realize(&self, kind: SlotKind, row: usize, band: Band) -> &str {
        let b = band.index();
        match kind {
            SlotKind::Noun => &self.nouns[row][b].lemma,
            SlotKind::NounPlural => &self.nouns[row][b].inflected,
            SlotKind::Verb => &self.verbs[row][b].lemma,
            SlotKind::VerbPast => &self.verbs[row][b].inflected,
            SlotKind::Adjective => &self.adjectives[row][b].lemma,
            SlotKind::Phrase => &self.phrases[row][b].surface,
        }
    }

    fn band_lemmas(&self, band: Band) -> HashSet<String> {
        let b = band.index();
        self.nouns
            .iter()
            .chain(&self.verbs)
            .chain(&self.adjectives)
            .map(|r| r[b].lemma.clone())
            .collect()
    }

    /// Vocabulary entries for every word and phrase, sublevels alternating by
    /// row.
    pub fn vocab_entries(&self) -> Result<Vec<VocabEntry>> {
        let mut out = Vec::new();
        for band in Band::ALL {
            let b = band.index();
            let [lo, hi] = band.sublevels();
            let level = |row: usize| -> CefrLevel {
                if row % 2 == 0 {
                    lo
                } else {
                    hi
                }
            };
            let mut row = 0;
            for w in self.nouns.iter().chain(&self.verbs).chain(&self.adjectives) {
                let f = &w[b];
                out.push(VocabEntry::new(f.lemma.clone(), vec![f.lemma.clone()], level(row))?);
                row += 1;
            }
            for p in &self.phrases {
                let f = &p[b];
                out.push(VocabEntry::new(f.lemmas.join(" "), f.lemmas.clone(), level(row))?);
                row += 1;
            }
        }
        Ok(out)
    }

    /// Every surface word the generator can produce, stopwords first.
    pub fn surface_words(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut push = |w: &str| {
            if seen.insert(w.to_string()) {
                out.push(w.to_string());
            }
        };
        for s in &self.stopwords {
            push(s);
        }
        for band in Band::ALL {
            let b = band.index();
            for w in self.nouns.iter().chain(&self.verbs).chain(&self.adjectives) {
                push(&w[b].lemma);
                push(&w[b].inflected);
            }
            for p in &self.phrases {
                for w in p[b].surface.split_whitespace() {
                    push(w);
                }
            }
        }
        for t in &self.templates {
            for piece in t.simple.iter().chain(&t.complex) {
                if let Piece::Word(w) = piece {
                    push(w);
                }
            }
        }
        out
    }

    pub fn policy_vocabulary(&self) -> Vocabulary {
        Vocabulary::new(self.surface_words())
    }

    /// Normalizer whose stopwords are this language's function words and
    /// whose lexicon holds every content lemma.
    pub fn normalizer(&self) -> Normalizer {
        let base = Normalizer::new();
        let mut stop: BTreeSet<String> = self.stopwords.iter().cloned().collect();
        for s in &self.stopwords {
            stop.insert(base.lemmatize(s));
        }
        let lexicon: Vec<String> = Band::ALL.iter().flat_map(|&b| self.band_lemmas(b)).collect();
        base.with_stopwords(stop).with_lexicon(lexicon)
    }
}
