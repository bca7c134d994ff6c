//! Lowercasing, lemmatization and stopword filtering.
//!
//! Lemmas come from an exception table of irregular forms, then from ordered
//! suffix rules (`-ies`→`y`, `-es`/`-s`, `-ied`, `-ed`, `-ing`) with a
//! doubled-consonant repair. When a lexicon of known lemmas is attached, the
//! rule candidates are checked against it in order and the first known one
//! wins; otherwise a Porter-style heuristic decides whether a final `e` is
//! restored.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");
const DEFAULT_EXCEPTIONS: &str = include_str!("../../data/lemma_exceptions.tsv");

/// A sentence after normalization.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NormalizedSequence {
    /// All lemmas in surface order, stopwords included.
    pub full_lemmas: Vec<String>,
    /// Lemmas with stopwords removed.
    pub content_lemmas: Vec<String>,
    /// Number of non-punctuation surface tokens.
    pub token_count: usize,
}

impl NormalizedSequence {
    /// Concatenation of two sequences, as if their texts were joined.
    pub fn concat(&self, other: &NormalizedSequence) -> NormalizedSequence {
        let mut full = self.full_lemmas.clone();
        full.extend(other.full_lemmas.iter().cloned());
        let mut content = self.content_lemmas.clone();
        content.extend(other.content_lemmas.iter().cloned());
        NormalizedSequence {
            full_lemmas: full,
            content_lemmas: content,
            token_count: self.token_count + other.token_count,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Normalizer {
    exceptions: HashMap<String, String>,
    stopwords: HashSet<String>,
    lexicon: HashSet<String>,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer {
            exceptions: parse_exceptions(DEFAULT_EXCEPTIONS),
            stopwords: parse_word_list(DEFAULT_STOPWORDS).into_iter().collect(),
            lexicon: HashSet::new(),
        }
    }
}

impl Normalizer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces the stopword list.
    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stopwords = words.into_iter().map(|w| w.into().to_lowercase()).collect();
        self
    }

    /// Adds known lemmas used to arbitrate between suffix-rule candidates.
    pub fn with_lexicon<I, S>(mut self, lemmas: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.lexicon
            .extend(lemmas.into_iter().map(|w| w.into().to_lowercase()));
        self
    }

    pub fn stopwords(&self) -> impl Iterator<Item = &str> {
        self.stopwords.iter().map(String::as_str)
    }

    pub fn is_stopword(&self, lemma: &str) -> bool {
        self.stopwords.contains(lemma)
    }

    pub fn lemmatize(&self, word: &str) -> String {
        let word = word.to_lowercase();
        if let Some(lemma) = self.exceptions.get(&word) {
            return lemma.clone();
        }
        if self.stopwords.contains(&word) || self.lexicon.contains(&word) {
            return word;
        }
        let candidates = suffix_candidates(&word);
        if candidates.is_empty() {
            return word;
        }
        if let Some(known) = candidates.iter().find(|c| self.lexicon.contains(*c)) {
            return known.clone();
        }
        candidates.into_iter().next().unwrap_or(word)
    }

    pub fn normalize(&self, text: &str) -> Result<NormalizedSequence> {
        if text.trim().is_empty() {
            return Err(Error::EmptyInput("sentence"));
        }
        let full_lemmas: Vec<String> = surface_tokens(text)
            .map(|tok| self.lemmatize(tok))
            .collect();
        Ok(self.from_lemmas(full_lemmas))
    }

    /// Builds a sequence from lemmas that are already normalized.
    pub fn from_lemmas(&self, full_lemmas: Vec<String>) -> NormalizedSequence {
        let content_lemmas = full_lemmas
            .iter()
            .filter(|l| !self.is_stopword(l))
            .cloned()
            .collect();
        NormalizedSequence {
            token_count: full_lemmas.len(),
            full_lemmas,
            content_lemmas,
        }
    }
}

/// Whitespace tokens with surrounding punctuation stripped; pure punctuation
/// tokens are dropped.
pub fn surface_tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
}

/// One token per line; `#` starts a comment line.
pub fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

fn parse_exceptions(text: &str) -> HashMap<String, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('\t'))
        .map(|(s, l)| (s.trim().to_string(), l.trim().to_string()))
        .collect()
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

/// Porter measure: number of vowel-consonant sequences.
fn measure(stem: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for (i, &c) in stem.iter().enumerate() {
        let v = is_vowel(c) || (c == b'y' && i > 0 && !is_vowel(stem[i - 1]));
        if prev_vowel && !v {
            m += 1;
        }
        prev_vowel = v;
    }
    m
}

/// Consonant-vowel-consonant ending, last consonant not w, x or y.
fn ends_cvc(stem: &[u8]) -> bool {
    let n = stem.len();
    n >= 3
        && !is_vowel(stem[n - 3])
        && is_vowel(stem[n - 2])
        && !is_vowel(stem[n - 1])
        && !matches!(stem[n - 1], b'w' | b'x' | b'y')
}

/// Candidates after stripping a verbal suffix, best guess first.
fn verbal_candidates(stem: &str) -> Vec<String> {
    let b = stem.as_bytes();
    let n = b.len();
    let with_e = format!("{stem}e");
    let doubled = n >= 2 && b[n - 1] == b[n - 2] && !is_vowel(b[n - 1]);
    if doubled && !matches!(b[n - 1], b'l' | b's' | b'z') {
        return vec![stem[..n - 1].to_string(), stem.to_string(), with_e];
    }
    let wants_e = stem.ends_with("at")
        || stem.ends_with("bl")
        || stem.ends_with("iz")
        || stem.ends_with('v')
        || (measure(b) == 1 && ends_cvc(b));
    if wants_e {
        vec![with_e, stem.to_string()]
    } else {
        vec![stem.to_string(), with_e]
    }
}

fn suffix_candidates(word: &str) -> Vec<String> {
    let n = word.len();
    if !word.is_ascii() || n < 3 {
        return Vec::new();
    }
    if let Some(stem) = word.strip_suffix("ies").filter(|_| n > 4) {
        return vec![format!("{stem}y"), format!("{stem}ie")];
    }
    if let Some(stem) = word.strip_suffix("ied").filter(|_| n > 4) {
        return vec![format!("{stem}y"), format!("{stem}ie")];
    }
    if let Some(stem) = word.strip_suffix("sses") {
        return vec![format!("{stem}ss")];
    }
    for suffix in ["ches", "shes", "xes", "zes", "oes"] {
        if word.ends_with(suffix) && n > suffix.len() + 1 {
            let stem = &word[..n - 2];
            return vec![stem.to_string(), format!("{stem}e")];
        }
    }
    if word.ends_with("ss") || word.ends_with("us") || word.ends_with("is") {
        return Vec::new();
    }
    if let Some(stem) = word.strip_suffix('s').filter(|_| n > 3) {
        return vec![stem.to_string()];
    }
    if word.ends_with("eed") {
        return Vec::new();
    }
    if let Some(stem) = word.strip_suffix("ed").filter(|s| s.len() >= 3) {
        if stem.bytes().any(is_vowel) {
            return verbal_candidates(stem);
        }
    }
    if let Some(stem) = word.strip_suffix("ing").filter(|s| s.len() >= 3) {
        if stem.bytes().any(is_vowel) {
            return verbal_candidates(stem);
        }
    }
    Vec::new()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lemmas(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn normalizes_the_looked_up_example() {
        let n = Normalizer::new();
        let seq = n.normalize("The cats looked it up").unwrap();
        assert_eq!(seq.full_lemmas, lemmas(&["the", "cat", "look", "it", "up"]));
        assert_eq!(seq.content_lemmas, lemmas(&["cat", "look"]));
        assert_eq!(seq.token_count, 5);
    }

    #[test]
    fn single_lemma_is_identity() {
        let seq = Normalizer::new().normalize("cat").unwrap();
        assert_eq!(seq.full_lemmas, lemmas(&["cat"]));
        assert_eq!(seq.content_lemmas, lemmas(&["cat"]));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(Normalizer::new().normalize("").is_err());
        assert!(Normalizer::new().normalize("   ").is_err());
    }

    #[test]
    fn ships_fifty_stopwords() {
        assert_eq!(parse_word_list(DEFAULT_STOPWORDS).len(), 50);
        assert!(parse_exceptions(DEFAULT_EXCEPTIONS).len() >= 200);
    }

    #[test]
    fn suffix_rules() {
        let n = Normalizer::new();
        for (surface, lemma) in [
            ("dichotomies", "dichotomy"),
            ("watches", "watch"),
            ("stopped", "stop"),
            ("running", "run"),
            ("facilitated", "facilitate"),
            ("scrutinized", "scrutinize"),
            ("improved", "improve"),
            ("hoped", "hope"),
            ("discerned", "discern"),
            ("studied", "study"),
            ("went", "go"),
            ("children", "child"),
            ("is", "be"),
            ("us", "us"),
            ("this", "this"),
            ("glass", "glass"),
            ("speed", "speed"),
        ] {
            assert_eq!(n.lemmatize(surface), lemma, "{surface}");
        }
    }

    #[test]
    fn lexicon_breaks_ties() {
        let plain = Normalizer::new();
        assert_eq!(plain.lemmatize("purchased"), "purchas");
        let n = Normalizer::new().with_lexicon(["purchase", "reduce", "require"]);
        assert_eq!(n.lemmatize("purchased"), "purchase");
        assert_eq!(n.lemmatize("reduced"), "reduce");
        assert_eq!(n.lemmatize("required"), "require");
    }

    #[test]
    fn punctuation_is_not_a_token() {
        let seq = Normalizer::new().normalize("Cats , dogs !").unwrap();
        assert_eq!(seq.full_lemmas, lemmas(&["cat", "dog"]));
        assert_eq!(seq.token_count, 2);
    }

    #[test]
    fn normalization_is_deterministic() {
        let n = Normalizer::new();
        let text = "The children went running up the hills";
        assert_eq!(n.normalize(text).unwrap(), n.normalize(text).unwrap());
    }
}
