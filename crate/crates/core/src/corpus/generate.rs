use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spec::{MicroLanguageSpec, Piece, SlotKind, Template};
use crate::error::{Error, Result};
use crate::level::Band;

/// A complex sentence with a reference simplification at `band`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelPair {
    pub complex: String,
    pub simple: String,
    pub band: Band,
}

const MAX_ATTEMPTS: usize = 10_000;

fn template_capacity(spec: &MicroLanguageSpec, t: &Template) -> u128 {
    let mut slots: BTreeMap<(usize, usize), u128> = BTreeMap::new();
    for piece in t.simple.iter().chain(&t.complex) {
        if let Piece::Slot { kind, index } = piece {
            slots.insert((kind.group(), *index), spec.rows(*kind) as u128);
        }
    }
    slots.values().fold(1u128, |acc, &n| acc.saturating_mul(n))
}

/// Upper bound on distinct pairs per band.
pub fn capacity(spec: &MicroLanguageSpec) -> u128 {
    spec.templates
        .iter()
        .map(|t| template_capacity(spec, t))
        .fold(0u128, u128::saturating_add)
}

fn realize(spec: &MicroLanguageSpec, pieces: &[Piece], choice: &BTreeMap<(usize, usize), usize>, band: Band) -> String {
    pieces
        .iter()
        .map(|p| match p {
            Piece::Word(w) => w.as_str(),
            Piece::Slot { kind, index } => spec.realize(*kind, choice[&(kind.group(), *index)], band),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn row_weights(spec: &MicroLanguageSpec) -> Vec<WeightedIndex<f64>> {
    [SlotKind::Noun, SlotKind::Verb, SlotKind::Adjective, SlotKind::Phrase]
        .iter()
        .map(|&k| {
            let n = spec.rows(k).max(1);
            WeightedIndex::new((0..n).map(|r| (r as f64 + 1.0).powf(-spec.zipf))).expect("positive weights")
        })
        .collect()
}

fn sample_pair(
    spec: &MicroLanguageSpec,
    band: Band,
    row_weights: &[WeightedIndex<f64>],
    rng: &mut ChaCha8Rng,
) -> ParallelPair {
    let t = &spec.templates[rng.gen_range(0..spec.templates.len())];
    let mut choice = BTreeMap::new();
    for piece in t.simple.iter().chain(&t.complex) {
        if let Piece::Slot { kind, index } = piece {
            let weights = &row_weights[kind.group()];
            choice
                .entry((kind.group(), *index))
                .or_insert_with(|| weights.sample(rng));
        }
    }
    ParallelPair {
        complex: realize(spec, &t.complex, &choice, Band::C),
        simple: realize(spec, &t.simple, &choice, band),
        band,
    }
}

/// Draws `n` pairs with bands assigned round-robin (A, B, C, A, ...), so
/// band counts differ by at most one. Unless the spec allows repeats, pairs
/// are distinct.
pub fn generate_corpus(spec: &MicroLanguageSpec, n: usize) -> Result<Vec<ParallelPair>> {
    if n == 0 {
        return Err(Error::Config("corpus size must be >= 1".into()));
    }
    let per_band = n.div_ceil(3) as u128;
    if !spec.allow_repeats && per_band > capacity(spec) {
        return Err(Error::Config(format!(
            "{n} pairs requested but the templates yield at most {} distinct pairs per band",
            capacity(spec)
        )));
    }
    let weights = row_weights(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let band = Band::ALL[i % 3];
        let mut attempts = 0;
        loop {
            let pair = sample_pair(spec, band, &weights, &mut rng);
            if spec.allow_repeats || seen.insert((pair.complex.clone(), pair.simple.clone())) {
                out.push(pair);
                break;
            }
            attempts += 1;
            if attempts >= MAX_ATTEMPTS {
                return Err(Error::Config(format!(
                    "could not draw a new distinct pair for band {band} after {MAX_ATTEMPTS} attempts"
                )));
            }
        }
    }
    Ok(out)
}

pub fn corpus_to_tsv(pairs: &[ParallelPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        let _ = writeln!(out, "{}\t{}\t{}", p.complex, p.simple, p.band);
    }
    out
}

/// Parses `complex<TAB>simple<TAB>band` rows; blank and `#` lines are skipped.
pub fn parse_corpus(text: &str) -> Result<Vec<ParallelPair>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::parse(lineno, "columns", format!("expected 3 tab-separated columns, found {}", cols.len())));
        }
        let complex = cols[0].trim();
        let simple = cols[1].trim();
        if complex.is_empty() {
            return Err(Error::parse(lineno, "complex", "empty sentence"));
        }
        if simple.is_empty() {
            return Err(Error::parse(lineno, "simple", "empty sentence"));
        }
        let band: Band = cols[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, "band", format!("unknown band `{}`", cols[2].trim())))?;
        out.push(ParallelPair {
            complex: complex.to_string(),
            simple: simple.to_string(),
            band,
        });
    }
    Ok(out)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<ParallelPair>> {
    let path = path.as_ref();
    parse_corpus(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn save_corpus(path: impl AsRef<Path>, pairs: &[ParallelPair]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, corpus_to_tsv(pairs)).map_err(|e| Error::io(path, e))
}
