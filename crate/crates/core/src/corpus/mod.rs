//! Desk-scale data: a banded micro-language, a template-based generator of
//! complex/simple sentence pairs, and loaders for labeled-sentence files.

mod generate;
mod labeled;
mod spec;

pub use generate::{capacity, corpus_to_tsv, generate_corpus, load_corpus, parse_corpus, save_corpus, ParallelPair};
pub use labeled::{labeled_from_corpus, labeled_to_tsv, load_labeled, parse_labeled, save_labeled};
pub use spec::{MicroLanguageSpec, PhraseForm, Piece, SlotKind, Template, WordForm};

/// The canonical toy environment shipped with the crate.
pub const TOY_ENV: &str = include_str!("../../data/toy_env.txt");
