//! Sentence-level reward from a pairwise ranking model.
//!
//! Pairs `(s_i, s_j)` put a target-band sentence first and a sentence from any
//! other band second. A linear scorer `score(s) = θ·φ(s)` over a fixed feature
//! vector `φ` is trained by full-batch gradient descent on
//!
//! ```text
//! L(θ) = -(1/|P|) Σ log σ(score(s_i) - score(s_j))
//! ```
//!
//! and the reward of a sentence is `σ(score(s))`.

use std::collections::HashSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::constraint::{surface_tokens, EntryKind, NormalizedSequence, Normalizer, VocabEntry};
use crate::error::{Error, Result};
use crate::kvtext::KvDoc;
use crate::level::{Band, CefrLevel};
use crate::tensor::{dot, log_sigmoid, sigmoid};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSentence {
    pub text: String,
    pub level: CefrLevel,
}

/// Pairs every target-band sentence with `pairs_per_target` sentences drawn
/// uniformly (with replacement) from the other bands.
pub fn build_pairs(
    sentences: &[LabeledSentence],
    target: Band,
    pairs_per_target: usize,
    seed: u64,
) -> Result<Vec<(LabeledSentence, LabeledSentence)>> {
    let (tgt, other): (Vec<&LabeledSentence>, Vec<&LabeledSentence>) =
        sentences.iter().partition(|s| target.contains(s.level));
    if tgt.is_empty() {
        return Err(Error::EmptyInput("target-band sentence pool"));
    }
    if other.is_empty() {
        return Err(Error::EmptyInput("non-target sentence pool"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(tgt.len() * pairs_per_target);
    for s in tgt {
        for _ in 0..pairs_per_target {
            let neg = other[rng.gen_range(0..other.len())];
            pairs.push((s.clone(), neg.clone()));
        }
    }
    Ok(pairs)
}

/// Sentence features: length, mean word length, per-band word hit ratios and
/// function-word ratio.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    normalizer: Normalizer,
    band_words: [HashSet<String>; 3],
    id: String,
}

impl FeatureExtractor {
    pub const DIM: usize = 6;
    pub const NAMES: [&'static str; 6] = [
        "length",
        "mean_word_length",
        "a_ratio",
        "b_ratio",
        "c_ratio",
        "function_ratio",
    ];

    pub fn new(entries: &[VocabEntry], normalizer: Normalizer) -> Self {
        let mut band_words: [HashSet<String>; 3] = Default::default();
        for e in entries.iter().filter(|e| e.kind == EntryKind::Word) {
            band_words[e.level.band().index()].insert(e.lemmas[0].clone());
        }
        let mut hasher = Sha256::new();
        for words in &band_words {
            let mut sorted: Vec<&String> = words.iter().collect();
            sorted.sort();
            for w in sorted {
                hasher.update(w.as_bytes());
                hasher.update(b"\n");
            }
            hasher.update(b"|");
        }
        let mut stop: Vec<&str> = normalizer.stopwords().collect();
        stop.sort_unstable();
        for w in stop {
            hasher.update(w.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        FeatureExtractor {
            normalizer,
            band_words,
            id: format!("band-lexical-v1:{hex}"),
        }
    }

    /// Identifies the feature definition together with the vocabulary it
    /// was built from.
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    /// Features of a sentence; empty text maps to the zero vector.
    pub fn features(&self, text: &str) -> Vec<f64> {
        match self.normalizer.normalize(text) {
            Ok(seq) => self.features_of(&seq, text),
            Err(_) => vec![0.0; Self::DIM],
        }
    }

    pub fn features_of(&self, seq: &NormalizedSequence, text: &str) -> Vec<f64> {
        let n = seq.token_count;
        if n == 0 {
            return vec![0.0; Self::DIM];
        }
        let chars: usize = surface_tokens(text).map(|t| t.chars().count()).sum();
        let nf = n as f64;
        let hits = |b: Band| {
            seq.content_lemmas
                .iter()
                .filter(|l| self.band_words[b.index()].contains(*l))
                .count() as f64
                / nf
        };
        let function = (seq.full_lemmas.len() - seq.content_lemmas.len()) as f64 / nf;
        vec![
            nf / 10.0,
            chars as f64 / nf / 10.0,
            hits(Band::A),
            hits(Band::B),
            hits(Band::C),
            function,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankerConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub pairs_per_target: usize,
    pub seed: u64,
}

impl Default for RankerConfig {
    fn default() -> Self {
        RankerConfig {
            learning_rate: 1.0,
            epochs: 200,
            pairs_per_target: 4,
            seed: 0,
        }
    }
}

/// Weights and per-epoch mean loss of a trained linear ranker.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub theta: Vec<f64>,
    pub losses: Vec<f64>,
}

/// Mean pairwise ranking loss of `theta` over feature pairs.
pub fn pairwise_loss(theta: &[f64], pairs: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    let total: f64 = pairs
        .iter()
        .map(|(a, b)| -log_sigmoid(dot(theta, a) - dot(theta, b)))
        .sum();
    total / pairs.len() as f64
}

/// Full-batch gradient descent from θ = 0. `losses[e]` is the loss before
/// update `e`, and the final entry is the loss of the returned weights.
pub fn train_linear_ranker(pairs: &[(Vec<f64>, Vec<f64>)], config: &RankerConfig) -> Result<LinearFit> {
    let Some((first, _)) = pairs.first() else {
        return Err(Error::EmptyInput("ranking pairs"));
    };
    if !(config.learning_rate > 0.0) {
        return Err(Error::Config("ranker learning rate must be > 0".into()));
    }
    let dim = first.len();
    let diffs: Vec<Vec<f64>> = pairs
        .iter()
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
        .collect();
    let mut theta = vec![0.0; dim];
    let mut losses = Vec::with_capacity(config.epochs + 1);
    let scale = 1.0 / pairs.len() as f64;
    for epoch in 0..=config.epochs {
        let mut loss = 0.0;
        let mut grad = vec![0.0; dim];
        for d in &diffs {
            let z = dot(&theta, d);
            loss -= log_sigmoid(z);
            let w = 1.0 - sigmoid(z);
            for (g, x) in grad.iter_mut().zip(d) {
                *g -= w * x;
            }
        }
        loss *= scale;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("ranker loss at epoch {epoch} is {loss}")));
        }
        losses.push(loss);
        if epoch == config.epochs {
            break;
        }
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= config.learning_rate * scale * g;
        }
    }
    Ok(LinearFit { theta, losses })
}

/// Fraction of pairs whose first element scores strictly higher.
pub fn pairwise_accuracy(theta: &[f64], pairs: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let right = pairs
        .iter()
        .filter(|(a, b)| dot(theta, a) > dot(theta, b))
        .count();
    right as f64 / pairs.len() as f64
}

#[derive(Debug, Clone)]
pub struct RankerModel {
    extractor: FeatureExtractor,
    theta: Vec<f64>,
    config: RankerConfig,
    losses: Vec<f64>,
}

impl RankerModel {
    pub fn from_weights(extractor: FeatureExtractor, theta: Vec<f64>, config: RankerConfig) -> Result<Self> {
        if theta.len() != FeatureExtractor::DIM {
            return Err(Error::Mismatch(format!(
                "ranker has {} weights, extractor has {} features",
                theta.len(),
                FeatureExtractor::DIM
            )));
        }
        Ok(RankerModel {
            extractor,
            theta,
            config,
            losses: Vec::new(),
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn config(&self) -> &RankerConfig {
        &self.config
    }

    pub fn extractor(&self) -> &FeatureExtractor {
        &self.extractor
    }

    /// Mean training loss per epoch (empty for loaded models).
    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn score(&self, text: &str) -> f64 {
        dot(&self.theta, &self.extractor.features(text))
    }

    pub fn score_normalized(&self, seq: &NormalizedSequence, text: &str) -> f64 {
        dot(&self.theta, &self.extractor.features_of(seq, text))
    }

    pub fn to_doc(&self) -> KvDoc {
        let mut doc = KvDoc::new("lexalign.ranker", 1);
        doc.push("extractor", self.extractor.id());
        doc.push("features", FeatureExtractor::NAMES.join(" "));
        let theta: Vec<String> = self.theta.iter().map(f64::to_string).collect();
        doc.push("theta", theta.join(" "));
        doc.push("learning_rate", self.config.learning_rate);
        doc.push("epochs", self.config.epochs);
        doc.push("pairs_per_target", self.config.pairs_per_target);
        doc.push("seed", self.config.seed);
        doc
    }

    /// Loads weights, refusing checkpoints written for another extractor.
    pub fn from_doc(doc: &KvDoc, extractor: FeatureExtractor) -> Result<Self> {
        doc.expect_format("lexalign.ranker", 1)?;
        let id = doc.require("extractor")?;
        if id != extractor.id() {
            return Err(Error::Mismatch(format!(
                "ranker was trained with extractor `{id}`, not `{}`",
                extractor.id()
            )));
        }
        let theta = doc
            .require("theta")?
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Mismatch(format!("bad weight `{t}`"))))
            .collect::<Result<Vec<f64>>>()?;
        let config = RankerConfig {
            learning_rate: doc.parse_key("learning_rate")?,
            epochs: doc.parse_key("epochs")?,
            pairs_per_target: doc.parse_key("pairs_per_target")?,
            seed: doc.parse_key("seed")?,
        };
        Self::from_weights(extractor, theta, config)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_doc().save(path)
    }

    pub fn load(path: impl AsRef<Path>, extractor: FeatureExtractor) -> Result<Self> {
        Self::from_doc(&KvDoc::load(path)?, extractor)
    }
}

pub fn train_ranker(
    pairs: &[(LabeledSentence, LabeledSentence)],
    extractor: FeatureExtractor,
    config: &RankerConfig,
) -> Result<RankerModel> {
    let feats: Vec<(Vec<f64>, Vec<f64>)> = pairs
        .iter()
        .map(|(a, b)| (extractor.features(&a.text), extractor.features(&b.text)))
        .collect();
    let fit = train_linear_ranker(&feats, config)?;
    Ok(RankerModel {
        extractor,
        theta: fit.theta,
        config: *config,
        losses: fit.losses,
    })
}

/// `σ(score(text))`, in (0, 1).
pub fn sentence_reward(model: &RankerModel, text: &str) -> f64 {
    sigmoid(model.score(text))
}

/// Draws `n` feature vectors per side where the first coordinate separates
/// target from non-target by `margin`. Used by tests and the documentation.
pub fn separable_features(n: usize, dim: usize, margin: f64, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut b: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            a[0] = margin / 2.0 + rng.gen_range(0.0..1.0);
            b[0] = -margin / 2.0 - rng.gen_range(0.0..1.0);
            (a, b)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::parse_vocabulary;

    fn labeled(text: &str, level: CefrLevel) -> LabeledSentence {
        LabeledSentence {
            text: text.into(),
            level,
        }
    }

    fn extractor() -> FeatureExtractor {
        let vocab = parse_vocabulary(
            "cat\tcat\tA1\tword\ndog\tdog\tA2\tword\njourney\tjourney\tB1\tword\nparadigm\tparadigm\tC1\tword\n",
        )
        .unwrap();
        FeatureExtractor::new(&vocab, Normalizer::new())
    }

    #[test]
    fn pair_cardinality_and_sides() {
        let s = vec![
            labeled("cat", CefrLevel::A1),
            labeled("dog", CefrLevel::A2),
            labeled("a cat", CefrLevel::A1),
            labeled("journey", CefrLevel::B1),
            labeled("paradigm", CefrLevel::C2),
        ];
        let pairs = build_pairs(&s, Band::A, 2, 7).unwrap();
        assert_eq!(pairs.len(), 6);
        for (t, o) in &pairs {
            assert_eq!(t.level.band(), Band::A);
            assert_ne!(o.level.band(), Band::A);
        }
        assert_eq!(pairs, build_pairs(&s, Band::A, 2, 7).unwrap());
        assert!(build_pairs(&s[..3], Band::A, 2, 7).is_err());
        assert!(build_pairs(&s, Band::B, 0, 7).unwrap().is_empty());
    }

    #[test]
    fn symmetric_init_loss_is_ln2() {
        let pairs = separable_features(10, 4, 1.0, 1);
        let loss = pairwise_loss(&[0.0; 4], &pairs);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        let fit = train_linear_ranker(&pairs, &RankerConfig { epochs: 0, ..Default::default() }).unwrap();
        assert!((fit.losses[0] - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn swapped_pairs_negate_weights() {
        let pairs = separable_features(20, 3, 0.5, 2);
        let swapped: Vec<_> = pairs.iter().map(|(a, b)| (b.clone(), a.clone())).collect();
        let cfg = RankerConfig { epochs: 25, ..Default::default() };
        let fit = train_linear_ranker(&pairs, &cfg).unwrap();
        let back = train_linear_ranker(&swapped, &cfg).unwrap();
        for (x, y) in fit.theta.iter().zip(&back.theta) {
            assert_eq!(*x, -*y);
        }
        for (a, b) in fit.losses.iter().zip(&back.losses) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_decreases_on_separable_data() {
        let pairs = separable_features(100, 6, 0.5, 3);
        let fit = train_linear_ranker(&pairs, &RankerConfig::default()).unwrap();
        for w in fit.losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        let held_out = separable_features(200, 6, 0.5, 4);
        assert!(pairwise_accuracy(&fit.theta, &held_out) >= 0.95);
    }

    #[test]
    fn empty_pairs_and_non_finite_loss_are_errors() {
        assert!(train_linear_ranker(&[], &RankerConfig::default()).is_err());
        let bad = vec![(vec![f64::NAN], vec![0.0])];
        assert!(matches!(
            train_linear_ranker(&bad, &RankerConfig::default()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn sentence_reward_is_logistic_of_score() {
        let ex = extractor();
        let zero = RankerModel::from_weights(ex.clone(), vec![0.0; 6], RankerConfig::default()).unwrap();
        assert_eq!(sentence_reward(&zero, "a cat"), 0.5);
        let model = RankerModel::from_weights(ex, vec![0.0, 0.0, 3.0, 0.0, -3.0, 0.0], RankerConfig::default()).unwrap();
        let a = sentence_reward(&model, "the cat and the dog");
        let c = sentence_reward(&model, "the paradigm");
        assert!(a > 0.5 && a < 1.0);
        assert!(c < 0.5 && c > 0.0);
        let huge = RankerModel::from_weights(extractor(), vec![0.0, 0.0, 1e6, 0.0, 0.0, 0.0], RankerConfig::default()).unwrap();
        assert_eq!(sentence_reward(&huge, "cat"), 1.0);
    }

    #[test]
    fn ranker_learns_band_from_sentences() {
        let mut s = Vec::new();
        for t in ["the cat", "a dog", "cat and dog", "the dog and the cat"] {
            s.push(labeled(t, CefrLevel::A1));
        }
        for t in ["the journey", "a paradigm", "journey and paradigm"] {
            s.push(labeled(t, CefrLevel::B2));
        }
        let pairs = build_pairs(&s, Band::A, 4, 0).unwrap();
        let model = train_ranker(&pairs, extractor(), &RankerConfig::default()).unwrap();
        assert!(model.score("the cat") > model.score("the journey"));
        assert!(model.losses().last().unwrap() < &model.losses()[0]);
    }

    #[test]
    fn checkpoint_round_trip_and_extractor_check() {
        let model = RankerModel::from_weights(extractor(), vec![0.5, -1.25, 3.0, 0.0, 1e-9, 2.0], RankerConfig::default()).unwrap();
        let text = model.to_doc().to_text();
        let back = RankerModel::from_doc(&KvDoc::parse(&text).unwrap(), extractor()).unwrap();
        assert_eq!(back.theta(), model.theta());
        assert_eq!(back.to_doc().to_text(), text);

        let other_vocab = parse_vocabulary("cow\tcow\tA1\tword\n").unwrap();
        let other = FeatureExtractor::new(&other_vocab, Normalizer::new());
        assert!(matches!(
            RankerModel::from_doc(&KvDoc::parse(&text).unwrap(), other),
            Err(Error::Mismatch(_))
        ));
    }
}
