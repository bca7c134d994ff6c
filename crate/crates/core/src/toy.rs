//! The shipped toy environment, assembled end to end.

use std::collections::BTreeMap;

use crate::constraint::{compile_constraints, ConstraintSet, Normalizer, VocabEntry};
use crate::corpus::{generate_corpus, labeled_from_corpus, MicroLanguageSpec, ParallelPair, TOY_ENV};
use crate::error::Result;
use crate::kvtext::KvDoc;
use crate::level::Band;
use crate::policy::{pretrain_reference, PolicyModel, PretrainConfig, PretrainExample, PretrainReport, TokenId, Vocabulary, EOS};
use crate::reward::{build_pairs, train_ranker, FeatureExtractor, LabeledSentence, RankerConfig, RankerModel};
use crate::trainer::{BandEnv, TrainConfig};

pub const TOY_TRAIN: &str = include_str!("../data/toy_train.txt");

/// Corpus sizes and the settings of every training stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToySettings {
    pub train_pairs: usize,
    pub eval_pairs: usize,
    pub pretrain: PretrainConfig,
    pub ranker: RankerConfig,
    pub train: TrainConfig,
}

impl ToySettings {
    /// Reads a training config document; the corpus, pretraining and ranker
    /// keys are optional.
    pub fn from_doc(doc: &KvDoc) -> Result<Self> {
        let p = PretrainConfig::default();
        let r = RankerConfig::default();
        Ok(ToySettings {
            train_pairs: doc.parse_or("train_pairs", 1200)?,
            eval_pairs: doc.parse_or("eval_pairs", 60)?,
            pretrain: PretrainConfig {
                learning_rate: doc.parse_or("pretrain_learning_rate", p.learning_rate)?,
                batch_size: doc.parse_or("pretrain_batch_size", p.batch_size)?,
                max_epochs: doc.parse_or("pretrain_max_epochs", p.max_epochs)?,
                seed: doc.parse_or("pretrain_seed", p.seed)?,
                ..p
            },
            ranker: RankerConfig {
                learning_rate: doc.parse_or("ranker_learning_rate", r.learning_rate)?,
                epochs: doc.parse_or("ranker_epochs", r.epochs)?,
                pairs_per_target: doc.parse_or("ranker_pairs_per_target", r.pairs_per_target)?,
                seed: doc.parse_or("ranker_seed", r.seed)?,
            },
            train: TrainConfig::from_doc(doc)?,
        })
    }

    pub fn canonical() -> Result<Self> {
        Self::from_doc(&KvDoc::parse(TOY_TRAIN)?)
    }
}

#[derive(Debug, Clone)]
pub struct ToyEnvironment {
    pub spec: MicroLanguageSpec,
    pub settings: ToySettings,
    pub vocab: Vocabulary,
    pub normalizer: Normalizer,
    pub entries: Vec<VocabEntry>,
    pub sets: BTreeMap<Band, ConstraintSet>,
    pub train: Vec<ParallelPair>,
    pub eval: Vec<ParallelPair>,
}

impl ToyEnvironment {
    pub fn canonical() -> Result<Self> {
        Self::new(MicroLanguageSpec::parse(TOY_ENV)?, ToySettings::canonical()?)
    }

    /// Draws one corpus and splits it into training and evaluation pairs.
    pub fn new(spec: MicroLanguageSpec, settings: ToySettings) -> Result<Self> {
        let entries = spec.vocab_entries()?;
        let sets = Band::ALL
            .iter()
            .map(|&b| Ok((b, compile_constraints(&entries, b)?)))
            .collect::<Result<_>>()?;
        let mut train = generate_corpus(&spec, settings.train_pairs + settings.eval_pairs)?;
        let eval = train.split_off(settings.train_pairs);
        Ok(ToyEnvironment {
            vocab: spec.policy_vocabulary(),
            normalizer: spec.normalizer(),
            spec,
            settings,
            entries,
            sets,
            train,
            eval,
        })
    }

    pub fn sets_in_order(&self) -> Vec<ConstraintSet> {
        self.sets.values().cloned().collect()
    }

    pub fn prompt(&self, complex: &str) -> Vec<TokenId> {
        self.vocab.prompt(complex)
    }

    pub fn pretrain_corpus(&self) -> Vec<PretrainExample> {
        self.train
            .iter()
            .map(|p| {
                let mut response = self.vocab.encode(&p.simple);
                response.push(EOS);
                PretrainExample {
                    prompt: self.prompt(&p.complex),
                    response,
                }
            })
            .collect()
    }

    pub fn pretrain(&self) -> Result<(PolicyModel, PretrainReport)> {
        pretrain_reference(self.vocab.clone(), &self.pretrain_corpus(), &self.settings.pretrain)
    }

    pub fn labeled(&self) -> Vec<LabeledSentence> {
        labeled_from_corpus(&self.train)
    }

    pub fn extractor(&self) -> FeatureExtractor {
        FeatureExtractor::new(&self.entries, self.normalizer.clone())
    }

    pub fn train_ranker(&self, band: Band) -> Result<RankerModel> {
        let cfg = &self.settings.ranker;
        let pairs = build_pairs(&self.labeled(), band, cfg.pairs_per_target, cfg.seed)?;
        train_ranker(&pairs, self.extractor(), cfg)
    }

    pub fn train_rankers(&self) -> Result<BTreeMap<Band, RankerModel>> {
        Band::ALL.iter().map(|&b| Ok((b, self.train_ranker(b)?))).collect()
    }

    /// The training prompts, shared by all bands.
    pub fn train_prompts(&self) -> BTreeMap<Band, Vec<Vec<TokenId>>> {
        let prompts: Vec<Vec<TokenId>> = self.train.iter().map(|p| self.prompt(&p.complex)).collect();
        Band::ALL.iter().map(|&b| (b, prompts.clone())).collect()
    }

    pub fn eval_sentences(&self) -> Vec<String> {
        self.eval.iter().map(|p| p.complex.clone()).collect()
    }

    pub fn envs<'a>(&'a self, rankers: &'a BTreeMap<Band, RankerModel>) -> BTreeMap<Band, BandEnv<'a>> {
        self.sets
            .iter()
            .map(|(&b, set)| {
                (
                    b,
                    BandEnv {
                        set,
                        ranker: rankers.get(&b),
                        normalizer: &self.normalizer,
                    },
                )
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::evaluate_texts;
    use crate::policy::perplexity;

    #[test]
    fn canonical_environment_shape() {
        let env = ToyEnvironment::canonical().unwrap();
        assert!(env.vocab.len() <= 200, "{}", env.vocab.len());
        for (band, set) in &env.sets {
            assert_eq!((set.word_count(), set.phrase_count()), (20, 6), "{band}");
        }
        assert_eq!(env.spec.stopwords.len(), 12);
        assert_eq!(env.train.len(), env.settings.train_pairs);
        assert_eq!(env.eval.len(), env.settings.eval_pairs);
    }

    #[test]
    fn complex_sides_are_richer_in_band_c() {
        let env = ToyEnvironment::canonical().unwrap();
        let set = env.sets[&Band::C].clone();
        let complex: Vec<String> = env.train.iter().map(|p| p.complex.clone()).collect();
        let simple: Vec<String> = env.train.iter().map(|p| p.simple.clone()).collect();
        let fc = evaluate_texts(&complex, &env.normalizer, &[set.clone()], 3).unwrap().rows[0].frequency;
        let fs = evaluate_texts(&simple, &env.normalizer, &[set], 3).unwrap().rows[0].frequency;
        assert!(fc > fs, "{fc} vs {fs}");
    }

    #[test]
    fn reference_generalizes_to_held_out_pairs() {
        let env = ToyEnvironment::canonical().unwrap();
        let (model, report) = env.pretrain().unwrap();
        let seen = env.settings.train_pairs + env.settings.eval_pairs;
        let held_out: Vec<PretrainExample> = generate_corpus(&env.spec, seen + 300).unwrap()[seen..]
            .iter()
            .map(|p| {
                let mut response = env.vocab.encode(&p.simple);
                response.push(EOS);
                PretrainExample { prompt: env.prompt(&p.complex), response }
            })
            .collect();
        let train_ppl = perplexity(&model, None, &env.pretrain_corpus()).unwrap();
        let test_ppl = perplexity(&model, None, &held_out).unwrap();
        assert!(test_ppl <= 1.5 * train_ppl, "{test_ppl} vs {train_ppl} after {} epochs", report.epochs());
    }
}
