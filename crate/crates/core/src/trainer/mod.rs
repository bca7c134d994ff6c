//! Reinforcement learning of the band adapters.
//!
//! Each epoch samples one rollout per prompt with the band's adapter, scores
//! it with the lexical reward `H` and the sentence reward `r_l`, combines
//! them as `R = λ·H + γ·r_l`, subtracts the sequence log ratio between the
//! policy and the frozen reference, and applies clipped-surrogate PPO updates
//! to the adapter and its value head. Clause usage ratios are refreshed once,
//! after the update.

mod config;
mod ppo;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

pub use config::{PPOConfig, RewardWeights, TrainConfig};
pub use ppo::{run_epoch, BandState};

use crate::constraint::{count_all, ClauseCounts, ConstraintSet, NormalizedSequence, Normalizer};
use crate::error::{Error, Result};
use crate::level::Band;
use crate::policy::{PolicyModel, Rollout, TokenId, Vocabulary};
use crate::reward::{lexical_reward_from_counts, sentence_reward, ClauseUsageStats, DynamicRewardConfig, RankerModel};

/// `R = λ·H + γ·r_l`.
pub fn combined_reward(h: f64, r_l: f64, weights: &RewardWeights) -> f64 {
    weights.lambda * h + weights.gamma * r_l
}

/// `R' = R - Σ_t (log π(a_t) - log π_ref(a_t))`, both evaluated on the
/// rollout's own tokens.
pub fn regularized_reward(r: f64, rollout: &Rollout) -> Result<f64> {
    Ok(r - rollout.log_ratio()?)
}

/// Reward inputs for one band.
#[derive(Debug, Clone, Copy)]
pub struct BandEnv<'a> {
    pub set: &'a ConstraintSet,
    /// Sentence-level scorer; `None` contributes `r_l = 0`.
    pub ranker: Option<&'a RankerModel>,
    pub normalizer: &'a Normalizer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRollout {
    pub rollout: Rollout,
    pub text: String,
    pub counts: ClauseCounts,
    pub lexical: f64,
    pub sentence: f64,
    /// Combined reward before the KL term.
    pub reward: f64,
    pub kl: f64,
    /// Reward the policy is optimized against.
    pub shaped: f64,
}

/// Normalizes decoded output; an empty response becomes an empty sequence.
pub fn normalize_output(normalizer: &Normalizer, text: &str) -> Result<NormalizedSequence> {
    if text.trim().is_empty() {
        return Ok(NormalizedSequence::default());
    }
    match normalizer.normalize(text) {
        Err(Error::EmptyInput(_)) => Ok(NormalizedSequence::default()),
        other => other,
    }
}

pub fn score_rollout(
    rollout: Rollout,
    vocab: &Vocabulary,
    env: &BandEnv<'_>,
    stats: &ClauseUsageStats,
    reward: &DynamicRewardConfig,
    config: &TrainConfig,
) -> Result<ScoredRollout> {
    let text = vocab.decode(&rollout.tokens);
    let seq = normalize_output(env.normalizer, &text)?;
    let counts = count_all(env.set, &seq, config.gap);
    let lexical = lexical_reward_from_counts(&counts, env.set, stats, reward)?;
    let sentence = match env.ranker {
        Some(r) if config.use_sentence_reward => sentence_reward(r, &text),
        _ => 0.0,
    };
    let weights = RewardWeights {
        gamma: if config.use_sentence_reward { config.weights.gamma } else { 0.0 },
        ..config.weights
    };
    let r = combined_reward(lexical, sentence, &weights);
    let kl = rollout.log_ratio()?;
    let shaped = if config.use_kl { regularized_reward(r, &rollout)? } else { r };
    Ok(ScoredRollout {
        rollout,
        text,
        counts,
        lexical,
        sentence,
        reward: r,
        kl,
        shaped,
    })
}

/// One epoch's summary.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean combined reward `R` before the KL term.
    pub mean_reward: f64,
    /// Mean per-sequence log ratio between policy and reference.
    pub mean_kl: f64,
    /// Clause matches summed over the epoch's rollouts.
    pub objective: u64,
    pub loss_policy: f64,
    pub loss_value: f64,
    /// Usage ratios after this epoch's refresh.
    pub usage: Vec<f64>,
    /// Clauses matched at least once this epoch.
    pub distinct: usize,
    /// Largest `|ratio - 1|` over the first minibatch.
    pub initial_ratio_deviation: f64,
    pub mean_length: f64,
}

pub const TRAIN_LOG_HEADER: &str = "epoch,mean_reward,mean_kl,objective,loss_policy,loss_value";

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub band: Band,
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAIN_LOG_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.epoch, r.mean_reward, r.mean_kl, r.objective, r.loss_policy, r.loss_value
            );
        }
        out
    }

    /// Share of epochs whose mean KL stayed below `ceiling`.
    pub fn fraction_within(&self, ceiling: f64) -> f64 {
        if self.records.is_empty() {
            return 1.0;
        }
        let ok = self.records.iter().filter(|r| r.mean_kl < ceiling).count();
        ok as f64 / self.records.len() as f64
    }

    fn converged(&self, window: usize, tol: f64) -> bool {
        let n = self.records.len();
        if window == 0 || n <= window {
            return false;
        }
        let now = self.records[n - 1].mean_reward;
        let then = self.records[n - 1 - window].mean_reward;
        (now - then).abs() <= tol * then.abs().max(f64::MIN_POSITIVE)
    }
}

/// Trained adapters merged into a copy of the input model, plus one log per
/// band.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: PolicyModel,
    pub logs: BTreeMap<Band, TrainLog>,
}

/// Trains each listed band's adapter independently against its environment
/// and prompt list. Adapters of unlisted bands are left untouched.
pub fn train(
    model: &PolicyModel,
    bands: &[Band],
    envs: &BTreeMap<Band, BandEnv<'_>>,
    prompts: &BTreeMap<Band, Vec<Vec<TokenId>>>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let mut unique = bands.to_vec();
    unique.sort();
    unique.dedup();
    let results: Vec<Result<(Band, PolicyModel, TrainLog)>> = unique
        .par_iter()
        .map(|&band| {
            let wrap = |e: Error| Error::Band {
                band,
                source: Box::new(e),
            };
            let env = envs
                .get(&band)
                .ok_or_else(|| wrap(Error::Config("no reward environment".into())))?;
            let band_prompts = prompts
                .get(&band)
                .filter(|p| !p.is_empty())
                .ok_or_else(|| wrap(Error::EmptyInput("prompt list")))?;
            if env.set.band() != band {
                return Err(wrap(Error::Mismatch(format!(
                    "constraint set targets band {}",
                    env.set.band()
                ))));
            }
            let mut local = model.clone();
            let mut state = BandState::new(&local, band, env.set.m()).map_err(wrap)?;
            let mut log = TrainLog {
                band,
                records: Vec::new(),
            };
            for _ in 0..config.ppo.epochs {
                let rec = run_epoch(&mut local, &mut state, band_prompts, env, config).map_err(wrap)?;
                log.records.push(rec);
                if log.converged(config.convergence_window, config.convergence_tol) {
                    break;
                }
            }
            Ok((band, local, log))
        })
        .collect();
    let mut out = model.clone();
    let mut logs = BTreeMap::new();
    for r in results {
        let (band, local, log) = r?;
        out.set_adapter(band, local.adapter(band)?.clone());
        logs.insert(band, log);
    }
    Ok(TrainOutcome { model: out, logs })
}
