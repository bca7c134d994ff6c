//! The reward-design ablation grid.
//!
//! Every cell trains all three bands from the same reference with the same
//! seeds, so cells differ only in reward mode and whether the sentence
//! reward is on. Each trained policy is scored on several sampled
//! generations of the evaluation set, and the scores are averaged over draws
//! and seeds.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use lexalign::optim::derive_seed;
use lexalign::pipeline::{evaluate_texts, simplify};
use lexalign::policy::PolicyModel;
use lexalign::reward::{RankerModel, RewardMode};
use lexalign::toy::ToyEnvironment;
use lexalign::trainer::{train, TrainConfig};
use lexalign::{Band, Result};

pub const ABLATION_HEADER: &str = "condition,reward_mode,sentence_reward,band,seeds,frequency,diversity,objective_per_sequence";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Condition {
    pub mode: RewardMode,
    pub sentence_reward: bool,
}

impl Condition {
    pub const GRID: [Condition; 4] = [
        Condition { mode: RewardMode::Constant, sentence_reward: false },
        Condition { mode: RewardMode::Constant, sentence_reward: true },
        Condition { mode: RewardMode::Dynamic, sentence_reward: false },
        Condition { mode: RewardMode::Dynamic, sentence_reward: true },
    ];

    pub fn name(&self) -> String {
        if self.sentence_reward {
            format!("{}+sentence", self.mode)
        } else {
            self.mode.to_string()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub condition: Condition,
    pub band: Band,
    pub seeds: Vec<u64>,
    pub frequency: f64,
    pub diversity: f64,
    pub objective_per_sequence: f64,
}

/// Runs the four-cell grid. Each seed sets the PPO seed; evaluation draw `d`
/// of that run samples with `derive_seed(seed, d)`.
pub fn run_ablation(
    env: &ToyEnvironment,
    reference: &PolicyModel,
    rankers: &BTreeMap<Band, RankerModel>,
    base: &TrainConfig,
    seeds: &[u64],
    eval_draws: usize,
) -> Result<Vec<AblationRow>> {
    if seeds.is_empty() || eval_draws == 0 {
        return Err(lexalign::Error::Config("at least one seed and one evaluation draw are required".into()));
    }
    let envs = env.envs(rankers);
    let prompts = env.train_prompts();
    let sets = env.sets_in_order();
    let sentences = env.eval_sentences();
    let mut rows = Vec::new();
    for condition in Condition::GRID {
        let mut sums: BTreeMap<Band, [f64; 3]> = BTreeMap::new();
        for &seed in seeds {
            let mut cfg = *base;
            cfg.ppo.seed = seed;
            cfg.reward.mode = condition.mode;
            cfg.use_sentence_reward = condition.sentence_reward;
            let outcome = train(reference, &Band::ALL, &envs, &prompts, &cfg)?;
            for draw in 0..eval_draws {
                let mut generation = cfg.generation;
                generation.seed = derive_seed(seed, draw as u64);
                for band in Band::ALL {
                    let outputs = simplify(&outcome.model, band, &sentences, &generation)?;
                    let report = evaluate_texts(&outputs, &env.normalizer, &sets, cfg.gap)?;
                    let score = report.row(band).expect("every band is evaluated");
                    let s = sums.entry(band).or_default();
                    s[0] += score.frequency;
                    s[1] += score.diversity;
                    s[2] += score.objective as f64 / report.sequences as f64;
                }
            }
        }
        let n = (seeds.len() * eval_draws) as f64;
        for (band, s) in sums {
            rows.push(AblationRow {
                condition,
                band,
                seeds: seeds.to_vec(),
                frequency: s[0] / n,
                diversity: s[1] / n,
                objective_per_sequence: s[2] / n,
            });
        }
    }
    Ok(rows)
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from(ABLATION_HEADER);
    out.push('\n');
    for r in rows {
        let seeds: Vec<String> = r.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6},{:.6}",
            r.condition.name(),
            r.condition.mode,
            r.condition.sentence_reward,
            r.band,
            seeds.join(";"),
            r.frequency,
            r.diversity,
            r.objective_per_sequence
        );
    }
    out
}

/// Looks up the row of one cell.
pub fn cell(rows: &[AblationRow], condition: Condition, band: Band) -> Option<&AblationRow> {
    rows.iter().find(|r| r.condition == condition && r.band == band)
}
