//! Lexical constraint reward with per-clause dynamic adjustment.
//!
//! Each clause match earns a base reward. In constant mode that is 1 for a
//! word and the phrase multiplier for a phrase. In dynamic mode the reward of
//! clause `j` depends on its share `p_j` of all matches in the previous
//! epoch's rollouts:
//!
//! ```text
//! r_j = 1                 if 0 <= p_j < 1/m
//! r_j = exp(-alpha * p_j) if 1/m <= p_j <= 1
//! ```
//!
//! so that over-used clauses earn less and matches spread across the list.
//! Matches of clauses above the target band cost `above_level_penalty` each.

use std::fmt;
use std::str::FromStr;

use crate::constraint::{count_all, ClauseCounts, ClauseKind, ConstraintSet, NormalizedSequence};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardMode {
    Constant,
    Dynamic,
}

impl fmt::Display for RewardMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardMode::Constant => "constant",
            RewardMode::Dynamic => "dynamic",
        })
    }
}

impl FromStr for RewardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "constant" => Ok(RewardMode::Constant),
            "dynamic" => Ok(RewardMode::Dynamic),
            other => Err(Error::Config(format!("unknown reward mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicRewardConfig {
    pub alpha: f64,
    pub phrase_multiplier: f64,
    pub above_level_penalty: f64,
    pub mode: RewardMode,
}

impl Default for DynamicRewardConfig {
    fn default() -> Self {
        DynamicRewardConfig {
            alpha: 1.2,
            phrase_multiplier: 1.5,
            above_level_penalty: -1.0,
            mode: RewardMode::Dynamic,
        }
    }
}

impl DynamicRewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.phrase_multiplier >= 1.0 && self.phrase_multiplier.is_finite()) {
            return Err(Error::Config(format!(
                "phrase multiplier must be >= 1, got {}",
                self.phrase_multiplier
            )));
        }
        if !(self.above_level_penalty < 0.0 && self.above_level_penalty.is_finite()) {
            return Err(Error::Config(format!(
                "above-level penalty must be < 0, got {}",
                self.above_level_penalty
            )));
        }
        Ok(())
    }
}

/// Clause match totals of the latest completed epoch and the usage ratios
/// derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct ClauseUsageStats {
    totals: Vec<u64>,
    p: Vec<f64>,
    epoch: u64,
}

impl ClauseUsageStats {
    /// Cold-start statistics: all ratios zero, epoch 0.
    pub fn new(m: usize) -> Self {
        ClauseUsageStats {
            totals: vec![0; m],
            p: vec![0.0; m],
            epoch: 0,
        }
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn totals(&self) -> &[u64] {
        &self.totals
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn m(&self) -> usize {
        self.p.len()
    }
}

/// Recomputes `p_j = count_j / Σ count` from one epoch's aggregate counts.
/// A zero grand total gives all-zero ratios.
pub fn update_usage(stats: &ClauseUsageStats, epoch_counts: &[i64]) -> Result<ClauseUsageStats> {
    if epoch_counts.len() != stats.m() {
        return Err(Error::Config(format!(
            "usage update with {} counts for {} clauses",
            epoch_counts.len(),
            stats.m()
        )));
    }
    if let Some(neg) = epoch_counts.iter().find(|&&c| c < 0) {
        return Err(Error::Config(format!("negative clause count {neg}")));
    }
    let totals: Vec<u64> = epoch_counts.iter().map(|&c| c as u64).collect();
    let grand: u64 = totals.iter().sum();
    let p = if grand == 0 {
        vec![0.0; totals.len()]
    } else {
        totals.iter().map(|&c| c as f64 / grand as f64).collect()
    };
    Ok(ClauseUsageStats {
        totals,
        p,
        epoch: stats.epoch + 1,
    })
}

/// Reward earned by one match of clause `clause_id`.
pub fn base_r(
    kind: ClauseKind,
    stats: &ClauseUsageStats,
    clause_id: usize,
    config: &DynamicRewardConfig,
) -> Result<f64> {
    let m = stats.m();
    let p = *stats.p.get(clause_id).ok_or(Error::OutOfRange {
        what: "clause id",
        index: clause_id,
        len: m,
    })?;
    let r = match config.mode {
        RewardMode::Constant => 1.0,
        RewardMode::Dynamic => {
            if p < 1.0 / m as f64 {
                1.0
            } else {
                (-config.alpha * p).exp()
            }
        }
    };
    Ok(match kind {
        ClauseKind::Word => r,
        ClauseKind::Phrase => r * config.phrase_multiplier,
    })
}

/// `H = Σ_j r_j · count_j + penalty · above-level matches`.
pub fn lexical_reward_from_counts(
    counts: &ClauseCounts,
    set: &ConstraintSet,
    stats: &ClauseUsageStats,
    config: &DynamicRewardConfig,
) -> Result<f64> {
    if counts.per_clause.len() != set.m() || stats.m() != set.m() {
        return Err(Error::Config(format!(
            "counts ({}) / stats ({}) do not match {} clauses",
            counts.per_clause.len(),
            stats.m(),
            set.m()
        )));
    }
    let mut h = 0.0;
    for (clause, &count) in set.clauses().iter().zip(&counts.per_clause) {
        if count > 0 {
            h += base_r(clause.kind, stats, clause.id, config)? * count as f64;
        }
    }
    h += config.above_level_penalty * counts.above_level as f64;
    Ok(h)
}

pub fn lexical_reward(
    seq: &NormalizedSequence,
    set: &ConstraintSet,
    stats: &ClauseUsageStats,
    config: &DynamicRewardConfig,
    gap: usize,
) -> Result<f64> {
    lexical_reward_from_counts(&count_all(set, seq, gap), set, stats, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{Clause, Normalizer};
    use crate::Band;
    use proptest::prelude::*;

    fn stats_with(counts: &[i64]) -> ClauseUsageStats {
        update_usage(&ClauseUsageStats::new(counts.len()), counts).unwrap()
    }

    fn dynamic() -> DynamicRewardConfig {
        DynamicRewardConfig::default()
    }

    fn constant() -> DynamicRewardConfig {
        DynamicRewardConfig {
            mode: RewardMode::Constant,
            ..DynamicRewardConfig::default()
        }
    }

    fn set() -> ConstraintSet {
        let c = |id, s: &str| Clause::new(id, s.split(' ').map(String::from).collect()).unwrap();
        ConstraintSet::new(Band::A, vec![c(0, "cat"), c(1, "look up")], vec![c(0, "journey")]).unwrap()
    }

    #[test]
    fn first_branch_below_uniform_share() {
        let stats = ClauseUsageStats::new(10);
        assert_eq!(base_r(ClauseKind::Word, &stats, 0, &dynamic()).unwrap(), 1.0);
    }

    #[test]
    fn full_share_decays_exponentially() {
        let stats = stats_with(&[0, 5]);
        let r = base_r(ClauseKind::Word, &stats, 1, &dynamic()).unwrap();
        assert!((r - (-1.2f64).exp()).abs() < 1e-15);
        assert!((r - 0.301_194_211_912_202_1).abs() < 1e-15);
    }

    #[test]
    fn constant_phrase_is_one_and_a_half() {
        let stats = ClauseUsageStats::new(2);
        assert_eq!(base_r(ClauseKind::Phrase, &stats, 1, &constant()).unwrap(), 1.5);
        assert_eq!(base_r(ClauseKind::Word, &stats, 0, &constant()).unwrap(), 1.0);
    }

    #[test]
    fn out_of_range_clause_is_an_error() {
        assert!(base_r(ClauseKind::Word, &ClauseUsageStats::new(2), 2, &dynamic()).is_err());
    }

    #[test]
    fn lexical_reward_examples() {
        let n = Normalizer::new();
        let set = set();
        let stats = ClauseUsageStats::new(2);
        let h = |t: &str| lexical_reward(&n.normalize(t).unwrap(), &set, &stats, &constant(), 3).unwrap();
        assert_eq!(h("nothing matches"), 0.0);
        assert_eq!(h("a cat"), 1.0);
        assert_eq!(h("a cat on a journey"), 0.0);
        assert_eq!(h("the cat looked it up"), 2.5);
    }

    #[test]
    fn usage_ratios() {
        assert_eq!(stats_with(&[2, 6]).p(), &[0.25, 0.75]);
        assert_eq!(stats_with(&[0, 0]).p(), &[0.0, 0.0]);
        assert_eq!(stats_with(&[1, 1, 1, 1]).p(), &[0.25; 4]);
        assert_eq!(stats_with(&[1, 1]).epoch(), 1);
        assert!(update_usage(&ClauseUsageStats::new(2), &[1, -1]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(dynamic().validate().is_ok());
        assert!(DynamicRewardConfig { alpha: 0.0, ..dynamic() }.validate().is_err());
        assert!(DynamicRewardConfig { phrase_multiplier: 0.5, ..dynamic() }.validate().is_err());
        assert!(DynamicRewardConfig { above_level_penalty: 0.0, ..dynamic() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn ratios_sum_to_one(counts in proptest::collection::vec(0i64..50, 1..20)) {
            let stats = stats_with(&counts);
            let sum: f64 = stats.p().iter().sum();
            if counts.iter().sum::<i64>() > 0 {
                prop_assert!((sum - 1.0).abs() < 1e-12);
            } else {
                prop_assert!(stats.p().iter().all(|&p| p == 0.0));
            }
        }

        #[test]
        fn reward_is_additive_over_concatenation(
            a in proptest::collection::vec(proptest::sample::select(vec!["cat", "look", "up", "it", "journey", "x"]), 0..8),
            b in proptest::collection::vec(proptest::sample::select(vec!["cat", "look", "up", "it", "journey", "x"]), 0..8),
            usage in proptest::collection::vec(0i64..5, 2),
        ) {
            let n = Normalizer::new();
            let sa = n.from_lemmas(a.iter().map(|s| s.to_string()).collect());
            let sb = n.from_lemmas(b.iter().map(|s| s.to_string()).collect());
            let set = set();
            let stats = stats_with(&usage);
            let ca = count_all(&set, &sa, 3);
            let cb = count_all(&set, &sb, 3);
            let summed = ClauseCounts {
                per_clause: ca.per_clause.iter().zip(&cb.per_clause).map(|(x, y)| x + y).collect(),
                above_level: ca.above_level + cb.above_level,
            };
            let lhs = lexical_reward_from_counts(&summed, &set, &stats, &dynamic()).unwrap();
            let rhs = lexical_reward_from_counts(&ca, &set, &stats, &dynamic()).unwrap()
                + lexical_reward_from_counts(&cb, &set, &stats, &dynamic()).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
