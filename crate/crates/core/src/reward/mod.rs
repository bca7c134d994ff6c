//! Lexical and sentence-level rewards.

mod lexical;
mod ranker;

pub use lexical::{
    base_r, lexical_reward, lexical_reward_from_counts, update_usage, ClauseUsageStats,
    DynamicRewardConfig, RewardMode,
};
pub use ranker::{
    build_pairs, pairwise_accuracy, pairwise_loss, sentence_reward, separable_features,
    train_linear_ranker, train_ranker, FeatureExtractor, LabeledSentence, LinearFit,
    RankerConfig, RankerModel,
};
