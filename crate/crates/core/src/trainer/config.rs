use std::path::Path;

use crate::constraint::DEFAULT_GAP;
use crate::error::{Error, Result};
use crate::kvtext::KvDoc;
use crate::policy::GenerationConfig;
use crate::reward::{DynamicRewardConfig, RewardMode};

/// Weights of the combined reward `R = λ·H + γ·r_l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights {
    pub lambda: f64,
    pub gamma: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights { lambda: 1.5, gamma: 1.0 }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || !self.gamma.is_finite() {
            return Err(Error::Config("reward weights must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PPOConfig {
    pub clip_epsilon: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub rollouts_per_epoch: usize,
    pub minibatch_size: usize,
    /// Optimization passes over each epoch's rollouts.
    pub passes: usize,
    pub value_coef: f64,
    pub discount: f64,
    pub gae_lambda: f64,
    pub max_grad_norm: f64,
    pub seed: u64,
}

impl Default for PPOConfig {
    fn default() -> Self {
        PPOConfig {
            clip_epsilon: 0.2,
            learning_rate: 3e-5,
            epochs: 30,
            rollouts_per_epoch: 64,
            minibatch_size: 16,
            passes: 4,
            value_coef: 0.5,
            discount: 1.0,
            gae_lambda: 0.95,
            max_grad_norm: 1.0,
            seed: 0,
        }
    }
}

impl PPOConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return bad("clip epsilon must lie in (0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.rollouts_per_epoch == 0 || self.minibatch_size == 0 || self.passes == 0 {
            return bad("rollouts per epoch, minibatch size and passes must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.discount) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("discount and GAE lambda must lie in [0, 1]");
        }
        if !(self.max_grad_norm > 0.0) || !(self.value_coef >= 0.0) {
            return bad("max grad norm must be positive and value coefficient nonnegative");
        }
        Ok(())
    }
}

/// Everything `train` needs besides data and models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub ppo: PPOConfig,
    pub weights: RewardWeights,
    pub reward: DynamicRewardConfig,
    pub generation: GenerationConfig,
    pub gap: usize,
    /// Subtract the policy/reference log ratio from the reward.
    pub use_kl: bool,
    pub use_sentence_reward: bool,
    /// Stop once mean reward moved by less than `convergence_tol` (relative)
    /// over `convergence_window` epochs; a window of 0 disables the check.
    pub convergence_window: usize,
    pub convergence_tol: f64,
    /// Per-sequence KL level reported as a breach in training logs.
    pub kl_ceiling: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            ppo: PPOConfig::default(),
            weights: RewardWeights::default(),
            reward: DynamicRewardConfig::default(),
            generation: GenerationConfig::default(),
            gap: DEFAULT_GAP,
            use_kl: true,
            use_sentence_reward: true,
            convergence_window: 5,
            convergence_tol: 0.01,
            kl_ceiling: 20.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.ppo.validate()?;
        self.weights.validate()?;
        self.reward.validate()?;
        self.generation.validate()
    }

    pub fn to_doc(&self) -> KvDoc {
        let mut d = KvDoc::new("lexalign.train", 1);
        let p = &self.ppo;
        d.push("clip_epsilon", p.clip_epsilon);
        d.push("learning_rate", p.learning_rate);
        d.push("epochs", p.epochs);
        d.push("rollouts_per_epoch", p.rollouts_per_epoch);
        d.push("minibatch_size", p.minibatch_size);
        d.push("passes", p.passes);
        d.push("value_coef", p.value_coef);
        d.push("discount", p.discount);
        d.push("gae_lambda", p.gae_lambda);
        d.push("max_grad_norm", p.max_grad_norm);
        d.push("seed", p.seed);
        d.push("lambda", self.weights.lambda);
        d.push("gamma", self.weights.gamma);
        d.push("alpha", self.reward.alpha);
        d.push("phrase_multiplier", self.reward.phrase_multiplier);
        d.push("above_level_penalty", self.reward.above_level_penalty);
        d.push("reward_mode", self.reward.mode);
        d.push("top_k", self.generation.top_k);
        d.push("max_tokens", self.generation.max_tokens);
        d.push("temperature", self.generation.temperature);
        d.push("gap", self.gap);
        d.push("use_kl", self.use_kl);
        d.push("use_sentence_reward", self.use_sentence_reward);
        d.push("convergence_window", self.convergence_window);
        d.push("convergence_tol", self.convergence_tol);
        d.push("kl_ceiling", self.kl_ceiling);
        d
    }

    /// Reads a config document; absent keys keep their defaults.
    pub fn from_doc(d: &KvDoc) -> Result<Self> {
        d.expect_format("lexalign.train", 1)?;
        let def = TrainConfig::default();
        let cfg = TrainConfig {
            ppo: PPOConfig {
                clip_epsilon: d.parse_or("clip_epsilon", def.ppo.clip_epsilon)?,
                learning_rate: d.parse_or("learning_rate", def.ppo.learning_rate)?,
                epochs: d.parse_or("epochs", def.ppo.epochs)?,
                rollouts_per_epoch: d.parse_or("rollouts_per_epoch", def.ppo.rollouts_per_epoch)?,
                minibatch_size: d.parse_or("minibatch_size", def.ppo.minibatch_size)?,
                passes: d.parse_or("passes", def.ppo.passes)?,
                value_coef: d.parse_or("value_coef", def.ppo.value_coef)?,
                discount: d.parse_or("discount", def.ppo.discount)?,
                gae_lambda: d.parse_or("gae_lambda", def.ppo.gae_lambda)?,
                max_grad_norm: d.parse_or("max_grad_norm", def.ppo.max_grad_norm)?,
                seed: d.parse_or("seed", def.ppo.seed)?,
            },
            weights: RewardWeights {
                lambda: d.parse_or("lambda", def.weights.lambda)?,
                gamma: d.parse_or("gamma", def.weights.gamma)?,
            },
            reward: DynamicRewardConfig {
                alpha: d.parse_or("alpha", def.reward.alpha)?,
                phrase_multiplier: d.parse_or("phrase_multiplier", def.reward.phrase_multiplier)?,
                above_level_penalty: d.parse_or("above_level_penalty", def.reward.above_level_penalty)?,
                mode: d.parse_or::<RewardMode>("reward_mode", def.reward.mode)?,
            },
            generation: GenerationConfig {
                top_k: d.parse_or("top_k", def.generation.top_k)?,
                max_tokens: d.parse_or("max_tokens", def.generation.max_tokens)?,
                temperature: d.parse_or("temperature", def.generation.temperature)?,
                seed: 0,
            },
            gap: d.parse_or("gap", def.gap)?,
            use_kl: d.parse_or("use_kl", def.use_kl)?,
            use_sentence_reward: d.parse_or("use_sentence_reward", def.use_sentence_reward)?,
            convergence_window: d.parse_or("convergence_window", def.convergence_window)?,
            convergence_tol: d.parse_or("convergence_tol", def.convergence_tol)?,
            kl_ceiling: d.parse_or("kl_ceiling", def.kl_ceiling)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_doc(&KvDoc::load(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_doc().save(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_published_weights() {
        let c = TrainConfig::default();
        assert_eq!((c.weights.lambda, c.weights.gamma), (1.5, 1.0));
        assert_eq!(c.reward.alpha, 1.2);
        assert_eq!(c.ppo.learning_rate, 3e-5);
        assert_eq!((c.ppo.clip_epsilon, c.ppo.passes, c.ppo.gae_lambda), (0.2, 4, 0.95));
    }

    #[test]
    fn document_round_trip() {
        let mut c = TrainConfig::default();
        c.ppo.learning_rate = 0.05;
        c.reward.mode = RewardMode::Constant;
        c.use_kl = false;
        let back = TrainConfig::from_doc(&KvDoc::parse(&c.to_doc().to_text()).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_documents_use_defaults() {
        let d = KvDoc::parse("format = lexalign.train\nversion = 1\nepochs = 3\n").unwrap();
        let c = TrainConfig::from_doc(&d).unwrap();
        assert_eq!(c.ppo.epochs, 3);
        assert_eq!(c.weights, RewardWeights::default());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for bad in ["clip_epsilon = 1", "learning_rate = 0", "top_k = 0", "alpha = -1"] {
            let d = KvDoc::parse(&format!("format = lexalign.train\nversion = 1\n{bad}\n")).unwrap();
            assert!(matches!(TrainConfig::from_doc(&d), Err(Error::Config(_))), "{bad}");
        }
    }
}
