//! Desk-scale autoregressive policy with per-band adapters.
//!
//! The shared backbone embeds the previous `context` tokens, applies one tanh
//! hidden layer and projects to the vocabulary. It is trained once by
//! maximum likelihood and then frozen: it doubles as the reference model.
//! Each band owns an adapter that adds a low-rank delta and a bias to the
//! output projection, plus a value head used as the PPO baseline.

mod model;
mod pretrain;
mod vocab;

pub use model::{
    generate, generate_batch, log_softmax, reference_logprobs, Adapter, Backbone,
    GenerationConfig, PolicyModel, PolicyShape, Rollout,
};
pub use pretrain::{perplexity, pretrain_reference, PretrainConfig, PretrainExample, PretrainReport};
pub use vocab::{TokenId, Vocabulary, EOS, PAD, PROMPT, SEP, UNK};
