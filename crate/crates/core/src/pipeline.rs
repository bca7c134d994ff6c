//! Glue between the policy, the normalizer and the metrics.

use crate::constraint::{ConstraintSet, Normalizer};
use crate::error::Result;
use crate::level::Band;
use crate::metrics::{evaluate, EvalReport};
use crate::policy::{generate_batch, GenerationConfig, PolicyModel};
use crate::trainer::normalize_output;

/// Simplifies each complex sentence with the band's adapter. Output `i` is
/// sampled with the seed derived from `(config.seed, i)`.
pub fn simplify(model: &PolicyModel, band: Band, sentences: &[String], config: &GenerationConfig) -> Result<Vec<String>> {
    let vocab = model.vocab();
    let prompts: Vec<_> = sentences.iter().map(|s| vocab.prompt(s)).collect();
    Ok(generate_batch(model, band, &prompts, config)?
        .iter()
        .map(|r| vocab.decode(&r.tokens))
        .collect())
}

/// Normalizes output lines and scores them against each constraint set.
pub fn evaluate_texts(texts: &[String], normalizer: &Normalizer, sets: &[ConstraintSet], gap: usize) -> Result<EvalReport> {
    let seqs = texts
        .iter()
        .map(|t| normalize_output(normalizer, t))
        .collect::<Result<Vec<_>>>()?;
    evaluate(&seqs, sets, gap)
}
