//! Maximum-likelihood training of the shared backbone.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{log_softmax, PolicyModel, PolicyShape};
use super::vocab::{TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::optim::{AdamConfig, AdamState};
use crate::tensor::{axpy, Matrix};

/// A training sequence; the loss covers `response` only, with `prompt`
/// serving as conditioning context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PretrainExample {
    pub prompt: Vec<TokenId>,
    pub response: Vec<TokenId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PretrainConfig {
    pub shape: PolicyShape,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Held-out share of the corpus used for early stopping.
    pub validation_fraction: f64,
    /// Training stops once validation perplexity improved by less than
    /// `min_improvement` (relative) over the last `patience` epochs.
    pub patience: usize,
    pub min_improvement: f64,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            shape: PolicyShape::default(),
            learning_rate: 0.01,
            batch_size: 16,
            max_epochs: 40,
            validation_fraction: 0.1,
            patience: 3,
            min_improvement: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PretrainReport {
    pub train_perplexity: Vec<f64>,
    pub validation_perplexity: Vec<f64>,
}

impl PretrainReport {
    pub fn epochs(&self) -> usize {
        self.train_perplexity.len()
    }
}

struct Grads {
    embedding: Matrix,
    hidden_w: Matrix,
    hidden_b: Vec<f64>,
    out_w: Matrix,
    out_b: Vec<f64>,
}

impl Grads {
    fn zeros(model: &PolicyModel) -> Self {
        let b = &model.backbone;
        Grads {
            embedding: Matrix::zeros(b.embedding.rows(), b.embedding.cols()),
            hidden_w: Matrix::zeros(b.hidden_w.rows(), b.hidden_w.cols()),
            hidden_b: vec![0.0; b.hidden_b.len()],
            out_w: Matrix::zeros(b.out_w.rows(), b.out_w.cols()),
            out_b: vec![0.0; b.out_b.len()],
        }
    }
}

/// Accumulates the gradient of the summed response NLL; returns the NLL.
fn accumulate(model: &PolicyModel, ex: &PretrainExample, g: &mut Grads) -> f64 {
    let shape = *model.shape();
    let d = shape.embed_dim;
    let mut history = ex.prompt.clone();
    let mut nll = 0.0;
    for &target in &ex.response {
        let ctx = model.context_window(&history);
        let x = model.embed(&ctx);
        let bb = &model.backbone;
        let mut pre = bb.hidden_b.clone();
        bb.hidden_w.matvec_acc(&x, &mut pre);
        let h: Vec<f64> = pre.iter().map(|v| v.tanh()).collect();
        let z = model.base_logits(&h);
        let lp = log_softmax(&z, 1.0);
        nll -= lp[target as usize];
        let mut dz: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
        dz[target as usize] -= 1.0;
        g.out_w.add_outer(1.0, &dz, &h);
        axpy(1.0, &dz, &mut g.out_b);
        let mut dh = vec![0.0; h.len()];
        bb.out_w.matvec_t_acc(&dz, &mut dh);
        let dpre: Vec<f64> = dh.iter().zip(&h).map(|(d, h)| d * (1.0 - h * h)).collect();
        g.hidden_w.add_outer(1.0, &dpre, &x);
        axpy(1.0, &dpre, &mut g.hidden_b);
        let mut dx = vec![0.0; x.len()];
        bb.hidden_w.matvec_t_acc(&dpre, &mut dx);
        for (slot, &tok) in ctx.iter().enumerate() {
            axpy(1.0, &dx[slot * d..(slot + 1) * d], g.embedding.row_mut(tok as usize));
        }
        history.push(target);
    }
    nll
}

/// `exp(mean token NLL)` of the responses under a band adapter (or the
/// backbone alone for `None`).
pub fn perplexity(model: &PolicyModel, band: Option<crate::Band>, examples: &[PretrainExample]) -> Result<f64> {
    let mut nll = 0.0;
    let mut n = 0usize;
    for ex in examples.iter().filter(|e| !e.response.is_empty()) {
        let lp = model.sequence_logprobs(band, &ex.prompt, &ex.response, 1.0)?;
        nll -= lp.iter().sum::<f64>();
        n += lp.len();
    }
    if n == 0 {
        return Err(Error::EmptyInput("perplexity corpus"));
    }
    Ok((nll / n as f64).exp())
}

/// Trains a fresh backbone by next-token maximum likelihood. Band adapters
/// start as identities, so every band's policy initially equals the
/// reference.
pub fn pretrain_reference(
    vocab: Vocabulary,
    corpus: &[PretrainExample],
    config: &PretrainConfig,
) -> Result<(PolicyModel, PretrainReport)> {
    if corpus.iter().all(|e| e.response.is_empty()) {
        return Err(Error::EmptyInput("pretraining corpus"));
    }
    if config.batch_size == 0 || !(config.learning_rate > 0.0) {
        return Err(Error::Config("pretraining needs batch_size >= 1 and learning_rate > 0".into()));
    }
    let mut model = PolicyModel::new(vocab, config.shape, config.seed);
    for ex in corpus {
        model.check_ids_pub(&ex.prompt)?;
        model.check_ids_pub(&ex.response)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((corpus.len() as f64 * config.validation_fraction).round() as usize).min(corpus.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let train: Vec<PretrainExample> = train_idx.iter().map(|&i| corpus[i].clone()).collect();
    let val: Vec<PretrainExample> = val_idx.iter().map(|&i| corpus[i].clone()).collect();

    let adam = AdamConfig::with_lr(config.learning_rate);
    let bb = &model.backbone;
    let mut states = [
        AdamState::new(bb.embedding.as_slice().len()),
        AdamState::new(bb.hidden_w.as_slice().len()),
        AdamState::new(bb.hidden_b.len()),
        AdamState::new(bb.out_w.as_slice().len()),
        AdamState::new(bb.out_b.len()),
    ];
    let mut step = 0u64;
    let mut report = PretrainReport {
        train_perplexity: Vec::new(),
        validation_perplexity: Vec::new(),
    };
    let mut batch_order: Vec<usize> = (0..train.len()).collect();
    for _epoch in 0..config.max_epochs {
        batch_order.shuffle(&mut rng);
        let mut epoch_nll = 0.0;
        let mut epoch_tokens = 0usize;
        for chunk in batch_order.chunks(config.batch_size) {
            let mut g = Grads::zeros(&model);
            let mut tokens = 0usize;
            for &i in chunk {
                epoch_nll += accumulate(&model, &train[i], &mut g);
                tokens += train[i].response.len();
            }
            if tokens == 0 {
                continue;
            }
            epoch_tokens += tokens;
            let scale = 1.0 / tokens as f64;
            step += 1;
            let bb = &mut model.backbone;
            let scaled = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| x * scale).collect() };
            states[0].step(&adam, step, bb.embedding.as_mut_slice(), &scaled(g.embedding.as_slice()));
            states[1].step(&adam, step, bb.hidden_w.as_mut_slice(), &scaled(g.hidden_w.as_slice()));
            states[2].step(&adam, step, &mut bb.hidden_b, &scaled(&g.hidden_b));
            states[3].step(&adam, step, bb.out_w.as_mut_slice(), &scaled(g.out_w.as_slice()));
            states[4].step(&adam, step, &mut bb.out_b, &scaled(&g.out_b));
        }
        let train_ppl = (epoch_nll / epoch_tokens.max(1) as f64).exp();
        if !train_ppl.is_finite() {
            return Err(Error::NonFinite(format!("pretraining perplexity {train_ppl}")));
        }
        report.train_perplexity.push(train_ppl);
        let val_ppl = if val.is_empty() { train_ppl } else { perplexity(&model, None, &val)? };
        report.validation_perplexity.push(val_ppl);
        let v = &report.validation_perplexity;
        if v.len() > config.patience {
            let before = v[v.len() - 1 - config.patience];
            if (before - val_ppl) / before < config.min_improvement {
                break;
            }
        }
    }
    Ok((model, report))
}
