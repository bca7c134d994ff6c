use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{score_rollout, BandEnv, EpochRecord, ScoredRollout, TrainConfig};
use crate::error::{Error, Result};
use crate::level::Band;
use crate::optim::{derive_seed, AdamConfig, AdamState};
use crate::policy::{generate_batch, log_softmax, Adapter, GenerationConfig, PolicyModel, TokenId};
use crate::reward::{update_usage, ClauseUsageStats};
use crate::tensor::Matrix;

/// Mutable training state of one band: usage statistics, optimizer moments
/// and the epoch counter.
#[derive(Debug, Clone)]
pub struct BandState {
    pub band: Band,
    pub stats: ClauseUsageStats,
    moments: Vec<AdamState>,
    step: u64,
    epoch: usize,
}

impl BandState {
    pub fn new(model: &PolicyModel, band: Band, m: usize) -> Result<Self> {
        let a = model.adapter(band)?;
        Ok(BandState {
            band,
            stats: ClauseUsageStats::new(m),
            moments: param_lens(a).into_iter().map(AdamState::new).collect(),
            step: 0,
            epoch: 0,
        })
    }

    /// Epochs completed so far.
    pub fn epoch(&self) -> usize {
        self.epoch
    }
}

fn param_lens(a: &Adapter) -> [usize; 5] {
    [a.down.as_slice().len(), a.up.as_slice().len(), a.bias.len(), a.value_w.len(), 1]
}

fn params_mut(a: &mut Adapter) -> [&mut [f64]; 5] {
    [
        a.down.as_mut_slice(),
        a.up.as_mut_slice(),
        &mut a.bias,
        &mut a.value_w,
        std::slice::from_mut(&mut a.value_b),
    ]
}

struct Grad {
    down: Matrix,
    up: Matrix,
    bias: Vec<f64>,
    value_w: Vec<f64>,
    value_b: f64,
}

impl Grad {
    fn zeros(a: &Adapter) -> Self {
        Grad {
            down: Matrix::zeros(a.down.rows(), a.down.cols()),
            up: Matrix::zeros(a.up.rows(), a.up.cols()),
            bias: vec![0.0; a.bias.len()],
            value_w: vec![0.0; a.value_w.len()],
            value_b: 0.0,
        }
    }

    fn blocks_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.down.as_mut_slice(),
            self.up.as_mut_slice(),
            &mut self.bias,
            &mut self.value_w,
            std::slice::from_mut(&mut self.value_b),
        ]
    }

    fn norm(&mut self) -> f64 {
        self.blocks_mut()
            .iter()
            .flat_map(|b| b.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

/// One generated token with everything the update needs.
struct Step {
    history: Vec<TokenId>,
    action: usize,
    old_logprob: f64,
    advantage: f64,
    ret: f64,
}

/// Terminal-reward GAE: `δ_t = r_t + γ V_{t+1} - V_t`, `A_t = δ_t + γλ A_{t+1}`.
pub(crate) fn gae(values: &[f64], terminal_reward: f64, discount: f64, lambda: f64) -> Vec<f64> {
    let n = values.len();
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { 0.0 };
        let reward = if t + 1 == n { terminal_reward } else { 0.0 };
        let delta = reward + discount * next_value - values[t];
        next_adv = delta + discount * lambda * next_adv;
        adv[t] = next_adv;
    }
    adv
}

fn build_steps(model: &PolicyModel, band: Band, scored: &[ScoredRollout], config: &TrainConfig) -> Result<Vec<Step>> {
    let adapter = model.adapter(band)?;
    let mut steps = Vec::new();
    for s in scored {
        let r = &s.rollout;
        let mut history = r.prompt.clone();
        let mut values = Vec::with_capacity(r.len());
        let start = steps.len();
        for (&tok, &lp) in r.tokens.iter().zip(&r.policy_logprobs) {
            let h = model.hidden(&model.context_window(&history));
            values.push(adapter.value(&h));
            steps.push(Step {
                history: history.clone(),
                action: tok as usize,
                old_logprob: lp,
                advantage: 0.0,
                ret: 0.0,
            });
            history.push(tok);
        }
        let adv = gae(&values, s.shaped, config.ppo.discount, config.ppo.gae_lambda);
        for (i, step) in steps[start..].iter_mut().enumerate() {
            step.advantage = adv[i];
            step.ret = adv[i] + values[i];
        }
    }
    let n = steps.len() as f64;
    if n > 0.0 {
        let mean = steps.iter().map(|s| s.advantage).sum::<f64>() / n;
        let var = steps.iter().map(|s| (s.advantage - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        for s in &mut steps {
            s.advantage = (s.advantage - mean) / (std + 1e-8);
        }
    }
    Ok(steps)
}

struct MinibatchResult {
    loss_policy: f64,
    loss_value: f64,
    max_ratio_deviation: f64,
}

/// Accumulates the clipped-surrogate and value-loss gradients of a
/// minibatch with respect to the adapter parameters.
fn minibatch_gradient(
    model: &PolicyModel,
    band: Band,
    steps: &[&Step],
    config: &TrainConfig,
    grad: &mut Grad,
) -> Result<MinibatchResult> {
    let adapter = model.adapter(band)?;
    let temperature = config.generation.temperature;
    let eps = config.ppo.clip_epsilon;
    let n = steps.len() as f64;
    let mut res = MinibatchResult {
        loss_policy: 0.0,
        loss_value: 0.0,
        max_ratio_deviation: 0.0,
    };
    for s in steps {
        let h = model.hidden(&model.context_window(&s.history));
        let z = model.logits(Some(band), &h)?;
        let lp = log_softmax(&z, temperature);
        let ratio = (lp[s.action] - s.old_logprob).exp();
        res.max_ratio_deviation = res.max_ratio_deviation.max((ratio - 1.0).abs());
        let unclipped = ratio * s.advantage;
        let clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * s.advantage;
        res.loss_policy -= unclipped.min(clipped) / n;
        if unclipped <= clipped {
            // d(-ratio·A)/dz = -ratio·A·(onehot - softmax)/T
            let coef = -ratio * s.advantage / (n * temperature);
            let dz: Vec<f64> = lp
                .iter()
                .enumerate()
                .map(|(i, l)| coef * ((i == s.action) as u8 as f64 - l.exp()))
                .collect();
            let low = adapter.project(&h);
            for (g, d) in grad.bias.iter_mut().zip(&dz) {
                *g += d;
            }
            grad.up.add_outer(1.0, &dz, &low);
            let mut dlow = vec![0.0; low.len()];
            adapter.up.matvec_t_acc(&dz, &mut dlow);
            grad.down.add_outer(1.0, &dlow, &h);
        }
        let v = adapter.value(&h);
        let err = v - s.ret;
        res.loss_value += 0.5 * err * err / n;
        let dv = config.ppo.value_coef * err / n;
        for (g, x) in grad.value_w.iter_mut().zip(&h) {
            *g += dv * x;
        }
        grad.value_b += dv;
    }
    Ok(res)
}

/// Runs one epoch for `state.band`: rollouts, scoring, PPO passes and the
/// usage refresh. On a non-finite loss or KL the adapter and state are
/// restored to their pre-epoch values and an error is returned.
pub fn run_epoch(
    model: &mut PolicyModel,
    state: &mut BandState,
    prompts: &[Vec<TokenId>],
    env: &BandEnv<'_>,
    config: &TrainConfig,
) -> Result<EpochRecord> {
    let band = state.band;
    let snapshot_adapter = model.adapter(band)?.clone();
    let snapshot_state = state.clone();
    let result = epoch_inner(model, state, prompts, env, config);
    if let Err(Error::NonFinite(_)) = &result {
        model.set_adapter(band, snapshot_adapter);
        *state = snapshot_state;
    }
    result
}

fn epoch_inner(
    model: &mut PolicyModel,
    state: &mut BandState,
    prompts: &[Vec<TokenId>],
    env: &BandEnv<'_>,
    config: &TrainConfig,
) -> Result<EpochRecord> {
    if prompts.is_empty() {
        return Err(Error::EmptyInput("prompt list"));
    }
    if state.stats.m() != env.set.m() {
        return Err(Error::Mismatch(format!(
            "usage statistics cover {} clauses, constraint set has {}",
            state.stats.m(),
            env.set.m()
        )));
    }
    let band = state.band;
    let ppo = &config.ppo;
    let epoch_seed = derive_seed(derive_seed(ppo.seed, band.index() as u64), state.epoch as u64);
    let offset = state.epoch * ppo.rollouts_per_epoch;
    let batch: Vec<Vec<TokenId>> = (0..ppo.rollouts_per_epoch)
        .map(|i| prompts[(offset + i) % prompts.len()].clone())
        .collect();
    let gen = GenerationConfig {
        seed: epoch_seed,
        ..config.generation
    };
    let rollouts = generate_batch(model, band, &batch, &gen)?;
    let scored: Vec<ScoredRollout> = rollouts
        .into_iter()
        .map(|r| score_rollout(r, model.vocab(), env, &state.stats, &config.reward, config))
        .collect::<Result<_>>()?;

    let n = scored.len() as f64;
    let mean_reward = scored.iter().map(|s| s.reward).sum::<f64>() / n;
    let mean_kl = scored.iter().map(|s| s.kl).sum::<f64>() / n;
    if !mean_kl.is_finite() || !mean_reward.is_finite() {
        return Err(Error::NonFinite(format!(
            "epoch {}: mean reward {mean_reward}, mean KL {mean_kl}",
            state.epoch
        )));
    }
    let mut epoch_counts = vec![0i64; env.set.m()];
    for s in &scored {
        for (c, &k) in epoch_counts.iter_mut().zip(&s.counts.per_clause) {
            *c += k as i64;
        }
    }

    let steps = build_steps(model, band, &scored, config)?;
    let adam = AdamConfig::with_lr(ppo.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(epoch_seed, 0x9907));
    let mut order: Vec<usize> = (0..steps.len()).collect();
    let mut loss_policy = 0.0;
    let mut loss_value = 0.0;
    let mut batches = 0usize;
    let mut initial_ratio_deviation = 0.0;
    let tokens_per_batch = ppo.minibatch_size * (steps.len() / scored.len()).max(1);
    for pass in 0..ppo.passes {
        order.shuffle(&mut rng);
        for (bi, chunk) in order.chunks(tokens_per_batch).enumerate() {
            let mb: Vec<&Step> = chunk.iter().map(|&i| &steps[i]).collect();
            let mut grad = Grad::zeros(model.adapter(band)?);
            let res = minibatch_gradient(model, band, &mb, config, &mut grad)?;
            if !res.loss_policy.is_finite() || !res.loss_value.is_finite() {
                return Err(Error::NonFinite(format!(
                    "epoch {}: policy loss {}, value loss {}",
                    state.epoch, res.loss_policy, res.loss_value
                )));
            }
            if pass == 0 && bi == 0 {
                initial_ratio_deviation = res.max_ratio_deviation;
            }
            let norm = grad.norm();
            if !norm.is_finite() {
                return Err(Error::NonFinite(format!("epoch {}: gradient norm {norm}", state.epoch)));
            }
            let scale = if norm > ppo.max_grad_norm { ppo.max_grad_norm / norm } else { 1.0 };
            state.step += 1;
            let adapter = model.adapter_mut(band)?;
            for ((p, g), m) in params_mut(adapter)
                .into_iter()
                .zip(grad.blocks_mut())
                .zip(state.moments.iter_mut())
            {
                if scale != 1.0 {
                    g.iter_mut().for_each(|x| *x *= scale);
                }
                m.step(&adam, state.step, p, g);
            }
            loss_policy += res.loss_policy;
            loss_value += res.loss_value;
            batches += 1;
        }
    }

    state.stats = update_usage(&state.stats, &epoch_counts)?;
    let record = EpochRecord {
        epoch: state.epoch,
        mean_reward,
        mean_kl,
        objective: epoch_counts.iter().sum::<i64>() as u64,
        loss_policy: loss_policy / batches.max(1) as f64,
        loss_value: loss_value / batches.max(1) as f64,
        usage: state.stats.p().to_vec(),
        distinct: epoch_counts.iter().filter(|&&c| c > 0).count(),
        initial_ratio_deviation,
        mean_length: scored.iter().map(|s| s.rollout.len() as f64).sum::<f64>() / n,
    };
    state.epoch += 1;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gae_with_unit_lambda_is_reward_to_go_minus_value() {
        let values = [0.5, -0.25, 1.0];
        let adv = gae(&values, 2.0, 1.0, 1.0);
        for (a, v) in adv.iter().zip(values) {
            assert!((a - (2.0 - v)).abs() < 1e-15);
        }
    }

    #[test]
    fn gae_zero_values_decays_geometrically() {
        let adv = gae(&[0.0; 4], 1.0, 1.0, 0.5);
        assert_eq!(adv, vec![0.125, 0.25, 0.5, 1.0]);
    }
}

#[cfg(test)]
mod gradient_tests {
    use super::*;
    use crate::policy::{PolicyShape, Vocabulary, PROMPT, SEP};
    use rand::Rng;

    fn perturbed_model() -> PolicyModel {
        let vocab = Vocabulary::new(["a", "b", "c", "d"]);
        let shape = PolicyShape { hidden: 6, embed_dim: 3, adapter_rank: 2, ..Default::default() };
        let mut m = PolicyModel::new(vocab, shape, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = m.adapter_mut(Band::A).unwrap();
        for p in params_mut(a) {
            p.iter_mut().for_each(|x| *x += rng.gen_range(-0.3..0.3));
        }
        m
    }

    fn total_loss(m: &PolicyModel, steps: &[&Step], cfg: &TrainConfig) -> f64 {
        let mut g = Grad::zeros(m.adapter(Band::A).unwrap());
        let r = minibatch_gradient(m, Band::A, steps, cfg, &mut g).unwrap();
        r.loss_policy + cfg.ppo.value_coef * r.loss_value
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut m = perturbed_model();
        let cfg = TrainConfig::default();
        let mk = |history: Vec<TokenId>, action: usize, adv: f64, ret: f64, m: &PolicyModel| {
            let lp = m.next_log_probs(Some(Band::A), &history, 1.0).unwrap()[action];
            // Keep the ratio inside the clip range so the surrogate is smooth.
            Step { history, action, old_logprob: lp + 0.05, advantage: adv, ret }
        };
        let steps = vec![
            mk(vec![PROMPT, 5, SEP], 6, 1.3, 0.7, &m),
            mk(vec![PROMPT, 5, SEP, 6], 8, -0.6, -0.2, &m),
            mk(vec![PROMPT, 7, SEP], 4, 0.4, 1.1, &m),
        ];
        let refs: Vec<&Step> = steps.iter().collect();
        let mut g = Grad::zeros(m.adapter(Band::A).unwrap());
        minibatch_gradient(&m, Band::A, &refs, &cfg, &mut g).unwrap();
        let analytic: Vec<Vec<f64>> = g.blocks_mut().iter().map(|b| b.to_vec()).collect();
        let h = 1e-6;
        for block in 0..5 {
            for idx in [0usize, 3, 7] {
                if idx >= analytic[block].len() {
                    continue;
                }
                let bump = |m: &mut PolicyModel, d: f64| params_mut(m.adapter_mut(Band::A).unwrap())[block][idx] += d;
                bump(&mut m, h);
                let up = total_loss(&m, &refs, &cfg);
                bump(&mut m, -2.0 * h);
                let down = total_loss(&m, &refs, &cfg);
                bump(&mut m, h);
                let numeric = (up - down) / (2.0 * h);
                let a = analytic[block][idx];
                assert!((numeric - a).abs() < 1e-6, "block {block} idx {idx}: {numeric} vs {a}");
            }
        }
    }
}
