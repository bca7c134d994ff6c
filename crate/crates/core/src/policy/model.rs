use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::vocab::{TokenId, Vocabulary, EOS, PAD, PROMPT, SEP, UNK};
use crate::error::{Error, Result};
use crate::kvtext::KvDoc;
use crate::level::Band;
use crate::optim::derive_seed;
use crate::tensor::{log_sum_exp, Matrix};

/// Tokens the policy never emits.
const MASKED: [TokenId; 4] = [PAD, UNK, PROMPT, SEP];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyShape {
    /// Number of preceding tokens the network sees.
    pub context: usize,
    pub embed_dim: usize,
    pub hidden: usize,
    pub adapter_rank: usize,
    /// Longest accepted prompt, in tokens.
    pub max_prompt: usize,
}

impl Default for PolicyShape {
    fn default() -> Self {
        PolicyShape {
            context: 4,
            embed_dim: 12,
            hidden: 48,
            adapter_rank: 4,
            max_prompt: 64,
        }
    }
}

/// Shared network: token embeddings over a fixed context window, one tanh
/// hidden layer and the output projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Backbone {
    pub(crate) embedding: Matrix,
    pub(crate) hidden_w: Matrix,
    pub(crate) hidden_b: Vec<f64>,
    pub(crate) out_w: Matrix,
    pub(crate) out_b: Vec<f64>,
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-bound..bound))
}

impl Backbone {
    fn init(shape: &PolicyShape, vocab: usize, rng: &mut ChaCha8Rng) -> Self {
        let input = shape.context * shape.embed_dim;
        Backbone {
            embedding: uniform(rng, vocab, shape.embed_dim, 0.5),
            hidden_w: uniform(rng, shape.hidden, input, (6.0 / (input + shape.hidden) as f64).sqrt()),
            hidden_b: vec![0.0; shape.hidden],
            out_w: uniform(rng, vocab, shape.hidden, (6.0 / (vocab + shape.hidden) as f64).sqrt()),
            out_b: vec![0.0; vocab],
        }
    }

    /// SHA-256 over the bit patterns of every parameter, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for block in [
            self.embedding.as_slice(),
            self.hidden_w.as_slice(),
            &self.hidden_b,
            self.out_w.as_slice(),
            &self.out_b,
        ] {
            for v in block {
                hasher.update(v.to_bits().to_le_bytes());
            }
        }
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Trainable per-band parameters: a rank-`r` delta `up · down` and a bias
/// delta on the output projection, plus a scalar value head on the hidden
/// layer. With `up` and `bias` zero the adapter leaves the backbone's
/// distribution unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct Adapter {
    pub(crate) down: Matrix,
    pub(crate) up: Matrix,
    pub(crate) bias: Vec<f64>,
    pub(crate) value_w: Vec<f64>,
    pub(crate) value_b: f64,
}

impl Adapter {
    fn init(shape: &PolicyShape, vocab: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (shape.hidden as f64).sqrt();
        Adapter {
            down: uniform(rng, shape.adapter_rank, shape.hidden, bound),
            up: Matrix::zeros(vocab, shape.adapter_rank),
            bias: vec![0.0; vocab],
            value_w: vec![0.0; shape.hidden],
            value_b: 0.0,
        }
    }

    /// True when the adapter adds nothing to the logits.
    pub fn is_identity(&self) -> bool {
        self.up.is_zero() && self.bias.iter().all(|&b| b == 0.0)
    }

    /// `down · h`
    pub(crate) fn project(&self, h: &[f64]) -> Vec<f64> {
        self.down.matvec(h)
    }

    pub(crate) fn add_delta(&self, h: &[f64], logits: &mut [f64]) {
        let low = self.project(h);
        self.up.matvec_acc(&low, logits);
        for (z, b) in logits.iter_mut().zip(&self.bias) {
            *z += b;
        }
    }

    pub fn value(&self, h: &[f64]) -> f64 {
        crate::tensor::dot(&self.value_w, h) + self.value_b
    }

    /// Squared L2 norm of the difference to another adapter.
    pub fn distance_sq(&self, other: &Adapter) -> f64 {
        let pairs = [
            (self.down.as_slice(), other.down.as_slice()),
            (self.up.as_slice(), other.up.as_slice()),
            (&self.bias[..], &other.bias[..]),
            (&self.value_w[..], &other.value_w[..]),
        ];
        let mut s: f64 = pairs
            .iter()
            .flat_map(|(a, b)| a.iter().zip(b.iter()))
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        s += (self.value_b - other.value_b).powi(2);
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyModel {
    vocab: Vocabulary,
    shape: PolicyShape,
    pub(crate) backbone: Backbone,
    pub(crate) adapters: BTreeMap<Band, Adapter>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationConfig {
    pub top_k: usize,
    pub max_tokens: usize,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            top_k: 10,
            max_tokens: 16,
            temperature: 1.0,
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be >= 1".into()));
        }
        if self.max_tokens == 0 {
            return Err(Error::Config("max_tokens must be >= 1".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config("temperature must be positive".into()));
        }
        Ok(())
    }
}

/// One prompt-conditioned generation.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub prompt: Vec<TokenId>,
    /// Generated tokens, including the final `<eos>` when one was produced.
    pub tokens: Vec<TokenId>,
    pub policy_logprobs: Vec<f64>,
    pub reference_logprobs: Vec<f64>,
    /// `<eos>` was generated (otherwise the length limit was hit).
    pub eos: bool,
}

impl Rollout {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// `Σ_t log π(a_t) - log π_ref(a_t)` over the generated tokens.
    pub fn log_ratio(&self) -> Result<f64> {
        if self.policy_logprobs.len() != self.reference_logprobs.len()
            || self.policy_logprobs.len() != self.tokens.len()
        {
            return Err(Error::Mismatch(format!(
                "rollout has {} tokens, {} policy and {} reference log-probs",
                self.tokens.len(),
                self.policy_logprobs.len(),
                self.reference_logprobs.len()
            )));
        }
        Ok(self
            .policy_logprobs
            .iter()
            .zip(&self.reference_logprobs)
            .map(|(p, r)| p - r)
            .sum())
    }
}

/// `z / T - logsumexp(z / T)`.
pub fn log_softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let scaled: Vec<f64> = logits.iter().map(|z| z / temperature).collect();
    let lse = log_sum_exp(&scaled);
    scaled.iter().map(|z| z - lse).collect()
}

impl PolicyModel {
    /// Randomly initialized backbone with identity adapters for every band.
    pub fn new(vocab: Vocabulary, shape: PolicyShape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let backbone = Backbone::init(&shape, vocab.len(), &mut rng);
        let adapters = Band::ALL
            .iter()
            .map(|&b| (b, Adapter::init(&shape, vocab.len(), &mut rng)))
            .collect();
        PolicyModel {
            vocab,
            shape,
            backbone,
            adapters,
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn shape(&self) -> &PolicyShape {
        &self.shape
    }

    pub fn backbone(&self) -> &Backbone {
        &self.backbone
    }

    pub fn bands(&self) -> Vec<Band> {
        self.adapters.keys().copied().collect()
    }

    pub fn adapter(&self, band: Band) -> Result<&Adapter> {
        self.adapters
            .get(&band)
            .ok_or_else(|| Error::Mismatch(format!("model has no adapter for band {band}")))
    }

    pub(crate) fn adapter_mut(&mut self, band: Band) -> Result<&mut Adapter> {
        self.adapters
            .get_mut(&band)
            .ok_or_else(|| Error::Mismatch(format!("model has no adapter for band {band}")))
    }

    pub(crate) fn set_adapter(&mut self, band: Band, adapter: Adapter) {
        self.adapters.insert(band, adapter);
    }

    /// Resets the band adapters to identity while keeping the backbone.
    pub fn reset_adapters(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for band in Band::ALL {
            self.adapters
                .insert(band, Adapter::init(&self.shape, self.vocab.len(), &mut rng));
        }
    }

    /// Copy holding only the given bands' adapters.
    pub fn restrict_to(&self, bands: &[Band]) -> PolicyModel {
        PolicyModel {
            adapters: self
                .adapters
                .iter()
                .filter(|(b, _)| bands.contains(b))
                .map(|(b, a)| (*b, a.clone()))
                .collect(),
            ..self.clone()
        }
    }

    /// Last `context` tokens of `history`, left-padded with `<pad>`.
    pub fn context_window(&self, history: &[TokenId]) -> Vec<TokenId> {
        let k = self.shape.context;
        let mut ctx = vec![PAD; k.saturating_sub(history.len())];
        ctx.extend_from_slice(&history[history.len().saturating_sub(k)..]);
        ctx
    }

    pub(crate) fn embed(&self, ctx: &[TokenId]) -> Vec<f64> {
        let mut x = Vec::with_capacity(ctx.len() * self.shape.embed_dim);
        for &t in ctx {
            x.extend_from_slice(self.backbone.embedding.row(t as usize));
        }
        x
    }

    /// Hidden activation for a context window.
    pub fn hidden(&self, ctx: &[TokenId]) -> Vec<f64> {
        let x = self.embed(ctx);
        let mut pre = self.backbone.hidden_b.clone();
        self.backbone.hidden_w.matvec_acc(&x, &mut pre);
        pre.iter().map(|v| v.tanh()).collect()
    }

    /// Backbone logits with the reserved tokens masked out.
    pub fn base_logits(&self, h: &[f64]) -> Vec<f64> {
        let mut z = self.backbone.out_b.clone();
        self.backbone.out_w.matvec_acc(h, &mut z);
        for id in MASKED {
            z[id as usize] = f64::NEG_INFINITY;
        }
        z
    }

    /// Logits under a band adapter, or the reference logits for `None`.
    pub fn logits(&self, band: Option<Band>, h: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.base_logits(h);
        if let Some(band) = band {
            self.adapter(band)?.add_delta(h, &mut z);
        }
        Ok(z)
    }

    pub fn next_log_probs(&self, band: Option<Band>, history: &[TokenId], temperature: f64) -> Result<Vec<f64>> {
        let h = self.hidden(&self.context_window(history));
        Ok(log_softmax(&self.logits(band, &h)?, temperature))
    }

    pub(crate) fn check_ids_pub(&self, ids: &[TokenId]) -> Result<()> {
        self.check_ids(ids)
    }

    fn check_ids(&self, ids: &[TokenId]) -> Result<()> {
        let v = self.vocab.len();
        match ids.iter().find(|&&t| t as usize >= v) {
            Some(&t) => Err(Error::OutOfRange {
                what: "token id",
                index: t as usize,
                len: v,
            }),
            None => Ok(()),
        }
    }

    /// Per-token log-probabilities of `seq` following `prompt`.
    pub fn sequence_logprobs(
        &self,
        band: Option<Band>,
        prompt: &[TokenId],
        seq: &[TokenId],
        temperature: f64,
    ) -> Result<Vec<f64>> {
        if seq.is_empty() {
            return Err(Error::EmptyInput("sequence"));
        }
        self.check_ids(prompt)?;
        self.check_ids(seq)?;
        let mut history = prompt.to_vec();
        let mut out = Vec::with_capacity(seq.len());
        for &t in seq {
            let lp = self.next_log_probs(band, &history, temperature)?;
            out.push(lp[t as usize]);
            history.push(t);
        }
        Ok(out)
    }

    pub fn to_doc(&self) -> KvDoc {
        let s = &self.shape;
        let mut doc = KvDoc::new("lexalign.policy", 1);
        doc.push("context", s.context);
        doc.push("embed_dim", s.embed_dim);
        doc.push("hidden", s.hidden);
        doc.push("adapter_rank", s.adapter_rank);
        doc.push("max_prompt", s.max_prompt);
        doc.push("vocab_size", self.vocab.len());
        for t in self.vocab.tokens() {
            doc.push("token", t);
        }
        let bands: Vec<&str> = self.adapters.keys().map(|b| b.as_str()).collect();
        doc.push("bands", bands.join(" "));
        doc.push("backbone_sha256", self.backbone.fingerprint());
        let bb = &self.backbone;
        doc.push_tensor("backbone.embedding", bb.embedding.clone());
        doc.push_tensor("backbone.hidden_w", bb.hidden_w.clone());
        doc.push_tensor("backbone.hidden_b", row(&bb.hidden_b));
        doc.push_tensor("backbone.out_w", bb.out_w.clone());
        doc.push_tensor("backbone.out_b", row(&bb.out_b));
        for (band, a) in &self.adapters {
            doc.push_tensor(&format!("adapter.{band}.down"), a.down.clone());
            doc.push_tensor(&format!("adapter.{band}.up"), a.up.clone());
            doc.push_tensor(&format!("adapter.{band}.bias"), row(&a.bias));
        }
        for (band, a) in &self.adapters {
            doc.push_tensor(&format!("value.{band}.w"), row(&a.value_w));
            doc.push_tensor(&format!("value.{band}.b"), row(&[a.value_b]));
        }
        doc
    }

    pub fn from_doc(doc: &KvDoc) -> Result<Self> {
        doc.expect_format("lexalign.policy", 1)?;
        let shape = PolicyShape {
            context: doc.parse_key("context")?,
            embed_dim: doc.parse_key("embed_dim")?,
            hidden: doc.parse_key("hidden")?,
            adapter_rank: doc.parse_key("adapter_rank")?,
            max_prompt: doc.parse_key("max_prompt")?,
        };
        let vocab = Vocabulary::from_table(doc.get_all("token").map(String::from).collect())?;
        let v = vocab.len();
        if v != doc.parse_key::<usize>("vocab_size")? {
            return Err(Error::Mismatch("token table length differs from vocab_size".into()));
        }
        let get = |name: &str, rows: usize, cols: usize| -> Result<Matrix> {
            let m = doc.tensor(name)?;
            if m.rows() != rows || m.cols() != cols {
                return Err(Error::Mismatch(format!(
                    "tensor {name} is {}x{}, expected {rows}x{cols}",
                    m.rows(),
                    m.cols()
                )));
            }
            Ok(m.clone())
        };
        let flat = |name: &str, cols: usize| -> Result<Vec<f64>> { Ok(get(name, 1, cols)?.as_slice().to_vec()) };
        let backbone = Backbone {
            embedding: get("backbone.embedding", v, shape.embed_dim)?,
            hidden_w: get("backbone.hidden_w", shape.hidden, shape.context * shape.embed_dim)?,
            hidden_b: flat("backbone.hidden_b", shape.hidden)?,
            out_w: get("backbone.out_w", v, shape.hidden)?,
            out_b: flat("backbone.out_b", v)?,
        };
        if let Some(sha) = doc.get("backbone_sha256") {
            if sha != backbone.fingerprint() {
                return Err(Error::Mismatch("backbone fingerprint does not match its tensors".into()));
            }
        }
        let mut adapters = BTreeMap::new();
        for b in doc.require("bands")?.split_whitespace() {
            let band: Band = b.parse()?;
            adapters.insert(
                band,
                Adapter {
                    down: get(&format!("adapter.{band}.down"), shape.adapter_rank, shape.hidden)?,
                    up: get(&format!("adapter.{band}.up"), v, shape.adapter_rank)?,
                    bias: flat(&format!("adapter.{band}.bias"), v)?,
                    value_w: flat(&format!("value.{band}.w"), shape.hidden)?,
                    value_b: flat(&format!("value.{band}.b"), 1)?[0],
                },
            );
        }
        Ok(PolicyModel {
            vocab,
            shape,
            backbone,
            adapters,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_doc().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_doc(&KvDoc::load(path)?)
    }
}

fn row(v: &[f64]) -> Matrix {
    Matrix::from_vec(1, v.len(), v.to_vec())
}

/// Indices of the `k` largest finite logits, ties broken by lower id.
fn top_k_indices(logits: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..logits.len()).filter(|&i| logits[i].is_finite()).collect();
    idx.sort_by(|&a, &b| logits[b].total_cmp(&logits[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Samples a continuation of `prompt` with the band's adapter.
///
/// Tokens are drawn from the top-k renormalized distribution; the recorded
/// log-probabilities are those of the full softmax under the policy and
/// under the reference (adapter-free) backbone.
pub fn generate(model: &PolicyModel, band: Band, prompt: &[TokenId], config: &GenerationConfig) -> Result<Rollout> {
    config.validate()?;
    if prompt.len() > model.shape.max_prompt {
        return Err(Error::Config(format!(
            "prompt of {} tokens exceeds the {}-token bound",
            prompt.len(),
            model.shape.max_prompt
        )));
    }
    model.check_ids(prompt)?;
    let adapter = model.adapter(band)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = prompt.to_vec();
    let mut rollout = Rollout {
        prompt: prompt.to_vec(),
        tokens: Vec::new(),
        policy_logprobs: Vec::new(),
        reference_logprobs: Vec::new(),
        eos: false,
    };
    for _ in 0..config.max_tokens {
        let h = model.hidden(&model.context_window(&history));
        let base = model.base_logits(&h);
        let mut z = base.clone();
        adapter.add_delta(&h, &mut z);
        let candidates = top_k_indices(&z, config.top_k);
        let token = if candidates.len() == 1 {
            candidates[0]
        } else {
            let zmax = z[candidates[0]];
            let weights: Vec<f64> = candidates
                .iter()
                .map(|&i| ((z[i] - zmax) / config.temperature).exp())
                .collect();
            let total: f64 = weights.iter().sum();
            let mut u = rng.gen::<f64>() * total;
            let mut chosen = *candidates.last().expect("non-empty candidates");
            for (&i, w) in candidates.iter().zip(&weights) {
                if u < *w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        };
        let lp = log_softmax(&z, config.temperature);
        let lr = log_softmax(&base, config.temperature);
        rollout.policy_logprobs.push(lp[token]);
        rollout.reference_logprobs.push(lr[token]);
        rollout.tokens.push(token as TokenId);
        history.push(token as TokenId);
        if token as TokenId == EOS {
            rollout.eos = true;
            break;
        }
    }
    Ok(rollout)
}

/// Generates one rollout per prompt in parallel. Rollout `i` uses the seed
/// derived from `(config.seed, i)`; results keep prompt order.
pub fn generate_batch(
    model: &PolicyModel,
    band: Band,
    prompts: &[Vec<TokenId>],
    config: &GenerationConfig,
) -> Result<Vec<Rollout>> {
    prompts
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let cfg = GenerationConfig {
                seed: derive_seed(config.seed, i as u64),
                ..*config
            };
            generate(model, band, p, &cfg)
        })
        .collect()
}

/// Log-probabilities of `seq` under the frozen backbone.
pub fn reference_logprobs(model: &PolicyModel, prompt: &[TokenId], seq: &[TokenId]) -> Result<Vec<f64>> {
    model.sequence_logprobs(None, prompt, seq, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> PolicyModel {
        let vocab = Vocabulary::new(["a", "b", "c", "d", "e", "f", "g", "h", "i"]);
        PolicyModel::new(vocab, PolicyShape::default(), 3)
    }

    #[test]
    fn distributions_sum_to_one_and_mask_reserved() {
        let m = model();
        let lp = m.next_log_probs(Some(Band::A), &[PROMPT, 5, SEP], 1.0).unwrap();
        let sum: f64 = lp.iter().map(|l| l.exp()).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        for id in MASKED {
            assert_eq!(lp[id as usize], f64::NEG_INFINITY);
        }
    }

    #[test]
    fn identity_adapters_match_reference() {
        let m = model();
        let prompt = vec![PROMPT, 6, SEP];
        let r = generate(&m, Band::B, &prompt, &GenerationConfig { seed: 9, ..Default::default() }).unwrap();
        assert_eq!(r.policy_logprobs, r.reference_logprobs);
        assert_eq!(r.log_ratio().unwrap(), 0.0);
        assert_eq!(reference_logprobs(&m, &prompt, &r.tokens).unwrap(), r.policy_logprobs);
    }

    #[test]
    fn greedy_needs_no_seed() {
        let m = model();
        let p = vec![PROMPT, 7, SEP];
        let a = generate(&m, Band::A, &p, &GenerationConfig { top_k: 1, seed: 1, ..Default::default() }).unwrap();
        let b = generate(&m, Band::A, &p, &GenerationConfig { top_k: 1, seed: 2, ..Default::default() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let m = model();
        let p = vec![PROMPT, 7, SEP];
        let cfg = GenerationConfig { seed: 42, ..Default::default() };
        assert_eq!(generate(&m, Band::A, &p, &cfg).unwrap(), generate(&m, Band::A, &p, &cfg).unwrap());
        let batch = generate_batch(&m, Band::A, &[p.clone(), p.clone()], &cfg).unwrap();
        assert_eq!(batch, generate_batch(&m, Band::A, &[p.clone(), p], &cfg).unwrap());
    }

    #[test]
    fn rollout_invariants() {
        let m = model();
        let r = generate(&m, Band::C, &[PROMPT, SEP], &GenerationConfig { max_tokens: 5, ..Default::default() }).unwrap();
        assert!(r.len() <= 5);
        assert_eq!(r.policy_logprobs.len(), r.len());
        assert!(r.policy_logprobs.iter().all(|&l| l <= 0.0));
        assert_eq!(r.eos, r.tokens.last() == Some(&EOS));
    }

    #[test]
    fn chain_rule_over_two_tokens() {
        let m = model();
        let prompt = vec![PROMPT, 5, SEP];
        let lp = reference_logprobs(&m, &prompt, &[6, 7]).unwrap();
        let p1 = m.next_log_probs(None, &prompt, 1.0).unwrap()[6];
        let p2 = m.next_log_probs(None, &[PROMPT, 5, SEP, 6], 1.0).unwrap()[7];
        assert_eq!(lp, vec![p1, p2]);
        assert!(((lp[0] + lp[1]).exp() - p1.exp() * p2.exp()).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let m = model();
        let long = vec![5; 65];
        assert!(generate(&m, Band::A, &long, &GenerationConfig::default()).is_err());
        assert!(reference_logprobs(&m, &[PROMPT], &[]).is_err());
        assert!(reference_logprobs(&m, &[PROMPT], &[99]).is_err());
        let only_a = m.restrict_to(&[Band::A]);
        assert!(generate(&only_a, Band::B, &[PROMPT], &GenerationConfig::default()).is_err());
        assert!(GenerationConfig { top_k: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_byte_exact() {
        let m = model();
        let text = m.to_doc().to_text();
        let back = PolicyModel::from_doc(&KvDoc::parse(&text).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_doc().to_text(), text);
    }

    #[test]
    fn context_window_pads_on_the_left() {
        let m = model();
        assert_eq!(m.context_window(&[7]), vec![PAD, PAD, PAD, 7]);
        assert_eq!(m.context_window(&[1, 2, 3, 4, 5]), vec![2, 3, 4, 5]);
    }
}
