use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lexalign::reward::RewardMode;
use lexalign::Band;

#[derive(Debug, Parser)]
#[command(name = "lexalign", version, about = "Proficiency-aligned sentence simplification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a vocabulary TSV into per-band constraint-set files.
    CompileVocab(CompileVocabArgs),
    /// Train the sentence-level ranker of one or more bands.
    TrainRanker(TrainRankerArgs),
    /// Train band adapters with PPO against the combined reward.
    TrainPolicy(TrainPolicyArgs),
    /// Simplify sentences with a trained band adapter.
    Simplify(SimplifyArgs),
    /// Score an outputs file against the constraint sets of each band.
    Evaluate(EvaluateArgs),
    /// Run the reward-design ablation grid on the toy environment.
    Ablate(AblateArgs),
    /// Write the toy environment's data files.
    MakeToy(MakeToyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "UPPER")]
pub enum BandChoice {
    A,
    B,
    C,
    #[value(name = "all")]
    All,
}

impl BandChoice {
    pub fn bands(self) -> Vec<Band> {
        match self {
            BandChoice::A => vec![Band::A],
            BandChoice::B => vec![Band::B],
            BandChoice::C => vec![Band::C],
            BandChoice::All => Band::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "UPPER")]
pub enum SingleBand {
    A,
    B,
    C,
}

impl From<SingleBand> for Band {
    fn from(b: SingleBand) -> Band {
        match b {
            SingleBand::A => Band::A,
            SingleBand::B => Band::B,
            SingleBand::C => Band::C,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Constant,
    Dynamic,
}

impl From<ModeArg> for RewardMode {
    fn from(m: ModeArg) -> RewardMode {
        match m {
            ModeArg::Constant => RewardMode::Constant,
            ModeArg::Dynamic => RewardMode::Dynamic,
        }
    }
}

/// Micro-language and training config; both default to the shipped toy.
#[derive(Debug, Clone, Args)]
pub struct EnvArgs {
    /// Micro-language specification.
    #[arg(long, value_name = "FILE")]
    pub env: Option<PathBuf>,
    /// Training config.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

/// Overrides of the training config. Unset flags keep the config's values,
/// whose defaults are alpha 1.2, lambda 1.5, gamma 1, phrase multiplier 1.5,
/// top-k 10, gap 3, clip 0.2 and GAE lambda 0.95.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// PPO seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub rollouts: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long, value_enum)]
    pub reward_mode: Option<ModeArg>,
    /// Drop the KL regularizer from the reward.
    #[arg(long)]
    pub no_kl: bool,
    /// Drop the sentence-level ranker reward.
    #[arg(long)]
    pub no_sentence_reward: bool,
    /// Decay rate of the dynamic reward.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Weight of the lexical reward.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Weight of the sentence reward.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub phrase_multiplier: Option<f64>,
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Maximum number of tokens between consecutive phrase words.
    #[arg(long)]
    pub gap: Option<usize>,
    #[arg(long)]
    pub clip_epsilon: Option<f64>,
    #[arg(long)]
    pub gae_lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CompileVocabArgs {
    /// Vocabulary TSV: surface, level, and optional space-separated lemmas.
    #[arg(long, value_name = "FILE")]
    pub vocab: PathBuf,
    #[arg(long, value_enum, default_value = "all", ignore_case = true)]
    pub band: BandChoice,
    /// Receives one `<band>.cset` file per band.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainRankerArgs {
    /// Labeled sentences: text, tab, CEFR level.
    #[arg(long, value_name = "FILE")]
    pub labeled: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub vocab: PathBuf,
    /// Micro-language whose stopwords and lexicon drive normalization.
    #[arg(long, value_name = "FILE")]
    pub env: Option<PathBuf>,
    /// Stopword list, one token per line, replacing the default list.
    #[arg(long, value_name = "FILE")]
    pub stopwords: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all", ignore_case = true)]
    pub band: BandChoice,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 4)]
    pub pairs_per_target: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Receives one `<band>.ranker` file per band.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainPolicyArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    /// Reference checkpoint; pretrained from the environment when absent.
    #[arg(long, value_name = "FILE")]
    pub reference: Option<PathBuf>,
    /// Directory of `<band>.ranker` files; trained from the environment when absent.
    #[arg(long, value_name = "DIR")]
    pub rankers: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all", ignore_case = true)]
    pub band: BandChoice,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Receives `policy.ckpt`, `policy_<band>.ckpt` and `trainlog_<band>.csv`.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimplifyArgs {
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, ignore_case = true)]
    pub band: SingleBand,
    /// Complex sentences, one per line.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    #[arg(long, default_value_t = 16)]
    pub max_tokens: usize,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Output sentences, one per line.
    #[arg(long, value_name = "FILE")]
    pub outputs: PathBuf,
    /// Directory holding `A.cset`, `B.cset` and `C.cset`.
    #[arg(long, value_name = "DIR", required_unless_present = "vocab", conflicts_with = "vocab")]
    pub constraints: Option<PathBuf>,
    /// Vocabulary TSV compiled on the fly instead of reading `--constraints`.
    #[arg(long, value_name = "FILE")]
    pub vocab: Option<PathBuf>,
    /// Bands to report.
    #[arg(long, value_enum, default_value = "all", ignore_case = true)]
    pub band: BandChoice,
    /// Micro-language whose normalizer to use; defaults to one built from the clauses.
    #[arg(long, value_name = "FILE")]
    pub env: Option<PathBuf>,
    /// Stopword list, one token per line, replacing the default list.
    #[arg(long, value_name = "FILE")]
    pub stopwords: Option<PathBuf>,
    #[arg(long, default_value_t = lexalign::constraint::DEFAULT_GAP)]
    pub gap: usize,
    /// Writes `<PREFIX>.csv` and `<PREFIX>.txt`.
    #[arg(long, value_name = "PREFIX")]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[arg(long, value_name = "FILE")]
    pub reference: Option<PathBuf>,
    /// Shared seeds, one training run per seed and cell.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0u64, 1, 2])]
    pub seeds: Vec<u64>,
    /// Sampled generations of the evaluation set per trained policy.
    #[arg(long, default_value_t = 8)]
    pub eval_draws: usize,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub rollouts: Option<usize>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MakeToyArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}
