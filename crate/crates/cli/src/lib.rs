//! Command implementations behind the `lexalign` binary.

pub mod ablate;
pub mod args;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use lexalign::constraint::{compile_constraints, load_vocabulary, parse_word_list, ConstraintSet, Normalizer, VocabEntry};
use lexalign::corpus::{corpus_to_tsv, labeled_to_tsv, load_labeled, MicroLanguageSpec, TOY_ENV};
use lexalign::error::Category;
use lexalign::kvtext::KvDoc;
use lexalign::metrics::EvalReport;
use lexalign::pipeline::{evaluate_texts, simplify};
use lexalign::policy::{GenerationConfig, PolicyModel};
use lexalign::reward::{build_pairs, train_ranker, FeatureExtractor, RankerConfig, RankerModel};
use lexalign::toy::{ToyEnvironment, ToySettings, TOY_TRAIN};
use lexalign::trainer::{train, TrainConfig};
use lexalign::{Band, Error, Result};

use crate::ablate::{ablation_csv, run_ablation};
use crate::args::*;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

pub fn exit_code(err: &Error) -> u8 {
    match err.category() {
        Category::Usage => EXIT_USAGE,
        Category::Data => EXIT_DATA,
        Category::Numerical => EXIT_NUMERICAL,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::CompileVocab(a) => compile_vocab(&a),
        Command::TrainRanker(a) => cmd_train_ranker(&a),
        Command::TrainPolicy(a) => train_policy(&a),
        Command::Simplify(a) => cmd_simplify(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Ablate(a) => ablate(&a),
        Command::MakeToy(a) => make_toy(&a),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(io_error(path, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file")))
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| io_error(path, e))
}

fn cset_path(dir: &Path, band: Band) -> PathBuf {
    dir.join(format!("{band}.cset"))
}

fn ranker_path(dir: &Path, band: Band) -> PathBuf {
    dir.join(format!("{band}.ranker"))
}

/// Lines of a text file; a trailing newline does not add an empty line.
fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(read_text(path)?.lines().map(str::to_string).collect())
}

fn lines_to_text(lines: &[String]) -> String {
    lines.iter().map(|l| format!("{l}\n")).collect()
}

/// The micro-language spec and toy settings named by `args`, or the shipped ones.
pub fn load_env_files(args: &EnvArgs) -> Result<(MicroLanguageSpec, ToySettings)> {
    if let Some(p) = &args.env {
        require_file(p)?;
    }
    if let Some(p) = &args.config {
        require_file(p)?;
    }
    let spec = match &args.env {
        Some(p) => MicroLanguageSpec::load(p)?,
        None => MicroLanguageSpec::parse(TOY_ENV)?,
    };
    let doc = match &args.config {
        Some(p) => KvDoc::load(p)?,
        None => KvDoc::parse(TOY_TRAIN)?,
    };
    Ok((spec, ToySettings::from_doc(&doc)?))
}

/// Applies command-line overrides on top of a training config.
pub fn apply_overrides(base: &TrainConfig, o: &Overrides) -> Result<TrainConfig> {
    let mut cfg = *base;
    if let Some(v) = o.seed {
        cfg.ppo.seed = v;
    }
    if let Some(v) = o.epochs {
        cfg.ppo.epochs = v;
    }
    if let Some(v) = o.rollouts {
        cfg.ppo.rollouts_per_epoch = v;
    }
    if let Some(v) = o.learning_rate {
        cfg.ppo.learning_rate = v;
    }
    if let Some(v) = o.reward_mode {
        cfg.reward.mode = v.into();
    }
    if o.no_kl {
        cfg.use_kl = false;
    }
    if o.no_sentence_reward {
        cfg.use_sentence_reward = false;
    }
    if let Some(v) = o.alpha {
        cfg.reward.alpha = v;
    }
    if let Some(v) = o.lambda {
        cfg.weights.lambda = v;
    }
    if let Some(v) = o.gamma {
        cfg.weights.gamma = v;
    }
    if let Some(v) = o.phrase_multiplier {
        cfg.reward.phrase_multiplier = v;
    }
    if let Some(v) = o.top_k {
        cfg.generation.top_k = v;
    }
    if let Some(v) = o.gap {
        cfg.gap = v;
    }
    if let Some(v) = o.clip_epsilon {
        cfg.ppo.clip_epsilon = v;
    }
    if let Some(v) = o.gae_lambda {
        cfg.ppo.gae_lambda = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn vocabulary_normalizer(entries: &[VocabEntry]) -> Normalizer {
    Normalizer::new().with_lexicon(entries.iter().flat_map(|e| e.lemmas.iter().cloned()))
}

fn compile_vocab(a: &CompileVocabArgs) -> Result<()> {
    require_file(&a.vocab)?;
    let entries = load_vocabulary(&a.vocab)?;
    let sets = a
        .band
        .bands()
        .into_iter()
        .map(|b| compile_constraints(&entries, b))
        .collect::<Result<Vec<_>>>()?;
    create_dir(&a.out_dir)?;
    for set in &sets {
        set.save(cset_path(&a.out_dir, set.band()))?;
        println!(
            "band {}: m = {} ({} words, {} phrases), {} above-level clauses",
            set.band(),
            set.m(),
            set.word_count(),
            set.phrase_count(),
            set.above_level().len()
        );
    }
    Ok(())
}

fn cmd_train_ranker(a: &TrainRankerArgs) -> Result<()> {
    require_file(&a.labeled)?;
    require_file(&a.vocab)?;
    let labeled = load_labeled(&a.labeled)?;
    let entries = load_vocabulary(&a.vocab)?;
    let normalizer = match &a.env {
        Some(p) => MicroLanguageSpec::load(p)?.normalizer(),
        None => vocabulary_normalizer(&entries),
    };
    let normalizer = with_stopword_file(normalizer, a.stopwords.as_deref())?;
    let config = RankerConfig {
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        pairs_per_target: a.pairs_per_target,
        seed: a.seed,
    };
    create_dir(&a.out_dir)?;
    for band in a.band.bands() {
        let pairs = build_pairs(&labeled, band, config.pairs_per_target, config.seed)
            .map_err(|e| Error::Band { band, source: Box::new(e) })?;
        let extractor = FeatureExtractor::new(&entries, normalizer.clone());
        let model = train_ranker(&pairs, extractor, &config).map_err(|e| Error::Band { band, source: Box::new(e) })?;
        model.save(ranker_path(&a.out_dir, band))?;
        println!(
            "band {band}: {} pairs, final loss {:.6}",
            pairs.len(),
            model.losses().last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

/// A toy environment with its reference policy and rankers.
pub struct Prepared {
    pub env: ToyEnvironment,
    pub reference: PolicyModel,
    pub rankers: BTreeMap<Band, RankerModel>,
}

/// Builds the environment, then loads or pretrains the reference and loads or
/// trains the rankers. A freshly pretrained reference is saved to
/// `save_reference` when given.
pub fn prepare(
    env_args: &EnvArgs,
    reference: Option<&Path>,
    rankers: Option<&Path>,
    save_reference: Option<&Path>,
) -> Result<Prepared> {
    if let Some(p) = reference {
        require_file(p)?;
    }
    if let Some(dir) = rankers {
        for band in Band::ALL {
            require_file(&ranker_path(dir, band))?;
        }
    }
    let (spec, settings) = load_env_files(env_args)?;
    let env = ToyEnvironment::new(spec, settings)?;
    let reference = match reference {
        Some(p) => {
            let model = PolicyModel::load(p)?;
            if model.vocab() != &env.vocab {
                return Err(Error::Mismatch("reference vocabulary differs from the environment's".into()));
            }
            model
        }
        None => {
            let (model, _) = env.pretrain()?;
            if let Some(p) = save_reference {
                model.save(p)?;
            }
            model
        }
    };
    let rankers = match rankers {
        Some(dir) => Band::ALL
            .iter()
            .map(|&b| Ok((b, RankerModel::load(ranker_path(dir, b), env.extractor())?)))
            .collect::<Result<_>>()?,
        None => env.train_rankers()?,
    };
    Ok(Prepared { env, reference, rankers })
}

fn train_policy(a: &TrainPolicyArgs) -> Result<()> {
    create_dir(&a.out_dir)?;
    let save_ref = a.out_dir.join("reference.ckpt");
    let prep = prepare(
        &a.env,
        a.reference.as_deref(),
        a.rankers.as_deref(),
        Some(&save_ref),
    )?;
    let cfg = apply_overrides(&prep.env.settings.train, &a.overrides)?;
    let bands = a.band.bands();
    let envs = prep.env.envs(&prep.rankers);
    let outcome = train(&prep.reference, &bands, &envs, &prep.env.train_prompts(), &cfg)?;
    outcome.model.save(a.out_dir.join("policy.ckpt"))?;
    for (band, log) in &outcome.logs {
        outcome
            .model
            .restrict_to(&[*band])
            .save(a.out_dir.join(format!("policy_{band}.ckpt")))?;
        write_text(&a.out_dir.join(format!("trainlog_{band}.csv")), &log.to_csv())?;
        let last = log.records.last();
        println!(
            "band {band}: {} epochs, final mean reward {:.4}, final mean KL {:.4}",
            log.records.len(),
            last.map_or(f64::NAN, |r| r.mean_reward),
            last.map_or(f64::NAN, |r| r.mean_kl)
        );
    }
    Ok(())
}

fn cmd_simplify(a: &SimplifyArgs) -> Result<()> {
    require_file(&a.checkpoint)?;
    require_file(&a.input)?;
    let model = PolicyModel::load(&a.checkpoint)?;
    let band: Band = a.band.into();
    model.adapter(band)?;
    let config = GenerationConfig {
        top_k: a.top_k,
        max_tokens: a.max_tokens,
        temperature: a.temperature,
        seed: a.seed,
    };
    config.validate()?;
    let inputs = read_lines(&a.input)?;
    let outputs = simplify(&model, band, &inputs, &config)?;
    write_text(&a.output, &lines_to_text(&outputs))
}

/// Loads `A.cset`, `B.cset` and `C.cset` from a directory.
pub fn load_sets(dir: &Path) -> Result<Vec<ConstraintSet>> {
    Band::ALL
        .iter()
        .map(|&band| {
            let path = cset_path(dir, band);
            require_file(&path)?;
            let set = ConstraintSet::load(&path)?;
            if set.band() != band {
                return Err(Error::Mismatch(format!("{} holds band {}", path.display(), set.band())));
            }
            Ok(set)
        })
        .collect()
}

fn clause_normalizer(sets: &[ConstraintSet]) -> Normalizer {
    let lemmas = sets
        .iter()
        .flat_map(|s| s.clauses().iter().chain(s.above_level()))
        .flat_map(|c| c.literals.iter().cloned());
    Normalizer::new().with_lexicon(lemmas)
}

fn with_stopword_file(normalizer: Normalizer, path: Option<&Path>) -> Result<Normalizer> {
    match path {
        Some(p) => Ok(normalizer.with_stopwords(parse_word_list(&read_text(p)?))),
        None => Ok(normalizer),
    }
}

/// Where the constraint sets of an evaluation come from.
#[derive(Debug, Clone, Copy)]
pub enum SetSource<'a> {
    Compiled(&'a Path),
    Vocabulary(&'a Path),
}

pub fn evaluate_file(
    outputs: &Path,
    source: SetSource<'_>,
    env: Option<&Path>,
    stopwords: Option<&Path>,
    gap: usize,
) -> Result<EvalReport> {
    require_file(outputs)?;
    let sets = match source {
        SetSource::Compiled(dir) => load_sets(dir)?,
        SetSource::Vocabulary(path) => {
            require_file(path)?;
            let entries = load_vocabulary(path)?;
            Band::ALL.iter().map(|&b| compile_constraints(&entries, b)).collect::<Result<Vec<_>>>()?
        }
    };
    let normalizer = match env {
        Some(p) => MicroLanguageSpec::load(p)?.normalizer(),
        None => clause_normalizer(&sets),
    };
    let normalizer = with_stopword_file(normalizer, stopwords)?;
    evaluate_texts(&read_lines(outputs)?, &normalizer, &sets, gap)
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let source = match (&a.constraints, &a.vocab) {
        (Some(dir), _) => SetSource::Compiled(dir),
        (None, Some(vocab)) => SetSource::Vocabulary(vocab),
        (None, None) => return Err(Error::Config("one of --constraints or --vocab is required".into())),
    };
    let mut report = evaluate_file(&a.outputs, source, a.env.as_deref(), a.stopwords.as_deref(), a.gap)?;
    let bands = a.band.bands();
    report.rows.retain(|r| bands.contains(&r.band));
    let mut csv = a.out_prefix.clone().into_os_string();
    csv.push(".csv");
    let mut txt = a.out_prefix.clone().into_os_string();
    txt.push(".txt");
    let table = report.to_table();
    write_text(Path::new(&csv), &report.to_csv())?;
    write_text(Path::new(&txt), &table)?;
    print!("{table}");
    Ok(())
}

fn ablate(a: &AblateArgs) -> Result<()> {
    let prep = prepare(&a.env, a.reference.as_deref(), None, None)?;
    let mut cfg = prep.env.settings.train;
    if let Some(v) = a.epochs {
        cfg.ppo.epochs = v;
    }
    if let Some(v) = a.rollouts {
        cfg.ppo.rollouts_per_epoch = v;
    }
    cfg.validate()?;
    let rows = run_ablation(&prep.env, &prep.reference, &prep.rankers, &cfg, &a.seeds, a.eval_draws)?;
    let csv = ablation_csv(&rows);
    write_text(&a.out, &csv)?;
    print!("{csv}");
    Ok(())
}

fn make_toy(a: &MakeToyArgs) -> Result<()> {
    let (spec, settings) = load_env_files(&a.env)?;
    let env_text = match &a.env.env {
        Some(p) => read_text(p)?,
        None => TOY_ENV.to_string(),
    };
    let config_text = match &a.env.config {
        Some(p) => read_text(p)?,
        None => TOY_TRAIN.to_string(),
    };
    let env = ToyEnvironment::new(spec, settings)?;
    create_dir(&a.out_dir)?;
    let d = &a.out_dir;
    write_text(&d.join("env.txt"), &env_text)?;
    write_text(&d.join("train.txt"), &config_text)?;
    write_text(&d.join("vocab.tsv"), &lexalign::constraint::vocabulary_to_tsv(&env.entries))?;
    write_text(&d.join("corpus_train.tsv"), &corpus_to_tsv(&env.train))?;
    write_text(&d.join("corpus_eval.tsv"), &corpus_to_tsv(&env.eval))?;
    write_text(&d.join("labeled.tsv"), &labeled_to_tsv(&env.labeled()))?;
    write_text(&d.join("eval_complex.txt"), &lines_to_text(&env.eval_sentences()))?;
    println!(
        "{} training pairs, {} evaluation pairs, {} vocabulary entries",
        env.train.len(),
        env.eval.len(),
        env.entries.len()
    );
    Ok(())
}
