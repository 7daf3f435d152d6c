//! Subcommands and their flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sparsebm::corpus::{select_vocab, split_corpus, VocabMethod};
use sparsebm::eval::{load_embeddings, AisSchedule, PartitionMethod, PerplexityOptions, Segment};
use sparsebm::pruning::{prune_and_retrain, PruneConfig};
use sparsebm::structure::{build_skeleton, load_skeleton, sbm_sfc, Budget, ExpansionBudget, SkeletonConfig};
use sparsebm::synthetic::{generate, SyntheticConfig};
use sparsebm::train::{train_rs, train_sbm};
use sparsebm::{rng, Corpus, SbmModel64, TrainConfig};

use crate::manifest::{manifest_path, ManifestWriter};
use crate::models::{load_corpus, load_structure, save_corpus, AnyModel};
use crate::pipeline;

#[derive(Debug, Parser)]
#[command(name = "sparsebm", version, about = "Sparse Boltzmann Machines for bag-of-words text")]
pub struct Cli {
    /// Worker threads for annealing runs [default: all cores]
    #[arg(long, global = true, env = "SPARSEBM_THREADS")]
    pub threads: Option<usize>,
    /// Log progress to stderr
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select a vocabulary and split a UCI bag-of-words corpus
    Prepare(PrepareArgs),
    /// Generate a synthetic sparse-topic corpus with known word groups
    Synth(SynthArgs),
    /// Build a two-level skeleton from word co-occurrence
    Skeleton(SkeletonArgs),
    /// Expand a skeleton by conditional mutual information
    Expand(ExpandArgs),
    /// Train a fully connected Replicated Softmax model
    TrainRs(TrainRsArgs),
    /// Train a Sparse Boltzmann Machine on a structure or skeleton
    TrainSbm(TrainSbmArgs),
    /// Magnitude-prune and retrain a Replicated Softmax model
    Prune(PruneArgs),
    /// Per-word perplexity on held-out documents
    Eval(EvalArgs),
    /// Embedding-based interpretability score
    Interpret(InterpretArgs),
    /// Run the full pipeline from a TOML config
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct TrainFlags {
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    /// Gibbs steps per negative phase
    #[arg(long, default_value_t = 10)]
    pub cd_steps: usize,
    #[arg(long, default_value_t = 0.005)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 10)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub init_std: f64,
    #[arg(long, default_value_t = 0.0)]
    pub momentum: f64,
    #[arg(long, default_value_t = 0.0)]
    pub weight_decay: f64,
    /// Sample the final negative hidden state instead of using its mean
    #[arg(long)]
    pub sampled_final: bool,
    /// Start visible biases at zero instead of log word frequencies
    #[arg(long)]
    pub zero_visible_init: bool,
}

impl TrainFlags {
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            cd_steps: self.cd_steps,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            seed: self.seed,
            weight_init_std: self.init_std,
            init_visible_from_frequencies: !self.zero_visible_init,
            mean_field_final: !self.sampled_final,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct PrepareArgs {
    /// UCI docword file
    #[arg(long)]
    pub docword: PathBuf,
    /// UCI vocabulary file
    #[arg(long)]
    pub vocab: PathBuf,
    /// Keep only the top-K words
    #[arg(long)]
    pub vocab_size: Option<usize>,
    /// Word ranking: frequency or tfidf
    #[arg(long, default_value = "frequency")]
    pub method: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training documents [default: remainder]
    #[arg(long)]
    pub train: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub validation: usize,
    #[arg(long)]
    pub test: usize,
    /// Directory for train.bow, validation.bow, test.bow and split.txt
    #[arg(short, long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3000)]
    pub train: usize,
    #[arg(long, default_value_t = 300)]
    pub test: usize,
    #[arg(long, default_value_t = 60)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 8)]
    pub groups: usize,
    /// Directory for train.bow, test.bow and groups.txt
    #[arg(short, long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SkeletonArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub island_max: usize,
    #[arg(long, default_value_t = 5)]
    pub supergroup_max: usize,
    /// MI floor for islands [default: significance floor]
    #[arg(long)]
    pub mi_floor: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub min_nmi: f64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ExpandArgs {
    #[arg(long)]
    pub skeleton: PathBuf,
    /// SBM trained on the skeleton
    #[arg(long)]
    pub tree_model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Per-unit degree as a fraction of K
    #[arg(long, conflicts_with = "per_unit")]
    pub fraction: Option<f64>,
    /// New connections per unit
    #[arg(long)]
    pub per_unit: Option<usize>,
    /// Per-unit override as UNIT=M, repeatable
    #[arg(long = "override", value_name = "UNIT=M")]
    pub overrides: Vec<String>,
    /// Also write the CMI table as TSV
    #[arg(long)]
    pub cmi_tsv: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainRsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Hidden units
    #[arg(long)]
    pub hidden: usize,
    #[command(flatten)]
    pub train: TrainFlags,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainSbmArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Structure file, or skeleton file for a tree-only model
    #[arg(long)]
    pub structure: PathBuf,
    #[command(flatten)]
    pub train: TrainFlags,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PruneArgs {
    /// Trained Replicated Softmax model
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Connections left per unit
    #[arg(long, conflicts_with = "target_fraction")]
    pub target: Option<usize>,
    /// Connections left per unit as a fraction of K, rounded up
    #[arg(long)]
    pub target_fraction: Option<f64>,
    #[arg(long, default_value_t = 0.2)]
    pub prune_fraction: f64,
    #[arg(long, default_value_t = 1)]
    pub retrain_epochs: usize,
    #[command(flatten)]
    pub train: TrainFlags,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub docs: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub ais_runs: usize,
    /// "default" or "uniform:N"
    #[arg(long, default_value = "default")]
    pub schedule: String,
    /// Exact partition functions instead of annealing (small models only)
    #[arg(long)]
    pub exact: bool,
    /// Include the multinomial coefficient in document probabilities
    #[arg(long)]
    pub multinomial: bool,
    /// Evaluate a random subset of this many documents
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report path [default: stdout]
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct InterpretArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Corpus whose vocabulary the model was trained on
    #[arg(long)]
    pub corpus: PathBuf,
    /// Text embeddings, one "word v1 ... vd" per line
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub top_n: usize,
    /// Report path [default: stdout]
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PipelineArgs {
    /// TOML pipeline config
    pub config: PathBuf,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<sparsebm::Error> for Failure {
    fn from(e: sparsebm::Error) -> Self {
        match e {
            sparsebm::Error::Argument(m) => Failure::Usage(m),
            other => Failure::Data(other.into()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

pub fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Prepare(a) => prepare(&a),
        Command::Synth(a) => synth(&a),
        Command::Skeleton(a) => skeleton(&a),
        Command::Expand(a) => expand(&a),
        Command::TrainRs(a) => cmd_train_rs(&a),
        Command::TrainSbm(a) => cmd_train_sbm(&a),
        Command::Prune(a) => prune(&a),
        Command::Eval(a) => eval(&a),
        Command::Interpret(a) => interpret(&a),
        Command::Pipeline(a) => {
            let config = pipeline::PipelineConfig::load(&a.config).map_err(|e| usage(format!("{e:#}")))?;
            let out = pipeline::run(&config)?;
            print!("{}", out.table);
            Ok(())
        }
    }
}

fn prepare(a: &PrepareArgs) -> Outcome {
    let method: VocabMethod = a.method.parse().map_err(|e: sparsebm::Error| usage(e.to_string()))?;
    let m = ManifestWriter::start("prepare", a, a.seed, &[&a.docword, &a.vocab]);
    let loaded = sparsebm::corpus::load_uci_bow(&a.docword, &a.vocab)?;
    if loaded.dropped_empty > 0 {
        log::warn!("dropped {} empty documents", loaded.dropped_empty);
    }
    let mut corpus = loaded.corpus;
    if let Some(k) = a.vocab_size {
        let sel = select_vocab(&corpus, k, method)?;
        if sel.dropped_empty > 0 {
            log::warn!("dropped {} documents left empty by vocabulary selection", sel.dropped_empty);
        }
        corpus = sel.corpus;
    }
    let rest = corpus.len().checked_sub(a.validation + a.test).ok_or_else(|| {
        usage(format!(
            "validation + test = {} exceeds {} documents",
            a.validation + a.test,
            corpus.len()
        ))
    })?;
    let split = split_corpus(&corpus, a.seed, a.train.unwrap_or(rest), a.validation, a.test)?;
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let paths = ["train.bow", "validation.bow", "test.bow", "split.txt"].map(|n| a.out_dir.join(n));
    save_corpus(&split.train, &paths[0])?;
    save_corpus(&split.validation, &paths[1])?;
    save_corpus(&split.test, &paths[2])?;
    std::fs::write(&paths[3], split.manifest()).with_context(|| format!("writing {}", paths[3].display()))?;
    let outs: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
    m.finish(&a.out_dir.join("prepare.manifest.json"), &outs)?;
    Ok(())
}

fn synth(a: &SynthArgs) -> Outcome {
    let m = ManifestWriter::start("synth", a, a.seed, &[]);
    let config = SyntheticConfig {
        vocab_size: a.vocab_size,
        n_groups: a.groups,
        n_docs: a.train + a.test,
        ..SyntheticConfig::default()
    };
    let syn = generate(&config, a.seed)?;
    let split = split_corpus(&syn.corpus, a.seed, a.train, 0, a.test)?;
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let paths = ["train.bow", "test.bow", "groups.txt"].map(|n| a.out_dir.join(n));
    save_corpus(&split.train, &paths[0])?;
    save_corpus(&split.test, &paths[1])?;
    std::fs::write(&paths[2], pipeline::groups_text(&syn)).with_context(|| format!("writing {}", paths[2].display()))?;
    let outs: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
    m.finish(&a.out_dir.join("synth.manifest.json"), &outs)?;
    Ok(())
}

fn skeleton(a: &SkeletonArgs) -> Outcome {
    let m = ManifestWriter::start("skeleton", a, 0, &[&a.corpus]);
    let corpus = load_corpus(&a.corpus)?;
    let config = SkeletonConfig {
        island_max: a.island_max,
        supergroup_max: a.supergroup_max,
        mi_floor: a.mi_floor,
        supergroup_min_nmi: a.min_nmi,
    };
    let s = build_skeleton(&corpus, &config)?;
    s.save(&a.output)?;
    m.finish(&manifest_path(&a.output), &[&a.output])?;
    Ok(())
}

fn parse_override(s: &str) -> std::result::Result<(usize, usize), Failure> {
    let (j, mj) = s
        .split_once('=')
        .ok_or_else(|| usage(format!("override {s:?} is not UNIT=M")))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| usage(format!("override {s:?} is not UNIT=M")));
    Ok((parse(j)?, parse(mj)?))
}

fn expand(a: &ExpandArgs) -> Outcome {
    let m = ManifestWriter::start("expand", a, 0, &[&a.skeleton, &a.tree_model, &a.corpus]);
    let corpus = load_corpus(&a.corpus)?;
    let skeleton = load_skeleton(&a.skeleton, corpus.vocab_size())?;
    let tree_model = SbmModel64::load(&a.tree_model)?;
    let default = match (a.fraction, a.per_unit) {
        (_, Some(mj)) => Budget::PerUnit(mj),
        (Some(f), None) => Budget::Fraction(f),
        (None, None) => Budget::Fraction(0.2),
    };
    let overrides = a.overrides.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>, _>>()?;
    let ex = sbm_sfc(&skeleton, &tree_model, &corpus, &ExpansionBudget { default, overrides })?;
    ex.structure.save(&a.output)?;
    let mut outs: Vec<&Path> = vec![&a.output];
    if let Some(p) = &a.cmi_tsv {
        std::fs::write(p, ex.table.to_tsv()).with_context(|| format!("writing {}", p.display()))?;
        outs.push(p);
    }
    m.finish(&manifest_path(&a.output), &outs)?;
    Ok(())
}

fn cmd_train_rs(a: &TrainRsArgs) -> Outcome {
    let m = ManifestWriter::start("train-rs", a, a.train.seed, &[&a.corpus]);
    let corpus = load_corpus(&a.corpus)?;
    let model = train_rs::<f64>(&corpus, a.hidden, &a.train.config())?;
    model.save(&a.output)?;
    m.finish(&manifest_path(&a.output), &[&a.output])?;
    Ok(())
}

fn cmd_train_sbm(a: &TrainSbmArgs) -> Outcome {
    let m = ManifestWriter::start("train-sbm", a, a.train.seed, &[&a.corpus, &a.structure]);
    let corpus = load_corpus(&a.corpus)?;
    let structure = load_structure(&a.structure, corpus.vocab_size())?;
    let model = train_sbm::<f64>(&corpus, structure, &a.train.config())?;
    model.save(&a.output)?;
    m.finish(&manifest_path(&a.output), &[&a.output])?;
    Ok(())
}

fn prune(a: &PruneArgs) -> Outcome {
    let m = ManifestWriter::start("prune", a, a.train.seed, &[&a.model, &a.corpus]);
    let corpus = load_corpus(&a.corpus)?;
    let AnyModel::Rs(model) = AnyModel::load(&a.model)? else {
        return Err(usage("prune needs a Replicated Softmax model"));
    };
    let k = corpus.vocab_size();
    let target = match (a.target, a.target_fraction) {
        (Some(t), _) => t,
        (None, Some(f)) => (f * k as f64).ceil() as usize,
        (None, None) => (0.2 * k as f64).ceil() as usize,
    };
    let config = PruneConfig {
        target_per_unit: target,
        prune_fraction: a.prune_fraction,
        retrain_epochs_per_iter: a.retrain_epochs,
        train: a.train.config(),
    };
    let out = prune_and_retrain(model, &corpus, &config)?;
    out.model.save(&a.output)?;
    let log_path = a.output.with_extension("prune.tsv");
    std::fs::write(&log_path, out.log_tsv()).with_context(|| format!("writing {}", log_path.display()))?;
    m.finish(&manifest_path(&a.output), &[&a.output, &log_path])?;
    Ok(())
}

pub fn parse_schedule(s: &str) -> std::result::Result<AisSchedule, Failure> {
    if s == "default" {
        return Ok(AisSchedule::default_schedule());
    }
    if let Some(n) = s.strip_prefix("uniform:") {
        let n: usize = n.parse().map_err(|_| usage(format!("bad schedule {s:?}")))?;
        return Ok(AisSchedule::uniform(n)?);
    }
    // "a-b:n,b-c:m"
    let segments = s
        .split(',')
        .map(|seg| {
            let (range, count) = seg.split_once(':')?;
            let (start, end) = range.split_once('-')?;
            Some(Segment {
                start: start.parse().ok()?,
                end: end.parse().ok()?,
                count: count.parse().ok()?,
            })
        })
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| usage(format!("bad schedule {s:?}; use default, uniform:N or a-b:n,...")))?;
    Ok(AisSchedule::new(segments)?)
}

fn subsample(corpus: &Corpus, n: usize, seed: u64) -> Vec<sparsebm::Document> {
    use rand::seq::index::sample;
    let mut r = rng::stream(seed, &[0x5a]);
    let mut idx = sample(&mut r, corpus.len(), n.min(corpus.len())).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| corpus.docs()[i].clone()).collect()
}

fn eval(a: &EvalArgs) -> Outcome {
    let m = ManifestWriter::start("eval", a, a.seed, &[&a.model, &a.docs]);
    let model = AnyModel::load(&a.model)?;
    let corpus = load_corpus(&a.docs)?;
    let docs = match a.sample {
        Some(n) => subsample(&corpus, n, a.seed),
        None => corpus.docs().to_vec(),
    };
    let method = if a.exact {
        PartitionMethod::Exact
    } else {
        PartitionMethod::Ais {
            schedule: parse_schedule(&a.schedule)?,
            runs: a.ais_runs,
            seed: a.seed,
        }
    };
    let options = PerplexityOptions {
        method,
        include_multinomial: a.multinomial,
    };
    let report = model.perplexity(&docs, &options)?;
    match &a.output {
        Some(p) => {
            std::fs::write(p, report.to_tsv()).with_context(|| format!("writing {}", p.display()))?;
            m.finish(&manifest_path(p), &[p])?;
            println!("perplexity\t{}", report.perplexity);
        }
        None => print!("{}", report.to_tsv()),
    }
    Ok(())
}

fn interpret(a: &InterpretArgs) -> Outcome {
    let m = ManifestWriter::start("interpret", a, 0, &[&a.model, &a.corpus, &a.embeddings]);
    let model = AnyModel::load(&a.model)?;
    let corpus = load_corpus(&a.corpus)?;
    let loaded = load_embeddings::<f64>(&a.embeddings)?;
    let (q, units) = model.interpretability(corpus.vocab(), &loaded.table, a.top_n)?;
    let mut text = String::from("unit\tscore\tinsufficient\ttop_words\n");
    for (j, u) in units.iter().enumerate() {
        let words: Vec<&str> = u.top_words.iter().map(|&k| corpus.vocab()[k].as_str()).collect();
        text.push_str(&format!("{j}\t{}\t{}\t{}\n", u.score, u.insufficient, words.join(" ")));
    }
    text.push_str(&format!("# interpretability\t{q}\n"));
    match &a.output {
        Some(p) => {
            std::fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
            m.finish(&manifest_path(p), &[p])?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// Reject argument combinations clap cannot express.
pub fn check(cli: &Cli) -> std::result::Result<(), Failure> {
    if cli.threads == Some(0) {
        return Err(usage("--threads must be positive"));
    }
    Ok(())
}
