//! End-to-end pipeline driven by a TOML config.
//!
//! Stages write their artifacts into the output directory next to a `.key`
//! file holding a hash of the stage config and its upstream keys. A stage
//! whose key file matches and whose artifacts exist is loaded, not rerun.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sparsebm::corpus::{load_uci_bow, select_vocab, split_corpus, VocabMethod};
use sparsebm::eval::{load_embeddings, PartitionMethod, PerplexityOptions, PerplexityReport};
use sparsebm::pruning::{prune_and_retrain, unit_counts, PruneConfig};
use sparsebm::structure::{build_skeleton, load_skeleton, rand_index, sbm_sfc, Budget, ExpansionBudget, Skeleton, SkeletonConfig};
use sparsebm::synthetic::{generate, SyntheticConfig, SyntheticCorpus};
use sparsebm::train::{train_rs, train_sbm};
use sparsebm::{BoltzmannModel, Corpus, RsModel64, SbmModel64, SbmStructure, TrainConfig};

use crate::commands::parse_schedule;
use crate::manifest::{hex, ManifestWriter};
use crate::models::{load_corpus, save_corpus, AnyModel};

/// Bumped when a stage's output format or algorithm changes.
const CACHE_VERSION: u32 = 1;

pub const MODEL_NAMES: [&str; 4] = ["rs", "rs_sfc", "rs_pruned", "sbm_sfc"];

fn display_name(model: &str) -> &'static str {
    match model {
        "rs" => "RS+",
        "rs_sfc" => "RS+ SFC",
        "rs_pruned" => "RS+ Pruned",
        _ => "SBM-SFC",
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Relative paths resolve against the config file's directory.
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    pub corpus: CorpusSection,
    #[serde(default)]
    pub skeleton: SkeletonSection,
    #[serde(default)]
    pub expand: ExpandSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub prune: PruneSection,
    #[serde(default)]
    pub eval: EvalSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    /// "synthetic" or "uci".
    pub source: String,
    pub docword: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub vocab_size: Option<usize>,
    #[serde(default = "default_method")]
    pub method: String,
    /// Synthetic only.
    pub groups: Option<usize>,
    /// Training documents [default: remainder].
    pub train: Option<usize>,
    #[serde(default)]
    pub validation: usize,
    pub test: usize,
}

fn default_method() -> String {
    "frequency".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SkeletonSection {
    pub island_max: usize,
    pub supergroup_max: usize,
    pub mi_floor: Option<f64>,
    pub min_nmi: f64,
}

impl Default for SkeletonSection {
    fn default() -> Self {
        let c = SkeletonConfig::default();
        SkeletonSection {
            island_max: c.island_max,
            supergroup_max: c.supergroup_max,
            mi_floor: c.mi_floor,
            min_nmi: c.supergroup_min_nmi,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpandSection {
    pub fraction: Option<f64>,
    pub per_unit: Option<usize>,
    /// `(unit, M)` pairs.
    pub overrides: Vec<(usize, usize)>,
}

impl Default for ExpandSection {
    fn default() -> Self {
        ExpandSection {
            fraction: Some(0.2),
            per_unit: None,
            overrides: Vec::new(),
        }
    }
}

impl ExpandSection {
    fn budget(&self) -> anyhow::Result<ExpansionBudget> {
        let default = match (self.fraction, self.per_unit) {
            (Some(_), Some(_)) => bail!("expand: set fraction or per_unit, not both"),
            (_, Some(m)) => Budget::PerUnit(m),
            (Some(f), None) => Budget::Fraction(f),
            (None, None) => Budget::Fraction(0.2),
        };
        Ok(ExpansionBudget {
            default,
            overrides: self.overrides.clone(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: usize,
    pub cd_steps: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub weight_init_std: f64,
    pub init_visible_from_frequencies: bool,
    pub mean_field_final: bool,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let c = TrainConfig::default();
        TrainSection {
            epochs: c.epochs,
            cd_steps: c.cd_steps,
            learning_rate: c.learning_rate,
            batch_size: c.batch_size,
            weight_init_std: c.weight_init_std,
            init_visible_from_frequencies: c.init_visible_from_frequencies,
            mean_field_final: c.mean_field_final,
            momentum: c.momentum,
            weight_decay: c.weight_decay,
        }
    }
}

impl TrainSection {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            cd_steps: self.cd_steps,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            seed,
            weight_init_std: self.weight_init_std,
            init_visible_from_frequencies: self.init_visible_from_frequencies,
            mean_field_final: self.mean_field_final,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PruneSection {
    /// Final connections per unit as a fraction of K, rounded up.
    pub target_fraction: f64,
    pub prune_fraction: f64,
    pub retrain_epochs: usize,
}

impl Default for PruneSection {
    fn default() -> Self {
        PruneSection {
            target_fraction: 0.2,
            prune_fraction: 0.2,
            retrain_epochs: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    /// "ais" or "exact".
    pub method: String,
    pub ais_runs: usize,
    pub schedule: String,
    pub multinomial: bool,
    pub models: Vec<String>,
    /// Word embeddings for the interpretability column.
    pub embeddings: Option<PathBuf>,
    pub top_n: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            method: "ais".into(),
            ais_runs: 100,
            schedule: "default".into(),
            multinomial: false,
            models: MODEL_NAMES.iter().map(|s| s.to_string()).collect(),
            embeddings: None,
            top_n: 10,
        }
    }
}

impl EvalSection {
    fn options(&self, seed: u64) -> anyhow::Result<PerplexityOptions> {
        let method = match self.method.as_str() {
            "exact" => PartitionMethod::Exact,
            "ais" => PartitionMethod::Ais {
                schedule: parse_schedule(&self.schedule).map_err(|_| anyhow!("eval: bad schedule {:?}", self.schedule))?,
                runs: self.ais_runs,
                seed,
            },
            other => bail!("eval: unknown method {other:?}; use ais or exact"),
        };
        Ok(PerplexityOptions {
            method,
            include_multinomial: self.multinomial,
        })
    }
}

impl PipelineConfig {
    pub fn parse(text: &str, base: &Path) -> anyhow::Result<Self> {
        let mut c: PipelineConfig = toml::from_str(text)?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut c.output_dir);
        c.corpus.docword.as_mut().map(resolve);
        c.corpus.vocab.as_mut().map(resolve);
        c.eval.embeddings.as_mut().map(resolve);
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).with_context(|| format!("{}", path.display()))
    }

    /// Check everything that can be checked before any stage runs.
    pub fn validate(&self) -> anyhow::Result<()> {
        let c = &self.corpus;
        match c.source.as_str() {
            "synthetic" => {
                if c.docword.is_some() || c.vocab.is_some() {
                    bail!("corpus: docword and vocab apply only to source = \"uci\"");
                }
                if c.train.is_none() {
                    bail!("corpus: synthetic source needs train");
                }
            }
            "uci" => {
                for (name, p) in [("docword", &c.docword), ("vocab", &c.vocab)] {
                    let p = p.as_ref().ok_or_else(|| anyhow!("corpus: uci source needs {name}"))?;
                    if !p.is_file() {
                        bail!("corpus: {name} file {} does not exist", p.display());
                    }
                }
                if c.groups.is_some() {
                    bail!("corpus: groups applies only to source = \"synthetic\"");
                }
            }
            other => bail!("corpus: unknown source {other:?}; use synthetic or uci"),
        }
        c.method.parse::<VocabMethod>()?;
        if c.test == 0 {
            bail!("corpus: test must be positive");
        }
        self.expand.budget()?;
        if let Some(f) = self.expand.fraction {
            if !(0.0..=1.0).contains(&f) {
                bail!("expand: fraction {f} outside [0, 1]");
            }
        }
        self.train.config(self.seed).validate()?;
        let p = &self.prune;
        if !(p.target_fraction > 0.0 && p.target_fraction <= 1.0) {
            bail!("prune: target_fraction {} outside (0, 1]", p.target_fraction);
        }
        if !(p.prune_fraction > 0.0 && p.prune_fraction < 1.0) {
            bail!("prune: prune_fraction {} outside (0, 1)", p.prune_fraction);
        }
        if p.retrain_epochs == 0 {
            bail!("prune: retrain_epochs must be positive");
        }
        self.eval.options(self.seed)?;
        if self.eval.models.is_empty() {
            bail!("eval: models is empty");
        }
        for m in &self.eval.models {
            if !MODEL_NAMES.contains(&m.as_str()) {
                bail!("eval: unknown model {m:?}; expected one of {MODEL_NAMES:?}");
            }
        }
        if let Some(e) = &self.eval.embeddings {
            if !e.is_file() {
                bail!("eval: embeddings file {} does not exist", e.display());
            }
        }
        Ok(())
    }

    fn wants(&self, model: &str) -> bool {
        self.eval.models.iter().any(|m| m == model)
    }
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub model: String,
    pub hidden: usize,
    /// Hidden-visible connections.
    pub connections: usize,
    pub perplexity: f64,
    pub interpretability: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub rows: Vec<ResultRow>,
    /// Rand index of the skeleton against the planted groups (synthetic only).
    pub skeleton_rand_index: Option<f64>,
    pub table: String,
    pub output_dir: PathBuf,
}

impl PipelineOutput {
    pub fn perplexity(&self, model: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.model == model).map(|r| r.perplexity)
    }
}

/// Text of a synthetic ground truth: group lines then planted words.
pub fn groups_text(syn: &SyntheticCorpus) -> String {
    let mut s = String::new();
    for (i, g) in syn.groups.iter().enumerate() {
        let words: Vec<String> = g.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "{i}: {}", words.join(" "));
    }
    for &(t, w) in &syn.planted {
        let _ = writeln!(s, "planted {t} {w}");
    }
    s
}

fn parse_labels(text: &str, k: usize) -> anyhow::Result<Vec<usize>> {
    let mut labels = vec![usize::MAX; k];
    for line in text.lines().filter(|l| !l.starts_with("planted")) {
        let (g, words) = line.split_once(':').ok_or_else(|| anyhow!("bad groups line {line:?}"))?;
        let g: usize = g.trim().parse()?;
        for w in words.split_whitespace() {
            let v: usize = w.parse()?;
            *labels.get_mut(v).ok_or_else(|| anyhow!("word {v} out of range"))? = g;
        }
    }
    if labels.contains(&usize::MAX) {
        bail!("groups file does not label every word");
    }
    Ok(labels)
}

fn stage_key<C: Serialize>(stage: &str, config: &C, upstream: &[&str]) -> String {
    let json = serde_json::json!({
        "version": CACHE_VERSION,
        "stage": stage,
        "config": config,
        "upstream": upstream,
    });
    hex(&Sha256::digest(json.to_string().as_bytes()))
}

struct Stages<'a> {
    dir: &'a Path,
}

impl Stages<'_> {
    fn key_path(&self, stage: &str) -> PathBuf {
        self.dir.join(format!("{stage}.key"))
    }

    fn cached(&self, stage: &str, key: &str, artifacts: &[&str]) -> bool {
        std::fs::read_to_string(self.key_path(stage)).is_ok_and(|k| k.trim() == key)
            && artifacts.iter().all(|a| self.dir.join(a).is_file())
    }

    /// Run `compute` unless cached, then `load` the artifacts.
    fn run<T>(
        &self,
        stage: &str,
        key: &str,
        artifacts: &[&str],
        compute: impl FnOnce() -> anyhow::Result<()>,
        load: impl FnOnce() -> anyhow::Result<T>,
    ) -> anyhow::Result<T> {
        let go = || -> anyhow::Result<T> {
            if self.cached(stage, key, artifacts) {
                log::info!("stage {stage}: cached");
            } else {
                log::info!("stage {stage}: running");
                let _ = std::fs::remove_file(self.key_path(stage));
                compute()?;
                std::fs::write(self.key_path(stage), format!("{key}\n"))?;
            }
            load()
        };
        go().with_context(|| format!("stage {stage} failed"))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

struct Data {
    train: Corpus,
    test: Corpus,
    labels: Option<Vec<usize>>,
}

fn corpus_stage(config: &PipelineConfig, st: &Stages, key: &str) -> anyhow::Result<Data> {
    let c = &config.corpus;
    let synthetic = c.source == "synthetic";
    let mut artifacts = vec!["train.bow", "validation.bow", "test.bow", "split.txt"];
    if synthetic {
        artifacts.push("groups.txt");
    }
    st.run(
        "corpus",
        key,
        &artifacts,
        || {
            let (corpus, groups) = if synthetic {
                let n = c.train.unwrap_or(0) + c.validation + c.test;
                let mut sc = SyntheticConfig {
                    n_docs: n,
                    ..SyntheticConfig::default()
                };
                if let Some(k) = c.vocab_size {
                    sc.vocab_size = k;
                }
                if let Some(g) = c.groups {
                    sc.n_groups = g;
                }
                let syn = generate(&sc, config.seed)?;
                let text = groups_text(&syn);
                (syn.corpus, Some(text))
            } else {
                let loaded = load_uci_bow(c.docword.as_deref().unwrap(), c.vocab.as_deref().unwrap())?;
                let mut corpus = loaded.corpus;
                if let Some(k) = c.vocab_size {
                    corpus = select_vocab(&corpus, k, c.method.parse()?)?.corpus;
                }
                (corpus, None)
            };
            let n_train = match c.train {
                Some(t) => t,
                None => corpus
                    .len()
                    .checked_sub(c.validation + c.test)
                    .ok_or_else(|| anyhow!("validation + test exceeds {} documents", corpus.len()))?,
            };
            let split = split_corpus(&corpus, config.seed, n_train, c.validation, c.test)?;
            save_corpus(&split.train, &st.path("train.bow"))?;
            save_corpus(&split.validation, &st.path("validation.bow"))?;
            save_corpus(&split.test, &st.path("test.bow"))?;
            std::fs::write(st.path("split.txt"), split.manifest())?;
            if let Some(text) = groups {
                std::fs::write(st.path("groups.txt"), text)?;
            }
            Ok(())
        },
        || {
            let train = load_corpus(&st.path("train.bow"))?;
            let test = load_corpus(&st.path("test.bow"))?;
            let labels = if synthetic {
                Some(parse_labels(&std::fs::read_to_string(st.path("groups.txt"))?, train.vocab_size())?)
            } else {
                None
            };
            Ok(Data { train, test, labels })
        },
    )
}

fn save_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn rs_row(m: &RsModel64) -> (usize, usize) {
    (m.n_hidden(), unit_counts(m).iter().sum())
}

fn sbm_row(m: &SbmModel64) -> (usize, usize) {
    let s = m.structure();
    (s.n_hidden(), s.visible_edges().len())
}

/// Run every stage the config asks for and write `results.tsv`.
pub fn run(config: &PipelineConfig) -> anyhow::Result<PipelineOutput> {
    config.validate()?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let manifest = ManifestWriter::start("pipeline", config, config.seed, &[]);
    let st = Stages { dir };
    let seed = config.seed;
    let train_cfg = config.train.config(seed);

    let corpus_key = stage_key("corpus", &(&config.corpus, seed), &[]);
    let data = corpus_stage(config, &st, &corpus_key)?;
    let k = data.train.vocab_size();

    let skeleton_key = stage_key("skeleton", &config.skeleton, &[&corpus_key]);
    let skeleton: Skeleton = st.run(
        "skeleton",
        &skeleton_key,
        &["skeleton.txt"],
        || {
            let s = &config.skeleton;
            let cfg = SkeletonConfig {
                island_max: s.island_max,
                supergroup_max: s.supergroup_max,
                mi_floor: s.mi_floor,
                supergroup_min_nmi: s.min_nmi,
            };
            Ok(build_skeleton(&data.train, &cfg)?.save(&st.path("skeleton.txt"))?)
        },
        || Ok(load_skeleton(&st.path("skeleton.txt"), k)?),
    )?;
    let f = skeleton.n_hidden();

    let mut models: Vec<(String, String, AnyModel)> = Vec::new();
    let train_key_cfg = (&config.train, seed);

    let needs_sfc = config.wants("sbm_sfc") || config.wants("rs_sfc");
    if needs_sfc {
        let tree_key = stage_key("tree", &train_key_cfg, &[&skeleton_key]);
        let tree: SbmModel64 = st.run(
            "tree",
            &tree_key,
            &["tree.model"],
            || Ok(train_sbm::<f64>(&data.train, skeleton.structure()?, &train_cfg)?.save(&st.path("tree.model"))?),
            || Ok(SbmModel64::load(&st.path("tree.model"))?),
        )?;
        let expand_key = stage_key("expand", &config.expand, &[&tree_key]);
        let structure: SbmStructure = st.run(
            "expand",
            &expand_key,
            &["structure.txt", "cmi.tsv"],
            || {
                let ex = sbm_sfc(&skeleton, &tree, &data.train, &config.expand.budget()?)?;
                ex.structure.save(&st.path("structure.txt"))?;
                save_text(&st.path("cmi.tsv"), &ex.table.to_tsv())
            },
            || Ok(SbmStructure::load(&st.path("structure.txt"))?),
        )?;
        for (name, s) in [("sbm_sfc", structure.clone()), ("rs_sfc", structure.without_tree())] {
            if !config.wants(name) {
                continue;
            }
            let key = stage_key(name, &train_key_cfg, &[&expand_key]);
            let file = format!("{name}.model");
            let m: SbmModel64 = st.run(
                name,
                &key,
                &[&file],
                || Ok(train_sbm::<f64>(&data.train, s, &train_cfg)?.save(&st.path(&file))?),
                || Ok(SbmModel64::load(&st.path(&file))?),
            )?;
            models.push((name.into(), key, AnyModel::Sbm(m)));
        }
    }

    if config.wants("rs") || config.wants("rs_pruned") {
        let rs_key = stage_key("rs", &(train_key_cfg, f), &[&corpus_key]);
        let rs: RsModel64 = st.run(
            "rs",
            &rs_key,
            &["rs.model"],
            || Ok(train_rs::<f64>(&data.train, f, &train_cfg)?.save(&st.path("rs.model"))?),
            || Ok(RsModel64::load(&st.path("rs.model"))?),
        )?;
        if config.wants("rs_pruned") {
            let key = stage_key("rs_pruned", &(&config.prune, train_key_cfg), &[&rs_key]);
            let pruned: RsModel64 = st.run(
                "rs_pruned",
                &key,
                &["rs_pruned.model", "prune.tsv"],
                || {
                    let p = &config.prune;
                    let pc = PruneConfig {
                        target_per_unit: (p.target_fraction * k as f64).ceil() as usize,
                        prune_fraction: p.prune_fraction,
                        retrain_epochs_per_iter: p.retrain_epochs,
                        train: train_cfg.clone(),
                    };
                    let out = prune_and_retrain(rs.clone(), &data.train, &pc)?;
                    out.model.save(&st.path("rs_pruned.model"))?;
                    save_text(&st.path("prune.tsv"), &out.log_tsv())
                },
                || Ok(RsModel64::load(&st.path("rs_pruned.model"))?),
            )?;
            models.push(("rs_pruned".into(), key, AnyModel::Rs(pruned)));
        }
        if config.wants("rs") {
            models.push(("rs".into(), rs_key, AnyModel::Rs(rs)));
        }
    }

    let embeddings = match &config.eval.embeddings {
        Some(p) => Some(load_embeddings::<f64>(p)?.table),
        None => None,
    };
    let options = config.eval.options(seed)?;
    let mut rows = Vec::new();
    for name in MODEL_NAMES {
        let Some((_, model_key, model)) = models.iter().find(|m| m.0 == name) else {
            continue;
        };
        let stage = format!("eval_{name}");
        let file = format!("{stage}.tsv");
        let key = stage_key(&stage, &config.eval, &[&corpus_key, model_key]);
        let report: f64 = st.run(
            &stage,
            &key,
            &[&file],
            || {
                let r: PerplexityReport = model.perplexity(data.test.docs(), &options)?;
                save_text(&st.path(&file), &r.to_tsv())
            },
            || read_perplexity(&st.path(&file)),
        )?;
        let (hidden, connections) = match model {
            AnyModel::Rs(m) => rs_row(m),
            AnyModel::Sbm(m) => sbm_row(m),
        };
        let interpretability = match &embeddings {
            Some(e) => Some(model.interpretability(data.train.vocab(), e, config.eval.top_n)?.0),
            None => None,
        };
        rows.push(ResultRow {
            model: name.into(),
            hidden,
            connections,
            perplexity: report,
            interpretability,
        });
    }

    let skeleton_rand_index = data.labels.as_ref().map(|l| rand_index(skeleton.labels(), l));
    let table = results_table(&rows, skeleton_rand_index, &skeleton, k);
    let results = st.path("results.tsv");
    save_text(&results, &table)?;
    manifest.finish(&st.path("pipeline.manifest.json"), &[&results])?;
    Ok(PipelineOutput {
        rows,
        skeleton_rand_index,
        table,
        output_dir: dir.clone(),
    })
}

fn read_perplexity(path: &Path) -> anyhow::Result<f64> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .find_map(|l| l.strip_prefix("# perplexity\t"))
        .ok_or_else(|| anyhow!("{}: no perplexity line", path.display()))?
        .trim()
        .parse()
        .map_err(Into::into)
}

fn results_table(rows: &[ResultRow], rand: Option<f64>, skeleton: &Skeleton, k: usize) -> String {
    let mut s = String::from("model\thidden\tconnections\tperplexity");
    let interp = rows.iter().any(|r| r.interpretability.is_some());
    if interp {
        s.push_str("\tinterpretability");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(s, "{}\t{}\t{}\t{:.4}", display_name(&r.model), r.hidden, r.connections, r.perplexity);
        if let Some(q) = r.interpretability {
            let _ = write!(s, "\t{q:.4}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "# vocabulary\t{k}");
    let _ = writeln!(s, "# skeleton_units\t{}", skeleton.n_hidden());
    if let Some(r) = rand {
        let _ = writeln!(s, "# skeleton_rand_index\t{r:.4}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(extra: &str) -> String {
        format!("output_dir = \"out\"\n[corpus]\nsource = \"synthetic\"\ntrain = 40\ntest = 10\n{extra}")
    }

    #[test]
    fn defaults_fill_in() {
        let c = PipelineConfig::parse(&config(""), Path::new("/tmp/x")).unwrap();
        assert_eq!(c.output_dir, Path::new("/tmp/x/out"));
        assert_eq!(c.eval.ais_runs, 100);
        assert_eq!(c.eval.models.len(), 4);
        assert_eq!(c.prune.target_fraction, 0.2);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = Path::new("/tmp");
        assert!(PipelineConfig::parse(&config("bogus = 1\n"), base).is_err());
        assert!(PipelineConfig::parse(&config("[eval]\nmethod = \"guess\"\n"), base).is_err());
        assert!(PipelineConfig::parse(&config("[eval]\nmodels = [\"lda\"]\n"), base).is_err());
        assert!(PipelineConfig::parse(&config("[prune]\ntarget_fraction = 0.0\n"), base).is_err());
        let uci = "output_dir = \"o\"\n[corpus]\nsource = \"uci\"\ndocword = \"/nonexistent/docword.txt\"\nvocab = \"/nonexistent/vocab.txt\"\ntest = 5\n";
        let err = PipelineConfig::parse(uci, base).unwrap_err();
        assert!(format!("{err:#}").contains("does not exist"), "{err:#}");
    }

    #[test]
    fn stage_keys_depend_on_config_and_upstream() {
        let a = stage_key("s", &1, &["u"]);
        assert_eq!(a, stage_key("s", &1, &["u"]));
        assert_ne!(a, stage_key("s", &2, &["u"]));
        assert_ne!(a, stage_key("s", &1, &["v"]));
        assert_ne!(a, stage_key("t", &1, &["u"]));
    }

    #[test]
    fn groups_round_trip() {
        let syn = generate(
            &SyntheticConfig {
                n_docs: 5,
                ..SyntheticConfig::default()
            },
            1,
        )
        .unwrap();
        let labels = parse_labels(&groups_text(&syn), 60).unwrap();
        assert_eq!(labels, syn.labels);
    }
}
