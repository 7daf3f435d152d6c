//! File-level helpers shared by the commands and the pipeline.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use sparsebm::corpus::{load_uci_bow, Corpus};
use sparsebm::eval::{interpretability_model, perplexity, EmbeddingTable, PerplexityOptions, PerplexityReport, UnitScore};
use sparsebm::structure::load_skeleton;
use sparsebm::{RsModel64, SbmModel64, SbmStructure};

/// `<path>.vocab`.
pub fn vocab_path(corpus: &Path) -> PathBuf {
    let mut s = corpus.as_os_str().to_owned();
    s.push(".vocab");
    PathBuf::from(s)
}

pub fn load_corpus(path: &Path) -> anyhow::Result<Corpus> {
    let loaded = load_uci_bow(path, &vocab_path(path))?;
    if loaded.dropped_empty > 0 {
        log::warn!("{}: dropped {} empty documents", path.display(), loaded.dropped_empty);
    }
    Ok(loaded.corpus)
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> anyhow::Result<()> {
    corpus.write_uci(path, &vocab_path(path))?;
    Ok(())
}

/// A trained model of either kind.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Rs(RsModel64),
    Sbm(SbmModel64),
}

impl AnyModel {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let first = text.lines().next().unwrap_or("").trim();
        if first.contains("rs-model") {
            Ok(AnyModel::Rs(RsModel64::from_text(path, &text)?))
        } else if first.contains("sbm-model") {
            Ok(AnyModel::Sbm(SbmModel64::from_text(path, &text)?))
        } else {
            bail!("{}: not a model file", path.display())
        }
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        match self {
            AnyModel::Rs(m) => m.save(path)?,
            AnyModel::Sbm(m) => m.save(path)?,
        }
        Ok(())
    }

    pub fn perplexity(&self, docs: &[sparsebm::Document], options: &PerplexityOptions) -> anyhow::Result<PerplexityReport> {
        Ok(match self {
            AnyModel::Rs(m) => perplexity(m, docs, options)?,
            AnyModel::Sbm(m) => perplexity(m, docs, options)?,
        })
    }

    pub fn interpretability(
        &self,
        vocab: &[String],
        embeddings: &EmbeddingTable<f64>,
        top_n: usize,
    ) -> anyhow::Result<(f64, Vec<UnitScore<f64>>)> {
        Ok(match self {
            AnyModel::Rs(m) => interpretability_model(m, vocab, embeddings, top_n)?,
            AnyModel::Sbm(m) => interpretability_model(m, vocab, embeddings, top_n)?,
        })
    }
}

/// A structure file, or a skeleton file read as its tree structure.
pub fn load_structure(path: &Path, k: usize) -> anyhow::Result<SbmStructure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if SbmStructure::is_structure_text(&text) {
        Ok(SbmStructure::from_text(path, &text)?)
    } else {
        Ok(load_skeleton(path, k)?.structure()?)
    }
}
