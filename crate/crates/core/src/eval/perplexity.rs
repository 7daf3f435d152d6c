//! Average per-word perplexity on held-out documents.

use std::collections::BTreeMap;

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::eval::ais::{ais_log_z, AisSchedule};
use crate::eval::exact::{exact_log_z, exact_log_z_hidden};
use crate::model::BoltzmannModel;
use crate::scalar::{ln_factorial, Scalar};

/// How `ln Z_D` is obtained for each distinct document length.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionMethod {
    Ais { schedule: AisSchedule, runs: usize, seed: u64 },
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerplexityOptions {
    pub method: PartitionMethod,
    /// Score count vectors (all token orders) instead of one token sequence.
    pub include_multinomial: bool,
}

impl PerplexityOptions {
    pub fn ais(runs: usize, seed: u64) -> Self {
        PerplexityOptions {
            method: PartitionMethod::Ais {
                schedule: AisSchedule::default_schedule(),
                runs,
                seed,
            },
            include_multinomial: false,
        }
    }

    pub fn exact() -> Self {
        PerplexityOptions {
            method: PartitionMethod::Exact,
            include_multinomial: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocScore {
    pub doc_id: usize,
    pub doc_len: usize,
    pub log_p: f64,
    pub per_word_perplexity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionEntry {
    pub doc_len: usize,
    pub log_z: f64,
    /// Zero for exact values.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerplexityReport {
    pub perplexity: f64,
    pub docs: Vec<DocScore>,
    pub partitions: Vec<PartitionEntry>,
    pub include_multinomial: bool,
}

impl PerplexityReport {
    /// Per-document TSV followed by a `#`-prefixed summary block.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("doc_id\tD\tlog_p\tper_word_ppl\n");
        for d in &self.docs {
            s.push_str(&format!("{}\t{}\t{}\t{}\n", d.doc_id, d.doc_len, d.log_p, d.per_word_perplexity));
        }
        s.push_str(&format!("# documents\t{}\n", self.docs.len()));
        s.push_str(&format!("# multinomial\t{}\n", self.include_multinomial));
        s.push_str(&format!("# perplexity\t{}\n", self.perplexity));
        for p in &self.partitions {
            s.push_str(&format!("# log_z\tD={}\t{}\tse={}\n", p.doc_len, p.log_z, p.std_error));
        }
        s
    }
}

/// `exp(-(1/N) Σ_n ln P(U_n) / D_n)`, with `ln Z_D` estimated once per
/// distinct length.
pub fn perplexity<T: Scalar, M: BoltzmannModel<T>>(
    model: &M,
    docs: &[Document],
    options: &PerplexityOptions,
) -> Result<PerplexityReport> {
    if docs.is_empty() {
        return Err(Error::arg("perplexity needs at least one document"));
    }
    if let Some(n) = docs.iter().position(Document::is_empty) {
        return Err(Error::arg(format!("document {n} is empty")));
    }
    let mut log_z = BTreeMap::new();
    for d in docs.iter().map(Document::len) {
        if log_z.contains_key(&d) {
            continue;
        }
        let entry = match &options.method {
            PartitionMethod::Ais { schedule, runs, seed } => {
                let est = ais_log_z(model, d, schedule, *runs, *seed)?;
                PartitionEntry {
                    doc_len: d,
                    log_z: est.log_z,
                    std_error: est.std_error(),
                }
            }
            PartitionMethod::Exact => PartitionEntry {
                doc_len: d,
                log_z: exact_log_z_hidden(model, d).or_else(|_| exact_log_z(model, d))?,
                std_error: 0.0,
            },
        };
        log_z.insert(d, entry);
    }
    let mut scores = Vec::with_capacity(docs.len());
    let mut acc = 0.0;
    for (doc_id, doc) in docs.iter().enumerate() {
        let d = doc.len();
        let mut log_p = model.log_unnormalized(doc).as_f64() - log_z[&d].log_z;
        if options.include_multinomial {
            log_p += ln_factorial(d as u32) - doc.iter().map(|(_, c)| ln_factorial(c)).sum::<f64>();
        }
        acc += log_p / d as f64;
        scores.push(DocScore {
            doc_id,
            doc_len: d,
            log_p,
            per_word_perplexity: (-log_p / d as f64).exp(),
        });
    }
    Ok(PerplexityReport {
        perplexity: (-acc / docs.len() as f64).exp(),
        docs: scores,
        partitions: log_z.into_values().collect(),
        include_multinomial: options.include_multinomial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replicated_softmax::RsModel;

    #[test]
    fn zero_model_perplexity_is_vocabulary_size() {
        let m = RsModel::<f64>::zeros(3, 7);
        let docs = vec![
            Document::from_counts([(0, 3), (6, 1)]),
            Document::from_counts([(2, 1)]),
            Document::from_counts([(1, 2), (3, 2), (5, 2)]),
        ];
        let opts = PerplexityOptions {
            method: PartitionMethod::Ais {
                schedule: AisSchedule::uniform(10).unwrap(),
                runs: 3,
                seed: 0,
            },
            include_multinomial: false,
        };
        let r = perplexity(&m, &docs, &opts).unwrap();
        assert!((r.perplexity - 7.0).abs() < 1e-12, "{}", r.perplexity);
        let r = perplexity(&m, &docs, &PerplexityOptions::exact()).unwrap();
        assert!((r.perplexity - 7.0).abs() < 1e-12);
        assert_eq!(r.partitions.len(), 3);
    }

    #[test]
    fn multinomial_flag_lowers_perplexity() {
        let m = RsModel::<f64>::zeros(2, 4);
        let docs = vec![Document::from_counts([(0, 1), (1, 1), (2, 1)])];
        let mut opts = PerplexityOptions::exact();
        let seq = perplexity(&m, &docs, &opts).unwrap().perplexity;
        opts.include_multinomial = true;
        let bag = perplexity(&m, &docs, &opts).unwrap().perplexity;
        // 3! orderings: ppl shrinks by 6^(1/3)
        assert!((seq / bag - 6f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_inputs() {
        let m = RsModel::<f64>::zeros(2, 4);
        assert!(perplexity(&m, &[], &PerplexityOptions::exact()).is_err());
    }

    #[test]
    fn tsv_has_header_rows_and_summary() {
        let m = RsModel::<f64>::zeros(1, 2);
        let docs = vec![Document::from_counts([(0, 1)])];
        let tsv = perplexity(&m, &docs, &PerplexityOptions::exact()).unwrap().to_tsv();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[0], "doc_id\tD\tlog_p\tper_word_ppl");
        assert!(lines[1].starts_with("0\t1\t"));
        assert!(tsv.contains("# perplexity\t"));
    }
}
