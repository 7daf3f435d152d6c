//! Cross-checks between independent ways of computing the same quantity.

use rand_distr::{Distribution, StandardNormal};
use sparsebm::eval::{exact_log_prob, exact_log_z, exact_log_z_hidden, perplexity, PerplexityOptions};
use sparsebm::structure::{cmi_table, estimate_cmi, Provenance, Skeleton};
use sparsebm::synthetic::{generate, SyntheticConfig};
use sparsebm::{rng, BoltzmannModel, Corpus, Document, RsModel32, RsModel64, SbmModel64, SbmStructure};

fn normals(r: &mut rng::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(&mut *r)).collect()
}

fn rs(seed: u64, f: usize, k: usize) -> RsModel64 {
    let mut r = rng::stream(seed, &[]);
    RsModel64::from_parts(f, k, normals(&mut r, f * k), normals(&mut r, f), normals(&mut r, k)).unwrap()
}

fn sbm(seed: u64) -> SbmModel64 {
    let mut r = rng::stream(seed, &[]);
    let s = SbmStructure::new(3, 3, vec![(0, 0), (0, 2), (1, 1), (2, 0), (2, 1)], &[(0, 1), (1, 2)]).unwrap();
    let w = normals(&mut r, 5);
    let wt = normals(&mut r, 2);
    SbmModel64::from_parts(s, w, wt, normals(&mut r, 3), normals(&mut r, 3)).unwrap()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln Z_D` by brute force over every token sequence and hidden state.
fn token_level_log_z<M: BoltzmannModel<f64>>(model: &M, d: usize) -> f64 {
    let (f, k) = (model.n_hidden(), model.n_visible());
    let mut terms = Vec::new();
    for seq in 0..k.pow(d as u32) {
        let mut counts = vec![0u32; k];
        let mut s = seq;
        for _ in 0..d {
            counts[s % k] += 1;
            s /= k;
        }
        let doc = Document::from_dense(&counts);
        for bits in 0..1usize << f {
            let h: Vec<bool> = (0..f).map(|j| bits >> j & 1 == 1).collect();
            terms.push(-model.energy(&doc, &h).unwrap());
        }
    }
    log_sum_exp(&terms)
}

#[test]
fn three_partition_functions_agree() {
    for seed in 0..5 {
        let m = rs(seed, 3, 3);
        for d in 1..=3 {
            let brute = token_level_log_z(&m, d);
            assert!((exact_log_z(&m, d).unwrap() - brute).abs() < 1e-10);
            assert!((exact_log_z_hidden(&m, d).unwrap() - brute).abs() < 1e-10);
        }
        let m = sbm(seed);
        for d in 1..=3 {
            let brute = token_level_log_z(&m, d);
            assert!((exact_log_z(&m, d).unwrap() - brute).abs() < 1e-10);
            assert!((exact_log_z_hidden(&m, d).unwrap() - brute).abs() < 1e-10);
        }
    }
}

#[test]
fn sequence_probabilities_sum_to_one() {
    let m = sbm(11);
    let mut total = 0.0;
    for seq in 0..27usize {
        let counts = [seq % 3, seq / 3 % 3, seq / 9].iter().fold(vec![0u32; 3], |mut c, &v| {
            c[v] += 1;
            c
        });
        total += exact_log_prob(&m, &Document::from_dense(&counts)).unwrap().exp();
    }
    assert!((total - 1.0).abs() < 1e-12, "{total}");
}

#[test]
fn exact_perplexity_matches_direct_formula() {
    let m = rs(3, 2, 4);
    let docs = vec![
        Document::from_counts([(0, 2), (3, 1)]),
        Document::from_counts([(1, 1)]),
        Document::from_counts([(2, 2), (0, 2)]),
    ];
    let report = perplexity(&m, &docs, &PerplexityOptions::exact()).unwrap();
    let mean: f64 = docs
        .iter()
        .map(|d| exact_log_prob(&m, d).unwrap() / d.len() as f64)
        .sum::<f64>()
        / docs.len() as f64;
    assert!((report.perplexity - (-mean).exp()).abs() < 1e-10);
}

#[test]
fn single_and_double_precision_agree() {
    let m64 = rs(5, 4, 6);
    let text = m64.to_text();
    let m32 = RsModel32::from_text(std::path::Path::new("m"), &text).unwrap();
    let doc = Document::from_counts([(0, 3), (4, 2), (5, 1)]);
    let a = m64.log_unnormalized(&doc);
    let b = m32.log_unnormalized(&doc) as f64;
    assert!((a - b).abs() < 1e-4 * a.abs().max(1.0), "{a} vs {b}");
}

#[test]
fn cmi_table_matches_pairwise_estimates() {
    let corpus: Corpus = generate(
        &SyntheticConfig {
            vocab_size: 12,
            n_groups: 3,
            n_docs: 60,
            planted: vec![(0, 1)],
            ..SyntheticConfig::default()
        },
        4,
    )
    .unwrap()
    .corpus;
    let groups = vec![vec![0, 3, 6, 9], vec![1, 4, 7, 10], vec![2, 5, 8, 11]];
    // a path and a forest: adjacent pairs and pairs needing two clamps
    for tree in [vec![(0, 1), (1, 2)], vec![(0, 2)]] {
        let skeleton = Skeleton::new(12, groups.clone(), tree, Provenance::Loaded).unwrap();
        let s = skeleton.structure().unwrap();
        let mut r = rng::stream(9, &[]);
        let (ne, nt) = (s.visible_edges().len(), s.tree_edges().len());
        let model =
            SbmModel64::from_parts(s, normals(&mut r, ne), normals(&mut r, nt), normals(&mut r, 3), normals(&mut r, 12))
                .unwrap();
        let table = cmi_table(&model, &skeleton, &corpus).unwrap();
        for (j, row) in table.scores.iter().enumerate() {
            assert_eq!(row.len(), 8);
            for &(v, score) in row {
                let direct = estimate_cmi(&model, &skeleton, &corpus, j, v).unwrap();
                assert!((score - direct).abs() < 1e-10, "unit {j} word {v}: {score} vs {direct}");
            }
            assert!(row.windows(2).all(|w| w[0].1 >= w[1].1));
        }
    }
}

#[test]
fn cmi_rejects_pairs_inside_a_group() {
    let corpus = Corpus::with_anonymous_vocab("c", 2, vec![Document::from_counts([(0, 1)])]).unwrap();
    let skeleton = Skeleton::new(2, vec![vec![0], vec![1]], vec![], Provenance::Loaded).unwrap();
    let model = SbmModel64::zeros(skeleton.structure().unwrap());
    assert!(estimate_cmi(&model, &skeleton, &corpus, 0, 0).is_err());
    assert!(estimate_cmi(&model, &skeleton, &corpus, 0, 1).unwrap().abs() < 1e-12);
}
