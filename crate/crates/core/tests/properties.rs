//! Property-based invariants across modules.

use std::path::Path;

use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};
use sparsebm::pruning::{prune_step, unit_counts};
use sparsebm::structure::{
    conditional_mutual_information, parse_skeleton, rand_index, sbm_sfc, ExpansionBudget, Provenance, Skeleton,
};
use sparsebm::synthetic::{generate, SyntheticConfig};
use sparsebm::{rng, BoltzmannModel, Document, RsModel64, SbmModel64, SbmStructure};

fn normals(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng::stream(seed, &[]);
    (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
}

fn joint_strategy() -> impl Strategy<Value = [[[f64; 2]; 2]; 2]> {
    proptest::collection::vec(0.0f64..10.0, 8).prop_map(|v| {
        let mut t = [[[0.0; 2]; 2]; 2];
        for (i, x) in v.into_iter().enumerate() {
            t[i >> 2][i >> 1 & 1][i & 1] = x;
        }
        t
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cmi_is_nonnegative_and_symmetric(t in joint_strategy()) {
        let c = conditional_mutual_information(&t);
        prop_assert!(c >= -1e-12);
        let mut swapped = t;
        for z in 0..2 { for o in 0..2 { for zp in 0..2 { swapped[o][z][zp] = t[z][o][zp]; } } }
        prop_assert!((conditional_mutual_information(&swapped) - c).abs() < 1e-10);
        // relabeling the states of any variable changes nothing
        let mut flipped = t;
        for z in 0..2 { for o in 0..2 { for zp in 0..2 { flipped[1 - z][o][1 - zp] = t[z][o][zp]; } } }
        prop_assert!((conditional_mutual_information(&flipped) - c).abs() < 1e-10);
    }

    #[test]
    fn cmi_vanishes_for_product_tables(p in proptest::collection::vec(0.05f64..1.0, 2..=2),
                                       q in proptest::collection::vec(0.05f64..1.0, 2..=2),
                                       r in 0.05f64..0.95) {
        // z and o independent within each slice z'
        let mut t = [[[0.0; 2]; 2]; 2];
        for zp in 0..2 {
            let w = if zp == 0 { r } else { 1.0 - r };
            for z in 0..2 { for o in 0..2 {
                let pz = if z == 1 { p[zp] } else { 1.0 - p[zp] };
                let po = if o == 1 { q[zp] } else { 1.0 - q[zp] };
                t[z][o][zp] = w * pz * po;
            } }
        }
        prop_assert!(conditional_mutual_information(&t).abs() < 1e-12);
    }

    #[test]
    fn rand_index_ignores_label_names(labels in proptest::collection::vec(0usize..4, 2..30), shift in 1usize..10) {
        let renamed: Vec<usize> = labels.iter().map(|l| (l + shift) * 7).collect();
        prop_assert_eq!(rand_index(&labels, &renamed), 1.0);
        let other: Vec<usize> = labels.iter().enumerate().map(|(i, l)| (i + l) % 3).collect();
        prop_assert!((rand_index(&labels, &other) - rand_index(&other, &labels)).abs() < 1e-15);
    }

    #[test]
    fn prune_step_keeps_top_magnitudes(seed in 0u64..1000, f in 1usize..4, k in 2usize..8, keep_frac in 0.1f64..1.0) {
        let mut m = RsModel64::from_parts(f, k, normals(seed, f * k), vec![0.0; f], vec![0.0; k]).unwrap();
        let before = m.clone();
        let keep = ((keep_frac * k as f64).ceil() as usize).clamp(1, k);
        prune_step(&mut m, keep).unwrap();
        prop_assert!(unit_counts(&m).iter().all(|&c| c == keep));
        for j in 0..f {
            let kept: Vec<f64> = (0..k).filter(|&v| m.mask().unwrap().is_kept(j, v)).map(|v| before.weight(j, v).abs()).collect();
            let dropped: Vec<f64> = (0..k).filter(|&v| !m.mask().unwrap().is_kept(j, v)).map(|v| before.weight(j, v).abs()).collect();
            let min_kept = kept.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert!(dropped.iter().all(|&d| d <= min_kept));
            for v in 0..k {
                let expect = if m.mask().unwrap().is_kept(j, v) { before.weight(j, v) } else { 0.0 };
                prop_assert_eq!(m.weight(j, v), expect);
            }
        }
    }

    #[test]
    fn skeleton_text_round_trips(seed in 0u64..1000, k in 2usize..15, f in 1usize..5) {
        let f = f.min(k);
        let groups: Vec<Vec<usize>> = (0..f).map(|j| (j..k).step_by(f).collect()).collect();
        let order = normals(seed, f);
        let tree: Vec<(usize, usize)> = (1..f).filter(|&i| order[i] > -0.5).map(|i| ((i as f64 * order[i].abs()) as usize % i, i)).collect();
        let s = Skeleton::new(k, groups, tree, Provenance::Built).unwrap();
        let back = parse_skeleton(Path::new("s"), &s.to_text(), k).unwrap();
        prop_assert_eq!(back.groups(), s.groups());
        prop_assert_eq!(back.tree_edges(), s.tree_edges());
        prop_assert_eq!(back.provenance(), Provenance::Loaded);
    }

    #[test]
    fn sbm_text_round_trips_exactly(seed in 0u64..1000) {
        let s = SbmStructure::new(3, 4, vec![(0, 0), (0, 3), (1, 1), (2, 2), (2, 3)], &[(0, 2), (1, 2)]).unwrap();
        let p = normals(seed, 5 + 2 + 3 + 4);
        let m = SbmModel64::from_parts(s, p[..5].to_vec(), p[5..7].to_vec(), p[7..10].to_vec(), p[10..].to_vec()).unwrap();
        let back = SbmModel64::from_text(Path::new("m"), &m.to_text()).unwrap();
        prop_assert_eq!(back.params(), m.params());
        prop_assert_eq!(back.structure(), m.structure());
    }

    #[test]
    fn log_unnormalized_is_permutation_free(seed in 0u64..1000, counts in proptest::collection::vec(0u32..4, 5)) {
        prop_assume!(counts.iter().any(|&c| c > 0));
        let m = RsModel64::from_parts(2, 5, normals(seed, 10), normals(seed + 1, 2), normals(seed + 2, 5)).unwrap();
        let a = Document::from_dense(&counts);
        let b = Document::from_counts(counts.iter().enumerate().rev().filter(|p| *p.1 > 0).map(|(k, &c)| (k, c)));
        prop_assert_eq!(m.log_unnormalized(&a), m.log_unnormalized(&b));
    }
}

#[test]
fn expansion_budgets_nest() {
    let syn = generate(
        &SyntheticConfig {
            vocab_size: 20,
            n_groups: 4,
            n_docs: 200,
            ..SyntheticConfig::default()
        },
        2,
    )
    .unwrap();
    let skeleton = Skeleton::new(20, syn.groups.clone(), vec![(0, 1), (1, 2), (2, 3)], Provenance::Loaded).unwrap();
    let s = skeleton.structure().unwrap();
    let p = normals(5, s.visible_edges().len() + 3 + 4 + 20);
    let ne = s.visible_edges().len();
    let tree = SbmModel64::from_parts(s, p[..ne].to_vec(), p[ne..ne + 3].to_vec(), p[ne + 3..ne + 7].to_vec(), p[ne + 7..].to_vec()).unwrap();
    let mut previous: Option<SbmStructure> = None;
    for m in 0..=4 {
        let ex = sbm_sfc(&skeleton, &tree, &syn.corpus, &ExpansionBudget::per_unit(m)).unwrap();
        assert!(ex.added.iter().all(|&a| a == m));
        for j in 0..4 {
            assert_eq!(ex.structure.degree(j), skeleton.groups()[j].len() + m);
            let top = ex.table.top(j, m);
            assert!(top.iter().all(|&v| ex.structure.has_visible_edge(j, v)));
        }
        if let Some(prev) = &previous {
            assert!(prev.visible_edges().iter().all(|&(j, v)| ex.structure.has_visible_edge(j, v)));
        }
        assert_eq!(ex.structure.tree_edges(), skeleton.tree_edges());
        previous = Some(ex.structure);
    }
}
