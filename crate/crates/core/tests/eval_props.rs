mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng as _;

use common::{kb_shape, random_kb};
use tcf_core::analysis::{correlations, value_distributions, LanguageFilter};
use tcf_core::baselines::{Distance, FreqModel, KnnModel};
use tcf_core::binarize::{binarize, GroupKind};
use tcf_core::embeddings::LanguageEmbeddingTable;
use tcf_core::eval::{decode_argmax, score, ProbMatrix};
use tcf_core::kb::TypologicalKb;
use tcf_core::rng;
use tcf_core::split::Pair;

fn observed_pairs(kb: &TypologicalKb) -> Vec<Pair> {
    kb.cells()
        .map(|(l, f, _)| (l.to_owned(), f.to_owned()))
        .collect()
}

fn random_probs(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::seeded(seed);
    (0..n).map(|_| r.random::<f64>()).collect()
}

/// Textbook micro-F1 from precision and recall.
fn oracle_f1(preds: &BTreeMap<Pair, u32>, gold: &[Pair], kb: &TypologicalKb) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for p in gold {
        let g = kb.value(&p.0, &p.1).unwrap();
        match preds.get(p) {
            Some(&v) if v == g => tp += 1.0,
            Some(_) => {
                fp += 1.0;
                fn_ += 1.0;
            }
            None => fn_ += 1.0,
        }
    }
    if tp == 0.0 {
        return 0.0;
    }
    let (prec, rec) = (tp / (tp + fp), tp / (tp + fn_));
    2.0 * prec * rec / (prec + rec)
}

proptest! {
    #[test]
    fn micro_f1_equals_accuracy_for_full_decodes(shape in kb_shape(), seed: u64) {
        let kb = random_kb(&shape);
        let gold = observed_pairs(&kb);
        prop_assume!(!gold.is_empty());
        let m = binarize(&kb);
        let probs = ProbMatrix { n_cols: m.n_cols(), probs: random_probs(m.n_rows() * m.n_cols(), seed) };
        let preds: BTreeMap<Pair, u32> = gold
            .iter()
            .map(|p| (p.clone(), decode_argmax(&probs, &m, m.row_index(&p.0).unwrap(), m.group_index(&p.1).unwrap())))
            .collect();
        let r = score(&preds, &gold, &kb).unwrap();
        prop_assert!((r.micro_f1 - r.accuracy).abs() < 1e-12);
        prop_assert!((r.micro_f1 - oracle_f1(&preds, &gold, &kb)).abs() < 1e-12);
    }

    #[test]
    fn partial_predictions_match_the_oracle(shape in kb_shape(), seed: u64) {
        let kb = random_kb(&shape);
        let gold = observed_pairs(&kb);
        prop_assume!(!gold.is_empty());
        let mut r = rng::seeded(seed);
        let mut preds: BTreeMap<Pair, u32> = BTreeMap::new();
        for p in &gold {
            if r.random_bool(0.7) {
                let f = kb.feature(&p.1).unwrap();
                preds.insert(p.clone(), f.values[r.random_range(0..f.values.len())].id);
            }
        }
        let rep = score(&preds, &gold, &kb).unwrap();
        prop_assert!((rep.micro_f1 - oracle_f1(&preds, &gold, &kb)).abs() < 1e-12);
        prop_assert!(rep.micro_f1 >= 0.0 && rep.micro_f1 <= 1.0);
        let mut shuffled = gold.clone();
        shuffled.shuffle(&mut r);
        prop_assert_eq!(score(&preds, &shuffled, &kb).unwrap(), rep);
    }

    #[test]
    fn raising_the_gold_column_keeps_a_correct_decode(shape in kb_shape(), seed: u64, bump in 0.0f64..1.0) {
        let kb = random_kb(&shape);
        let m = binarize(&kb);
        let mut probs = ProbMatrix { n_cols: m.n_cols(), probs: random_probs(m.n_rows() * m.n_cols(), seed) };
        for (l, f, v) in kb.indexed_cells().collect::<Vec<_>>() {
            let g = &m.groups()[f];
            if decode_argmax(&probs, &m, l, f) != v {
                continue;
            }
            let col = match g.kind {
                GroupKind::OneHot => g.columns.start + g.value_ids.iter().position(|&x| x == v).unwrap(),
                GroupKind::SingleBinary => g.columns.start,
            };
            let idx = l * m.n_cols() + col;
            let old = probs.probs[idx];
            // for a single column, "raising the gold value" means moving toward it
            let on = g.kind == GroupKind::OneHot || g.value_ids.get(1) == Some(&v);
            probs.probs[idx] = if on { old + bump * (1.0 - old) } else { old * (1.0 - bump) };
            prop_assert_eq!(decode_argmax(&probs, &m, l, f), v);
            probs.probs[idx] = old;
        }
    }

    #[test]
    fn freq_ignores_training_order(shape in kb_shape(), seed: u64) {
        let kb = random_kb(&shape);
        let mut pairs = observed_pairs(&kb);
        let a = FreqModel::fit(&kb, pairs.iter().map(|p| (&p.0, &p.1))).unwrap();
        pairs.shuffle(&mut rng::seeded(seed));
        let b = FreqModel::fit(&kb, pairs.iter().map(|p| (&p.0, &p.1))).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn nearest_neighbour_is_scale_invariant(shape in kb_shape(), seed: u64, scale in 0.01f64..100.0) {
        let kb = random_kb(&shape);
        let mut r = rng::seeded(seed);
        let rows: Vec<(String, Vec<f64>)> = kb
            .languages()
            .iter()
            .map(|l| (l.id.clone(), (0..4).map(|_| r.random_range(-1.0..1.0)).collect()))
            .collect();
        let scaled = rows.iter().map(|(id, v)| (id.clone(), v.iter().map(|x| x * scale).collect()));
        let t1 = LanguageEmbeddingTable::from_rows(4, rows.clone()).unwrap();
        let t2 = LanguageEmbeddingTable::from_rows(4, scaled).unwrap();
        let pairs = observed_pairs(&kb);
        let (train, test): (Vec<_>, Vec<_>) = pairs.iter().partition(|p| !p.0.ends_with('0'));
        let train = || train.iter().map(|p| (&p.0, &p.1));
        let a = KnnModel::fit(t1, &kb, train(), 1, Distance::Cosine).unwrap();
        let b = KnnModel::fit(t2, &kb, train(), 1, Distance::Cosine).unwrap();
        for p in test {
            prop_assert_eq!(a.predict(&p.0, &p.1).ok(), b.predict(&p.0, &p.1).ok());
        }
    }

    #[test]
    fn correlations_ignore_row_order(shape in kb_shape(), seed: u64) {
        let kb = random_kb(&shape);
        let m = binarize(&kb);
        let labels = m.column_labels();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let c = correlations(&m, &refs).unwrap();

        let mut langs = kb.languages().to_vec();
        langs.shuffle(&mut rng::seeded(seed));
        let permuted = TypologicalKb::new(langs, kb.features().to_vec(), kb.cells()).unwrap();
        let c2 = correlations(&binarize(&permuted), &refs).unwrap();
        for i in 0..c.len() {
            for j in 0..c.len() {
                match (c.get(i, j), c2.get(i, j)) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
                    (x, y) => prop_assert_eq!(x, y),
                }
                prop_assert_eq!(c.get(i, j).map(f64::to_bits), c.get(j, i).map(f64::to_bits));
                if let Some(x) = c.get(i, j) {
                    prop_assert!((-1.0..=1.0).contains(&x));
                }
            }
        }
    }

    #[test]
    fn shares_sum_to_one(shape in kb_shape()) {
        let kb = random_kb(&shape);
        let rows = value_distributions(&kb, &LanguageFilter::Genus("G0".into())).unwrap();
        let mut per_feature: BTreeMap<&str, f64> = BTreeMap::new();
        for r in &rows {
            *per_feature.entry(&r.feature_id).or_default() += r.share;
        }
        for (_, s) in per_feature {
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
