mod common;

use proptest::prelude::*;

use common::kb_strategy;
use tcf_core::binarize::{binarize, GroupKind};
use tcf_core::kb::{filter_kb, load_long, save_long, FilterThresholds};

proptest! {
    #[test]
    fn long_format_round_trips(kb in kb_strategy()) {
        let mut buf = Vec::new();
        save_long(&kb, &mut buf).unwrap();
        let back = load_long(buf.as_slice()).unwrap();
        prop_assert!(back.check_integrity().is_empty());
        prop_assert_eq!(back, kb);
    }

    #[test]
    fn value_filter_alone_is_idempotent(kb in kb_strategy(), min_count in 0usize..4) {
        let t = FilterThresholds { min_value_count: min_count, ..FilterThresholds::NONE };
        let once = filter_kb(&kb, t);
        prop_assert!(once.check_integrity().is_empty());
        prop_assert_eq!(filter_kb(&once, t), once);
    }

    #[test]
    fn refiltering_only_shrinks(kb in kb_strategy(), a in 0usize..3, b in 0usize..4, c in 0usize..3) {
        let t = FilterThresholds { min_value_count: a, min_features_per_language: b, min_branch_size: c };
        let once = filter_kb(&kb, t);
        let twice = filter_kb(&once, t);
        prop_assert!(twice.check_integrity().is_empty());
        for cell in twice.cells() {
            let (l, f, v) = (cell.0, cell.1, cell.2);
            prop_assert_eq!(once.value(l, f), Some(v));
        }
        prop_assert!(twice.languages().len() <= once.languages().len());
    }

    #[test]
    fn one_hot_rows_sum_to_one(kb in kb_strategy()) {
        let m = binarize(&kb);
        for g in m.groups() {
            for r in 0..m.n_rows() {
                let observed = g.columns.clone().all(|c| m.observed(r, c));
                let any = g.columns.clone().any(|c| m.observed(r, c));
                prop_assert_eq!(observed, any, "partially observed group");
                if observed && g.kind == GroupKind::OneHot {
                    let sum: u32 = g.columns.clone().map(|c| m.entry(r, c) as u32).sum();
                    prop_assert_eq!(sum, 1);
                }
            }
        }
    }

    #[test]
    fn column_count_matches_inventories(kb in kb_strategy()) {
        let m = binarize(&kb);
        let expected: usize = kb.features().iter().map(|f| if f.values.len() >= 3 { f.values.len() } else { 1 }).sum();
        prop_assert_eq!(m.n_cols(), expected);
        prop_assert_eq!(binarize(&kb.clone()), m);
    }
}
