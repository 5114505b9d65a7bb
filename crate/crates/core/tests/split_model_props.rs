mod common;

use proptest::prelude::*;

use common::{kb_shape, random_kb};
use tcf_core::binarize::binarize;
use tcf_core::model::{
    self, grad, mf_grad_check, nll_loss, sigmoid, Mode, ModelParams, Objective, Regularize,
    TrainConfig,
};
use tcf_core::rng;
use tcf_core::split::{make_branch_split, validate_split, SplitSpec};
use tcf_core::synth::{low_rank_binary, LowRankConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smaller_fraction_trains_on_a_subset(shape in kb_shape(), seed: u64, f1 in 0.0f64..=1.0, f2 in 0.0f64..=1.0) {
        let kb = random_kb(&shape);
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let a = make_branch_split(&kb, &SplitSpec::new("G0", lo, seed));
        let b = make_branch_split(&kb, &SplitSpec::new("G0", hi, seed));
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert!(a.train.is_subset(&b.train));
                prop_assert_eq!(&a.eval, &b.eval);
                let m = binarize(&kb);
                prop_assert!(validate_split(&kb, &m, &a).is_empty());
                prop_assert!(validate_split(&kb, &m, &b).is_empty());
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "fraction changed failure: {:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn gradient_matches_finite_differences(seed: u64) {
        prop_assert!(mf_grad_check(seed) < 1e-5);
    }

    #[test]
    fn sigmoid_is_symmetric_and_bounded(x in -30.0f64..30.0) {
        let (p, q) = (sigmoid(x), sigmoid(-x));
        prop_assert!(p > 0.0 && p < 1.0);
        prop_assert!((p - (1.0 - q)).abs() < 1e-12);
    }

    #[test]
    fn frozen_loss_is_convex_in_parameter_embeddings(seed: u64, t in 0.0f64..=1.0) {
        let (m, p, cells) = instance(seed, Mode::FrozenExternal);
        let mut r = rng::seeded(seed ^ 0xA5);
        let mut q = p.clone();
        for x in &mut q.param_emb {
            *x += 2.0 * rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut r);
        }
        let obj = Objective::default();
        let mut mid = p.clone();
        for ((x, a), b) in mid.param_emb.iter_mut().zip(&p.param_emb).zip(&q.param_emb) {
            *x = (1.0 - t) * a + t * b;
        }
        let lhs = nll_loss(&mid, &m, &cells, &obj);
        let rhs = (1.0 - t) * nll_loss(&p, &m, &cells, &obj) + t * nll_loss(&q, &m, &cells, &obj);
        prop_assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
    }
}

fn instance(
    seed: u64,
    mode: Mode,
) -> (
    tcf_core::binarize::BinaryMatrix,
    ModelParams,
    Vec<(usize, usize)>,
) {
    let s = low_rank_binary(&LowRankConfig {
        n_languages: 8,
        n_features: 12,
        dim: 3,
        seed,
        ..LowRankConfig::default()
    });
    let m = binarize(&s.kb);
    let mut p = ModelParams::zeros(mode, 3, m.language_ids().to_vec(), m.column_labels(), false);
    let mut r = rng::seeded(seed);
    for x in p.lang_emb.iter_mut().chain(p.param_emb.iter_mut()) {
        *x = rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut r);
    }
    let cells = (0..m.n_rows())
        .flat_map(|l| (0..m.n_cols()).map(move |i| (l, i)))
        .filter(|&(l, i)| m.observed(l, i))
        .collect();
    (m, p, cells)
}

#[test]
fn penalty_gradient_is_l2_weight_times_theta() {
    // sigma^2 = 10 corresponds to l2_weight = 0.1
    let (m, p, _) = instance(3, Mode::Joint);
    let obj = Objective {
        l2_weight: 1.0 / 10.0,
        regularize: Regularize::Both,
    };
    let g = grad(&p, &m, &[], &obj);
    for (gk, x) in g
        .lang_emb
        .iter()
        .zip(&p.lang_emb)
        .chain(g.param_emb.iter().zip(&p.param_emb))
    {
        assert!((gk - 0.1 * x).abs() < 1e-15);
    }
}

#[test]
fn training_is_bit_identical_for_a_seed() {
    let s = low_rank_binary(&LowRankConfig::default());
    let m = binarize(&s.kb);
    let cells: Vec<(usize, usize)> = (0..m.n_rows())
        .flat_map(|l| (0..m.n_cols()).map(move |i| (l, i)))
        .filter(|&(l, i)| m.observed(l, i))
        .collect();
    let cfg = TrainConfig {
        epochs: 3,
        dim: 4,
        seed: 17,
        ..TrainConfig::default()
    };
    let a = model::train_on_cells(&m, cells.clone(), &cfg, None).unwrap();
    let b = model::train_on_cells(&m, cells.clone(), &cfg, None).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.loss_trace, b.loss_trace);
    let c = model::train_on_cells(&m, cells, &TrainConfig { seed: 18, ..cfg }, None).unwrap();
    assert_ne!(a.params, c.params);
}
