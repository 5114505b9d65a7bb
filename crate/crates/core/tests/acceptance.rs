//! Acceptance suite. Prints one line per criterion and fails if any criterion
//! fails. Criteria 1 and 2 need a WALS wide export; point
//! `TCF_WALS_LANGUAGE_CSV` at `language.csv` to run them, otherwise they are
//! reported as SKIP.
//!
//! Run with `cargo test -p tcf-core --test acceptance -- --nocapture`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::path::Path;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use tcf_core::baselines::FreqModel;
use tcf_core::binarize::{binarize, BinaryMatrix, GroupKind};
use tcf_core::embeddings::charlm::{prepare_corpus, windows};
use tcf_core::embeddings::{lm_grad_check, train_char_lm, CharLmConfig, GradCheckConfig};
use tcf_core::eval::{decode_argmax, score, ProbMatrix};
use tcf_core::harness::{run_plan, write_records, ExperimentPlan, RunRecord, System, SystemConfig};
use tcf_core::kb::{
    load_long, load_wals_wide, save_long, Feature, FeatureAreas, FeatureValue, Language,
    TypologicalKb,
};
use tcf_core::model::{
    self, grad, nll_loss, Mode, ModelParams, Objective, Regularize, TrainConfig,
};
use tcf_core::rng;
use tcf_core::split::{make_branch_split, validate_split, Pair, SplitSpec};
use tcf_core::synth::{
    branch_structured, low_rank_binary, markov_corpus, BranchConfig, LowRankConfig,
};

#[derive(Debug, PartialEq)]
enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    id: &'static str,
    name: &'static str,
    status: Status,
    detail: String,
    seconds: f64,
    limit: Option<f64>,
}

fn check(
    id: &'static str,
    name: &'static str,
    limit: Option<f64>,
    f: impl FnOnce() -> (Status, String),
) -> Outcome {
    let start = Instant::now();
    let (mut status, mut detail) = f();
    let seconds = start.elapsed().as_secs_f64();
    if let (Some(l), Status::Pass) = (limit, &status) {
        if seconds > l {
            status = Status::Fail;
            detail.push_str("; over time limit");
        }
    }
    let o = Outcome {
        id,
        name,
        status,
        detail,
        seconds,
        limit,
    };
    let tag = match o.status {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Skip => "SKIP",
    };
    let time = match o.limit {
        Some(l) => format!("{:.1} s (limit {l} s)", o.seconds),
        None => format!("{:.1} s", o.seconds),
    };
    println!("[{tag}] {:>2} {}: {} [{time}]", o.id, o.name, o.detail);
    o
}

fn verdict(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn normal(r: &mut rng::Rng) -> f64 {
    StandardNormal.sample(r)
}

fn observed_cells(m: &BinaryMatrix) -> Vec<(usize, usize)> {
    (0..m.n_rows())
        .flat_map(|l| (0..m.n_cols()).map(move |i| (l, i)))
        .filter(|&(l, i)| m.observed(l, i))
        .collect()
}

fn wals_kb() -> Option<TypologicalKb> {
    let path = std::env::var_os("TCF_WALS_LANGUAGE_CSV")?;
    Some(
        load_wals_wide(
            File::open(path).expect("TCF_WALS_LANGUAGE_CSV is readable"),
            &FeatureAreas::default(),
        )
        .expect("WALS export parses"),
    )
}

// ---- 1, 2: WALS numbers ------------------------------------------------------

fn c1_freq_81a() -> (Status, String) {
    let Some(kb) = wals_kb() else {
        return (
            Status::Skip,
            "TCF_WALS_LANGUAGE_CSV not set; unverified".into(),
        );
    };
    let cells: Vec<(&str, &str)> = kb
        .cells()
        .filter(|c| c.1 == "81A")
        .map(|c| (c.0, c.1))
        .collect();
    let freq = FreqModel::fit(&kb, cells.iter().copied()).unwrap();
    let modal = freq.predict("", "81A").unwrap();
    let name = kb
        .feature("81A")
        .unwrap()
        .value_name(modal)
        .unwrap_or("")
        .to_owned();
    let hits = cells
        .iter()
        .filter(|(l, f)| kb.value(l, f) == Some(modal))
        .count();
    let acc = hits as f64 / cells.len() as f64;
    let ok = name.contains("SVO") && (acc - 0.41).abs() <= 0.03;
    (
        verdict(ok),
        format!(
            "modal '{name}', accuracy {acc:.4} over {} cells (need SVO, 0.41 +- 0.03)",
            cells.len()
        ),
    )
}

fn c2_binarize_81a() -> (Status, String) {
    // structural part on a bundled WALS-format sample; always runs
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/wals_sample.csv");
    let sample = load_wals_wide(File::open(fixture).unwrap(), &FeatureAreas::default()).unwrap();
    let m = binarize(&sample);
    let g = m.group("81A").unwrap();
    let sample_ok = g.kind == GroupKind::OneHot && g.columns.len() == 7;
    let Some(kb) = wals_kb() else {
        return (
            if sample_ok { Status::Skip } else { Status::Fail },
            format!(
                "sample export: 81A -> {} columns (need 7); full inventory count unverified, TCF_WALS_LANGUAGE_CSV not set",
                g.columns.len()
            ),
        );
    };
    let m = binarize(&kb);
    let width = m.group("81A").unwrap().columns.len();
    let n = kb.features().len();
    let ok = sample_ok && width == 7 && n.abs_diff(202) <= 10;
    (
        verdict(ok),
        format!("81A -> {width} columns (need 7), {n} features (need 202 +- 10)"),
    )
}

// ---- 3: gradient oracle ------------------------------------------------------

/// Random instance with at most 10 languages, 16 columns and dimension 8.
fn random_instance(seed: u64) -> (BinaryMatrix, ModelParams, Objective, Vec<(usize, usize)>) {
    let mut r = rng::seeded(seed);
    let n_lang = r.random_range(2..=10);
    let mut features = Vec::new();
    let mut n_cols = 0;
    while n_cols < 16 {
        let k: u32 = r.random_range(2..=5);
        let width = if k >= 3 { k as usize } else { 1 };
        if n_cols + width > 16 {
            break;
        }
        n_cols += width;
        features.push(Feature {
            id: format!("{}A", features.len() + 1),
            name: String::new(),
            area: String::new(),
            values: (1..=k)
                .map(|id| FeatureValue {
                    id,
                    name: String::new(),
                })
                .collect(),
        });
    }
    let langs: Vec<Language> = (0..n_lang)
        .map(|i| Language {
            id: format!("l{i}"),
            name: String::new(),
            genus: String::new(),
            family: String::new(),
            macroarea: String::new(),
        })
        .collect();
    let mut cells = Vec::new();
    for l in &langs {
        for f in &features {
            if r.random_bool(0.7) {
                cells.push((
                    l.id.clone(),
                    f.id.clone(),
                    r.random_range(1..=f.values.len() as u32),
                ));
            }
        }
    }
    let kb = TypologicalKb::new(langs, features, cells).unwrap();
    let m = binarize(&kb);
    let mode = *[Mode::Joint, Mode::FrozenExternal, Mode::FinetunedExternal]
        .choose(&mut r)
        .unwrap();
    let dim = r.random_range(1..=8);
    let mut p = ModelParams::zeros(
        mode,
        dim,
        m.language_ids().to_vec(),
        m.column_labels(),
        r.random_bool(0.3),
    );
    for x in p.lang_emb.iter_mut().chain(p.param_emb.iter_mut()) {
        *x = normal(&mut r);
    }
    if let Some(b) = &mut p.bias {
        b.iter_mut().for_each(|x| *x = normal(&mut r));
    }
    if mode == Mode::FinetunedExternal && r.random_bool(0.5) {
        p.lang_prior = Some((0..p.lang_emb.len()).map(|_| normal(&mut r)).collect());
    }
    let obj = Objective {
        l2_weight: r.random_range(0.0..1.0),
        regularize: if r.random_bool(0.5) {
            Regularize::Both
        } else {
            Regularize::LanguagesOnly
        },
    };
    let cells = observed_cells(&m);
    (m, p, obj, cells)
}

fn c3_gradient() -> (Status, String) {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut coords = 0;
    for seed in 0..100 {
        let (m, mut p, obj, cells) = random_instance(seed);
        let g = grad(&p, &m, &cells, &obj);
        let fd = |p: &mut ModelParams, slot: &dyn Fn(&mut ModelParams) -> &mut f64| {
            let x = *slot(p);
            *slot(p) = x + h;
            let up = nll_loss(p, &m, &cells, &obj);
            *slot(p) = x - h;
            let down = nll_loss(p, &m, &cells, &obj);
            *slot(p) = x;
            (up - down) / (2.0 * h)
        };
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-3);
        if p.mode != Mode::FrozenExternal {
            for k in 0..p.lang_emb.len() {
                worst = worst.max(rel(
                    g.lang_emb[k],
                    fd(&mut p, &|q: &mut ModelParams| &mut q.lang_emb[k]),
                ));
                coords += 1;
            }
        } else if g.lang_emb.iter().any(|&x| x != 0.0) {
            return (
                Status::Fail,
                format!("instance {seed}: frozen language rows have a gradient"),
            );
        }
        for k in 0..p.param_emb.len() {
            worst = worst.max(rel(
                g.param_emb[k],
                fd(&mut p, &|q: &mut ModelParams| &mut q.param_emb[k]),
            ));
            coords += 1;
        }
        if let Some(gb) = g.bias.clone() {
            for (k, a) in gb.into_iter().enumerate() {
                worst = worst.max(rel(
                    a,
                    fd(&mut p, &|q: &mut ModelParams| {
                        &mut q.bias.as_mut().unwrap()[k]
                    }),
                ));
                coords += 1;
            }
        }
    }
    (
        verdict(worst < 1e-5),
        format!(
            "max relative error {worst:.2e} over {coords} coordinates, 100 instances (need < 1e-5)"
        ),
    )
}

// ---- 4: synthetic recovery ---------------------------------------------------

fn c4_recovery() -> (Status, String) {
    // Trained on every observed cell, scored on the 20% the generator held back.
    // Settings were picked on generator seeds 100-109, never on the seeds scored here.
    let cfg = TrainConfig {
        epochs: 50,
        dim: 8,
        l2_weight: 0.2,
        learning_rate: 0.03,
        batch_size: 256,
        ..TrainConfig::default()
    };
    let (mut tcf, mut freq) = (Vec::new(), Vec::new());
    for seed in 0..5 {
        let s = low_rank_binary(&LowRankConfig {
            scale: 16.0,
            seed,
            ..LowRankConfig::default()
        });
        let m = binarize(&s.kb);
        let out = model::train_on_cells(
            &m,
            observed_cells(&m),
            &TrainConfig {
                seed,
                ..cfg.clone()
            },
            None,
        )
        .unwrap();
        let mut counts = vec![[0usize; 2]; m.n_cols()];
        for (l, i) in observed_cells(&m) {
            counts[i][m.entry(l, i) as usize] += 1;
        }
        let (mut hit_t, mut hit_f) = (0, 0);
        for &(l, f, v) in &s.hidden {
            let on = v == 2;
            hit_t += usize::from((out.params.predict_prob(l, f).unwrap() > 0.5) == on);
            hit_f += usize::from((counts[f][1] > counts[f][0]) == on);
        }
        tcf.push(hit_t as f64 / s.hidden.len() as f64);
        freq.push(hit_f as f64 / s.hidden.len() as f64);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (t, f) = (mean(&tcf), mean(&freq));
    let per: Vec<String> = tcf.iter().map(|x| format!("{x:.3}")).collect();
    (
        verdict(t >= 0.85 && t - f >= 0.10),
        format!(
            "held-out accuracy tcf {t:.4} [{}], freq {f:.4} over generator seeds 0-4 (need tcf >= 0.85 and tcf - freq >= 0.10)",
            per.join(" ")
        ),
    )
}

// ---- 5, 6: trend and semi-supervised advantage ---------------------------------

const FRACTIONS: [f64; 5] = [0.0, 0.01, 0.05, 0.10, 0.20];

fn branch_grid() -> Vec<RunRecord> {
    let s = branch_structured(&BranchConfig::default());
    let table = s.noisy_embeddings(0.3, 11);
    let plan = ExperimentPlan {
        fractions: FRACTIONS.to_vec(),
        repeats: 5,
        systems: vec![System::Freq, System::Tcf, System::Semisup],
        ..ExperimentPlan::default()
    };
    let systems = SystemConfig {
        train: TrainConfig {
            epochs: 40,
            dim: 8,
            learning_rate: 0.01,
            ..TrainConfig::default()
        },
        ..SystemConfig::default()
    };
    run_plan(&s.kb, &plan, &systems, Some(&table)).unwrap()
}

fn mean_f1(records: &[RunRecord], system: System) -> Result<Vec<f64>, String> {
    let mut by_fraction: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.system == system) {
        let f1 = r
            .outcome
            .as_ref()
            .map_err(|e| format!("{} run failed: {}", r.branch, e.1))?
            .micro_f1;
        let k = FRACTIONS.iter().position(|&f| f == r.fraction).unwrap();
        by_fraction.entry(k).or_default().push(f1);
    }
    Ok(by_fraction
        .values()
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect())
}

fn fmt(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.3}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn c5_trend(records: &[RunRecord]) -> (Status, String) {
    let tcf = match mean_f1(records, System::Tcf) {
        Ok(v) => v,
        Err(e) => return (Status::Fail, e),
    };
    let ok = tcf.windows(2).all(|w| w[1] >= w[0]);
    (
        verdict(ok),
        format!(
            "tcf mean F1 by fraction 0..0.20: {} (need non-decreasing)",
            fmt(&tcf)
        ),
    )
}

fn c6_semisup(records: &[RunRecord]) -> (Status, String) {
    let (tcf, semi, freq) = match (
        mean_f1(records, System::Tcf),
        mean_f1(records, System::Semisup),
        mean_f1(records, System::Freq),
    ) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return (Status::Fail, e),
    };
    let ok = (2..FRACTIONS.len()).all(|k| semi[k] >= tcf[k]);
    (
        verdict(ok),
        format!(
            "finetuned-external {} vs joint {} (freq {}) (need finetuned >= joint at fractions >= 0.05)",
            fmt(&semi),
            fmt(&tcf),
            fmt(&freq)
        ),
    )
}

// ---- 7: convexity ---------------------------------------------------------------

fn c7_convexity() -> (Status, String) {
    let obj = Objective::default();
    let mut worst_rise: f64 = 0.0;
    for seed in 0..20 {
        let (m, mut p, _, cells) = random_instance(1000 + seed);
        p.mode = Mode::FrozenExternal;
        p.lang_prior = None;
        // per-column Lipschitz bound of the gradient: 1/4 sum ||lambda||^2 + l2
        let lip = 0.25 * p.lang_emb.iter().map(|x| x * x).sum::<f64>() + obj.l2_weight;
        let step = 1.0 / lip;
        let mut prev = nll_loss(&p, &m, &cells, &obj);
        for _ in 0..100 {
            let g = grad(&p, &m, &cells, &obj);
            for (x, gk) in p.param_emb.iter_mut().zip(&g.param_emb) {
                *x -= step * gk;
            }
            if let (Some(b), Some(gb)) = (&mut p.bias, &g.bias) {
                for (x, gk) in b.iter_mut().zip(gb) {
                    *x -= step * gk;
                }
            }
            let loss = nll_loss(&p, &m, &cells, &obj);
            worst_rise = worst_rise.max(loss - prev);
            prev = loss;
        }
    }
    (
        verdict(worst_rise <= 1e-12),
        format!("largest loss increase {worst_rise:.2e} over 20 instances x 100 full-batch steps (need <= 1e-12)"),
    )
}

// ---- 8: split integrity ----------------------------------------------------------

fn c8_splits() -> (Status, String) {
    let mut r = rng::seeded(8);
    let (mut valid, mut rejected, mut violations) = (0, 0, 0);
    for _ in 0..1000 {
        let shape = RandomKb {
            n_languages: r.random_range(2..=15),
            n_genera: r.random_range(1..=4),
            n_features: r.random_range(1..=8),
            density: r.random_range(0.1..1.0),
            seed: r.random(),
        };
        let kb = shape.build();
        let genera = kb.genera();
        let branch = genera.choose(&mut r).unwrap().to_string();
        let mut spec = SplitSpec::new(branch, r.random_range(0.0..=1.0), r.random());
        spec.eval_fraction = r.random_range(0.0..=1.0);
        match make_branch_split(&kb, &spec) {
            Ok(split) => {
                let v = validate_split(&kb, &binarize(&kb), &split);
                violations += v.len();
                valid += usize::from(v.is_empty());
            }
            Err(_) => rejected += 1,
        }
    }
    (
        verdict(violations == 0),
        format!("{valid} valid, {rejected} rejected as degenerate, {violations} violations in 1000 trials (need 0 violations)"),
    )
}

struct RandomKb {
    n_languages: usize,
    n_genera: usize,
    n_features: usize,
    density: f64,
    seed: u64,
}

impl RandomKb {
    fn build(&self) -> TypologicalKb {
        let mut r = rng::seeded(self.seed);
        let langs = (0..self.n_languages)
            .map(|i| Language {
                id: format!("l{i}"),
                name: String::new(),
                genus: format!("g{}", i % self.n_genera),
                family: String::new(),
                macroarea: String::new(),
            })
            .collect();
        let feats: Vec<Feature> = (0..self.n_features)
            .map(|f| Feature {
                id: format!("{}A", f + 1),
                name: String::new(),
                area: String::new(),
                values: (1..=r.random_range(1..=6))
                    .map(|id| FeatureValue {
                        id,
                        name: String::new(),
                    })
                    .collect(),
            })
            .collect();
        let mut cells = Vec::new();
        for l in 0..self.n_languages {
            for f in &feats {
                if r.random_bool(self.density) {
                    cells.push((
                        format!("l{l}"),
                        f.id.clone(),
                        r.random_range(1..=f.values.len() as u32),
                    ));
                }
            }
        }
        TypologicalKb::new(langs, feats, cells).unwrap()
    }
}

// ---- 9: metric identity ----------------------------------------------------------

fn c9_metric_identity() -> (Status, String) {
    let mut r = rng::seeded(9);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let kb = RandomKb {
            n_languages: r.random_range(2..=15),
            n_genera: 2,
            n_features: r.random_range(1..=8),
            density: 0.8,
            seed: r.random(),
        }
        .build();
        let m = binarize(&kb);
        let probs = ProbMatrix {
            n_cols: m.n_cols(),
            probs: (0..m.n_rows() * m.n_cols()).map(|_| r.random()).collect(),
        };
        let gold: BTreeSet<Pair> = kb
            .cells()
            .map(|(l, f, _)| (l.to_owned(), f.to_owned()))
            .collect();
        if gold.is_empty() {
            continue;
        }
        let preds: BTreeMap<Pair, u32> = kb
            .indexed_cells()
            .map(|(l, f, _)| {
                (
                    (m.language_ids()[l].clone(), kb.features()[f].id.clone()),
                    decode_argmax(&probs, &m, l, f),
                )
            })
            .collect();
        let rep = score(&preds, &gold, &kb).unwrap();
        // oracle: precision = recall = accuracy when every gold cell gets one prediction
        let correct = preds
            .iter()
            .filter(|(p, v)| kb.value(&p.0, &p.1) == Some(**v))
            .count() as f64;
        let acc = correct / gold.len() as f64;
        worst = worst
            .max((rep.micro_f1 - rep.accuracy).abs())
            .max((rep.accuracy - acc).abs());
    }
    (
        verdict(worst <= 1e-12),
        format!("max |micro_f1 - accuracy| {worst:.2e} over 100 prediction sets (need <= 1e-12)"),
    )
}

// ---- 10: character LM ------------------------------------------------------------

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn c10_lm() -> (Status, String) {
    let grad_err = lm_grad_check(&GradCheckConfig::default()).unwrap();

    let (corpus, groups) = markov_corpus(3, 3, 3000, "abcdefgh", 5);
    let cfg = CharLmConfig {
        max_epochs: 8,
        ..CharLmConfig::default()
    };
    let run = train_char_lm(&corpus, &cfg).unwrap();
    let best = run
        .dev_perplexity
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);

    // per-language add-one unigram, scored on the same predicted dev symbols
    let prep = prepare_corpus(&corpus, &cfg).unwrap();
    let v = prep.alphabet.len() as f64;
    let (mut nll, mut n) = (0.0, 0usize);
    for (train, dev) in prep.train.iter().zip(&prep.dev) {
        let mut counts = vec![1.0; prep.alphabet.len()];
        for &c in train {
            counts[c] += 1.0;
        }
        let total = train.len() as f64 + v;
        for w in windows(dev, cfg.bptt) {
            for &c in &w[1..] {
                nll -= (counts[c] / total).ln();
                n += 1;
            }
        }
    }
    let unigram = (nll / n as f64).exp();

    let emb: HashMap<&str, &[f64]> = run.table.iter().collect();
    let ids: Vec<&str> = corpus.streams.iter().map(|(id, _)| id.as_str()).collect();
    let (mut same, mut cross) = (Vec::new(), Vec::new());
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            let c = cosine(emb[ids[i]], emb[ids[j]]);
            if groups[i] == groups[j] {
                same.push(c);
            } else {
                cross.push(c);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ms, mc) = (mean(&same), mean(&cross));
    let ok = grad_err < 1e-4 && best < unigram && ms > mc;
    (
        verdict(ok),
        format!(
            "grad error {grad_err:.2e} (need < 1e-4); dev perplexity {best:.3} vs unigram {unigram:.3}; cosine same {ms:.3} vs cross {mc:.3}"
        ),
    )
}

// ---- 11: determinism ---------------------------------------------------------------

fn c11_determinism() -> (Status, String) {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/wals_sample.csv");
    let areas = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/areas.tsv");
    let pipeline = |threads: usize| -> Vec<u8> {
        let areas = FeatureAreas::parse(File::open(&areas).unwrap()).unwrap();
        let wide = load_wals_wide(File::open(&fixture).unwrap(), &areas).unwrap();
        let mut long = Vec::new();
        save_long(&wide, &mut long).unwrap();
        let kb = load_long(long.as_slice()).unwrap();
        let plan = ExperimentPlan {
            fractions: vec![0.0, 0.1, 0.2],
            repeats: 3,
            systems: vec![System::Freq, System::Tcf],
            base_seed: 2024,
            threads,
            ..ExperimentPlan::default()
        };
        let systems = SystemConfig {
            train: TrainConfig {
                epochs: 5,
                dim: 4,
                ..TrainConfig::default()
            },
            ..SystemConfig::default()
        };
        let mut out = Vec::new();
        write_records(
            &run_plan(&kb, &plan, &systems, None).unwrap(),
            false,
            &mut out,
        )
        .unwrap();
        out
    };
    let a = pipeline(1);
    let b = pipeline(1);
    let c = pipeline(4);
    let rows = a.iter().filter(|&&b| b == b'\n').count() - 1;
    (
        verdict(a == b && a == c),
        format!(
            "{rows} records; repeat identical: {}, 1 vs 4 threads identical: {}",
            a == b,
            a == c
        ),
    )
}

#[test]
fn acceptance() {
    let mut results = vec![
        check("1", "freq baseline on 81A", Some(5.0), c1_freq_81a),
        check("2", "81A binarization and inventory", None, c2_binarize_81a),
        check("3", "gradient oracle", Some(30.0), c3_gradient),
        check("4", "synthetic recovery", Some(60.0), c4_recovery),
    ];
    // 5 and 6 share one grid; its runtime counts toward 5
    let mut grid = Vec::new();
    results.push(check(
        "5",
        "trend across in-branch fractions",
        Some(300.0),
        || {
            grid = branch_grid();
            c5_trend(&grid)
        },
    ));
    results.push(check("6", "semi-supervised advantage", None, || {
        c6_semisup(&grid)
    }));
    results.push(check("7", "frozen-mode convexity", None, c7_convexity));
    results.push(check("8", "split integrity", None, c8_splits));
    results.push(check("9", "metric identity", None, c9_metric_identity));
    results.push(check("10", "character LM", None, c10_lm));
    results.push(check("11", "determinism", None, c11_determinism));

    let failed: Vec<String> = results
        .iter()
        .filter(|o| o.status == Status::Fail)
        .map(|o| format!("{} {}", o.id, o.name))
        .collect();
    let passed = results.iter().filter(|o| o.status == Status::Pass).count();
    let skipped = results.iter().filter(|o| o.status == Status::Skip).count();
    println!(
        "acceptance: {passed} passed, {} failed, {skipped} skipped",
        failed.len()
    );
    assert!(failed.is_empty(), "failed criteria: {}", failed.join(", "));
}
