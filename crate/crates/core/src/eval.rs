//! Decoding binary predictions back to feature values, and scoring.

use std::collections::BTreeMap;
use std::io::Write;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::binarize::{BinaryMatrix, GroupKind};
use crate::error::{Error, Result};
use crate::kb::TypologicalKb;
use crate::model::ModelParams;
use crate::split::Pair;

/// Anything that yields a probability for a `(row, column)` of a matrix.
pub trait ProbabilitySource {
    fn prob(&self, row: usize, col: usize) -> f64;
}

impl ProbabilitySource for ModelParams {
    fn prob(&self, row: usize, col: usize) -> f64 {
        crate::model::sigmoid(self.logit(row, col))
    }
}

/// Dense row-major probabilities with the matrix's shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    pub n_cols: usize,
    pub probs: Vec<f64>,
}

impl ProbabilitySource for ProbMatrix {
    fn prob(&self, row: usize, col: usize) -> f64 {
        self.probs[row * self.n_cols + col]
    }
}

/// Decodes group `group` of row `row`. One-hot groups take the most probable
/// column, the first on ties; single columns give the second value only when
/// the probability exceeds 0.5.
pub fn decode_argmax(
    src: &impl ProbabilitySource,
    matrix: &BinaryMatrix,
    row: usize,
    group: usize,
) -> u32 {
    let g = &matrix.groups()[group];
    match g.kind {
        GroupKind::SingleBinary => {
            // a one-value feature can only decode to that value
            match g.value_ids.get(1) {
                Some(&on) if src.prob(row, g.columns.start) > 0.5 => on,
                _ => g.value_ids[0],
            }
        }
        GroupKind::OneHot => {
            let mut best = (0, f64::NEG_INFINITY);
            for (k, c) in g.columns.clone().enumerate() {
                let p = src.prob(row, c);
                if p > best.1 {
                    best = (k, p);
                }
            }
            g.value_ids[best.0]
        }
    }
}

pub fn decode_cell(
    src: &impl ProbabilitySource,
    matrix: &BinaryMatrix,
    language_id: &str,
    feature_id: &str,
) -> Result<u32> {
    let row = matrix
        .row_index(language_id)
        .ok_or_else(|| Error::Lookup(format!("unknown language '{language_id}'")))?;
    let group = matrix
        .group_index(feature_id)
        .ok_or_else(|| Error::Lookup(format!("unknown feature '{feature_id}'")))?;
    Ok(decode_argmax(src, matrix, row, group))
}

/// Decodes every requested pair.
pub fn predict_pairs<'a>(
    src: &impl ProbabilitySource,
    matrix: &BinaryMatrix,
    pairs: impl IntoIterator<Item = &'a Pair>,
) -> Result<BTreeMap<Pair, u32>> {
    pairs
        .into_iter()
        .map(|p| Ok((p.clone(), decode_cell(src, matrix, &p.0, &p.1)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub micro_f1: f64,
    pub accuracy: f64,
    pub per_area_accuracy: BTreeMap<String, f64>,
    pub per_macroarea_f1: BTreeMap<String, f64>,
    pub n_eval_cells: usize,
}

#[derive(Debug, Default, Clone, Copy)]
struct Counts {
    correct: usize,
    wrong: usize,
    missing: usize,
}

impl Counts {
    fn add(&mut self, pred: Option<u32>, gold: u32) {
        match pred {
            Some(p) if p == gold => self.correct += 1,
            Some(_) => self.wrong += 1,
            None => self.missing += 1,
        }
    }

    fn total(&self) -> usize {
        self.correct + self.wrong + self.missing
    }

    fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total() as f64
    }

    /// Micro-F1 over value decisions: a wrong prediction is both a false
    /// positive and a false negative, a missing one only a false negative.
    fn f1(&self) -> f64 {
        let tp = self.correct as f64;
        let denom = 2.0 * tp + 2.0 * self.wrong as f64 + self.missing as f64;
        if denom == 0.0 {
            0.0
        } else {
            2.0 * tp / denom
        }
    }
}

/// Scores predictions against the knowledge base on the `gold` pairs.
/// Gold pairs without a prediction count as false negatives only.
pub fn score<'a>(
    predictions: &BTreeMap<Pair, u32>,
    gold: impl IntoIterator<Item = &'a Pair>,
    kb: &TypologicalKb,
) -> Result<EvalReport> {
    let mut all = Counts::default();
    let mut areas: BTreeMap<String, Counts> = BTreeMap::new();
    let mut macro_: BTreeMap<String, Counts> = BTreeMap::new();
    for pair in gold {
        let (l, f) = (&pair.0, &pair.1);
        let g = kb
            .value(l, f)
            .ok_or_else(|| Error::Lookup(format!("gold cell ({l}, {f}) is not observed")))?;
        let pred = predictions.get(pair).copied();
        all.add(pred, g);
        let area = kb.feature(f).map(|x| x.area.clone()).unwrap_or_default();
        areas.entry(area).or_default().add(pred, g);
        let ma = kb
            .language(l)
            .map(|x| x.macroarea.clone())
            .unwrap_or_default();
        macro_.entry(ma).or_default().add(pred, g);
    }
    if all.total() == 0 {
        return Err(Error::InvalidArgument("gold set is empty".into()));
    }
    Ok(EvalReport {
        micro_f1: all.f1(),
        accuracy: all.accuracy(),
        per_area_accuracy: areas.into_iter().map(|(k, c)| (k, c.accuracy())).collect(),
        per_macroarea_f1: macro_.into_iter().map(|(k, c)| (k, c.f1())).collect(),
        n_eval_cells: all.total(),
    })
}

impl EvalReport {
    pub const TSV_HEADER: &'static str =
        "micro_f1\taccuracy\tn_eval_cells\tper_area_accuracy\tper_macroarea_f1";

    /// One flat record; breakdowns are `key=value` lists joined by `;`.
    pub fn tsv_row(&self) -> String {
        let join = |m: &BTreeMap<String, f64>| {
            m.iter()
                .map(|(k, v)| format!("{k}={v:.6}"))
                .collect::<Vec<_>>()
                .join(";")
        };
        format!(
            "{:.6}\t{:.6}\t{}\t{}\t{}",
            self.micro_f1,
            self.accuracy,
            self.n_eval_cells,
            join(&self.per_area_accuracy),
            join(&self.per_macroarea_f1)
        )
    }
}

/// Debug dump of `(feature, gold, predicted, count)` rows; missing predictions show as `-`.
pub fn write_confusion<'a, W: Write>(
    predictions: &BTreeMap<Pair, u32>,
    gold: impl IntoIterator<Item = &'a Pair>,
    kb: &TypologicalKb,
    mut out: W,
) -> Result<()> {
    let mut counts: BTreeMap<(String, u32, Option<u32>), usize> = BTreeMap::new();
    for pair in gold {
        if let Some(g) = kb.value(&pair.0, &pair.1) {
            *counts
                .entry((pair.1.clone(), g, predictions.get(pair).copied()))
                .or_default() += 1;
        }
    }
    writeln!(out, "feature\tgold\tpredicted\tcount")?;
    for ((f, g, p), n) in counts {
        let p = p.map_or("-".to_owned(), |p| p.to_string());
        writeln!(out, "{f}\t{g}\t{p}\t{n}")?;
    }
    Ok(())
}

/// Mean and Student-t confidence half-width with `n - 1` degrees of freedom.
/// A single score has half-width 0.
pub fn aggregate_ci(scores: &[f64], confidence: f64) -> Result<(f64, f64)> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no scores to aggregate".into()));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence {confidence} outside (0, 1)"
        )));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    if scores.len() == 1 {
        return Ok((mean, 0.0));
    }
    let sd = sample_sd(scores);
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .inverse_cdf(0.5 + confidence / 2.0);
    Ok((mean, t * sd / n.sqrt()))
}

/// Sample standard deviation; 0 for fewer than two scores.
pub fn sample_sd(scores: &[f64]) -> f64 {
    if scores.len() < 2 {
        return 0.0;
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    (scores.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Interval bounds clipped to the score range `[0, 1]`.
pub fn clipped_interval(mean: f64, half_width: f64) -> (f64, f64) {
    ((mean - half_width).max(0.0), (mean + half_width).min(1.0))
}
