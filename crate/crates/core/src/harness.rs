//! The branch x fraction x repeat experiment grid.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{Distance, FreqModel, KnnModel};
use crate::binarize::{binarize, BinaryMatrix};
use crate::embeddings::LanguageEmbeddingTable;
use crate::error::{Error, Result};
use crate::eval::{aggregate_ci, clipped_interval, predict_pairs, sample_sd, score, EvalReport};
use crate::kb::TypologicalKb;
use crate::model::{train, Mode, TrainConfig};
use crate::rng::derive_seed;
use crate::split::{make_branch_split, Pair, SplitResult, SplitSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum System {
    Freq,
    Knn,
    Tcf,
    Semisup,
}

impl System {
    pub const ALL: [System; 4] = [Self::Freq, Self::Knn, Self::Tcf, Self::Semisup];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Freq => "freq",
            Self::Knn => "knn",
            Self::Tcf => "tcf",
            Self::Semisup => "semisup",
        }
    }

    fn needs_embeddings(self) -> bool {
        matches!(self, Self::Knn | Self::Semisup)
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown system '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    /// Held-out branches; empty means every genus in the KB.
    pub branches: Vec<String>,
    pub fractions: Vec<f64>,
    pub repeats: usize,
    pub systems: Vec<System>,
    pub base_seed: u64,
    pub eval_fraction: f64,
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            branches: Vec::new(),
            fractions: vec![0.0, 0.01, 0.05, 0.10, 0.20],
            repeats: 5,
            systems: vec![System::Freq, System::Tcf],
            base_seed: 0,
            eval_fraction: 0.8,
            threads: 0,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidArgument("repeats must be at least 1".into()));
        }
        if let Some(f) = self.fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(Error::InvalidArgument(format!(
                "fraction {f} is outside [0, 1]"
            )));
        }
        Ok(())
    }
}

/// Settings for the individual systems.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub train: TrainConfig,
    pub knn_k: usize,
    pub knn_distance: Distance,
    /// How the semi-supervised system uses the embedding table.
    pub semisup_mode: Mode,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            knn_k: 1,
            knn_distance: Distance::Cosine,
            semisup_mode: Mode::FinetunedExternal,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub branch: String,
    pub macroarea: String,
    pub fraction: f64,
    pub repeat: usize,
    pub system: System,
    /// Split seed; the training seed is derived from the same inputs.
    pub seed: u64,
    /// The evaluation report, or the error kind and message of a failed run.
    pub outcome: std::result::Result<EvalReport, (String, String)>,
    pub wall_seconds: f64,
}

/// Seed for one grid cell. The fraction is deliberately not an input, so all
/// fractions of a repeat share the evaluation set and the initialization.
pub fn run_seed(base_seed: u64, purpose: &str, branch: &str, repeat: usize) -> u64 {
    derive_seed(base_seed, &[purpose, branch, &repeat.to_string()])
}

/// Most common macroarea among the branch's languages; ties go to the smallest name.
pub fn branch_macroarea(kb: &TypologicalKb, branch: &str) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in kb.languages().iter().filter(|l| l.genus == branch) {
        *counts.entry(l.macroarea.as_str()).or_default() += 1;
    }
    let mut best = ("", 0);
    for (m, n) in counts {
        if n > best.1 {
            best = (m, n);
        }
    }
    best.0.to_owned()
}

struct Context<'a> {
    kb: &'a TypologicalKb,
    matrix: BinaryMatrix,
    systems: &'a SystemConfig,
    table: Option<&'a LanguageEmbeddingTable>,
}

fn predict_system(
    ctx: &Context<'_>,
    split: &SplitResult,
    system: System,
    train_seed: u64,
) -> Result<BTreeMap<Pair, u32>> {
    let kb = ctx.kb;
    let train_pairs = split.train.iter().map(|(l, f)| (l.as_str(), f.as_str()));
    match system {
        System::Freq => {
            let m = FreqModel::fit(kb, train_pairs)?;
            Ok(split
                .eval
                .iter()
                .filter_map(|p| m.predict(&p.0, &p.1).ok().map(|v| (p.clone(), v)))
                .collect())
        }
        System::Knn => {
            let table = ctx.table.expect("checked by run_plan").clone();
            let m = KnnModel::fit(
                table,
                kb,
                train_pairs,
                ctx.systems.knn_k,
                ctx.systems.knn_distance,
            )?;
            Ok(split
                .eval
                .iter()
                .filter_map(|p| m.predict(&p.0, &p.1).ok().map(|v| (p.clone(), v)))
                .collect())
        }
        System::Tcf | System::Semisup => {
            let mut cfg = ctx.systems.train.clone();
            cfg.seed = train_seed;
            cfg.mode = if system == System::Tcf {
                Mode::Joint
            } else {
                ctx.systems.semisup_mode
            };
            let table = if cfg.mode.uses_external() {
                ctx.table
            } else {
                None
            };
            let out = train(&ctx.matrix, split, &cfg, table)?;
            predict_pairs(&out.params, &ctx.matrix, &split.eval)
        }
    }
}

/// Runs every (branch, fraction, repeat, system) combination. Failures are
/// recorded per run. Output is sorted by branch, fraction, repeat, system.
pub fn run_plan(
    kb: &TypologicalKb,
    plan: &ExperimentPlan,
    systems: &SystemConfig,
    table: Option<&LanguageEmbeddingTable>,
) -> Result<Vec<RunRecord>> {
    plan.validate()?;
    systems.train.validate()?;
    if table.is_none() && plan.systems.iter().any(|s| s.needs_embeddings()) {
        return Err(Error::InvalidArgument(
            "knn and semisup need a language embedding table".into(),
        ));
    }
    let branches: Vec<String> = if plan.branches.is_empty() {
        kb.genera().into_iter().map(str::to_owned).collect()
    } else {
        plan.branches.clone()
    };
    let ctx = Context {
        kb,
        matrix: binarize(kb),
        systems,
        table,
    };
    let mut jobs = Vec::new();
    for b in &branches {
        for &f in &plan.fractions {
            for r in 0..plan.repeats {
                jobs.push((b.as_str(), f, r));
            }
        }
    }
    let macroareas: HashMap<&str, String> = branches
        .iter()
        .map(|b| (b.as_str(), branch_macroarea(kb, b)))
        .collect();

    let run_job = |&(branch, fraction, repeat): &(&str, f64, usize)| -> Vec<RunRecord> {
        let split_seed = run_seed(plan.base_seed, "split", branch, repeat);
        let train_seed = run_seed(plan.base_seed, "train", branch, repeat);
        let mut spec = SplitSpec::new(branch, fraction, split_seed);
        spec.eval_fraction = plan.eval_fraction;
        let split = make_branch_split(kb, &spec);
        plan.systems
            .iter()
            .map(|&system| {
                let start = Instant::now();
                let outcome = match &split {
                    Ok(s) => predict_system(&ctx, s, system, train_seed)
                        .and_then(|preds| score(&preds, &s.eval, kb))
                        .map_err(|e| (e.kind().to_owned(), e.to_string())),
                    Err(e) => Err((e.kind().to_owned(), e.to_string())),
                };
                RunRecord {
                    branch: branch.to_owned(),
                    macroarea: macroareas[branch].clone(),
                    fraction,
                    repeat,
                    system,
                    seed: split_seed,
                    outcome,
                    wall_seconds: start.elapsed().as_secs_f64(),
                }
            })
            .collect()
    };

    let mut records: Vec<RunRecord> = if plan.threads == 1 {
        jobs.iter().flat_map(run_job).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(plan.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pool.install(|| jobs.par_iter().flat_map_iter(run_job).collect())
    };
    records.sort_by(|a, b| {
        a.branch
            .cmp(&b.branch)
            .then(a.fraction.total_cmp(&b.fraction))
            .then(a.repeat.cmp(&b.repeat))
            .then(a.system.cmp(&b.system))
    });
    Ok(records)
}

const RECORD_HEADER: &str =
    "branch\tmacroarea\tfraction\trepeat\tsystem\tseed\tstatus\tmicro_f1\taccuracy\tn_eval_cells\tper_area_accuracy\terror";

/// Writes one row per run. Wall time is appended only when `timing` is set,
/// so the default output is identical across executions.
pub fn write_records<W: Write>(records: &[RunRecord], timing: bool, mut out: W) -> Result<()> {
    write!(out, "{RECORD_HEADER}")?;
    if timing {
        write!(out, "\twall_seconds")?;
    }
    writeln!(out)?;
    for r in records {
        write!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t",
            r.branch, r.macroarea, r.fraction, r.repeat, r.system, r.seed
        )?;
        match &r.outcome {
            Ok(rep) => {
                let areas = rep
                    .per_area_accuracy
                    .iter()
                    .map(|(k, v)| format!("{k}={v:.6}"))
                    .collect::<Vec<_>>()
                    .join(";");
                write!(
                    out,
                    "ok\t{:.6}\t{:.6}\t{}\t{areas}\t",
                    rep.micro_f1, rep.accuracy, rep.n_eval_cells
                )?;
            }
            Err((kind, msg)) => {
                let msg = msg.replace(['\t', '\n'], " ");
                write!(out, "failed\t\t\t\t\t{kind}: {msg}")?;
            }
        }
        if timing {
            write!(out, "\t{:.3}", r.wall_seconds)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// A run row as read back from a records file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub branch: String,
    pub macroarea: String,
    pub fraction: f64,
    pub system: String,
    /// `None` for failed runs.
    pub micro_f1: Option<f64>,
}

impl From<&RunRecord> for ScoreRow {
    fn from(r: &RunRecord) -> Self {
        Self {
            branch: r.branch.clone(),
            macroarea: r.macroarea.clone(),
            fraction: r.fraction,
            system: r.system.to_string(),
            micro_f1: r.outcome.as_ref().ok().map(|e| e.micro_f1),
        }
    }
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<ScoreRow>> {
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if n == 0 {
            if !line.starts_with("branch\t") {
                return Err(Error::Format("records file lacks its header".into()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() < 12 {
            return Err(Error::parse(
                Some(n + 1),
                None,
                format!("expected 12 fields, found {}", f.len()),
            ));
        }
        let fraction = f[2].parse().map_err(|_| {
            Error::parse(
                Some(n + 1),
                Some("fraction"),
                format!("'{}' is not a number", f[2]),
            )
        })?;
        let micro_f1 = match f[6] {
            "ok" => Some(f[7].parse().map_err(|_| {
                Error::parse(
                    Some(n + 1),
                    Some("micro_f1"),
                    format!("'{}' is not a number", f[7]),
                )
            })?),
            _ => None,
        };
        rows.push(ScoreRow {
            branch: f[0].to_owned(),
            macroarea: f[1].to_owned(),
            fraction,
            system: f[4].to_owned(),
            micro_f1,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    /// `branch`, `macroarea` or `all`.
    pub scope: &'static str,
    pub key: String,
    pub fraction: f64,
    pub system: String,
    pub n_runs: usize,
    pub n_failed: usize,
    pub mean: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Mean, standard deviation and 95% interval of micro-F1 per branch,
/// per macroarea and over everything, for each fraction and system.
pub fn summarize(rows: &[ScoreRow]) -> Vec<SummaryRow> {
    type Key = (&'static str, String, u64, String);
    let mut groups: BTreeMap<Key, (Vec<f64>, usize)> = BTreeMap::new();
    for r in rows {
        for (scope, key) in [
            ("branch", &r.branch),
            ("macroarea", &r.macroarea),
            ("all", &"All".to_owned()),
        ] {
            let g = groups
                .entry((scope, key.clone(), r.fraction.to_bits(), r.system.clone()))
                .or_default();
            match r.micro_f1 {
                Some(x) => g.0.push(x),
                None => g.1 += 1,
            }
        }
    }
    let order = |s: &str| {
        ["branch", "macroarea", "all"]
            .iter()
            .position(|x| *x == s)
            .unwrap()
    };
    let mut out: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((scope, key, fbits, system), (scores, failed))| {
            let (mean, hw) = aggregate_ci(&scores, 0.95).unwrap_or((f64::NAN, f64::NAN));
            let (lo, hi) = if scores.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                clipped_interval(mean, hw)
            };
            SummaryRow {
                scope,
                key,
                fraction: f64::from_bits(fbits),
                system,
                n_runs: scores.len(),
                n_failed: failed,
                mean,
                sd: sample_sd(&scores),
                ci_low: lo,
                ci_high: hi,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        order(a.scope)
            .cmp(&order(b.scope))
            .then_with(|| a.key.cmp(&b.key))
            .then(a.fraction.total_cmp(&b.fraction))
            .then_with(|| a.system.cmp(&b.system))
    });
    out
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], mut out: W) -> Result<()> {
    writeln!(
        out,
        "scope\tkey\tfraction\tsystem\tn_runs\tn_failed\tmean_f1\tsd\tci95_low\tci95_high"
    )?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
            r.scope,
            r.key,
            r.fraction,
            r.system,
            r.n_runs,
            r.n_failed,
            r.mean,
            r.sd,
            r.ci_low,
            r.ci_high
        )?;
    }
    Ok(())
}
