//! Plain-text `key = value` settings for training and experiments.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated. Every key can also be given as a command-line flag of
//! the same name, which wins over the file.

use std::fs;
use std::path::Path;

use crate::baselines::Distance;
use crate::error::{Error, Result};
use crate::harness::{ExperimentPlan, System, SystemConfig};

/// Known keys with a one-line description, in documentation order.
pub const KEYS: &[(&str, &str)] = &[
    ("epochs", "training epochs (10)"),
    ("batch_size", "minibatch size in cells (64)"),
    ("l2_weight", "Gaussian prior precision, 1/sigma^2 (0.1)"),
    ("learning_rate", "Adam step size (0.001)"),
    ("adam_beta1", "Adam first-moment decay (0.9)"),
    ("adam_beta2", "Adam second-moment decay (0.999)"),
    ("adam_epsilon", "Adam epsilon (1e-8)"),
    ("dim", "embedding dimension (64)"),
    (
        "mode",
        "joint | frozen-external | finetuned-external (joint)",
    ),
    ("regularize", "both | languages-only (both)"),
    ("bias", "per-column bias term, true | false (false)"),
    ("init_std", "initialization standard deviation (0.01)"),
    (
        "prior_center",
        "external | zero: prior mean in finetuned-external mode (external)",
    ),
    ("seed", "base seed (0)"),
    (
        "branches",
        "held-out genera, comma-separated; empty for all",
    ),
    (
        "fractions",
        "in-branch training fractions (0,0.01,0.05,0.1,0.2)",
    ),
    ("repeats", "repeats per branch and fraction (5)"),
    ("systems", "freq, knn, tcf, semisup (freq,tcf)"),
    (
        "eval_fraction",
        "share of in-branch cells held out for evaluation (0.8)",
    ),
    ("threads", "worker threads, 0 for all cores (0)"),
    ("knn_k", "neighbours for the knn baseline (1)"),
    ("knn_distance", "cosine | euclidean (cosine)"),
    (
        "semisup_mode",
        "mode used by the semisup system (finetuned-external)",
    ),
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub plan: ExperimentPlan,
    pub systems: SystemConfig,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value '{value}' for {key}")))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.systems.train;
        let v = value.trim();
        match key {
            "epochs" => t.epochs = parse(key, v)?,
            "batch_size" => t.batch_size = parse(key, v)?,
            "l2_weight" => t.l2_weight = parse(key, v)?,
            "learning_rate" => t.learning_rate = parse(key, v)?,
            "adam_beta1" => t.adam_beta1 = parse(key, v)?,
            "adam_beta2" => t.adam_beta2 = parse(key, v)?,
            "adam_epsilon" => t.adam_epsilon = parse(key, v)?,
            "dim" => t.dim = parse(key, v)?,
            "mode" => t.mode = v.parse()?,
            "regularize" => t.regularize = v.parse()?,
            "bias" => t.bias = parse(key, v)?,
            "init_std" => t.init_std = parse(key, v)?,
            "prior_center" => t.prior_center = v.parse()?,
            "seed" => {
                let seed: u64 = parse(key, v)?;
                t.seed = seed;
                self.plan.base_seed = seed;
            }
            "branches" => self.plan.branches = list(key, v)?,
            "fractions" => self.plan.fractions = list(key, v)?,
            "repeats" => self.plan.repeats = parse(key, v)?,
            "systems" => self.plan.systems = list::<System>(key, v)?,
            "eval_fraction" => self.plan.eval_fraction = parse(key, v)?,
            "threads" => self.plan.threads = parse(key, v)?,
            "knn_k" => self.systems.knn_k = parse(key, v)?,
            "knn_distance" => self.systems.knn_distance = v.parse::<Distance>()?,
            "semisup_mode" => self.systems.semisup_mode = v.parse()?,
            _ => return Err(Error::InvalidArgument(format!("unknown setting '{key}'"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(Some(n + 1), None, "expected key = value"))?;
            self.set(k.trim(), v).map_err(|e| match e {
                Error::InvalidArgument(m) => Error::parse(Some(n + 1), Some(k.trim()), m),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        self.apply_text(&fs::read_to_string(path)?)
    }
}
