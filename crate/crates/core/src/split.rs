//! Branch-held-out train/eval partitions.
//!
//! In-branch observed `(language, feature)` pairs are shuffled once with the
//! split seed. The first `round(eval_fraction * N)` become the evaluation set;
//! a prefix of the remaining held-in pool, sized relative to the pool, is
//! revealed for training. Because both sets are prefixes of one order, the
//! training set at a smaller in-branch fraction is contained in the training
//! set at a larger one, and the evaluation set does not depend on it.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};

use rand::seq::SliceRandom;

use crate::binarize::BinaryMatrix;
use crate::error::{Error, Result};
use crate::kb::TypologicalKb;
use crate::rng;

pub type Pair = (String, String);

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub held_out_branch: String,
    pub eval_fraction: f64,
    pub in_branch_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(branch: impl Into<String>, in_branch_fraction: f64, seed: u64) -> Self {
        Self {
            held_out_branch: branch.into(),
            eval_fraction: 0.8,
            in_branch_fraction,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub spec: SplitSpec,
    pub train: BTreeSet<Pair>,
    pub eval: BTreeSet<Pair>,
}

/// Half-up rounding of a non-negative count. The small nudge absorbs
/// representation error such as `0.8 * 10 = 8.000000000000002`.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor() as usize
}

pub fn make_branch_split(kb: &TypologicalKb, spec: &SplitSpec) -> Result<SplitResult> {
    for (name, f) in [
        ("eval_fraction", spec.eval_fraction),
        ("in_branch_fraction", spec.in_branch_fraction),
    ] {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidArgument(format!(
                "{name} = {f} is outside [0, 1]"
            )));
        }
    }
    if !kb
        .languages()
        .iter()
        .any(|l| l.genus == spec.held_out_branch)
    {
        return Err(Error::Lookup(format!(
            "no branch '{}' in KB",
            spec.held_out_branch
        )));
    }

    let mut in_branch = Vec::new();
    let mut train = BTreeSet::new();
    for (lang, feat, _) in kb.cells() {
        let pair = (lang.to_owned(), feat.to_owned());
        if kb.language(lang).unwrap().genus == spec.held_out_branch {
            in_branch.push(pair);
        } else {
            train.insert(pair);
        }
    }
    if in_branch.is_empty() {
        return Err(Error::DegenerateSplit(format!(
            "branch '{}' has no observed cells",
            spec.held_out_branch
        )));
    }

    in_branch.shuffle(&mut rng::seeded(spec.seed));
    let n_eval = round_half_up(spec.eval_fraction * in_branch.len() as f64).min(in_branch.len());
    let pool = &in_branch[n_eval..];
    let n_revealed = round_half_up(spec.in_branch_fraction * pool.len() as f64).min(pool.len());
    train.extend(pool[..n_revealed].iter().cloned());
    let eval = in_branch[..n_eval].iter().cloned().collect();
    Ok(SplitResult {
        spec: spec.clone(),
        train,
        eval,
    })
}

impl SplitResult {
    /// Training pairs as `(matrix row, group)` indices.
    pub fn train_indices(&self, matrix: &BinaryMatrix) -> Result<Vec<(usize, usize)>> {
        index_pairs(&self.train, matrix)
    }

    pub fn eval_indices(&self, matrix: &BinaryMatrix) -> Result<Vec<(usize, usize)>> {
        index_pairs(&self.eval, matrix)
    }

    /// Number of in-branch pairs revealed for training.
    pub fn n_in_branch_train(&self, kb: &TypologicalKb) -> usize {
        self.train
            .iter()
            .filter(|(l, _)| {
                kb.language(l)
                    .is_some_and(|l| l.genus == self.spec.held_out_branch)
            })
            .count()
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let s = &self.spec;
        writeln!(
            out,
            "# held_out_branch={}\teval_fraction={}\tin_branch_fraction={}\tseed={}",
            s.held_out_branch, s.eval_fraction, s.in_branch_fraction, s.seed
        )?;
        for (set, pairs) in [("train", &self.train), ("eval", &self.eval)] {
            for (l, f) in pairs {
                writeln!(out, "{set}\t{l}\t{f}")?;
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let header = header
            .strip_prefix("# ")
            .ok_or_else(|| Error::parse(Some(1), None, "missing split header"))?;
        let mut spec = SplitSpec::new("", 0.0, 0);
        for kv in header.split('\t') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::parse(Some(1), None, format!("bad header field '{kv}'")))?;
            let bad = |_| Error::parse(Some(1), Some(k), format!("bad value '{v}'"));
            match k {
                "held_out_branch" => spec.held_out_branch = v.to_owned(),
                "eval_fraction" => spec.eval_fraction = v.parse().map_err(bad)?,
                "in_branch_fraction" => spec.in_branch_fraction = v.parse().map_err(bad)?,
                "seed" => {
                    spec.seed = v
                        .parse()
                        .map_err(|_| Error::parse(Some(1), Some(k), "bad seed"))?
                }
                _ => return Err(Error::parse(Some(1), Some(k), "unknown header key")),
            }
        }
        let mut split = SplitResult {
            spec,
            train: BTreeSet::new(),
            eval: BTreeSet::new(),
        };
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let set = match f.as_slice() {
                ["train", ..] if f.len() == 3 => &mut split.train,
                ["eval", ..] if f.len() == 3 => &mut split.eval,
                _ => {
                    return Err(Error::parse(
                        Some(n + 2),
                        None,
                        "expected set<TAB>language<TAB>feature",
                    ))
                }
            };
            set.insert((f[1].to_owned(), f[2].to_owned()));
        }
        Ok(split)
    }
}

fn index_pairs(pairs: &BTreeSet<Pair>, matrix: &BinaryMatrix) -> Result<Vec<(usize, usize)>> {
    pairs
        .iter()
        .map(|(l, f)| {
            let r = matrix
                .row_index(l)
                .ok_or_else(|| Error::Lookup(format!("unknown language '{l}'")))?;
            let g = matrix
                .group_index(f)
                .ok_or_else(|| Error::Lookup(format!("unknown feature '{f}'")))?;
            Ok((r, g))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    InBothSets(Pair),
    UnknownPair(Pair),
    TrainUnobserved(Pair),
    EvalUnobserved(Pair),
    EvalOutOfBranch(Pair),
    OutOfBranchNotInTrain(Pair),
    /// A column group is only partly observed or partly assigned for a language.
    GroupStraddle(Pair),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (what, (l, feat)) = match self {
            Violation::InBothSets(p) => ("pair in both train and eval", p),
            Violation::UnknownPair(p) => ("pair references unknown language or feature", p),
            Violation::TrainUnobserved(p) => ("train pair is not observed", p),
            Violation::EvalUnobserved(p) => ("eval pair is not observed", p),
            Violation::EvalOutOfBranch(p) => ("eval pair outside held-out branch", p),
            Violation::OutOfBranchNotInTrain(p) => ("out-of-branch pair missing from train", p),
            Violation::GroupStraddle(p) => ("column group straddles train/eval", p),
        };
        write!(f, "{what}: ({l}, {feat})")
    }
}

/// Checks every split invariant. An empty result means the split is valid.
pub fn validate_split(
    kb: &TypologicalKb,
    matrix: &BinaryMatrix,
    split: &SplitResult,
) -> Vec<Violation> {
    let branch = &split.spec.held_out_branch;
    let mut out = Vec::new();
    for p in split.train.intersection(&split.eval) {
        out.push(Violation::InBothSets(p.clone()));
    }
    for (lang, feat, _) in kb.cells() {
        if kb.language(lang).unwrap().genus != *branch {
            let p = (lang.to_owned(), feat.to_owned());
            if !split.train.contains(&p) {
                out.push(Violation::OutOfBranchNotInTrain(p));
            }
        }
    }

    // Per-(row, column) assignment: 1 = train, 2 = eval.
    let mut assigned = vec![0u8; matrix.n_rows() * matrix.n_cols()];
    for (set_tag, pairs) in [(1u8, &split.train), (2u8, &split.eval)] {
        for p in pairs {
            let (l, f) = p;
            let (Some(r), Some(g), Some(lang)) =
                (matrix.row_index(l), matrix.group_index(f), kb.language(l))
            else {
                out.push(Violation::UnknownPair(p.clone()));
                continue;
            };
            if kb.value(l, f).is_none() {
                out.push(if set_tag == 1 {
                    Violation::TrainUnobserved(p.clone())
                } else {
                    Violation::EvalUnobserved(p.clone())
                });
            }
            if set_tag == 2 && lang.genus != *branch {
                out.push(Violation::EvalOutOfBranch(p.clone()));
            }
            let cols = matrix.groups()[g].columns.clone();
            let mut straddles = false;
            for c in cols.clone() {
                let slot = &mut assigned[r * matrix.n_cols() + c];
                straddles |= *slot != 0 && *slot != set_tag;
                *slot |= set_tag;
            }
            let observed = cols.clone().filter(|&c| matrix.observed(r, c)).count();
            straddles |= observed != 0 && observed != cols.len();
            if straddles {
                out.push(Violation::GroupStraddle(p.clone()));
            }
        }
    }
    out
}
