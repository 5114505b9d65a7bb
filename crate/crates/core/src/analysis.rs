//! Descriptive exports: correlations between binary columns and per-branch
//! value distributions.

use std::collections::BTreeMap;
use std::io::Write;

use crate::binarize::BinaryMatrix;
use crate::error::{Error, Result};
use crate::kb::TypologicalKb;

/// Symmetric correlation matrix; `None` marks pairs without enough common,
/// non-constant observations.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    values: Vec<Option<f64>>,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.values[a * self.len() + b]
    }

    /// Tab-separated square matrix with a header row; missing entries are `NA`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "column\t{}", self.labels.join("\t"))?;
        for (a, label) in self.labels.iter().enumerate() {
            write!(out, "{label}")?;
            for b in 0..self.len() {
                match self.get(a, b) {
                    Some(r) => write!(out, "\t{r:.6}")?,
                    None => write!(out, "\tNA")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Pearson (phi) correlation of two columns over the rows where both are observed.
pub fn column_correlation(matrix: &BinaryMatrix, a: usize, b: usize) -> Option<f64> {
    let (mut n, mut sa, mut sb, mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for r in 0..matrix.n_rows() {
        if matrix.observed(r, a) && matrix.observed(r, b) {
            let (x, y) = (matrix.entry(r, a) as f64, matrix.entry(r, b) as f64);
            n += 1.0;
            sa += x;
            sb += y;
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
    }
    if n < 2.0 {
        return None;
    }
    let cov = sab - sa * sb / n;
    let va = saa - sa * sa / n;
    let vb = sbb - sb * sb / n;
    if va <= 0.0 || vb <= 0.0 {
        return None;
    }
    Some((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

/// Pairwise-complete correlations between the columns named by `labels`
/// (as produced by [`BinaryMatrix::column_label`]).
pub fn correlations(matrix: &BinaryMatrix, labels: &[&str]) -> Result<CorrelationMatrix> {
    let all = matrix.column_labels();
    let cols = labels
        .iter()
        .map(|l| {
            all.iter()
                .position(|x| x == l)
                .ok_or_else(|| Error::Lookup(format!("unknown column '{l}'")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let n = cols.len();
    let mut values = vec![None; n * n];
    for i in 0..n {
        for j in i..n {
            let r = if i == j {
                column_correlation(matrix, cols[i], cols[i]).map(|_| 1.0)
            } else {
                column_correlation(matrix, cols[i], cols[j])
            };
            values[i * n + j] = r;
            values[j * n + i] = r;
        }
    }
    Ok(CorrelationMatrix {
        labels: labels.iter().map(|s| s.to_string()).collect(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LanguageFilter {
    Genus(String),
    Family(String),
}

impl LanguageFilter {
    fn matches(&self, lang: &crate::kb::Language) -> bool {
        match self {
            Self::Genus(g) => &lang.genus == g,
            Self::Family(f) => &lang.family == f,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueShare {
    pub feature_id: String,
    pub value_id: u32,
    pub value_name: String,
    pub count: usize,
    pub share: f64,
}

/// Observed value counts and shares per feature among the filtered languages.
/// Features unobserved in the selection are omitted.
pub fn value_distributions(kb: &TypologicalKb, filter: &LanguageFilter) -> Result<Vec<ValueShare>> {
    let selected: Vec<usize> = kb
        .languages()
        .iter()
        .enumerate()
        .filter(|(_, l)| filter.matches(l))
        .map(|(i, _)| i)
        .collect();
    if selected.is_empty() {
        return Err(Error::Lookup(format!("no language matches {filter:?}")));
    }
    let mut out = Vec::new();
    for (f, feat) in kb.features().iter().enumerate() {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for &l in &selected {
            if let Some(v) = kb.value_at(l, f) {
                *counts.entry(v).or_default() += 1;
            }
        }
        let total: usize = counts.values().sum();
        for (v, c) in counts {
            out.push(ValueShare {
                feature_id: feat.id.clone(),
                value_id: v,
                value_name: feat.value_name(v).unwrap_or_default().to_owned(),
                count: c,
                share: c as f64 / total as f64,
            });
        }
    }
    Ok(out)
}

pub fn write_distributions<W: Write>(rows: &[ValueShare], mut out: W) -> Result<()> {
    writeln!(out, "feature_id\tvalue_id\tvalue_name\tcount\tshare")?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:.6}",
            r.feature_id, r.value_id, r.value_name, r.count, r.share
        )?;
    }
    Ok(())
}
