//! Binary parameter matrix derived from a multi-valued KB.
//!
//! A feature with three or more values becomes a one-hot group with one column
//! per value (in value-id order). A feature with fewer values becomes a single
//! column that is 1 iff the language takes the feature's second value.

use std::collections::HashMap;
use std::io::Write;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::kb::TypologicalKb;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    OneHot,
    SingleBinary,
}

/// The columns that encode one original feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnGroup {
    pub feature_id: String,
    pub columns: Range<usize>,
    pub kind: GroupKind,
    /// Value inventory of the feature, ascending.
    pub value_ids: Vec<u32>,
}

/// Languages x binary columns, with an observation mask of the same shape.
///
/// Unobserved entries hold 0 and must be ignored by every consumer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    language_ids: Vec<String>,
    groups: Vec<ColumnGroup>,
    n_cols: usize,
    entries: Vec<u8>,
    mask: Vec<bool>,
    column_group: Vec<usize>,
    group_index: HashMap<String, usize>,
    lang_index: HashMap<String, usize>,
}

/// Builds the binary matrix. Group `g` always encodes `kb.features()[g]`.
pub fn binarize(kb: &TypologicalKb) -> BinaryMatrix {
    let mut groups = Vec::with_capacity(kb.features().len());
    let mut column_group = Vec::new();
    let mut start = 0;
    for (g, f) in kb.features().iter().enumerate() {
        let (kind, width) = if f.values.len() >= 3 {
            (GroupKind::OneHot, f.values.len())
        } else {
            (GroupKind::SingleBinary, 1)
        };
        groups.push(ColumnGroup {
            feature_id: f.id.clone(),
            columns: start..start + width,
            kind,
            value_ids: f.values.iter().map(|v| v.id).collect(),
        });
        column_group.extend(std::iter::repeat_n(g, width));
        start += width;
    }
    let n_rows = kb.languages().len();
    let n_cols = start;
    let mut entries = vec![0u8; n_rows * n_cols];
    let mut mask = vec![false; n_rows * n_cols];
    for (l, f, v) in kb.indexed_cells() {
        let group = &groups[f];
        let row = l * n_cols;
        for c in group.columns.clone() {
            mask[row + c] = true;
        }
        let hot = match group.kind {
            GroupKind::OneHot => {
                Some(group.columns.start + kb.features()[f].value_position(v).unwrap())
            }
            GroupKind::SingleBinary => {
                (group.value_ids.get(1) == Some(&v)).then_some(group.columns.start)
            }
        };
        if let Some(c) = hot {
            entries[row + c] = 1;
        }
    }
    let group_index = groups
        .iter()
        .enumerate()
        .map(|(i, g)| (g.feature_id.clone(), i))
        .collect();
    let language_ids: Vec<String> = kb.languages().iter().map(|l| l.id.clone()).collect();
    let lang_index = language_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i))
        .collect();
    BinaryMatrix {
        language_ids,
        groups,
        n_cols,
        entries,
        mask,
        column_group,
        group_index,
        lang_index,
    }
}

impl BinaryMatrix {
    pub fn n_rows(&self) -> usize {
        self.language_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn language_ids(&self) -> &[String] {
        &self.language_ids
    }

    pub fn groups(&self) -> &[ColumnGroup] {
        &self.groups
    }

    pub fn entry(&self, row: usize, col: usize) -> u8 {
        self.entries[row * self.n_cols + col]
    }

    pub fn observed(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.n_cols + col]
    }

    pub fn row_index(&self, language_id: &str) -> Option<usize> {
        self.lang_index.get(language_id).copied()
    }

    pub fn group_index(&self, feature_id: &str) -> Option<usize> {
        self.group_index.get(feature_id).copied()
    }

    pub fn group(&self, feature_id: &str) -> Result<&ColumnGroup> {
        self.group_index(feature_id)
            .map(|g| &self.groups[g])
            .ok_or_else(|| Error::Lookup(format!("unknown feature '{feature_id}'")))
    }

    pub fn group_of_column(&self, col: usize) -> usize {
        self.column_group[col]
    }

    /// Column encoding `value_id` of `feature_id`. Single-binary features map
    /// every value to their only column.
    pub fn column_of(&self, feature_id: &str, value_id: u32) -> Result<usize> {
        let g = self.group(feature_id)?;
        let pos = g.value_ids.binary_search(&value_id).map_err(|_| {
            Error::Lookup(format!("feature '{feature_id}' has no value {value_id}"))
        })?;
        Ok(match g.kind {
            GroupKind::OneHot => g.columns.start + pos,
            GroupKind::SingleBinary => g.columns.start,
        })
    }

    /// Stable column label: `feature:value` for one-hot columns, `feature` otherwise.
    pub fn column_label(&self, col: usize) -> String {
        let g = &self.groups[self.column_group[col]];
        match g.kind {
            GroupKind::OneHot => format!("{}:{}", g.feature_id, g.value_ids[col - g.columns.start]),
            GroupKind::SingleBinary => g.feature_id.clone(),
        }
    }

    pub fn column_labels(&self) -> Vec<String> {
        (0..self.n_cols).map(|c| self.column_label(c)).collect()
    }

    /// Expands `(row, group)` pairs into the `(row, column)` cells they cover.
    pub fn expand<'a>(
        &'a self,
        pairs: impl IntoIterator<Item = (usize, usize)> + 'a,
    ) -> impl Iterator<Item = (usize, usize)> + 'a {
        pairs
            .into_iter()
            .flat_map(move |(r, g)| self.groups[g].columns.clone().map(move |c| (r, c)))
    }

    /// Tab-separated dump with `?` for unobserved entries.
    pub fn write_debug<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "language")?;
        for c in 0..self.n_cols {
            write!(out, "\t{}", self.column_label(c))?;
        }
        writeln!(out)?;
        for (r, id) in self.language_ids.iter().enumerate() {
            write!(out, "{id}")?;
            for c in 0..self.n_cols {
                if self.observed(r, c) {
                    write!(out, "\t{}", self.entry(r, c))?;
                } else {
                    write!(out, "\t?")?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
