//! Comparison systems: most-frequent value per feature, and nearest
//! neighbours in a language embedding space.

use std::collections::{BTreeMap, HashMap};

use crate::embeddings::LanguageEmbeddingTable;
use crate::error::{Error, Result};
use crate::kb::TypologicalKb;

fn gold(kb: &TypologicalKb, lang: &str, feat: &str) -> Result<u32> {
    kb.value(lang, feat)
        .ok_or_else(|| Error::Lookup(format!("training cell ({lang}, {feat}) is not observed")))
}

/// Modal training value per feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreqModel {
    modes: HashMap<String, u32>,
}

impl FreqModel {
    pub fn fit<A, B>(kb: &TypologicalKb, train: impl IntoIterator<Item = (A, B)>) -> Result<Self>
    where
        A: AsRef<str>,
        B: AsRef<str>,
    {
        let mut counts: HashMap<String, BTreeMap<u32, usize>> = HashMap::new();
        for (l, f) in train {
            let (l, f) = (l.as_ref(), f.as_ref());
            let v = gold(kb, l, f)?;
            *counts
                .entry(f.to_owned())
                .or_default()
                .entry(v)
                .or_default() += 1;
        }
        let modes = counts
            .into_iter()
            .map(|(f, c)| {
                // ascending value ids, so strict `>` keeps the smallest among ties
                let mut best = (0u32, 0usize);
                for (v, n) in c {
                    if n > best.1 {
                        best = (v, n);
                    }
                }
                (f, best.0)
            })
            .collect();
        Ok(Self { modes })
    }

    pub fn predict(&self, _language_id: &str, feature_id: &str) -> Result<u32> {
        self.modes.get(feature_id).copied().ok_or_else(|| {
            Error::NoPrediction(format!("feature {feature_id} has no training cells"))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Distance {
    #[default]
    Cosine,
    Euclidean,
}

impl std::str::FromStr for Distance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Self::Cosine),
            "euclidean" => Ok(Self::Euclidean),
            _ => Err(Error::InvalidArgument(format!("unknown distance '{s}'"))),
        }
    }
}

impl Distance {
    pub fn between(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Self::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if na == 0.0 || nb == 0.0 {
                    1.0
                } else {
                    1.0 - dot / (na * nb)
                }
            }
            Self::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// k-nearest-neighbour classifier, one per feature, over a language embedding table.
///
/// Training languages absent from the table cannot be placed and are skipped.
#[derive(Debug, Clone)]
pub struct KnnModel {
    table: LanguageEmbeddingTable,
    k: usize,
    distance: Distance,
    /// feature -> (language, value), sorted by language id
    examples: HashMap<String, Vec<(String, u32)>>,
}

impl KnnModel {
    pub fn fit<A, B>(
        table: LanguageEmbeddingTable,
        kb: &TypologicalKb,
        train: impl IntoIterator<Item = (A, B)>,
        k: usize,
        distance: Distance,
    ) -> Result<Self>
    where
        A: AsRef<str>,
        B: AsRef<str>,
    {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let mut examples: HashMap<String, Vec<(String, u32)>> = HashMap::new();
        for (l, f) in train {
            let (l, f) = (l.as_ref(), f.as_ref());
            let v = gold(kb, l, f)?;
            if table.get(l).is_some() {
                examples
                    .entry(f.to_owned())
                    .or_default()
                    .push((l.to_owned(), v));
            }
        }
        for ex in examples.values_mut() {
            ex.sort();
        }
        Ok(Self {
            table,
            k,
            distance,
            examples,
        })
    }

    pub fn predict(&self, language_id: &str, feature_id: &str) -> Result<u32> {
        let q = self
            .table
            .get(language_id)
            .ok_or_else(|| Error::Lookup(format!("language '{language_id}' has no embedding")))?;
        let ex = self.examples.get(feature_id).ok_or_else(|| {
            Error::NoPrediction(format!("no training language has feature {feature_id}"))
        })?;
        let mut ranked: Vec<(f64, &str, u32)> = ex
            .iter()
            .map(|(l, v)| {
                (
                    self.distance.between(q, self.table.get(l).unwrap()),
                    l.as_str(),
                    *v,
                )
            })
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        let mut votes: BTreeMap<u32, usize> = BTreeMap::new();
        for &(_, _, v) in ranked.iter().take(self.k) {
            *votes.entry(v).or_default() += 1;
        }
        let mut best = (0u32, 0usize);
        for (v, n) in votes {
            if n > best.1 {
                best = (v, n);
            }
        }
        Ok(best.0)
    }
}
