//! Synthetic data with known generating structure, for tests, demos and the
//! acceptance suite.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::embeddings::{Corpus, LanguageEmbeddingTable};
use crate::kb::{Feature, FeatureValue, Language, TypologicalKb};
use crate::rng::{self, Rng};

const MACROAREAS: [&str; 4] = ["Africa", "Eurasia", "Papunesia", "South America"];

fn normal_vec(rng: &mut Rng, n: usize, sd: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn feature(id: String, n_values: u32) -> Feature {
    Feature {
        name: format!("feature {id}"),
        id,
        area: String::new(),
        values: (1..=n_values)
            .map(|v| FeatureValue {
                id: v,
                name: format!("value {v}"),
            })
            .collect(),
    }
}

/// A knowledge base together with the embeddings that generated it.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub kb: TypologicalKb,
    /// Ground-truth language vectors, in KB language order.
    pub lang_emb: Vec<Vec<f64>>,
    /// Ground-truth value vectors, per feature then value (one per binary feature).
    pub feat_emb: Vec<Vec<f64>>,
    /// Cells drawn from the same model but left out of the KB, as
    /// `(language index, feature index, value)`.
    pub hidden: Vec<(usize, usize, u32)>,
}

impl Synthetic {
    /// The ground-truth vectors plus isotropic noise of standard deviation `noise`.
    pub fn noisy_embeddings(&self, noise: f64, seed: u64) -> LanguageEmbeddingTable {
        let mut rng = rng::seeded(seed);
        let dim = self.lang_emb.first().map_or(0, Vec::len);
        LanguageEmbeddingTable::from_rows(
            dim,
            self.kb
                .languages()
                .iter()
                .zip(&self.lang_emb)
                .map(|(l, v)| {
                    let n = normal_vec(&mut rng, dim, noise);
                    (l.id.clone(), v.iter().zip(n).map(|(a, b)| a + b).collect())
                }),
        )
        .expect("synthetic ids are unique")
    }
}

/// Binary features drawn from `sigmoid(scale * lambda.e / sqrt(dim))` with
/// standard normal ground-truth embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankConfig {
    pub n_languages: usize,
    pub n_features: usize,
    pub dim: usize,
    pub observed: f64,
    pub scale: f64,
    pub seed: u64,
}

impl Default for LowRankConfig {
    fn default() -> Self {
        Self {
            n_languages: 50,
            n_features: 60,
            dim: 8,
            observed: 0.8,
            scale: 4.0,
            seed: 0,
        }
    }
}

pub fn low_rank_binary(cfg: &LowRankConfig) -> Synthetic {
    let mut rng = rng::seeded(cfg.seed);
    let lang_emb: Vec<Vec<f64>> = (0..cfg.n_languages)
        .map(|_| normal_vec(&mut rng, cfg.dim, 1.0))
        .collect();
    let feat_emb: Vec<Vec<f64>> = (0..cfg.n_features)
        .map(|_| normal_vec(&mut rng, cfg.dim, 1.0))
        .collect();
    let languages: Vec<Language> = (0..cfg.n_languages)
        .map(|i| Language {
            id: format!("l{i:03}"),
            name: format!("language {i}"),
            genus: format!("G{}", i / 5),
            family: format!("F{}", i / 10),
            macroarea: MACROAREAS[i % MACROAREAS.len()].into(),
        })
        .collect();
    let features: Vec<Feature> = (0..cfg.n_features)
        .map(|f| feature(format!("{}A", f + 1), 2))
        .collect();
    let norm = (cfg.dim as f64).sqrt();
    let (mut cells, mut hidden) = (Vec::new(), Vec::new());
    for (l, le) in lang_emb.iter().enumerate() {
        for (f, fe) in feat_emb.iter().enumerate() {
            let observed = rng.random::<f64>() < cfg.observed;
            let p = crate::model::sigmoid(cfg.scale * dot(le, fe) / norm);
            let v = if rng.random::<f64>() < p { 2 } else { 1 };
            if observed {
                cells.push((languages[l].id.clone(), features[f].id.clone(), v));
            } else {
                hidden.push((l, f, v));
            }
        }
    }
    let kb = TypologicalKb::new(languages, features, cells).expect("synthetic KB is consistent");
    Synthetic {
        kb,
        lang_emb,
        feat_emb,
        hidden,
    }
}

/// Languages grouped into branches whose members scatter around a branch
/// centre; multi-valued features drawn from a softmax over value embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchConfig {
    pub n_branches: usize,
    pub languages_per_branch: usize,
    pub n_features: usize,
    /// Value counts cycle through this list.
    pub values_per_feature: Vec<u32>,
    pub dim: usize,
    /// Spread of languages around their branch centre (centres are standard normal).
    pub within_branch_sd: f64,
    pub observed: f64,
    pub scale: f64,
    pub seed: u64,
}

impl Default for BranchConfig {
    fn default() -> Self {
        Self {
            n_branches: 8,
            languages_per_branch: 12,
            n_features: 40,
            values_per_feature: vec![2, 3, 4, 2, 5],
            dim: 8,
            within_branch_sd: 0.5,
            observed: 0.8,
            scale: 4.0,
            seed: 0,
        }
    }
}

pub fn branch_structured(cfg: &BranchConfig) -> Synthetic {
    let mut rng = rng::seeded(cfg.seed);
    let centres: Vec<Vec<f64>> = (0..cfg.n_branches)
        .map(|_| normal_vec(&mut rng, cfg.dim, 1.0))
        .collect();
    let mut languages = Vec::new();
    let mut lang_emb = Vec::new();
    for (b, c) in centres.iter().enumerate() {
        for i in 0..cfg.languages_per_branch {
            let noise = normal_vec(&mut rng, cfg.dim, cfg.within_branch_sd);
            lang_emb.push(
                c.iter()
                    .zip(noise)
                    .map(|(a, n)| a + n)
                    .collect::<Vec<f64>>(),
            );
            languages.push(Language {
                id: format!("b{b:02}l{i:02}"),
                name: format!("branch {b} language {i}"),
                genus: format!("Branch{b:02}"),
                family: format!("Family{}", b / 2),
                macroarea: MACROAREAS[b % MACROAREAS.len()].into(),
            });
        }
    }
    let counts: Vec<u32> = (0..cfg.n_features)
        .map(|f| cfg.values_per_feature[f % cfg.values_per_feature.len()])
        .collect();
    let features: Vec<Feature> = counts
        .iter()
        .enumerate()
        .map(|(f, &k)| {
            let mut feat = feature(format!("{}A", f + 1), k);
            feat.area = ["Phonology", "Morphology", "Word Order"][f % 3].into();
            feat
        })
        .collect();
    let value_emb: Vec<Vec<Vec<f64>>> = counts
        .iter()
        .map(|&k| (0..k).map(|_| normal_vec(&mut rng, cfg.dim, 1.0)).collect())
        .collect();
    let norm = (cfg.dim as f64).sqrt();
    let (mut cells, mut hidden) = (Vec::new(), Vec::new());
    for (l, le) in lang_emb.iter().enumerate() {
        for (f, vals) in value_emb.iter().enumerate() {
            let observed = rng.random::<f64>() < cfg.observed;
            let logits: Vec<f64> = vals
                .iter()
                .map(|ve| cfg.scale * dot(le, ve) / norm)
                .collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
            let mut u = rng.random::<f64>() * w.iter().sum::<f64>();
            let mut v = w.len() - 1;
            for (k, wk) in w.iter().enumerate() {
                if u < *wk {
                    v = k;
                    break;
                }
                u -= wk;
            }
            if observed {
                cells.push((
                    languages[l].id.clone(),
                    features[f].id.clone(),
                    v as u32 + 1,
                ));
            } else {
                hidden.push((l, f, v as u32 + 1));
            }
        }
    }
    let kb = TypologicalKb::new(languages, features, cells).expect("synthetic KB is consistent");
    let feat_emb = value_emb.into_iter().flatten().collect();
    Synthetic {
        kb,
        lang_emb,
        feat_emb,
        hidden,
    }
}

/// Text streams where the languages of one group share a first-order Markov
/// chain over a small alphabet. Returns the corpus and each language's group.
pub fn markov_corpus(
    n_processes: usize,
    languages_per_process: usize,
    length: usize,
    alphabet: &str,
    seed: u64,
) -> (Corpus, Vec<usize>) {
    let symbols: Vec<char> = alphabet.chars().collect();
    let v = symbols.len();
    let mut rng = rng::seeded(seed);
    // peaked transitions: each row puts most mass on two successors
    let chains: Vec<Vec<Vec<f64>>> = (0..n_processes)
        .map(|_| {
            (0..v)
                .map(|_| {
                    let mut row: Vec<f64> = (0..v).map(|_| 0.05 * rng.random::<f64>()).collect();
                    row[rng.random_range(0..v)] += 1.0;
                    row[rng.random_range(0..v)] += 0.5;
                    let s: f64 = row.iter().sum();
                    row.iter().map(|x| x / s).collect()
                })
                .collect()
        })
        .collect();
    let mut streams = Vec::new();
    let mut groups = Vec::new();
    for (p, chain) in chains.iter().enumerate() {
        for i in 0..languages_per_process {
            let mut state = rng.random_range(0..v);
            let mut text = String::with_capacity(length);
            for _ in 0..length {
                text.push(symbols[state]);
                let mut u = rng.random::<f64>();
                let mut next = v - 1;
                for (k, &pk) in chain[state].iter().enumerate() {
                    if u < pk {
                        next = k;
                        break;
                    }
                    u -= pk;
                }
                state = next;
            }
            streams.push((format!("p{p}x{i}"), text));
            groups.push(p);
        }
    }
    (Corpus { streams }, groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let s = low_rank_binary(&LowRankConfig::default());
        assert_eq!(s.kb.languages().len(), 50);
        assert_eq!(s.kb.features().len(), 60);
        let share = s.kb.n_cells() as f64 / 3000.0;
        assert!((share - 0.8).abs() < 0.05);
        let b = branch_structured(&BranchConfig::default());
        assert_eq!(b.kb.genera().len(), 8);
        assert!(b.kb.check_integrity().is_empty());
        let (c, g) = markov_corpus(2, 3, 100, "abcd", 1);
        assert_eq!(c.streams.len(), 6);
        assert_eq!(g, vec![0, 0, 0, 1, 1, 1]);
        assert!(c.streams.iter().all(|(_, t)| t.chars().count() == 100));
    }

    #[test]
    fn deterministic() {
        let a = branch_structured(&BranchConfig::default());
        let b = branch_structured(&BranchConfig::default());
        assert_eq!(a.kb, b.kb);
    }
}
