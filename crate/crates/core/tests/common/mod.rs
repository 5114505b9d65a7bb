#![allow(dead_code)]

use proptest::prelude::*;
use rand::Rng as _;

use tcf_core::kb::{Feature, FeatureValue, Language, TypologicalKb};
use tcf_core::rng;

/// Shape of a random knowledge base.
#[derive(Debug, Clone)]
pub struct KbShape {
    pub seed: u64,
    pub n_languages: usize,
    pub n_genera: usize,
    pub n_features: usize,
    pub max_values: u32,
    pub density: f64,
}

pub fn random_kb(s: &KbShape) -> TypologicalKb {
    let mut r = rng::seeded(s.seed);
    let languages = (0..s.n_languages)
        .map(|i| Language {
            id: format!("L{i}"),
            name: format!("Sprache {i} ü"),
            genus: format!("G{}", i % s.n_genera),
            family: format!("F{}", i % 2),
            macroarea: ["Africa", "Eurasia", ""][i % 3].into(),
        })
        .collect();
    let features: Vec<Feature> = (0..s.n_features)
        .map(|f| {
            let k = r.random_range(1..=s.max_values);
            Feature {
                id: format!("{}A", f + 1),
                name: format!("feature {f}"),
                area: ["Phonology", "Word Order"][f % 2].into(),
                // sparse ids, as in real inventories
                values: (1..=k)
                    .map(|v| FeatureValue {
                        id: 2 * v - 1,
                        name: format!("v{v}"),
                    })
                    .collect(),
            }
        })
        .collect();
    let mut cells = Vec::new();
    for l in 0..s.n_languages {
        for f in &features {
            if r.random::<f64>() < s.density {
                let v = f.values[r.random_range(0..f.values.len())].id;
                cells.push((format!("L{l}"), f.id.clone(), v));
            }
        }
    }
    TypologicalKb::new(languages, features, cells).unwrap()
}

pub fn kb_shape() -> impl Strategy<Value = KbShape> {
    (
        any::<u64>(),
        2usize..12,
        1usize..4,
        1usize..8,
        1u32..6,
        0.2f64..1.0,
    )
        .prop_map(
            |(seed, n_languages, n_genera, n_features, max_values, density)| KbShape {
                seed,
                n_languages,
                n_genera,
                n_features,
                max_values,
                density,
            },
        )
}

pub fn kb_strategy() -> impl Strategy<Value = TypologicalKb> {
    kb_shape().prop_map(|s| random_kb(&s))
}
