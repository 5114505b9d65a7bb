//! Multilingual character-level LSTM language model.
//!
//! At every timestep the input to the first LSTM layer is the character
//! embedding concatenated with the embedding of the text's language. The
//! stacked LSTM feeds a softmax over the alphabet that predicts the next
//! character. After training, the language embedding rows form a
//! [`LanguageEmbeddingTable`].
//!
//! All weights live in one flat vector; [`Layout`] records where each tensor
//! starts. Training uses truncated backpropagation: each stream is cut into
//! windows of `bptt` predictions and every window starts from a zero state.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::LanguageEmbeddingTable;
use crate::error::{Error, Result};
use crate::optim::Adam;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct CharLmConfig {
    pub char_emb_dim: usize,
    pub lang_emb_dim: usize,
    pub hidden_dim: usize,
    pub layers: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub max_epochs: usize,
    /// Epochs without dev improvement before stopping.
    pub patience: usize,
    /// Truncated backpropagation window, in predicted characters.
    pub bptt: usize,
    /// Tail share of every stream held out for early stopping.
    pub dev_fraction: f64,
    pub max_alphabet: usize,
    /// Weights start uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
    /// Global gradient-norm clip per update; 0 disables clipping.
    pub clip_norm: f64,
}

impl Default for CharLmConfig {
    fn default() -> Self {
        Self {
            char_emb_dim: 16,
            lang_emb_dim: 8,
            hidden_dim: 32,
            layers: 2,
            learning_rate: 0.005,
            seed: 0,
            max_epochs: 30,
            patience: 3,
            bptt: 64,
            dev_fraction: 0.1,
            max_alphabet: 512,
            init_scale: 0.1,
            clip_norm: 5.0,
        }
    }
}

impl CharLmConfig {
    /// 1024-unit LSTMs, 128-d characters, 64-d languages.
    pub fn paper_scale() -> Self {
        Self {
            char_emb_dim: 128,
            lang_emb_dim: 64,
            hidden_dim: 1024,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.char_emb_dim == 0
            || self.lang_emb_dim == 0
            || self.hidden_dim == 0
            || self.layers == 0
        {
            return Err(Error::InvalidArgument(
                "language model dimensions must be positive".into(),
            ));
        }
        if self.bptt == 0 {
            return Err(Error::InvalidArgument("bptt must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dev_fraction) {
            return Err(Error::InvalidArgument(
                "dev_fraction must be in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Per-language training text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub streams: Vec<(String, String)>,
}

impl Corpus {
    /// Reads every `<language_id>.txt` in `dir`, ordered by language id.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut streams = Vec::new();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("bad corpus file name {}", path.display()))
                })?
                .to_owned();
            streams.push((id, fs::read_to_string(&path)?));
        }
        streams.sort();
        Ok(Self { streams })
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layout {
    vocab: usize,
    char_dim: usize,
    lang_dim: usize,
    hidden: usize,
    n_languages: usize,
    char_emb: usize,
    lang_emb: usize,
    /// (weight offset, bias offset, input width) per layer; weights are `4H x (in + H)`.
    layers: Vec<(usize, usize, usize)>,
    out_w: usize,
    out_b: usize,
    total: usize,
}

impl Layout {
    fn new(vocab: usize, n_languages: usize, cfg: &CharLmConfig) -> Self {
        let (c, g, h) = (cfg.char_emb_dim, cfg.lang_emb_dim, cfg.hidden_dim);
        let mut off = 0;
        let mut take = |n: usize| {
            let o = off;
            off += n;
            o
        };
        let char_emb = take(vocab * c);
        let lang_emb = take(n_languages * g);
        let layers = (0..cfg.layers)
            .map(|k| {
                let input = if k == 0 { c + g } else { h };
                let w = take(4 * h * (input + h));
                let b = take(4 * h);
                (w, b, input)
            })
            .collect();
        let out_w = take(vocab * h);
        let out_b = take(vocab);
        Self {
            vocab,
            char_dim: c,
            lang_dim: g,
            hidden: h,
            n_languages,
            char_emb,
            lang_emb,
            layers,
            out_w,
            out_b,
            total: off,
        }
    }
}

/// Cached activations of one layer at one timestep.
struct Step {
    /// `[input; h_prev]`
    x: Vec<f64>,
    gates: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    crate::model::sigmoid(z)
}

/// A multilingual character LSTM.
#[derive(Debug, Clone, PartialEq)]
pub struct CharLm {
    alphabet: Vec<char>,
    char_index: HashMap<char, usize>,
    languages: Vec<String>,
    layout: Layout,
    weights: Vec<f64>,
}

impl CharLm {
    pub fn new(alphabet: Vec<char>, languages: Vec<String>, cfg: &CharLmConfig) -> Result<Self> {
        cfg.validate()?;
        if alphabet.len() > cfg.max_alphabet {
            return Err(Error::InvalidArgument(format!(
                "alphabet has {} symbols, cap is {}",
                alphabet.len(),
                cfg.max_alphabet
            )));
        }
        let layout = Layout::new(alphabet.len(), languages.len(), cfg);
        let mut rng = rng::seeded(cfg.seed);
        let s = cfg.init_scale;
        let mut weights: Vec<f64> = (0..layout.total)
            .map(|_| {
                if s > 0.0 {
                    rng.random_range(-s..=s)
                } else {
                    0.0
                }
            })
            .collect();
        let h = layout.hidden;
        for &(_, b, _) in &layout.layers {
            weights[b..b + 4 * h].fill(0.0);
            // forget gate
            weights[b + h..b + 2 * h].fill(1.0);
        }
        weights[layout.out_b..layout.out_b + layout.vocab].fill(0.0);
        let char_index = alphabet.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Ok(Self {
            alphabet,
            char_index,
            languages,
            layout,
            weights,
        })
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn n_weights(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn language_embedding(&self, lang: usize) -> &[f64] {
        let g = self.layout.lang_dim;
        &self.weights[self.layout.lang_emb + lang * g..self.layout.lang_emb + (lang + 1) * g]
    }

    pub fn language_embedding_mut(&mut self, lang: usize) -> &mut [f64] {
        let g = self.layout.lang_dim;
        let o = self.layout.lang_emb + lang * g;
        &mut self.weights[o..o + g]
    }

    pub fn embedding_table(&self) -> LanguageEmbeddingTable {
        LanguageEmbeddingTable::from_rows(
            self.layout.lang_dim,
            self.languages
                .iter()
                .enumerate()
                .map(|(l, id)| (id.clone(), self.language_embedding(l).to_vec())),
        )
        .expect("language ids are unique")
    }

    /// Maps text to symbol ids; characters outside the alphabet are an error.
    pub fn encode(&self, text: &str) -> Result<Vec<usize>> {
        text.chars()
            .map(|c| {
                self.char_index
                    .get(&c)
                    .copied()
                    .ok_or_else(|| Error::Lookup(format!("character {c:?} not in alphabet")))
            })
            .collect()
    }

    /// Cross-entropy (nats) of predicting `seq[1..]` from `seq[..len-1]` in language `lang`,
    /// starting from a zero state. Adds the gradient into `grad` when given.
    pub fn sequence_loss(&self, lang: usize, seq: &[usize], grad: Option<&mut [f64]>) -> f64 {
        let ly = &self.layout;
        let (h, v) = (ly.hidden, ly.vocab);
        let w = &self.weights;
        let steps = seq.len().saturating_sub(1);
        if steps == 0 {
            return 0.0;
        }
        let n_layers = ly.layers.len();
        let mut caches: Vec<Vec<Step>> = (0..n_layers).map(|_| Vec::with_capacity(steps)).collect();
        let mut probs: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let mut hs = vec![vec![0.0; h]; n_layers];
        let mut cs = vec![vec![0.0; h]; n_layers];
        let mut loss = 0.0;
        let lang_vec = &w[ly.lang_emb + lang * ly.lang_dim..ly.lang_emb + (lang + 1) * ly.lang_dim];

        for t in 0..steps {
            let ch = seq[t];
            let mut input: Vec<f64> = Vec::with_capacity(ly.char_dim + ly.lang_dim);
            input.extend_from_slice(
                &w[ly.char_emb + ch * ly.char_dim..ly.char_emb + (ch + 1) * ly.char_dim],
            );
            input.extend_from_slice(lang_vec);
            for (k, &(wo, bo, in_dim)) in ly.layers.iter().enumerate() {
                let mut x = input;
                x.extend_from_slice(&hs[k]);
                let cols = in_dim + h;
                let mut gates = vec![0.0; 4 * h];
                for (r, z) in gates.iter_mut().enumerate() {
                    let row = &w[wo + r * cols..wo + (r + 1) * cols];
                    *z = w[bo + r] + row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
                }
                for j in 0..h {
                    gates[j] = sigmoid(gates[j]);
                    gates[h + j] = sigmoid(gates[h + j]);
                    gates[2 * h + j] = gates[2 * h + j].tanh();
                    gates[3 * h + j] = sigmoid(gates[3 * h + j]);
                }
                let c_prev = std::mem::take(&mut cs[k]);
                let mut c = vec![0.0; h];
                let mut tanh_c = vec![0.0; h];
                let mut h_new = vec![0.0; h];
                for j in 0..h {
                    c[j] = gates[h + j] * c_prev[j] + gates[j] * gates[2 * h + j];
                    tanh_c[j] = c[j].tanh();
                    h_new[j] = gates[3 * h + j] * tanh_c[j];
                }
                cs[k] = c;
                hs[k] = h_new.clone();
                caches[k].push(Step {
                    x,
                    gates,
                    c_prev,
                    tanh_c,
                });
                input = h_new;
            }
            let top = &hs[n_layers - 1];
            let mut logits: Vec<f64> = (0..v)
                .map(|r| {
                    let row = &w[ly.out_w + r * h..ly.out_w + (r + 1) * h];
                    w[ly.out_b + r] + row.iter().zip(top).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for z in &mut logits {
                *z = (*z - max).exp();
                sum += *z;
            }
            for z in &mut logits {
                *z /= sum;
            }
            loss -= logits[seq[t + 1]].ln();
            probs.push(logits);
        }

        let Some(g) = grad else { return loss };
        let mut dh_next = vec![vec![0.0; h]; n_layers];
        let mut dc_next = vec![vec![0.0; h]; n_layers];
        for t in (0..steps).rev() {
            // softmax output
            let mut dout = probs[t].clone();
            dout[seq[t + 1]] -= 1.0;
            let top = &caches[n_layers - 1][t];
            let top_h: Vec<f64> = (0..h)
                .map(|j| top.gates[3 * h + j] * top.tanh_c[j])
                .collect();
            let mut dh_above = vec![0.0; h];
            for (r, &d) in dout.iter().enumerate() {
                g[ly.out_b + r] += d;
                let row = ly.out_w + r * h;
                for j in 0..h {
                    g[row + j] += d * top_h[j];
                    dh_above[j] += d * w[row + j];
                }
            }
            for k in (0..n_layers).rev() {
                let (wo, bo, in_dim) = ly.layers[k];
                let cols = in_dim + h;
                let st = &caches[k][t];
                let mut dz = vec![0.0; 4 * h];
                for j in 0..h {
                    let (i, f, gg, o) = (
                        st.gates[j],
                        st.gates[h + j],
                        st.gates[2 * h + j],
                        st.gates[3 * h + j],
                    );
                    let dh = dh_above[j] + dh_next[k][j];
                    let dc = dc_next[k][j] + dh * o * (1.0 - st.tanh_c[j] * st.tanh_c[j]);
                    dz[j] = dc * gg * i * (1.0 - i);
                    dz[h + j] = dc * st.c_prev[j] * f * (1.0 - f);
                    dz[2 * h + j] = dc * i * (1.0 - gg * gg);
                    dz[3 * h + j] = dh * st.tanh_c[j] * o * (1.0 - o);
                    dc_next[k][j] = dc * f;
                }
                let mut dx = vec![0.0; cols];
                for (r, &d) in dz.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    g[bo + r] += d;
                    let row = wo + r * cols;
                    for q in 0..cols {
                        g[row + q] += d * st.x[q];
                        dx[q] += d * w[row + q];
                    }
                }
                dh_next[k].copy_from_slice(&dx[in_dim..]);
                dh_above = dx[..in_dim].to_vec();
            }
            // dh_above now holds the gradient of the concatenated first-layer input
            let ch = seq[t];
            for q in 0..ly.char_dim {
                g[ly.char_emb + ch * ly.char_dim + q] += dh_above[q];
            }
            for q in 0..ly.lang_dim {
                g[ly.lang_emb + lang * ly.lang_dim + q] += dh_above[ly.char_dim + q];
            }
        }
        loss
    }

    /// Perplexity over windows `(language, symbols)`, each from a zero state.
    pub fn perplexity<'a>(&self, windows: impl IntoIterator<Item = (usize, &'a [usize])>) -> f64 {
        let (mut nll, mut n) = (0.0, 0usize);
        for (lang, seq) in windows {
            nll += self.sequence_loss(lang, seq, None);
            n += seq.len().saturating_sub(1);
        }
        if n == 0 {
            1.0
        } else {
            (nll / n as f64).exp()
        }
    }
}

/// Per-language symbol streams split into train and dev slices.
#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub alphabet: Vec<char>,
    pub languages: Vec<String>,
    pub train: Vec<Vec<usize>>,
    pub dev: Vec<Vec<usize>>,
}

/// Builds the shared alphabet and cuts the final `dev_fraction` of each stream off for dev.
pub fn prepare_corpus(corpus: &Corpus, cfg: &CharLmConfig) -> Result<PreparedCorpus> {
    cfg.validate()?;
    if corpus.streams.len() < 2 {
        return Err(Error::InvalidArgument("need at least two languages".into()));
    }
    let mut alphabet = BTreeSet::new();
    for (id, text) in &corpus.streams {
        if text.chars().count() < 4 {
            return Err(Error::InvalidArgument(format!(
                "stream for '{id}' is empty or too short"
            )));
        }
        alphabet.extend(text.chars());
    }
    if alphabet.len() > cfg.max_alphabet {
        return Err(Error::InvalidArgument(format!(
            "alphabet has {} symbols, cap is {}",
            alphabet.len(),
            cfg.max_alphabet
        )));
    }
    let alphabet: Vec<char> = alphabet.into_iter().collect();
    let index: HashMap<char, usize> = alphabet.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut languages = Vec::new();
    let (mut train, mut dev) = (Vec::new(), Vec::new());
    for (id, text) in &corpus.streams {
        if languages.contains(id) {
            return Err(Error::Integrity(format!(
                "duplicate language '{id}' in corpus"
            )));
        }
        let ids: Vec<usize> = text.chars().map(|c| index[&c]).collect();
        let n_dev =
            ((ids.len() as f64 * cfg.dev_fraction).round() as usize).clamp(2, ids.len() - 2);
        let cut = ids.len() - n_dev;
        train.push(ids[..cut].to_vec());
        dev.push(ids[cut..].to_vec());
        languages.push(id.clone());
    }
    Ok(PreparedCorpus {
        alphabet,
        languages,
        train,
        dev,
    })
}

/// Consecutive windows of up to `bptt` predictions; adjacent windows share one symbol.
pub fn windows(stream: &[usize], bptt: usize) -> Vec<&[usize]> {
    let mut out = Vec::new();
    let mut start = 0;
    while start + 1 < stream.len() {
        let end = (start + bptt + 1).min(stream.len());
        out.push(&stream[start..end]);
        start += bptt;
    }
    out
}

#[derive(Debug, Clone)]
pub struct CharLmRun {
    pub table: LanguageEmbeddingTable,
    /// Dev perplexity before training, then after each epoch.
    pub dev_perplexity: Vec<f64>,
    pub best_epoch: usize,
    pub model: CharLm,
}

/// Trains the language model with Adam and per-epoch early stopping, returning
/// the language embeddings from the epoch with the lowest dev perplexity.
pub fn train_char_lm(corpus: &Corpus, cfg: &CharLmConfig) -> Result<CharLmRun> {
    let data = prepare_corpus(corpus, cfg)?;
    let mut model = CharLm::new(data.alphabet.clone(), data.languages.clone(), cfg)?;
    let dev_windows: Vec<(usize, &[usize])> = data
        .dev
        .iter()
        .enumerate()
        .flat_map(|(l, s)| windows(s, cfg.bptt).into_iter().map(move |w| (l, w)))
        .collect();
    let mut train_windows: Vec<(usize, &[usize])> = data
        .train
        .iter()
        .enumerate()
        .flat_map(|(l, s)| windows(s, cfg.bptt).into_iter().map(move |w| (l, w)))
        .collect();

    let mut rng = rng::seeded(cfg.seed ^ 0x005e_ed0f_c4a7);
    let mut adam = Adam::with_defaults(model.n_weights(), cfg.learning_rate);
    let mut grad = vec![0.0; model.n_weights()];
    let mut trace = vec![model.perplexity(dev_windows.iter().copied())];
    let mut best = (trace[0], 0usize, model.clone());
    for epoch in 1..=cfg.max_epochs {
        train_windows.shuffle(&mut rng);
        for &(lang, seq) in &train_windows {
            grad.fill(0.0);
            let n = (seq.len() - 1) as f64;
            model.sequence_loss(lang, seq, Some(&mut grad));
            grad.iter_mut().for_each(|x| *x /= n);
            if cfg.clip_norm > 0.0 {
                let norm = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > cfg.clip_norm {
                    let s = cfg.clip_norm / norm;
                    grad.iter_mut().for_each(|x| *x *= s);
                }
            }
            adam.update(&mut model.weights, &grad);
        }
        let ppl = model.perplexity(dev_windows.iter().copied());
        trace.push(ppl);
        if ppl < best.0 {
            best = (ppl, epoch, model.clone());
        } else if epoch - best.1 >= cfg.patience {
            break;
        }
    }
    let (_, best_epoch, model) = best;
    Ok(CharLmRun {
        table: model.embedding_table(),
        dev_perplexity: trace,
        best_epoch,
        model,
    })
}

/// Shape of the network used by [`lm_grad_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckConfig {
    pub hidden_dim: usize,
    pub char_emb_dim: usize,
    pub lang_emb_dim: usize,
    pub layers: usize,
    pub alphabet_size: usize,
    pub languages: usize,
    pub seq_len: usize,
    pub seed: u64,
    /// Central-difference step.
    pub step: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 4,
            char_emb_dim: 3,
            lang_emb_dim: 2,
            layers: 2,
            alphabet_size: 3,
            languages: 2,
            seq_len: 6,
            seed: 0,
            step: 1e-5,
        }
    }
}

/// Denominator floor for relative gradient errors; below it errors are effectively absolute.
pub const GRAD_CHECK_FLOOR: f64 = 1e-3;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR)
}

/// Compares the analytic gradient of the summed sequence cross-entropy (one
/// random sequence per language) with central differences on every weight.
/// Returns the largest relative error.
pub fn lm_grad_check(cfg: &GradCheckConfig) -> Result<f64> {
    let lm_cfg = CharLmConfig {
        char_emb_dim: cfg.char_emb_dim,
        lang_emb_dim: cfg.lang_emb_dim,
        hidden_dim: cfg.hidden_dim,
        layers: cfg.layers,
        seed: cfg.seed,
        init_scale: 0.5,
        ..CharLmConfig::default()
    };
    let alphabet: Vec<char> = (0..cfg.alphabet_size as u32)
        .map(|i| char::from_u32('a' as u32 + i).unwrap())
        .collect();
    let languages: Vec<String> = (0..cfg.languages).map(|l| format!("lang{l}")).collect();
    let mut model = CharLm::new(alphabet, languages, &lm_cfg)?;
    let mut rng = rng::seeded(cfg.seed.wrapping_add(1));
    let seqs: Vec<Vec<usize>> = (0..cfg.languages)
        .map(|_| {
            (0..cfg.seq_len)
                .map(|_| rng.random_range(0..cfg.alphabet_size.max(1)))
                .collect()
        })
        .collect();
    let total = |m: &CharLm, grad: Option<&mut [f64]>| -> f64 {
        match grad {
            Some(g) => seqs
                .iter()
                .enumerate()
                .map(|(l, s)| m.sequence_loss(l, s, Some(&mut *g)))
                .sum(),
            None => seqs
                .iter()
                .enumerate()
                .map(|(l, s)| m.sequence_loss(l, s, None))
                .sum(),
        }
    };
    let mut analytic = vec![0.0; model.n_weights()];
    total(&model, Some(&mut analytic));
    let mut worst: f64 = 0.0;
    for (k, &a) in analytic.iter().enumerate() {
        let orig = model.weights[k];
        model.weights[k] = orig + cfg.step;
        let up = total(&model, None);
        model.weights[k] = orig - cfg.step;
        let down = total(&model, None);
        model.weights[k] = orig;
        let numeric = (up - down) / (2.0 * cfg.step);
        worst = worst.max(relative_error(a, numeric));
    }
    Ok(worst)
}
