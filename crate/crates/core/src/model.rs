//! Logistic matrix factorization with a Gaussian prior.
//!
//! Each language row has an embedding `λ`, each binary column an embedding
//! `e`; the probability that a column is on for a language is
//! `sigmoid(e · λ)`. Training minimizes the negative log joint: binary
//! cross-entropy over observed training cells plus
//! `l2_weight / 2 * ‖θ‖²`, which is the Gaussian prior with variance
//! `1 / l2_weight`. When language embeddings start from an external table
//! and are fine-tuned, their prior can be centred on the external vectors,
//! making the penalty `l2_weight / 2 * ‖λ - λ̃‖²`.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use crate::binarize::BinaryMatrix;
use crate::embeddings::LanguageEmbeddingTable;
use crate::error::{Error, Result};
use crate::optim::Adam;
use crate::rng;
use crate::split::SplitResult;

/// Floor applied to probabilities inside logarithms.
pub const LOG_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Language and column embeddings are both learned.
    Joint,
    /// Language embeddings are fixed to an external table; only columns are learned.
    FrozenExternal,
    /// Language embeddings start from an external table and are then learned.
    FinetunedExternal,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Joint => "joint",
            Mode::FrozenExternal => "frozen-external",
            Mode::FinetunedExternal => "finetuned-external",
        }
    }

    fn code(self) -> u8 {
        match self {
            Mode::Joint => 0,
            Mode::FrozenExternal => 1,
            Mode::FinetunedExternal => 2,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        Ok(match c {
            0 => Mode::Joint,
            1 => Mode::FrozenExternal,
            2 => Mode::FinetunedExternal,
            _ => return Err(Error::Format(format!("unknown mode code {c}"))),
        })
    }

    pub fn uses_external(self) -> bool {
        self != Mode::Joint
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(Mode::Joint),
            "frozen-external" | "frozen" => Ok(Mode::FrozenExternal),
            "finetuned-external" | "finetuned" => Ok(Mode::FinetunedExternal),
            _ => Err(Error::InvalidArgument(format!("unknown mode '{s}'"))),
        }
    }
}

/// Which embedding matrices the L2 penalty covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularize {
    Both,
    LanguagesOnly,
}

impl std::str::FromStr for Regularize {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(Regularize::Both),
            "languages-only" => Ok(Regularize::LanguagesOnly),
            _ => Err(Error::InvalidArgument(format!(
                "unknown regularize setting '{s}'"
            ))),
        }
    }
}

/// Mean of the language-embedding prior in fine-tuned external mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorCenter {
    /// Centred on the external vectors.
    #[default]
    External,
    Zero,
}

impl std::str::FromStr for PriorCenter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "external" => Ok(Self::External),
            "zero" => Ok(Self::Zero),
            _ => Err(Error::InvalidArgument(format!(
                "unknown prior center '{s}'"
            ))),
        }
    }
}

/// The penalty part of the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub l2_weight: f64,
    pub regularize: Regularize,
}

impl Default for Objective {
    fn default() -> Self {
        Self {
            l2_weight: 0.1,
            regularize: Regularize::Both,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub mode: Mode,
    pub dim: usize,
    pub language_ids: Vec<String>,
    pub column_ids: Vec<String>,
    /// Row-major `languages x dim`.
    pub lang_emb: Vec<f64>,
    /// Row-major `columns x dim`.
    pub param_emb: Vec<f64>,
    /// Optional per-column bias, off by default.
    pub bias: Option<Vec<f64>>,
    /// Prior mean of `lang_emb` (same layout); `None` means zero.
    pub lang_prior: Option<Vec<f64>>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl ModelParams {
    pub fn zeros(
        mode: Mode,
        dim: usize,
        language_ids: Vec<String>,
        column_ids: Vec<String>,
        bias: bool,
    ) -> Self {
        let (nl, nc) = (language_ids.len(), column_ids.len());
        Self {
            mode,
            dim,
            language_ids,
            column_ids,
            lang_emb: vec![0.0; nl * dim],
            param_emb: vec![0.0; nc * dim],
            bias: bias.then(|| vec![0.0; nc]),
            lang_prior: None,
        }
    }

    pub fn n_languages(&self) -> usize {
        self.language_ids.len()
    }

    pub fn n_columns(&self) -> usize {
        self.column_ids.len()
    }

    pub fn lang_row(&self, l: usize) -> &[f64] {
        &self.lang_emb[l * self.dim..(l + 1) * self.dim]
    }

    pub fn param_row(&self, i: usize) -> &[f64] {
        &self.param_emb[i * self.dim..(i + 1) * self.dim]
    }

    pub fn logit(&self, l: usize, i: usize) -> f64 {
        let b = self.bias.as_ref().map_or(0.0, |b| b[i]);
        dot(self.lang_row(l), self.param_row(i)) + b
    }

    pub fn predict_prob(&self, l: usize, i: usize) -> Result<f64> {
        if l >= self.n_languages() || i >= self.n_columns() {
            return Err(Error::Lookup(format!(
                "index ({l}, {i}) outside {}x{} model",
                self.n_languages(),
                self.n_columns()
            )));
        }
        Ok(sigmoid(self.logit(l, i)))
    }

    /// Errors unless rows and columns line up with `matrix`.
    pub fn check_compatible(&self, matrix: &BinaryMatrix) -> Result<()> {
        if self.language_ids != matrix.language_ids() {
            return Err(Error::Dimension(
                "model languages differ from matrix rows".into(),
            ));
        }
        if self.column_ids != matrix.column_labels() {
            return Err(Error::Dimension(
                "model columns differ from matrix columns".into(),
            ));
        }
        Ok(())
    }

    fn penalized(&self, obj: &Objective) -> (bool, bool) {
        let lang = self.mode != Mode::FrozenExternal;
        let param = obj.regularize == Regularize::Both;
        (lang, param)
    }

    pub fn all_finite(&self) -> bool {
        self.lang_emb
            .iter()
            .chain(&self.param_emb)
            .chain(self.bias.iter().flatten())
            .all(|x| x.is_finite())
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Negative log joint over `cells` (`(row, column)` pairs, all observed).
pub fn nll_loss(
    params: &ModelParams,
    matrix: &BinaryMatrix,
    cells: &[(usize, usize)],
    obj: &Objective,
) -> f64 {
    // -ln(sigmoid(z)) = softplus(-z) and -ln(1 - sigmoid(z)) = softplus(z),
    // capped where the probability would fall under LOG_EPS
    let cap = -LOG_EPS.ln();
    let mut loss = 0.0;
    for &(l, i) in cells {
        let z = params.logit(l, i);
        let nll = if matrix.entry(l, i) == 1 {
            softplus(-z)
        } else {
            softplus(z)
        };
        loss += nll.min(cap);
    }
    loss + penalty(params, obj)
}

fn penalty(params: &ModelParams, obj: &Objective) -> f64 {
    let (lang, param) = params.penalized(obj);
    let mut s = 0.0;
    if lang {
        s += match &params.lang_prior {
            Some(mu) => params
                .lang_emb
                .iter()
                .zip(mu)
                .map(|(x, m)| (x - m) * (x - m))
                .sum(),
            None => sq_norm(&params.lang_emb),
        };
    }
    if param {
        s += sq_norm(&params.param_emb);
    }
    0.5 * obj.l2_weight * s
}

/// Gradient with the same layout as [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub lang_emb: Vec<f64>,
    pub param_emb: Vec<f64>,
    pub bias: Option<Vec<f64>>,
}

impl Gradient {
    fn zeros_like(p: &ModelParams) -> Self {
        Self {
            lang_emb: vec![0.0; p.lang_emb.len()],
            param_emb: vec![0.0; p.param_emb.len()],
            bias: p.bias.as_ref().map(|b| vec![0.0; b.len()]),
        }
    }

    fn clear(&mut self) {
        self.lang_emb.fill(0.0);
        self.param_emb.fill(0.0);
        if let Some(b) = &mut self.bias {
            b.fill(0.0);
        }
    }
}

/// Analytic gradient of [`nll_loss`]. Frozen language embeddings get zero gradient.
pub fn grad(
    params: &ModelParams,
    matrix: &BinaryMatrix,
    cells: &[(usize, usize)],
    obj: &Objective,
) -> Gradient {
    let mut g = Gradient::zeros_like(params);
    accumulate(params, matrix, cells, obj, 1.0, &mut g);
    g
}

/// Compares [`grad`] with central finite differences of [`nll_loss`] on a
/// small random instance drawn from `seed`: a random mode, bias and prior,
/// every observed cell. Returns the largest relative error over all
/// parameters, with denominators floored at
/// [`GRAD_CHECK_FLOOR`](crate::embeddings::charlm::GRAD_CHECK_FLOOR).
pub fn mf_grad_check(seed: u64) -> f64 {
    use crate::embeddings::charlm::relative_error;
    use rand::Rng as _;

    let mut r = rng::seeded(seed);
    let synth = crate::synth::branch_structured(&crate::synth::BranchConfig {
        n_branches: 2,
        languages_per_branch: 3,
        n_features: 4,
        dim: 3,
        seed,
        ..Default::default()
    });
    let m = crate::binarize::binarize(&synth.kb);
    let mode = [Mode::Joint, Mode::FrozenExternal, Mode::FinetunedExternal][r.random_range(0..3)];
    let dim = r.random_range(1..=4);
    let mut p = ModelParams::zeros(
        mode,
        dim,
        m.language_ids().to_vec(),
        m.column_labels(),
        r.random_bool(0.5),
    );
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let mut fill = |v: &mut [f64]| v.iter_mut().for_each(|x| *x = normal.sample(&mut r));
    fill(&mut p.lang_emb);
    fill(&mut p.param_emb);
    if let Some(b) = &mut p.bias {
        fill(b);
    }
    if mode == Mode::FinetunedExternal {
        let mut mu = vec![0.0; p.lang_emb.len()];
        fill(&mut mu);
        p.lang_prior = Some(mu);
    }
    let obj = Objective {
        l2_weight: r.random_range(0.0..2.0),
        regularize: if r.random_bool(0.5) {
            Regularize::Both
        } else {
            Regularize::LanguagesOnly
        },
    };
    let cells: Vec<(usize, usize)> = (0..m.n_rows())
        .flat_map(|l| (0..m.n_cols()).map(move |i| (l, i)))
        .filter(|&(l, i)| m.observed(l, i))
        .collect();
    let g = grad(&p, &m, &cells, &obj);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut probe =
        |p: &mut ModelParams, get: fn(&mut ModelParams) -> &mut [f64], analytic: &[f64]| {
            for (k, &a) in analytic.iter().enumerate() {
                let x = get(p)[k];
                get(p)[k] = x + h;
                let up = nll_loss(p, &m, &cells, &obj);
                get(p)[k] = x - h;
                let down = nll_loss(p, &m, &cells, &obj);
                get(p)[k] = x;
                worst = worst.max(relative_error(a, (up - down) / (2.0 * h)));
            }
        };
    if mode == Mode::FrozenExternal {
        // frozen rows are constants: the analytic gradient must be exactly zero
        if g.lang_emb.iter().any(|&x| x != 0.0) {
            return f64::INFINITY;
        }
    } else {
        probe(&mut p, |p| &mut p.lang_emb, &g.lang_emb);
    }
    probe(&mut p, |p| &mut p.param_emb, &g.param_emb);
    if let Some(gb) = &g.bias {
        probe(&mut p, |p| p.bias.as_mut().unwrap(), gb);
    }
    worst
}

/// Adds the data gradient of `cells` plus `penalty_scale` times the penalty gradient.
fn accumulate(
    params: &ModelParams,
    matrix: &BinaryMatrix,
    cells: &[(usize, usize)],
    obj: &Objective,
    penalty_scale: f64,
    g: &mut Gradient,
) {
    let d = params.dim;
    let frozen = params.mode == Mode::FrozenExternal;
    for &(l, i) in cells {
        let r = sigmoid(params.logit(l, i)) - matrix.entry(l, i) as f64;
        let lam = params.lang_row(l);
        let e = params.param_row(i);
        if !frozen {
            for (gk, ek) in g.lang_emb[l * d..(l + 1) * d].iter_mut().zip(e) {
                *gk += r * ek;
            }
        }
        for (gk, lk) in g.param_emb[i * d..(i + 1) * d].iter_mut().zip(lam) {
            *gk += r * lk;
        }
        if let Some(b) = &mut g.bias {
            b[i] += r;
        }
    }
    let (lang, param) = params.penalized(obj);
    let w = obj.l2_weight * penalty_scale;
    if lang && w != 0.0 {
        match &params.lang_prior {
            Some(mu) => {
                for ((gk, x), m) in g.lang_emb.iter_mut().zip(&params.lang_emb).zip(mu) {
                    *gk += w * (x - m);
                }
            }
            None => {
                for (gk, x) in g.lang_emb.iter_mut().zip(&params.lang_emb) {
                    *gk += w * x;
                }
            }
        }
    }
    if param && w != 0.0 {
        for (gk, x) in g.param_emb.iter_mut().zip(&params.param_emb) {
            *gk += w * x;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_weight: f64,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    pub dim: usize,
    pub mode: Mode,
    pub regularize: Regularize,
    pub bias: bool,
    pub init_std: f64,
    pub prior_center: PriorCenter,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 64,
            l2_weight: 0.1,
            learning_rate: 0.001,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            dim: 64,
            mode: Mode::Joint,
            regularize: Regularize::Both,
            bias: false,
            init_std: 0.01,
            prior_center: PriorCenter::External,
        }
    }
}

impl TrainConfig {
    pub fn objective(&self) -> Objective {
        Objective {
            l2_weight: self.l2_weight,
            regularize: self.regularize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.l2_weight.is_finite() && self.l2_weight >= 0.0) {
            return bad("l2_weight must be non-negative");
        }
        if !(self.init_std.is_finite() && self.init_std >= 0.0) {
            return bad("init_std must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: ModelParams,
    /// Full training objective after each epoch.
    pub loss_trace: Vec<f64>,
}

impl TrainOutput {
    pub fn write_loss_trace<W: Write>(&self, mut out: W) -> Result<()> {
        for (e, l) in self.loss_trace.iter().enumerate() {
            writeln!(out, "{}\t{l:?}", e + 1)?;
        }
        Ok(())
    }
}

/// Trains on the split's training pairs; every column of a pair's group is used.
pub fn train(
    matrix: &BinaryMatrix,
    split: &SplitResult,
    config: &TrainConfig,
    external: Option<&LanguageEmbeddingTable>,
) -> Result<TrainOutput> {
    let pairs = split.train_indices(matrix)?;
    train_on_pairs(matrix, &pairs, config, external)
}

/// Trains on `(row, group)` pairs.
pub fn train_on_pairs(
    matrix: &BinaryMatrix,
    pairs: &[(usize, usize)],
    config: &TrainConfig,
    external: Option<&LanguageEmbeddingTable>,
) -> Result<TrainOutput> {
    let cells: Vec<(usize, usize)> = matrix.expand(pairs.iter().copied()).collect();
    train_on_cells(matrix, cells, config, external)
}

/// Minibatch Adam over explicit `(row, column)` cells.
pub fn train_on_cells(
    matrix: &BinaryMatrix,
    mut cells: Vec<(usize, usize)>,
    config: &TrainConfig,
    external: Option<&LanguageEmbeddingTable>,
) -> Result<TrainOutput> {
    config.validate()?;
    if let Some(&(l, i)) = cells.iter().find(|&&(l, i)| !matrix.observed(l, i)) {
        return Err(Error::InvalidArgument(format!(
            "training cell ({l}, {i}) is unobserved"
        )));
    }
    cells.sort_unstable();
    let mut params = initialize(matrix, config, external)?;
    let mut rng = rng::seeded(config.seed);
    // Initialization draws come first so they do not depend on the data.
    let normal =
        Normal::new(0.0, config.init_std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    if !config.mode.uses_external() {
        for x in &mut params.lang_emb {
            *x = normal.sample(&mut rng);
        }
    }
    for x in &mut params.param_emb {
        *x = normal.sample(&mut rng);
    }

    let obj = config.objective();
    let new_adam = |n| {
        Adam::new(
            n,
            config.learning_rate,
            config.adam_beta1,
            config.adam_beta2,
            config.adam_epsilon,
        )
    };
    let mut adam_lang = new_adam(params.lang_emb.len());
    let mut adam_param = new_adam(params.param_emb.len());
    let mut adam_bias = params.bias.as_ref().map(|b| new_adam(b.len()));
    let mut g = Gradient::zeros_like(&params);
    let n = cells.len();
    let mut trace = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        cells.shuffle(&mut rng);
        for batch in cells.chunks(config.batch_size) {
            g.clear();
            accumulate(
                &params,
                matrix,
                batch,
                &obj,
                batch.len() as f64 / n as f64,
                &mut g,
            );
            if params.mode != Mode::FrozenExternal {
                adam_lang.update(&mut params.lang_emb, &g.lang_emb);
            }
            adam_param.update(&mut params.param_emb, &g.param_emb);
            if let (Some(a), Some(b), Some(gb)) = (&mut adam_bias, &mut params.bias, &g.bias) {
                a.update(b, gb);
            }
        }
        trace.push(nll_loss(&params, matrix, &cells, &obj));
    }
    Ok(TrainOutput {
        params,
        loss_trace: trace,
    })
}

fn initialize(
    matrix: &BinaryMatrix,
    config: &TrainConfig,
    external: Option<&LanguageEmbeddingTable>,
) -> Result<ModelParams> {
    let mut params = ModelParams::zeros(
        config.mode,
        config.dim,
        matrix.language_ids().to_vec(),
        matrix.column_labels(),
        config.bias,
    );
    match (config.mode.uses_external(), external) {
        (false, _) => {}
        (true, None) => {
            return Err(Error::InvalidArgument(format!(
                "mode {} needs an external embedding table",
                config.mode.as_str()
            )))
        }
        (true, Some(table)) => {
            if table.dim() != config.dim {
                return Err(Error::Dimension(format!(
                    "embedding table has dimension {}, model dimension is {}",
                    table.dim(),
                    config.dim
                )));
            }
            let d = config.dim;
            for (l, id) in matrix.language_ids().iter().enumerate() {
                let v = table.get(id).ok_or_else(|| {
                    Error::Lookup(format!("language '{id}' missing from embedding table"))
                })?;
                params.lang_emb[l * d..(l + 1) * d].copy_from_slice(v);
            }
            if config.mode == Mode::FinetunedExternal
                && config.prior_center == PriorCenter::External
            {
                params.lang_prior = Some(params.lang_emb.clone());
            }
        }
    }
    Ok(params)
}

const MAGIC: &[u8; 8] = b"TCFMODEL";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Checkpoint layout (all integers little-endian):
///
/// ```text
/// "TCFMODEL" | version u32 | mode u8 | has_bias u8 | has_prior u8 | dim u32
/// n_lang u32 | n_lang x (len u32, utf-8 id)
/// n_cols u32 | n_cols x (len u32, utf-8 id)
/// lang_emb f64[n_lang*dim] | param_emb f64[n_cols*dim] | bias f64[n_cols] if has_bias
/// lang_prior f64[n_lang*dim] if has_prior
/// ```
pub fn save_model<W: Write>(params: &ModelParams, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&[
        params.mode.code(),
        params.bias.is_some() as u8,
        params.lang_prior.is_some() as u8,
    ])?;
    out.write_all(&(params.dim as u32).to_le_bytes())?;
    for ids in [&params.language_ids, &params.column_ids] {
        out.write_all(&(ids.len() as u32).to_le_bytes())?;
        for id in ids {
            out.write_all(&(id.len() as u32).to_le_bytes())?;
            out.write_all(id.as_bytes())?;
        }
    }
    for x in params
        .lang_emb
        .iter()
        .chain(&params.param_emb)
        .chain(params.bias.iter().flatten())
        .chain(params.lang_prior.iter().flatten())
    {
        out.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

struct Cursor<R> {
    inner: R,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(truncated)?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n)
            .map(|_| Ok(f64::from_le_bytes(self.bytes()?)))
            .collect()
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let mut buf = Vec::new();
        (&mut self.inner).take(len as u64).read_to_end(&mut buf)?;
        if buf.len() != len {
            return Err(Error::Format("truncated checkpoint".into()));
        }
        String::from_utf8(buf).map_err(|_| Error::Format("id is not valid utf-8".into()))
    }
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated checkpoint".into())
    } else {
        Error::Io(e)
    }
}

pub fn load_model<R: Read>(reader: R) -> Result<ModelParams> {
    let mut c = Cursor { inner: reader };
    if &c.bytes::<8>()? != MAGIC {
        return Err(Error::Format("not a model checkpoint (bad magic)".into()));
    }
    let version = c.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let [mode, has_bias, has_prior] = c.bytes::<3>()?;
    let mode = Mode::from_code(mode)?;
    let dim = c.u32()? as usize;
    let mut ids = [Vec::new(), Vec::new()];
    for list in &mut ids {
        let n = c.u32()? as usize;
        for _ in 0..n {
            list.push(c.string()?);
        }
    }
    let [language_ids, column_ids] = ids;
    let lang_emb = c.f64s(language_ids.len() * dim)?;
    let param_emb = c.f64s(column_ids.len() * dim)?;
    let bias = match has_bias {
        0 => None,
        1 => Some(c.f64s(column_ids.len())?),
        b => return Err(Error::Format(format!("bad bias flag {b}"))),
    };
    let lang_prior = match has_prior {
        0 => None,
        1 => Some(c.f64s(language_ids.len() * dim)?),
        b => return Err(Error::Format(format!("bad prior flag {b}"))),
    };
    Ok(ModelParams {
        mode,
        dim,
        language_ids,
        column_ids,
        lang_emb,
        param_emb,
        bias,
        lang_prior,
    })
}
