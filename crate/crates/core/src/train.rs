//! Skip-gram training over walk corpora.
//!
//! Two output layouts: `Classic` shares one output matrix across the window,
//! `Structured` keeps one output matrix per relative position, so the model
//! can tell `p` right after a subject from `p` two tokens later.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::embeddings::Embeddings;
use crate::walk::WalkCorpus;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Classic,
    Structured,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Classic => "classic",
            Mode::Structured => "structured",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classic" => Ok(Mode::Classic),
            "structured" => Ok(Mode::Structured),
            other => Err(format!("unknown mode '{other}' (expected classic or structured)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SoftmaxMode {
    NegativeSampling,
    /// Exact softmax over the whole vocabulary; only for small vocabularies.
    FullSoftmax,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub min_count: u64,
    pub seed: u64,
    pub softmax: SoftmaxMode,
    /// Largest vocabulary allowed with `FullSoftmax`.
    pub full_softmax_cap: usize,
    /// 1 trains deterministically; more threads update shared weights
    /// without locks, so results vary slightly between runs.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::Classic,
            dim: 100,
            window: 5,
            epochs: 5,
            negatives: 5,
            learning_rate: 0.025,
            min_count: 1,
            seed: 42,
            softmax: SoftmaxMode::NegativeSampling,
            full_softmax_cap: 1000,
            threads: 1,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if self.dim == 0 || self.window == 0 {
            return bad("dim and window must be positive");
        }
        if self.softmax == SoftmaxMode::NegativeSampling && self.negatives == 0 {
            return bad("negative sampling needs at least one negative");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.threads == 0 {
            return bad("threads must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("corpus has no tokens in the vocabulary")]
    EmptyCorpus,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vocabulary of {size} tokens exceeds the full-softmax cap of {cap}")]
    VocabularyTooLarge { size: usize, cap: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
}

/// Token inventory ordered by descending count, then token.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    pub min_count: u64,
}

impl Vocabulary {
    pub fn from_counts(counts: impl IntoIterator<Item = (String, u64)>, min_count: u64) -> Vocabulary {
        let mut entries: Vec<(String, u64)> = counts.into_iter().filter(|(_, c)| *c >= min_count.max(1)).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let index = entries.iter().enumerate().map(|(i, (t, _))| (t.clone(), i as u32)).collect();
        let (tokens, counts) = entries.into_iter().unzip();
        Vocabulary { tokens, counts, index, min_count }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, i: u32) -> &str {
        &self.tokens[i as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, i: u32) -> u64 {
        self.counts[i as usize]
    }

    /// Maps each entry of a corpus token table to its vocabulary index.
    pub fn corpus_map(&self, corpus: &WalkCorpus) -> Vec<Option<u32>> {
        corpus.tokens().iter().map(|t| self.get(t)).collect()
    }

    /// Walk `i` of the corpus in vocabulary indices, out-of-vocabulary
    /// tokens dropped.
    fn encode(map: &[Option<u32>], walk: &[u32], out: &mut Vec<u32>) {
        out.clear();
        out.extend(walk.iter().filter_map(|t| map[*t as usize]));
    }
}

pub fn build_vocabulary(corpus: &WalkCorpus, min_count: u64) -> Vocabulary {
    let mut counts = vec![0u64; corpus.tokens().len()];
    for walk in corpus.walks() {
        for t in walk {
            counts[*t as usize] += 1;
        }
    }
    let pairs = corpus.tokens().iter().cloned().zip(counts).filter(|(_, c)| *c > 0);
    Vocabulary::from_counts(pairs, min_count)
}

/// All (center, context, relative position) pairs within `window`.
pub fn extract_pairs(walk: &[u32], window: usize) -> Vec<(u32, u32, i32)> {
    let mut out = Vec::new();
    for (i, center) in walk.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(walk.len().saturating_sub(1));
        for (j, context) in walk.iter().enumerate().take(hi + 1).skip(lo) {
            if j != i {
                out.push((*center, *context, j as i32 - i as i32));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    pub mode: Mode,
    pub dim: usize,
    pub window: usize,
    pub tokens: Vec<String>,
    /// Row-major |W| x dim.
    pub input: Vec<f64>,
    /// One |W| x dim matrix (classic) or 2c of them, for relative positions
    /// -c..-1 then +1..+c (structured).
    pub outputs: Vec<Vec<f64>>,
}

impl EmbeddingModel {
    /// Input vectors uniform in [-0.5/dim, 0.5/dim], output matrices zero.
    pub fn init(vocab: &Vocabulary, cfg: &TrainConfig) -> EmbeddingModel {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let n = vocab.len() * cfg.dim;
        let scale = 0.5 / cfg.dim as f64;
        let input = (0..n).map(|_| rng.random_range(-scale..=scale)).collect();
        let matrices = match cfg.mode {
            Mode::Classic => 1,
            Mode::Structured => 2 * cfg.window,
        };
        EmbeddingModel {
            mode: cfg.mode,
            dim: cfg.dim,
            window: cfg.window,
            tokens: vocab.tokens().to_vec(),
            input,
            outputs: vec![vec![0.0; n]; matrices],
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    /// Which output matrix serves relative position `rel`.
    pub fn output_index(&self, rel: i32) -> usize {
        assert!(rel != 0 && rel.unsigned_abs() as usize <= self.window, "relative position {rel} outside window");
        match self.mode {
            Mode::Classic => 0,
            Mode::Structured if rel < 0 => (rel + self.window as i32) as usize,
            Mode::Structured => self.window + rel as usize - 1,
        }
    }

    pub fn input_row(&self, w: u32) -> &[f64] {
        row(&self.input, self.dim, w)
    }

    pub fn output_row(&self, rel: i32, w: u32) -> &[f64] {
        row(&self.outputs[self.output_index(rel)], self.dim, w)
    }

    pub fn is_finite(&self) -> bool {
        self.input.iter().chain(self.outputs.iter().flatten()).all(|x| x.is_finite())
    }

    pub fn embeddings(&self) -> Embeddings {
        Embeddings::new(self.dim, self.tokens.clone(), self.input.clone())
    }
}

fn row(m: &[f64], dim: usize, w: u32) -> &[f64] {
    let start = w as usize * dim;
    &m[start..start + dim]
}

/// Dot product with four fixed accumulators: vectorizes, and the
/// summation order is still the same on every machine.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// err += g·o, then o += g·h.
fn update(err: &mut [f64], o: &mut [f64], h: &[f64], g: f64) {
    for ((e, o), h) in err.iter_mut().zip(o.iter_mut()).zip(h) {
        *e += g * *o;
        *o += g * h;
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Softmax scores of every context for `center` at relative position `rel`.
fn softmax_row(model: &EmbeddingModel, center: u32, rel: i32) -> Vec<f64> {
    let h = model.input_row(center);
    let out = &model.outputs[model.output_index(rel)];
    let scores: Vec<f64> = out.chunks_exact(model.dim).map(|o| dot(o, h)).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| libm::exp(s - max)).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// p(context | center) under the exact softmax.
pub fn softmax_probability(model: &EmbeddingModel, center: u32, context: u32, rel: i32) -> f64 {
    softmax_row(model, center, rel)[context as usize]
}

/// Mean log-probability of the pairs under the exact softmax.
pub fn log_likelihood(model: &EmbeddingModel, pairs: &[(u32, u32, i32)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let total: f64 = pairs.iter().map(|(c, o, r)| libm::log(softmax_probability(model, *c, *o, *r))).sum();
    total / pairs.len() as f64
}

/// Gradient of [`log_likelihood`], shaped like the model's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub input: Vec<f64>,
    pub outputs: Vec<Vec<f64>>,
}

pub fn log_likelihood_gradient(model: &EmbeddingModel, pairs: &[(u32, u32, i32)]) -> Gradient {
    let dim = model.dim;
    let mut grad =
        Gradient { input: vec![0.0; model.input.len()], outputs: vec![vec![0.0; model.input.len()]; model.outputs.len()] };
    if pairs.is_empty() {
        return grad;
    }
    let scale = 1.0 / pairs.len() as f64;
    for &(c, o, r) in pairs {
        let probs = softmax_row(model, c, r);
        let m = model.output_index(r);
        let h = model.input_row(c).to_vec();
        let out = &model.outputs[m];
        for (w, p) in probs.iter().enumerate() {
            let g = (if w == o as usize { 1.0 } else { 0.0 }) - p;
            let ow = &out[w * dim..(w + 1) * dim];
            for k in 0..dim {
                grad.input[c as usize * dim + k] += scale * g * ow[k];
                grad.outputs[m][w * dim + k] += scale * g * h[k];
            }
        }
    }
    grad
}

/// Trains a freshly initialized model.
pub fn train(corpus: &WalkCorpus, vocab: &Vocabulary, cfg: &TrainConfig) -> Result<EmbeddingModel, TrainError> {
    cfg.validate()?;
    let mut model = EmbeddingModel::init(vocab, cfg);
    resume(&mut model, corpus, vocab, cfg)?;
    Ok(model)
}

/// Continues training an existing model on a corpus.
pub fn resume(
    model: &mut EmbeddingModel,
    corpus: &WalkCorpus,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
) -> Result<(), TrainError> {
    cfg.validate()?;
    if vocab.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    if model.dim != cfg.dim {
        return Err(TrainError::DimensionMismatch { expected: cfg.dim, found: model.dim });
    }
    if model.vocab_size() != vocab.len() {
        return Err(TrainError::DimensionMismatch { expected: vocab.len(), found: model.vocab_size() });
    }
    let expected_outputs = match cfg.mode {
        Mode::Classic => 1,
        Mode::Structured => 2 * cfg.window,
    };
    if model.mode != cfg.mode || model.outputs.len() != expected_outputs {
        return Err(TrainError::DimensionMismatch { expected: expected_outputs, found: model.outputs.len() });
    }
    if cfg.softmax == SoftmaxMode::FullSoftmax && vocab.len() > cfg.full_softmax_cap {
        return Err(TrainError::VocabularyTooLarge { size: vocab.len(), cap: cfg.full_softmax_cap });
    }
    let map = vocab.corpus_map(corpus);
    let in_vocab: u64 = corpus.walks().map(|w| w.iter().filter(|t| map[**t as usize].is_some()).count() as u64).sum();
    if in_vocab == 0 {
        return Err(TrainError::EmptyCorpus);
    }
    if cfg.epochs == 0 {
        return Ok(());
    }

    let noise = NoiseTable::new(vocab);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f0d);
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut order_rng);
        epochs.push(order.clone());
    }
    let total = in_vocab * cfg.epochs as u64;

    if cfg.threads == 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
        let mut worker = Worker::new(model, cfg, &noise);
        let mut done = 0u64;
        let mut buf = Vec::new();
        for epoch in &epochs {
            for &w in epoch {
                Vocabulary::encode(&map, corpus.walk(w), &mut buf);
                let lr = decayed(cfg.learning_rate, done, total);
                worker.walk(&buf, lr, &mut rng);
                done += buf.len() as u64;
            }
        }
        worker.finish(model);
    } else {
        hogwild::train(model, corpus, &map, &epochs, total, cfg, &noise);
    }
    Ok(())
}

fn decayed(lr: f64, done: u64, total: u64) -> f64 {
    (lr * (1.0 - done as f64 / (total as f64 + 1.0))).max(lr * 1e-4)
}

/// Cumulative unigram^0.75 distribution.
struct NoiseTable {
    cumulative: Vec<f64>,
}

impl NoiseTable {
    fn new(vocab: &Vocabulary) -> NoiseTable {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = (0..vocab.len() as u32)
            .map(|i| {
                acc += libm::pow(vocab.count(i) as f64, 0.75);
                acc
            })
            .collect();
        for c in cumulative.iter_mut() {
            *c /= acc;
        }
        NoiseTable { cumulative }
    }

    fn sample(&self, rng: &mut impl Rng) -> u32 {
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|c| *c <= u);
        i.min(self.cumulative.len() - 1) as u32
    }
}

/// Parameter storage a training step writes to. The single-threaded path
/// borrows the model directly; the parallel path shares raw pointers.
trait Params {
    fn input(&mut self, w: u32) -> &mut [f64];
    fn output(&mut self, m: usize, w: u32) -> &mut [f64];
    fn output_matrix(&mut self, m: usize) -> &mut [f64];
}

struct Owned<'a> {
    dim: usize,
    input: &'a mut [f64],
    outputs: &'a mut [Vec<f64>],
}

impl Params for Owned<'_> {
    fn input(&mut self, w: u32) -> &mut [f64] {
        let s = w as usize * self.dim;
        &mut self.input[s..s + self.dim]
    }

    fn output(&mut self, m: usize, w: u32) -> &mut [f64] {
        let s = w as usize * self.dim;
        &mut self.outputs[m][s..s + self.dim]
    }

    fn output_matrix(&mut self, m: usize) -> &mut [f64] {
        &mut self.outputs[m]
    }
}

struct Step<'a> {
    mode: Mode,
    dim: usize,
    window: usize,
    vocab: usize,
    negatives: usize,
    softmax: SoftmaxMode,
    noise: &'a NoiseTable,
    h: Vec<f64>,
    err: Vec<f64>,
    scores: Vec<f64>,
}

impl<'a> Step<'a> {
    fn new(cfg: &TrainConfig, vocab: usize, noise: &'a NoiseTable) -> Step<'a> {
        Step {
            mode: cfg.mode,
            dim: cfg.dim,
            window: cfg.window,
            vocab,
            negatives: cfg.negatives,
            softmax: cfg.softmax,
            noise,
            h: vec![0.0; cfg.dim],
            err: vec![0.0; cfg.dim],
            scores: Vec::new(),
        }
    }

    fn output_index(&self, rel: i32) -> usize {
        match self.mode {
            Mode::Classic => 0,
            Mode::Structured if rel < 0 => (rel + self.window as i32) as usize,
            Mode::Structured => self.window + rel as usize - 1,
        }
    }

    fn walk(&mut self, p: &mut impl Params, walk: &[u32], lr: f64, rng: &mut impl Rng) {
        for (i, &center) in walk.iter().enumerate() {
            let lo = i.saturating_sub(self.window);
            let hi = (i + self.window + 1).min(walk.len());
            for (j, &context) in walk.iter().enumerate().take(hi).skip(lo) {
                if j != i {
                    self.pair(p, center, context, j as i32 - i as i32, lr, rng);
                }
            }
        }
    }

    fn pair(&mut self, p: &mut impl Params, center: u32, context: u32, rel: i32, lr: f64, rng: &mut impl Rng) {
        let m = self.output_index(rel);
        self.h.copy_from_slice(p.input(center));
        self.err.iter_mut().for_each(|e| *e = 0.0);
        match self.softmax {
            SoftmaxMode::NegativeSampling => {
                for s in 0..=self.negatives {
                    let (target, label) = if s == 0 {
                        (context, 1.0)
                    } else {
                        let t = self.noise.sample(rng);
                        if t == context {
                            continue;
                        }
                        (t, 0.0)
                    };
                    let o = p.output(m, target);
                    let g = (label - sigmoid(dot(o, &self.h))) * lr;
                    update(&mut self.err, o, &self.h, g);
                }
            }
            SoftmaxMode::FullSoftmax => {
                let dim = self.dim;
                let out = p.output_matrix(m);
                self.scores.clear();
                self.scores.extend(out.chunks_exact(dim).map(|o| dot(o, &self.h)));
                let max = self.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                for s in self.scores.iter_mut() {
                    *s = libm::exp(*s - max);
                    z += *s;
                }
                for w in 0..self.vocab {
                    let g = ((if w == context as usize { 1.0 } else { 0.0 }) - self.scores[w] / z) * lr;
                    update(&mut self.err, &mut out[w * dim..(w + 1) * dim], &self.h, g);
                }
            }
        }
        for (x, e) in p.input(center).iter_mut().zip(&self.err) {
            *x += e;
        }
    }
}

struct Worker<'a> {
    step: Step<'a>,
    input: Vec<f64>,
    outputs: Vec<Vec<f64>>,
}

impl<'a> Worker<'a> {
    fn new(model: &mut EmbeddingModel, cfg: &TrainConfig, noise: &'a NoiseTable) -> Worker<'a> {
        Worker {
            step: Step::new(cfg, model.vocab_size(), noise),
            input: std::mem::take(&mut model.input),
            outputs: std::mem::take(&mut model.outputs),
        }
    }

    fn walk(&mut self, walk: &[u32], lr: f64, rng: &mut impl Rng) {
        let mut p = Owned { dim: self.step.dim, input: &mut self.input, outputs: &mut self.outputs };
        self.step.walk(&mut p, walk, lr, rng);
    }

    fn finish(self, model: &mut EmbeddingModel) {
        model.input = self.input;
        model.outputs = self.outputs;
    }
}

mod hogwild {
    //! Lock-free parallel SGD: workers read and write the shared matrices
    //! without synchronization. Races lose the odd update, which SGD
    //! tolerates; the price is run-to-run variation.

    use super::*;

    #[derive(Clone, Copy)]
    struct Shared {
        dim: usize,
        len: usize,
        input: *mut f64,
        outputs: *const *mut f64,
    }

    // SAFETY: workers only ever touch in-bounds rows; concurrent writes to
    // the same row are the accepted data race of this training mode.
    unsafe impl Send for Shared {}
    unsafe impl Sync for Shared {}

    impl Params for Shared {
        fn input(&mut self, w: u32) -> &mut [f64] {
            let s = w as usize * self.dim;
            assert!(s + self.dim <= self.len);
            unsafe { std::slice::from_raw_parts_mut(self.input.add(s), self.dim) }
        }

        fn output(&mut self, m: usize, w: u32) -> &mut [f64] {
            let s = w as usize * self.dim;
            assert!(s + self.dim <= self.len);
            unsafe { std::slice::from_raw_parts_mut((*self.outputs.add(m)).add(s), self.dim) }
        }

        fn output_matrix(&mut self, m: usize) -> &mut [f64] {
            unsafe { std::slice::from_raw_parts_mut(*self.outputs.add(m), self.len) }
        }
    }

    pub(super) fn train(
        model: &mut EmbeddingModel,
        corpus: &WalkCorpus,
        map: &[Option<u32>],
        epochs: &[Vec<usize>],
        total: u64,
        cfg: &TrainConfig,
        noise: &NoiseTable,
    ) {
        let vocab = model.vocab_size();
        let mut out_ptrs: Vec<*mut f64> = model.outputs.iter_mut().map(|m| m.as_mut_ptr()).collect();
        let shared = Shared { dim: model.dim, len: model.input.len(), input: model.input.as_mut_ptr(), outputs: out_ptrs.as_mut_ptr() };
        let threads = cfg.threads;
        let share = total / threads as u64;
        std::thread::scope(|scope| {
            for t in 0..threads {
                scope.spawn(move || {
                    let mut p = shared;
                    let mut step = Step::new(cfg, vocab, noise);
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1 + t as u64));
                    let mut buf = Vec::new();
                    let mut done = 0u64;
                    for epoch in epochs {
                        for &w in epoch.iter().skip(t).step_by(threads) {
                            Vocabulary::encode(map, corpus.walk(w), &mut buf);
                            step.walk(&mut p, &buf, decayed(cfg.learning_rate, done, share), &mut rng);
                            done += buf.len() as u64;
                        }
                    }
                });
            }
        });
        drop(out_ptrs);
    }
}
