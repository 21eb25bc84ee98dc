//! Scoring embeddings on classification, clustering, entity relatedness and
//! quoted-triple similarity.

pub mod gold;
pub mod metrics;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::embeddings::Embeddings;
pub use gold::{LabeledSet, RelatednessGold, SimilarityGold};
pub use metrics::{
    adjusted_rand_index, average_ranks, clustering_accuracy, cosine_similarity, harmonic_mean, kendall_tau_b,
    max_weight_assignment, pearson, spearman,
};
use metrics::cosine;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("class {label:?} has {count} members; {folds}-fold cross-validation needs at least {folds}")]
    TooFewPerClass { label: String, count: usize, folds: usize },
    #[error("only {present} of {total} gold tokens have embeddings (90% required)")]
    InsufficientCoverage { present: usize, total: usize },
    #[error("gold standard {0} has no records")]
    EmptyGold(&'static str),
    #[error("relatedness seed {0} has no embedding")]
    MissingSeed(String),
    #[error("token {0} has no embedding")]
    MissingToken(String),
    #[error("{file}:{line}: {message}")]
    MalformedGold { file: String, line: usize, message: String },
    #[error("{0}")]
    Io(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub seed: u64,
    pub neighbors: usize,
    pub folds: usize,
    pub restarts: usize,
    /// Echoed into reports: whether label-revealing triples were removed
    /// before the embeddings were trained.
    pub labels_excluded: Option<bool>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { seed: 42, neighbors: 3, folds: 10, restarts: 10, labels_excluded: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub task: String,
    pub metrics: Vec<(String, f64)>,
    pub config: Vec<(String, String)>,
}

impl EvalReport {
    fn new(task: &str) -> EvalReport {
        EvalReport { task: task.to_string(), metrics: Vec::new(), config: Vec::new() }
    }

    fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push((name.into(), value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// `task<TAB>metric<TAB>value` rows; config echo rows use a
    /// `config.` metric prefix.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (m, v) in &self.metrics {
            out.push_str(&format!("{}\t{m}\t{v}\n", self.task));
        }
        for (k, v) in &self.config {
            out.push_str(&format!("{}\tconfig.{k}\t{v}\n", self.task));
        }
        out
    }
}

fn echo(report: &mut EvalReport, cfg: &EvalConfig) {
    report.config.push(("seed".into(), cfg.seed.to_string()));
    if let Some(x) = cfg.labels_excluded {
        report.config.push(("labels_excluded".into(), x.to_string()));
    }
}

fn check_coverage(present: usize, total: usize) -> Result<(), EvalError> {
    if total == 0 || present * 10 < total * 9 {
        return Err(EvalError::InsufficientCoverage { present, total });
    }
    Ok(())
}

/// Gold records that have embeddings, with labels as dense indices.
struct Labeled<'e> {
    tokens: Vec<&'e str>,
    vectors: Vec<&'e [f64]>,
    labels: Vec<usize>,
    names: Vec<String>,
    missing: usize,
}

fn labeled<'e>(emb: &'e Embeddings, gold: &LabeledSet) -> Result<Labeled<'e>, EvalError> {
    if gold.records.is_empty() {
        return Err(EvalError::EmptyGold("labels"));
    }
    let names = gold.labels();
    let mut out = Labeled { tokens: Vec::new(), vectors: Vec::new(), labels: Vec::new(), names, missing: 0 };
    for (token, label) in &gold.records {
        match emb.position(token).map(|i| (emb.tokens()[i].as_str(), emb.row(i))) {
            Some((t, v)) => {
                out.tokens.push(t);
                out.vectors.push(v);
                out.labels.push(out.names.binary_search(label).expect("label from gold"));
            }
            None => out.missing += 1,
        }
    }
    check_coverage(out.tokens.len(), gold.records.len())?;
    Ok(out)
}

/// Stratified fold of every item: per class, items are sorted by token,
/// shuffled with the seed and dealt round-robin into folds.
pub fn stratified_folds(tokens: &[&str], labels: &[usize], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(*l).or_default().push(i);
    }
    let mut fold = vec![0; labels.len()];
    for members in by_class.values_mut() {
        members.sort_by(|a, b| tokens[*a].cmp(tokens[*b]));
        members.shuffle(&mut rng);
        for (pos, i) in members.iter().enumerate() {
            fold[*i] = pos % folds;
        }
    }
    fold
}

/// k-NN vote with cosine similarity; ties in the vote go to the single
/// nearest neighbor's label.
fn knn_predict(query: &[f64], train: &[(&[f64], usize)], k: usize) -> usize {
    let mut sims: Vec<(f64, usize)> = train.iter().enumerate().map(|(i, (v, _))| (cosine(query, v), i)).collect();
    sims.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let top = &sims[..k.min(sims.len())];
    let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
    for (_, i) in top {
        *votes.entry(train[*i].1).or_default() += 1;
    }
    let best = votes.values().copied().max().unwrap_or(0);
    let nearest = train[top[0].1].1;
    let leaders: Vec<usize> = votes.iter().filter(|(_, v)| **v == best).map(|(l, _)| *l).collect();
    if leaders.len() == 1 {
        leaders[0]
    } else {
        nearest
    }
}

/// Stratified cross-validated k-NN accuracy.
pub fn eval_classification(emb: &Embeddings, gold: &LabeledSet, cfg: &EvalConfig) -> Result<EvalReport, EvalError> {
    let data = labeled(emb, gold)?;
    for (l, name) in data.names.iter().enumerate() {
        let count = data.labels.iter().filter(|x| **x == l).count();
        if count < cfg.folds {
            return Err(EvalError::TooFewPerClass { label: name.clone(), count, folds: cfg.folds });
        }
    }
    let fold = stratified_folds(&data.tokens, &data.labels, cfg.folds, cfg.seed);
    let mut report = EvalReport::new("classification");
    let mut accuracies = Vec::with_capacity(cfg.folds);
    for f in 0..cfg.folds {
        let train: Vec<(&[f64], usize)> =
            (0..data.tokens.len()).filter(|i| fold[*i] != f).map(|i| (data.vectors[i], data.labels[i])).collect();
        let test: Vec<usize> = (0..data.tokens.len()).filter(|i| fold[*i] == f).collect();
        let correct = test.iter().filter(|i| knn_predict(data.vectors[**i], &train, cfg.neighbors) == data.labels[**i]).count();
        accuracies.push(correct as f64 / test.len() as f64);
    }
    report.metric("accuracy", accuracies.iter().sum::<f64>() / accuracies.len() as f64);
    for (f, a) in accuracies.iter().enumerate() {
        report.metric(format!("fold_{}_accuracy", f + 1), *a);
    }
    report.metric("evaluated", data.tokens.len() as f64);
    report.metric("missing", data.missing as f64);
    report.config.push(("classifier".into(), format!("knn k={} cosine", cfg.neighbors)));
    report.config.push(("folds".into(), cfg.folds.to_string()));
    echo(&mut report, cfg);
    Ok(report)
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / norm).collect()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid, lowest index on ties.
fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's k-means with k-means++ seeding; returns (assignment, inertia).
pub fn kmeans(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> (Vec<usize>, f64) {
    let n = points.len();
    if n == 0 || k == 0 {
        return (vec![0; n], 0.0);
    }
    let mut centroids = vec![points[rng.random_range(0..n as u64) as usize].clone()];
    while centroids.len() < k {
        let d: Vec<f64> = points.iter().map(|p| nearest(p, &centroids).1).collect();
        let total: f64 = d.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, di) in d.iter().enumerate() {
                if target < *di {
                    chosen = i;
                    break;
                }
                target -= di;
            }
            chosen
        } else {
            rng.random_range(0..n as u64) as usize
        };
        centroids.push(points[next].clone());
    }
    let mut assign = vec![usize::MAX; n];
    for _ in 0..300 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let c = nearest(p, &centroids).0;
            if assign[i] != c {
                assign[i] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, c) in points.iter().zip(&assign) {
            counts[*c] += 1;
            for (s, x) in sums[*c].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            // an emptied cluster keeps its previous centroid
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let inertia = points.iter().zip(&assign).map(|(p, c)| sq_dist(p, &centroids[*c])).sum();
    (assign, inertia)
}

/// k-means (k = number of gold labels, best of several seeded restarts on
/// unit-normalized vectors) scored by optimal cluster-to-label matching.
pub fn eval_clustering(emb: &Embeddings, gold: &LabeledSet, cfg: &EvalConfig) -> Result<EvalReport, EvalError> {
    let data = labeled(emb, gold)?;
    let points: Vec<Vec<f64>> = data.vectors.iter().map(|v| normalized(v)).collect();
    let k = data.names.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..cfg.restarts.max(1) {
        let run = kmeans(&points, k, &mut rng);
        if best.as_ref().is_none_or(|b| run.1 < b.1) {
            best = Some(run);
        }
    }
    let (assign, inertia) = best.expect("at least one restart");
    let mut report = EvalReport::new("clustering");
    report.metric("accuracy", clustering_accuracy(&assign, &data.labels));
    report.metric("ari", adjusted_rand_index(&assign, &data.labels));
    report.metric("inertia", inertia);
    report.metric("evaluated", data.tokens.len() as f64);
    report.metric("missing", data.missing as f64);
    report.config.push(("clusterer".into(), format!("kmeans k={k} restarts={}", cfg.restarts)));
    echo(&mut report, cfg);
    Ok(report)
}

/// Mean Kendall tau-b between gold candidate order and cosine ranking.
pub fn eval_relatedness(emb: &Embeddings, gold: &RelatednessGold, cfg: &EvalConfig) -> Result<EvalReport, EvalError> {
    if gold.records.is_empty() {
        return Err(EvalError::EmptyGold("relatedness"));
    }
    let present = gold.records.iter().filter(|(s, _)| emb.contains(s)).count();
    if present * 10 < gold.records.len() * 9 {
        let missing = gold.records.iter().find(|(s, _)| !emb.contains(s)).map(|(s, _)| s.clone());
        return Err(EvalError::MissingSeed(missing.unwrap_or_default()));
    }
    let mut taus = Vec::new();
    let mut missing_candidates = 0;
    for (seed, cands) in &gold.records {
        let Some(s) = emb.get(seed) else { continue };
        let mut gold_score = Vec::new();
        let mut predicted = Vec::new();
        for (rank, c) in cands.iter().enumerate() {
            match emb.get(c) {
                Some(v) => {
                    gold_score.push((cands.len() - rank) as f64);
                    predicted.push(cosine(s, v));
                }
                None => missing_candidates += 1,
            }
        }
        taus.push(kendall_tau_b(&gold_score, &predicted));
    }
    let mut report = EvalReport::new("relatedness");
    report.metric("kendall_tau_b", taus.iter().sum::<f64>() / taus.len() as f64);
    report.metric("seeds_evaluated", taus.len() as f64);
    report.metric("seeds_missing", (gold.records.len() - taus.len()) as f64);
    report.metric("candidates_missing", missing_candidates as f64);
    echo(&mut report, cfg);
    Ok(report)
}

/// Pearson, Spearman and their harmonic mean between gold scores and
/// cosine similarity of quoted-triple pairs.
pub fn eval_qt_similarity(emb: &Embeddings, gold: &SimilarityGold, cfg: &EvalConfig) -> Result<EvalReport, EvalError> {
    let mut g = Vec::new();
    let mut p = Vec::new();
    let mut first_missing = None;
    for (a, b, score) in &gold.records {
        match (emb.get(a), emb.get(b)) {
            (Some(u), Some(v)) => {
                g.push(*score);
                p.push(cosine(u, v));
            }
            (None, _) => {
                first_missing.get_or_insert_with(|| a.clone());
            }
            (_, None) => {
                first_missing.get_or_insert_with(|| b.clone());
            }
        }
    }
    if gold.records.is_empty() {
        return Err(EvalError::EmptyGold("qt_similarity"));
    }
    if g.len() * 10 < gold.records.len() * 9 {
        return Err(EvalError::MissingToken(first_missing.unwrap_or_default()));
    }
    let r = pearson(&g, &p);
    let rho = spearman(&g, &p);
    let hm = harmonic_mean(r, rho);
    let mut report = EvalReport::new("qt_similarity");
    report.metric("pearson", r);
    report.metric("spearman", rho);
    report.metric("harmonic_mean", hm.unwrap_or(0.0));
    report.metric("harmonic_mean_undefined", if hm.is_none() { 1.0 } else { 0.0 });
    report.metric("pairs_evaluated", g.len() as f64);
    report.metric("pairs_missing", (gold.records.len() - g.len()) as f64);
    echo(&mut report, cfg);
    Ok(report)
}
