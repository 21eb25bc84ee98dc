//! Walk corpora over RDF-star graphs.
//!
//! Two extra transitions complement the classic node/predicate walk:
//!
//! * **oq-walk** (probability `beta`): from an entity in the object role of
//!   a quoted triple to the quoted triple itself;
//! * **qs-walk** (probability `alpha`): from a quoted triple into its
//!   components, emitting its subject, predicate and object.
//!
//! When both fire, the oq-walk wins. With `alpha = beta = 0` the generator
//! degenerates to plain RDF2Vec-style walks that treat quoted triples as
//! opaque nodes.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{Graph, TermId};
use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    RandomWalk,
    MidWalk,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::RandomWalk => "random",
            Strategy::MidWalk => "mid",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Strategy::RandomWalk),
            "mid" => Ok(Strategy::MidWalk),
            other => Err(format!("unknown walk strategy '{other}' (expected random or mid)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkParams {
    pub strategy: Strategy,
    /// Walks per root.
    pub walks: usize,
    pub depth: usize,
    /// qs-walk probability.
    pub alpha: f64,
    /// oq-walk probability.
    pub beta: f64,
    pub seed: u64,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams { strategy: Strategy::MidWalk, walks: 100, depth: 8, alpha: 0.5, beta: 0.5, seed: 42 }
    }
}

impl WalkParams {
    pub fn validate(&self) -> Result<(), WalkError> {
        if self.walks == 0 || self.depth == 0 {
            return Err(WalkError::InvalidParams("walks and depth must be positive".into()));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(WalkError::InvalidParams(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    pub fn header(&self) -> String {
        format!(
            "#qtwalk-corpus v1 seed={} alpha={} beta={} n={} d={} strategy={}",
            self.seed, self.alpha, self.beta, self.walks, self.depth, self.strategy
        )
    }

    fn parse_header(line: &str) -> Result<WalkParams, CorpusError> {
        let bad = || CorpusError::Header(line.to_string());
        let rest = line.strip_prefix("#qtwalk-corpus v1 ").ok_or_else(bad)?;
        let fields: HashMap<&str, &str> = rest.split(' ').filter_map(|kv| kv.split_once('=')).collect();
        let get = |k: &str| fields.get(k).copied().ok_or_else(bad);
        Ok(WalkParams {
            strategy: get("strategy")?.parse().map_err(|_| bad())?,
            walks: get("n")?.parse().map_err(|_| bad())?,
            depth: get("d")?.parse().map_err(|_| bad())?,
            alpha: get("alpha")?.parse().map_err(|_| bad())?,
            beta: get("beta")?.parse().map_err(|_| bad())?,
            seed: get("seed")?.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum WalkError {
    #[error("root {0} is not a node of the graph")]
    UnknownRoot(String),
    #[error("invalid walk parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed corpus header: {0:?}")]
    Header(String),
    #[error("corpus is missing its header line")]
    MissingHeader,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One walk as a sequence of graph terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Walk {
    pub tokens: Vec<TermId>,
}

impl Walk {
    pub fn terms<'g>(&self, g: &'g Graph) -> Vec<&'g Term> {
        self.tokens.iter().map(|t| g.term(*t)).collect()
    }

    pub fn keys<'g>(&self, g: &'g Graph) -> Vec<&'g str> {
        self.tokens.iter().map(|t| g.key(*t)).collect()
    }
}

/// What a single expansion step did; used to audit transition priorities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Oq,
    Qs,
    Default,
    /// No transition was possible; the walk was kept unchanged.
    Stay,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub oq_available: bool,
    pub qs_available: bool,
    pub rand_oq: f64,
    pub rand_qs: f64,
    pub taken: StepKind,
}

/// Per-root random stream derived from the master seed and the root's
/// canonical form, so roots can be walked in any order or in parallel.
pub fn root_rng(seed: u64, root_key: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(root_key.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(bytes)
}

fn pick<T: Copy>(rng: &mut impl Rng, items: &[T]) -> T {
    items[rng.random_range(0..items.len() as u64) as usize]
}

fn node_id(g: &Graph, root: &Term) -> Result<TermId, WalkError> {
    g.id(root).filter(|id| g.is_node(*id)).ok_or_else(|| WalkError::UnknownRoot(root.to_string()))
}

/// Breadth-first QT-aware walks from `root`, trimmed to `walks` survivors
/// after every depth iteration.
pub fn random_walks(g: &Graph, root: &Term, p: &WalkParams) -> Result<Vec<Walk>, WalkError> {
    p.validate()?;
    let id = node_id(g, root)?;
    let mut rng = root_rng(p.seed, g.key(id));
    Ok(random_walks_from(g, id, p, &mut rng, None))
}

/// Like [`random_walks`], recording every expansion step.
pub fn random_walks_traced(
    g: &Graph,
    root: &Term,
    p: &WalkParams,
    trace: &mut Vec<StepRecord>,
) -> Result<Vec<Walk>, WalkError> {
    p.validate()?;
    let id = node_id(g, root)?;
    let mut rng = root_rng(p.seed, g.key(id));
    Ok(random_walks_from(g, id, p, &mut rng, Some(trace)))
}

pub fn random_walks_from(
    g: &Graph,
    root: TermId,
    p: &WalkParams,
    rng: &mut impl Rng,
    mut trace: Option<&mut Vec<StepRecord>>,
) -> Vec<Walk> {
    let mut walks: Vec<Vec<TermId>> = vec![vec![root]];
    for _ in 0..p.depth {
        let mut next = Vec::with_capacity(walks.len());
        for walk in walks {
            let last = *walk.last().expect("walks are never empty");
            let oq = if walk.len() == 1 {
                let qts = g.quoted_with_object(last);
                (!qts.is_empty()).then_some(qts)
            } else {
                None
            };
            // past the root, the oq candidate is the quoted triple spelled by
            // the last three tokens, if the graph has one
            let oq_tail = match walk.as_slice() {
                [.., s, p, o] if walk.len() >= 3 => g.find_quoted(*s, *p, *o),
                _ => None,
            };
            let oq_available = oq.is_some() || oq_tail.is_some();
            let qs = g.quoted_parts(last);
            let rand_oq: f64 = rng.random();
            let rand_qs: f64 = rng.random();

            let taken = if oq_available && rand_oq < p.beta {
                let qt = match oq {
                    Some(qts) => pick(rng, qts),
                    None => oq_tail.expect("checked above"),
                };
                let mut w = walk;
                w.push(qt);
                next.push(w);
                StepKind::Oq
            } else if let Some(parts) = qs.filter(|_| rand_qs < p.alpha) {
                let mut w = walk;
                w.extend([parts.subject, parts.predicate, parts.object]);
                next.push(w);
                StepKind::Qs
            } else {
                let out = g.subject_triples(last);
                if out.is_empty() {
                    next.push(walk);
                    StepKind::Stay
                } else {
                    for idx in out {
                        let t = g.triple_at(*idx);
                        let mut w = Vec::with_capacity(walk.len() + 2);
                        w.extend_from_slice(&walk);
                        w.extend([t.predicate, t.object]);
                        next.push(w);
                    }
                    StepKind::Default
                }
            };
            if let Some(trace) = trace.as_deref_mut() {
                trace.push(StepRecord { oq_available, qs_available: qs.is_some(), rand_oq, rand_qs, taken });
            }
        }
        walks = next;
        trim(&mut walks, p.walks, rng);
    }
    walks.into_iter().map(|tokens| Walk { tokens }).collect()
}

/// Keeps a uniformly random subset of at most `n` items (the same law as
/// deleting uniformly random items until `n` remain).
fn trim<T>(items: &mut Vec<T>, n: usize, rng: &mut impl Rng) {
    if items.len() <= n {
        return;
    }
    for i in 0..n {
        let j = rng.random_range(i as u64..items.len() as u64) as usize;
        items.swap(i, j);
    }
    items.truncate(n);
}

/// Walks grown outwards from `focus`, flipping a fair coin at every depth
/// iteration between extending towards predecessors and successors.
pub fn mid_walks(g: &Graph, focus: &Term, p: &WalkParams) -> Result<Vec<Walk>, WalkError> {
    p.validate()?;
    let id = node_id(g, focus)?;
    let mut rng = root_rng(p.seed, g.key(id));
    Ok(mid_walks_from(g, id, p, &mut rng))
}

pub fn mid_walks_from(g: &Graph, focus: TermId, p: &WalkParams, rng: &mut impl Rng) -> Vec<Walk> {
    let mut out = Vec::with_capacity(p.walks);
    while out.len() < p.walks {
        let mut walk = VecDeque::from([focus]);
        let mut pred = focus;
        let mut succ = focus;
        for _ in 0..p.depth {
            let rand_oq: f64 = rng.random();
            let rand_qs: f64 = rng.random();
            let backward: bool = rng.random();
            if backward {
                let qts = g.quoted_with_object(pred);
                if !qts.is_empty() && rand_oq < p.beta {
                    // the quoted triple's subject and predicate now precede
                    // its object
                    let parts = g.quoted_parts(pick(rng, qts)).expect("quoted term");
                    walk.push_front(parts.predicate);
                    walk.push_front(parts.subject);
                    pred = parts.subject;
                } else {
                    let incoming = g.object_triples(pred);
                    if !incoming.is_empty() {
                        let t = g.triple_at(pick(rng, incoming));
                        walk.push_front(t.predicate);
                        walk.push_front(t.subject);
                        pred = t.subject;
                    }
                }
            } else if let Some(parts) = g.quoted_parts(succ).filter(|_| rand_qs < p.alpha) {
                walk.extend([parts.subject, parts.predicate, parts.object]);
                succ = parts.object;
            } else {
                let outgoing = g.subject_triples(succ);
                if !outgoing.is_empty() {
                    let t = g.triple_at(pick(rng, outgoing));
                    walk.extend([t.predicate, t.object]);
                    succ = t.object;
                }
            }
        }
        out.push(Walk { tokens: walk.into() });
    }
    out
}

/// Roots of a corpus: every node except literals, in canonical order.
pub fn corpus_roots(g: &Graph) -> Vec<TermId> {
    let mut roots: Vec<TermId> = g.node_ids().filter(|id| !g.term(*id).is_literal()).collect();
    roots.sort_by(|a, b| g.key(*a).cmp(g.key(*b)));
    roots
}

/// Walk sequences over a token table.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkCorpus {
    pub params: WalkParams,
    /// Fingerprint of the graph the corpus was generated from, when known.
    pub fingerprint: Option<String>,
    tokens: Vec<String>,
    data: Vec<u32>,
    offsets: Vec<usize>,
}

impl WalkCorpus {
    pub fn new(params: WalkParams, tokens: Vec<String>) -> Self {
        WalkCorpus { params, fingerprint: None, tokens, data: Vec::new(), offsets: vec![0] }
    }

    /// Builds a corpus from explicit token sequences.
    pub fn from_walks<S: AsRef<str>>(params: WalkParams, walks: &[Vec<S>]) -> Self {
        let mut table: HashMap<String, u32> = HashMap::new();
        let mut corpus = WalkCorpus::new(params, Vec::new());
        for w in walks {
            for t in w {
                let t = t.as_ref();
                let id = match table.get(t) {
                    Some(id) => *id,
                    None => {
                        let id = corpus.tokens.len() as u32;
                        corpus.tokens.push(t.to_string());
                        table.insert(t.to_string(), id);
                        id
                    }
                };
                corpus.data.push(id);
            }
            corpus.offsets.push(corpus.data.len());
        }
        corpus
    }

    pub fn push(&mut self, walk: &[u32]) {
        debug_assert!(walk.iter().all(|t| (*t as usize) < self.tokens.len()));
        self.data.extend_from_slice(walk);
        self.offsets.push(self.data.len());
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn token_count(&self) -> usize {
        self.data.len()
    }

    pub fn walk(&self, i: usize) -> &[u32] {
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn walks(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.len()).map(|i| self.walk(i))
    }

    /// The token table; walk entries index into it.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "{}", self.params.header())?;
        for walk in self.walks() {
            for (i, t) in walk.iter().enumerate() {
                if i > 0 {
                    w.write_all(b"\t")?;
                }
                w.write_all(self.token(*t).as_bytes())?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn read_from(r: impl BufRead) -> Result<WalkCorpus, CorpusError> {
        let mut lines = r.lines();
        let header = lines.next().ok_or(CorpusError::MissingHeader)??;
        let params = WalkParams::parse_header(&header)?;
        let mut table: HashMap<String, u32> = HashMap::new();
        let mut corpus = WalkCorpus::new(params, Vec::new());
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            for t in line.split('\t') {
                let id = match table.get(t) {
                    Some(id) => *id,
                    None => {
                        let id = corpus.tokens.len() as u32;
                        corpus.tokens.push(t.to_string());
                        table.insert(t.to_string(), id);
                        id
                    }
                };
                corpus.data.push(id);
            }
            corpus.offsets.push(corpus.data.len());
        }
        Ok(corpus)
    }
}

/// Walks from every root of the graph, concatenated in canonical root
/// order. Roots are processed in parallel; the output does not depend on
/// scheduling.
pub fn generate_corpus(g: &Graph, p: &WalkParams) -> Result<WalkCorpus, WalkError> {
    p.validate()?;
    let roots = corpus_roots(g);
    let per_root: Vec<Vec<Walk>> = roots
        .par_iter()
        .map(|root| {
            let mut rng = root_rng(p.seed, g.key(*root));
            match p.strategy {
                Strategy::RandomWalk => random_walks_from(g, *root, p, &mut rng, None),
                Strategy::MidWalk => mid_walks_from(g, *root, p, &mut rng),
            }
        })
        .collect();
    let tokens = (0..g.term_count()).map(|i| g.key(TermId::from_index(i)).to_string()).collect();
    let mut corpus = WalkCorpus::new(p.clone(), tokens);
    corpus.fingerprint = Some(g.fingerprint());
    for walks in per_root {
        for w in walks {
            let ids: Vec<u32> = w.tokens.iter().map(|t| t.index() as u32).collect();
            corpus.push(&ids);
        }
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{Iri, Triple};

    fn iri(s: &str) -> Term {
        Term::iri(s)
    }

    fn qt(s: Term, p: &str, o: Term) -> Term {
        Term::quoted(s, Iri::new(p), o)
    }

    fn figure_two() -> Graph {
        let inner = qt(iri("e2"), "r2", iri("e3"));
        let outer = qt(inner, "r3", iri("e4"));
        Graph::build(vec![
            Triple::new(iri("e1"), Iri::new("r1"), outer.clone()),
            Triple::new(outer, Iri::new("r6"), iri("e7")),
        ])
    }

    fn params(alpha: f64, beta: f64, strategy: Strategy) -> WalkParams {
        WalkParams { strategy, walks: 50, depth: 4, alpha, beta, seed: 7 }
    }

    fn as_strings(g: &Graph, walks: &[Walk]) -> Vec<Vec<String>> {
        walks.iter().map(|w| w.keys(g).iter().map(|s| s.to_string()).collect()).collect()
    }

    const OUTER: &str = "<< << <e2> <r2> <e3> >> <r3> <e4> >>";
    const INNER: &str = "<< <e2> <r2> <e3> >>";

    #[test]
    fn default_walk_treats_qts_as_nodes() {
        let g = figure_two();
        let walks = as_strings(&g, &random_walks(&g, &iri("e1"), &params(0.0, 0.0, Strategy::RandomWalk)).unwrap());
        assert_eq!(walks, vec![vec!["<e1>", "<r1>", OUTER, "<r6>", "<e7>"]]);
    }

    #[test]
    fn qs_walk_descends() {
        let g = figure_two();
        let walks = as_strings(&g, &random_walks(&g, &iri("e1"), &params(1.0, 0.0, Strategy::RandomWalk)).unwrap());
        assert_eq!(walks.len(), 1);
        let w = &walks[0];
        assert_eq!(&w[..6], &["<e1>", "<r1>", OUTER, INNER, "<r3>", "<e4>"]);
    }

    #[test]
    fn oq_walk_climbs_out() {
        let g = figure_two();
        let walks = as_strings(&g, &random_walks(&g, &iri("e3"), &params(0.0, 1.0, Strategy::RandomWalk)).unwrap());
        assert_eq!(walks, vec![vec!["<e3>", INNER]]);
        // a qs step at the inner QT followed by oq back into it loops
        let walks = as_strings(&g, &random_walks(&g, &iri("e3"), &params(1.0, 1.0, Strategy::RandomWalk)).unwrap());
        assert_eq!(walks[0][..6], ["<e3>", INNER, "<e2>", "<r2>", "<e3>", INNER]);
    }

    #[test]
    fn isolated_root() {
        let g = Graph::build(vec![Triple::new(iri("a"), Iri::new("p"), iri("b"))]);
        let walks = random_walks(&g, &iri("b"), &params(0.5, 0.5, Strategy::RandomWalk)).unwrap();
        assert_eq!(as_strings(&g, &walks), vec![vec!["<b>"]]);
        let walks = mid_walks(&g, &iri("b"), &params(0.5, 0.5, Strategy::MidWalk)).unwrap();
        assert_eq!(walks.len(), 50);
        assert!(walks.iter().all(|w| w.tokens.len() <= 3));
    }

    #[test]
    fn unknown_root() {
        let g = figure_two();
        let err = random_walks(&g, &iri("nope"), &params(0.5, 0.5, Strategy::RandomWalk)).unwrap_err();
        assert!(matches!(err, WalkError::UnknownRoot(_)));
        assert!(mid_walks(&g, &iri("r1"), &params(0.5, 0.5, Strategy::MidWalk)).is_err());
    }

    #[test]
    fn invalid_params() {
        let g = figure_two();
        let mut p = params(1.5, 0.5, Strategy::RandomWalk);
        assert!(random_walks(&g, &iri("e1"), &p).is_err());
        p.alpha = 0.5;
        p.walks = 0;
        assert!(generate_corpus(&g, &p).is_err());
    }

    #[test]
    fn mid_walk_backward_through_quoted_triple() {
        let g = figure_two();
        let walks = as_strings(&g, &mid_walks(&g, &iri("e3"), &params(0.0, 1.0, Strategy::MidWalk)).unwrap());
        assert!(walks.iter().any(|w| w.starts_with(&["<e2>".into(), "<r2>".into(), "<e3>".into()])));
        assert!(walks.iter().all(|w| w.contains(&"<e3>".to_string())));
    }

    #[test]
    fn mid_walk_focus_without_neighbours() {
        let g = Graph::build(vec![Triple::new(iri("a"), Iri::new("p"), iri("b"))]);
        let walks = mid_walks(&g, &iri("a"), &WalkParams { walks: 3, depth: 1, ..params(0.0, 0.0, Strategy::MidWalk) });
        assert_eq!(walks.unwrap().len(), 3);
    }

    #[test]
    fn trim_keeps_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut v: Vec<u32> = (0..100).collect();
        trim(&mut v, 10, &mut rng);
        assert_eq!(v.len(), 10);
        v.sort();
        v.dedup();
        assert_eq!(v.len(), 10);
    }

    #[test]
    fn corpus_roundtrip_and_header() {
        let g = figure_two();
        let p = params(0.5, 0.5, Strategy::RandomWalk);
        let corpus = generate_corpus(&g, &p).unwrap();
        let mut buf = Vec::new();
        corpus.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("#qtwalk-corpus v1 seed=7 alpha=0.5 beta=0.5 n=50 d=4 strategy=random\n"));
        let back = WalkCorpus::read_from(&buf[..]).unwrap();
        assert_eq!(back.params, p);
        assert_eq!(back.len(), corpus.len());
        for (a, b) in back.walks().zip(corpus.walks()) {
            let a: Vec<&str> = a.iter().map(|t| back.token(*t)).collect();
            let b: Vec<&str> = b.iter().map(|t| corpus.token(*t)).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn empty_graph_corpus() {
        let g = Graph::build(Vec::new());
        let c = generate_corpus(&g, &WalkParams::default()).unwrap();
        assert!(c.is_empty());
    }
}
