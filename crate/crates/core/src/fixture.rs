//! Seeded synthetic KGRC-style data with matching gold standards.
//!
//! People, objects and places are grouped into stories. Each person acts in
//! scenes (`kgc:Situation`) that mostly involve their own story's objects
//! and places; some scenes are statements about earlier scenes, which
//! nests quoted triples after conversion. A share of scenes repeats an
//! earlier scene's triple so the converter has to add id wrappers.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::convert::{convert_document, ConversionReport, ConvertOptions};
use crate::eval::{LabeledSet, RelatednessGold, SimilarityGold};
use crate::term::{vocab, Iri, Literal, Term, Triple};
use crate::turtle::write_document;

pub const NS: &str = "http://example.org/kgrc/";

#[derive(Clone, Debug, PartialEq)]
pub struct FixtureConfig {
    pub seed: u64,
    /// People, objects and places each.
    pub per_class: usize,
    pub stories: usize,
    pub scenes_per_person: usize,
    /// Share of scenes that are statements about an earlier scene.
    pub statement_ratio: f64,
    /// Deepest quoted-triple nesting statements may produce.
    pub max_depth: usize,
    /// Share of situations that repeat an earlier situation's triple.
    pub duplicate_ratio: f64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig {
            seed: 1,
            per_class: 30,
            stories: 6,
            scenes_per_person: 8,
            statement_ratio: 0.2,
            max_depth: 3,
            duplicate_ratio: 0.05,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Fixture {
    /// Scene-per-node input for the converter.
    pub kgrc: Vec<Triple>,
    /// The converted RDF-star graph.
    pub graph: Vec<Triple>,
    pub report: ConversionReport,
    pub entity_labels: LabeledSet,
    pub qt_labels: LabeledSet,
    pub relatedness: RelatednessGold,
    pub similarity: SimilarityGold,
}

fn ex(local: &str) -> Term {
    Term::iri(&format!("{NS}{local}"))
}

fn kgc(local: &str) -> Iri {
    Iri::new(format!("{}{local}", vocab::KGC))
}

fn kgc_term(local: &str) -> Term {
    Term::Iri(kgc(local))
}

const VERBS: [(&str, &str); 3] = [("take", "what"), ("look", "what"), ("go", "where")];

struct Scene {
    id: Term,
    subject: Term,
    verb: Iri,
    role: &'static str,
    object: Term,
    depth: usize,
    /// Scenes this one quotes, for co-occurrence counting.
    inner: Option<usize>,
    duplicate: bool,
}

pub fn generate(cfg: &FixtureConfig) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let stories = cfg.stories.max(1);
    let n = cfg.per_class;
    let person = |i: usize| ex(&format!("person{i}"));
    let object = |i: usize| ex(&format!("object{i}"));
    let place = |i: usize| ex(&format!("place{i}"));
    let story_of = |i: usize| i % stories;
    let members = |s: usize| (0..n).filter(move |i| story_of(*i) == s).collect::<Vec<_>>();

    let rdf_type = Iri::new(vocab::RDF_TYPE);
    let mut kgrc = Vec::new();
    for i in 0..n {
        kgrc.push(Triple::new(person(i), rdf_type.clone(), kgc_term("Person")));
        kgrc.push(Triple::new(object(i), rdf_type.clone(), kgc_term("Object")));
        kgrc.push(Triple::new(place(i), rdf_type.clone(), kgc_term("Place")));
    }
    // static structure: people live in, objects sit in, places adjoin
    // places of their own story
    for i in 0..n {
        let home = members(story_of(i));
        let p = home[rng.random_range(0..home.len())];
        kgrc.push(Triple::new(person(i), Iri::new(format!("{NS}livesIn")), place(p)));
        let p = home[rng.random_range(0..home.len())];
        kgrc.push(Triple::new(object(i), Iri::new(format!("{NS}locatedIn")), place(p)));
        let j = home[(home.iter().position(|x| *x == i).unwrap() + 1) % home.len()];
        if j != i {
            kgrc.push(Triple::new(place(i), Iri::new(format!("{NS}adjacentTo")), place(j)));
        }
    }

    let mut scenes: Vec<Scene> = Vec::new();
    let mut co: HashMap<(usize, String), usize> = HashMap::new();
    for round in 0..cfg.scenes_per_person {
        for i in 0..n {
            let id = ex(&format!("scene{}", scenes.len() + 1));
            let statement_candidates: Vec<usize> =
                (0..scenes.len()).filter(|k| scenes[*k].depth < cfg.max_depth).collect();
            if round > 0 && !statement_candidates.is_empty() && rng.random::<f64>() < cfg.statement_ratio {
                let inner = statement_candidates[rng.random_range(0..statement_candidates.len())];
                scenes.push(Scene {
                    id: id.clone(),
                    subject: person(i),
                    verb: Iri::new(format!("{NS}say")),
                    role: "what",
                    object: scenes[inner].id.clone(),
                    depth: scenes[inner].depth + 1,
                    inner: Some(inner),
                    duplicate: false,
                });
                continue;
            }
            let situations: Vec<usize> = (0..scenes.len()).filter(|k| scenes[*k].inner.is_none()).collect();
            if !situations.is_empty() && rng.random::<f64>() < cfg.duplicate_ratio {
                let k = situations[rng.random_range(0..situations.len())];
                let (subject, verb, role, object) =
                    (scenes[k].subject.clone(), scenes[k].verb.clone(), scenes[k].role, scenes[k].object.clone());
                scenes[k].duplicate = true;
                scenes.push(Scene { id, subject, verb, role, object, depth: 1, inner: None, duplicate: true });
                continue;
            }
            let (verb, role) = VERBS[rng.random_range(0..VERBS.len())];
            let pool = if rng.random::<f64>() < 0.8 { members(story_of(i)) } else { (0..n).collect() };
            let target = pool[rng.random_range(0..pool.len())];
            let object_term = if role == "where" { place(target) } else { object(target) };
            scenes.push(Scene {
                id,
                subject: person(i),
                verb: Iri::new(format!("{NS}{verb}")),
                role,
                object: object_term,
                depth: 1,
                inner: None,
                duplicate: false,
            });
        }
    }

    for (k, s) in scenes.iter().enumerate() {
        let class = if s.inner.is_some() { "Statement" } else { "Situation" };
        kgrc.push(Triple::new(s.id.clone(), rdf_type.clone(), kgc_term(class)));
        kgrc.push(Triple::new(s.id.clone(), kgc("subject"), s.subject.clone()));
        kgrc.push(Triple::new(s.id.clone(), kgc("hasPredicate"), Term::Iri(s.verb.clone())));
        kgrc.push(Triple::new(s.id.clone(), kgc(s.role), s.object.clone()));
        kgrc.push(Triple::new(s.id.clone(), kgc("source"), Literal::plain(format!("scene text {}", k + 1)).into()));
        if k + 1 < scenes.len() && k % cfg.per_class.max(1) != cfg.per_class.max(1) - 1 {
            kgrc.push(Triple::new(s.id.clone(), kgc("then"), scenes[k + 1].id.clone()));
        }
    }

    // entity co-occurrence through scenes, statements counting what they quote
    let entities_of = |mut k: usize| {
        let mut out = Vec::new();
        loop {
            out.push(scenes[k].subject.to_string());
            match scenes[k].inner {
                Some(inner) => k = inner,
                None => {
                    out.push(scenes[k].object.to_string());
                    return out;
                }
            }
        }
    };
    for (k, s) in scenes.iter().enumerate() {
        let Some(seed) = (0..n).find(|i| person(*i) == s.subject) else { continue };
        for e in entities_of(k) {
            if e != s.subject.to_string() {
                *co.entry((seed, e)).or_default() += 1;
            }
        }
    }

    let (graph, report) = convert_document(&kgrc, &ConvertOptions::default());

    let mut entity_records = Vec::new();
    for i in 0..n {
        entity_records.push((person(i).to_string(), "Person".to_string()));
        entity_records.push((object(i).to_string(), "Object".to_string()));
        entity_records.push((place(i).to_string(), "Place".to_string()));
    }

    // quoted triples of distinct, non-repeated situations, balanced by verb
    let mut by_verb: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut seen = std::collections::HashSet::new();
    for s in scenes.iter().filter(|s| s.inner.is_none() && !s.duplicate) {
        let qt = Term::quoted(s.subject.clone(), s.verb.clone(), s.object.clone()).to_string();
        if seen.insert(qt.clone()) {
            let verb = s.verb.as_str().strip_prefix(NS).unwrap_or(s.verb.as_str()).to_string();
            by_verb.entry(verb).or_default().push(qt);
        }
    }
    let per_verb = by_verb.values().map(Vec::len).min().unwrap_or(0);
    let mut qt_records = Vec::new();
    for (verb, qts) in &by_verb {
        for qt in &qts[..per_verb] {
            qt_records.push((qt.clone(), verb.clone()));
        }
    }

    // relatedness: scene co-occurrence first, story membership breaks ties,
    // unrelated entities pad short lists
    let mut story: HashMap<String, usize> = HashMap::new();
    for i in 0..n {
        for e in [person(i), object(i), place(i)] {
            story.insert(e.to_string(), story_of(i));
        }
    }
    let mut relatedness = Vec::new();
    for seed in 0..n.min(21) {
        let seed_key = person(seed).to_string();
        let mut candidates: Vec<(usize, String)> = story
            .keys()
            .filter(|e| **e != seed_key)
            .map(|e| {
                let together = co.get(&(seed, e.clone())).copied().unwrap_or(0);
                (2 * together + usize::from(story[e] == story_of(seed)), e.clone())
            })
            .collect();
        candidates.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        if candidates.len() >= 10 {
            relatedness.push((seed_key, candidates.into_iter().take(10).map(|(_, e)| e).collect()));
        }
    }

    let pool: Vec<&Scene> = scenes.iter().filter(|s| s.inner.is_none() && !s.duplicate).take(12).collect();
    let mut similarity = Vec::new();
    for (a, sa) in pool.iter().enumerate() {
        for sb in &pool[a + 1..] {
            let shared = [sa.subject == sb.subject, sa.verb == sb.verb, sa.object == sb.object]
                .iter()
                .filter(|x| **x)
                .count();
            let qa = Term::quoted(sa.subject.clone(), sa.verb.clone(), sa.object.clone()).to_string();
            let qb = Term::quoted(sb.subject.clone(), sb.verb.clone(), sb.object.clone()).to_string();
            similarity.push((qa, qb, 1.0 + 4.0 * shared as f64 / 3.0));
        }
    }

    Fixture {
        kgrc,
        graph,
        report,
        entity_labels: LabeledSet { records: entity_records },
        qt_labels: LabeledSet { records: qt_records },
        relatedness: RelatednessGold { records: relatedness },
        similarity: SimilarityGold { records: similarity },
    }
}

impl Fixture {
    /// Writes `kgrc.ttl`, `graph.ttls` and the gold files under `gold/`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir.join("gold"))?;
        fs::write(dir.join("kgrc.ttl"), write_document(&self.kgrc))?;
        fs::write(dir.join("graph.ttls"), write_document(&self.graph))?;
        let gold = dir.join("gold");
        fs::write(gold.join("labels_PersonObjectPlace.tsv"), self.entity_labels.to_tsv())?;
        fs::write(gold.join("labels_QT.tsv"), self.qt_labels.to_tsv())?;
        fs::write(gold.join("relatedness.tsv"), self.relatedness.to_text())?;
        fs::write(gold.join("qt_similarity.tsv"), self.similarity.to_tsv())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, StatsOptions};

    #[test]
    fn deterministic() {
        let a = generate(&FixtureConfig::default());
        let b = generate(&FixtureConfig::default());
        assert_eq!(a.kgrc, b.kgrc);
        assert_eq!(a.graph, b.graph);
        let c = generate(&FixtureConfig { seed: 2, ..Default::default() });
        assert_ne!(a.graph, c.graph);
    }

    #[test]
    fn shape() {
        let f = generate(&FixtureConfig::default());
        assert!(f.report.dropped_scenes.is_empty());
        assert_eq!(f.report.scenes_converted, 30 * 8);
        assert!(f.report.duplicates_disambiguated > 0);
        let g = Graph::build(f.graph.clone());
        let stats = g.compute_stats(&StatsOptions::default());
        assert!(stats.qt_count_by_depth.get(&2).copied().unwrap_or(0) > 0);
        assert!(stats.qt_count_by_depth.keys().all(|d| *d <= 3));
        assert_eq!(f.entity_labels.records.len(), 90);
        assert!(f.qt_labels.records.len() >= 30);
        assert_eq!(f.relatedness.records.len(), 21);
        assert_eq!(f.similarity.records.len(), 66);
    }

    #[test]
    fn gold_tokens_are_graph_nodes() {
        let f = generate(&FixtureConfig::default());
        let g = Graph::build(f.graph.clone());
        let nodes: std::collections::HashSet<String> = g.node_ids().map(|id| g.key(id).to_string()).collect();
        for (t, _) in f.entity_labels.records.iter().chain(&f.qt_labels.records) {
            assert!(nodes.contains(t), "{t}");
        }
        for (a, b, _) in &f.similarity.records {
            assert!(nodes.contains(a) && nodes.contains(b));
        }
        for (s, cands) in &f.relatedness.records {
            assert!(nodes.contains(s));
            assert!(cands.iter().all(|c| nodes.contains(c)));
        }
    }
}
