//! Conversion of reified scene graphs (one resource per scene, with
//! `kgc:subject`, `kgc:hasPredicate` and 5W1H role properties) into RDF-star.
//!
//! Each scene becomes the quoted triple `<< subject predicate object >>`,
//! where the object is taken from the first populated role in
//! [`OBJECT_PRIORITY`] and missing parts become `owl:Nothing`. The remaining
//! roles and types are reattached with the quoted triple as subject. Scenes
//! that would produce the same quoted triple are told apart by wrapping them
//! as `<< << s p o >> kgc:sid n >>`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::term::{vocab, Iri, Literal, Term, Triple};

/// Roles that may supply the object of a scene, highest priority first.
pub const OBJECT_PRIORITY: [&str; 6] = ["what", "whom", "where", "on", "to", "from"];

pub const SCENE_CLASSES: [&str; 5] = ["Scene", "Situation", "Statement", "Thought", "Talk"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SceneRecord {
    pub scene_id: Iri,
    /// Value of `kgc:hasPredicate`.
    pub predicate: Option<Iri>,
    /// Values of the `kgc:` role properties keyed by local name, including
    /// `subject`. Values keep document order.
    pub role_map: BTreeMap<String, Vec<Term>>,
    pub type_terms: Vec<Term>,
    /// Every other (predicate, object) pair of the scene resource.
    pub extra_metadata: Vec<(Iri, Term)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvertedScene {
    pub scene_id: Iri,
    pub qt: Term,
    /// Metadata triples; each has `qt` as subject.
    pub metadata: Vec<Triple>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ConvertError {
    #[error("scene {0} has no kgc:hasPredicate")]
    MissingPredicate(Iri),
}

/// Which node a link to a disambiguated scene points at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LinkTarget {
    /// The `<< << s p o >> kgc:sid n >>` wrapper, which carries the metadata.
    #[default]
    Wrapper,
    /// The bare `<< s p o >>`.
    Inner,
}

#[derive(Clone, Debug)]
pub struct ConvertOptions {
    pub link_target: LinkTarget,
    pub id_predicate: Iri,
    pub scene_classes: Vec<Iri>,
}

impl Default for ConvertOptions {
    fn default() -> Self {
        ConvertOptions {
            link_target: LinkTarget::Wrapper,
            id_predicate: Iri::new(vocab::KGC_SID),
            scene_classes: SCENE_CLASSES.iter().map(|c| kgc(c)).collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConversionReport {
    pub scenes_converted: usize,
    pub nothing_substitutions: usize,
    pub duplicates_disambiguated: usize,
    /// Scene references inside quoted triples that could not be resolved
    /// because the scenes refer to each other cyclically.
    pub cyclic_references: usize,
    pub dropped_scenes: Vec<(Iri, String)>,
}

impl ConversionReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenes_converted\t{}", self.scenes_converted);
        let _ = writeln!(out, "nothing_substitutions\t{}", self.nothing_substitutions);
        let _ = writeln!(out, "duplicates_disambiguated\t{}", self.duplicates_disambiguated);
        let _ = writeln!(out, "cyclic_references\t{}", self.cyclic_references);
        let _ = writeln!(out, "dropped_scenes\t{}", self.dropped_scenes.len());
        for (id, reason) in &self.dropped_scenes {
            let _ = writeln!(out, "dropped\t{id}\t{reason}");
        }
        out
    }
}

fn kgc(local: &str) -> Iri {
    Iri::new(format!("{}{local}", vocab::KGC))
}

fn nothing() -> Term {
    Term::iri(vocab::OWL_NOTHING)
}

/// The object of the scene's quoted triple: the first value of the
/// highest-priority populated role, or `owl:Nothing`.
pub fn select_object(rec: &SceneRecord) -> Term {
    select_object_role(rec).map(|(_, t)| t.clone()).unwrap_or_else(nothing)
}

fn select_object_role(rec: &SceneRecord) -> Option<(&'static str, &Term)> {
    OBJECT_PRIORITY
        .iter()
        .find_map(|role| rec.role_map.get(*role).and_then(|v| v.first()).map(|t| (*role, t)))
}

/// First `kgc:subject` value usable as a subject (literals cannot be).
fn select_subject(rec: &SceneRecord) -> Option<(usize, &Term)> {
    rec.role_map.get("subject")?.iter().enumerate().find(|(_, t)| !t.is_literal())
}

/// Converts one scene. Scene references are left as plain IRIs; the
/// document-level conversion resolves them.
pub fn convert_scene(rec: &SceneRecord) -> Result<ConvertedScene, ConvertError> {
    convert_with(rec, &mut |t: &Term| t.clone()).map(|(scene, _)| scene)
}

/// Returns the converted scene and the number of `owl:Nothing` substitutions.
fn convert_with(
    rec: &SceneRecord,
    resolve: &mut dyn FnMut(&Term) -> Term,
) -> Result<(ConvertedScene, usize), ConvertError> {
    let predicate = rec.predicate.clone().ok_or_else(|| ConvertError::MissingPredicate(rec.scene_id.clone()))?;
    let mut substitutions = 0;
    let subject_choice = select_subject(rec);
    let object_choice = select_object_role(rec);
    let subject = match subject_choice {
        Some((_, t)) => resolve(t),
        None => {
            substitutions += 1;
            nothing()
        }
    };
    let object = match object_choice {
        Some((_, t)) => resolve(t),
        None => {
            substitutions += 1;
            nothing()
        }
    };
    // a resolved reference may still be a literal-free term; guard anyway
    let subject = if subject.is_literal() { nothing() } else { subject };
    let qt = Term::quoted(subject, predicate, object);

    let mut metadata = Vec::new();
    let rdf_type = Iri::new(vocab::RDF_TYPE);
    for t in &rec.type_terms {
        metadata.push(Triple::new(qt.clone(), rdf_type.clone(), resolve(t)));
    }
    for (role, values) in &rec.role_map {
        for (i, v) in values.iter().enumerate() {
            let consumed = (role == "subject" && subject_choice.is_some_and(|(k, _)| k == i))
                || (i == 0 && object_choice.is_some_and(|(r, _)| r == role));
            if !consumed {
                metadata.push(Triple::new(qt.clone(), kgc(role), resolve(v)));
            }
        }
    }
    for (p, o) in &rec.extra_metadata {
        metadata.push(Triple::new(qt.clone(), p.clone(), resolve(o)));
    }
    Ok((ConvertedScene { scene_id: rec.scene_id.clone(), qt, metadata }, substitutions))
}

fn wrap(qt: &Term, id_predicate: &Iri, id: usize) -> Term {
    Term::quoted(qt.clone(), id_predicate.clone(), Literal::typed(id.to_string(), Iri::new(vocab::XSD_INTEGER)).into())
}

/// The node that carries each scene's metadata: its quoted triple, or a
/// numbered wrapper when several scenes share that quoted triple. Ids run
/// from 1 within each group, in input order.
fn assign_subjects(converted: &[ConvertedScene], id_predicate: &Iri) -> Vec<Term> {
    let mut groups: HashMap<&Term, usize> = HashMap::new();
    for c in converted {
        *groups.entry(&c.qt).or_default() += 1;
    }
    let mut next_id: HashMap<&Term, usize> = HashMap::new();
    converted
        .iter()
        .map(|c| {
            if groups[&c.qt] < 2 {
                return c.qt.clone();
            }
            let n = next_id.entry(&c.qt).or_insert(0);
            *n += 1;
            wrap(&c.qt, id_predicate, *n)
        })
        .collect()
}

fn resubject(metadata: &[Triple], subject: &Term) -> Vec<Triple> {
    metadata
        .iter()
        .map(|t| Triple::new(subject.clone(), t.predicate.clone(), t.object.clone()))
        .collect()
}

/// Emits the metadata of every scene, moving it onto numbered wrappers for
/// quoted triples shared by two or more scenes.
pub fn disambiguate_duplicates(converted: &[ConvertedScene]) -> Vec<Triple> {
    disambiguate_with(converted, &Iri::new(vocab::KGC_SID))
}

pub fn disambiguate_with(converted: &[ConvertedScene], id_predicate: &Iri) -> Vec<Triple> {
    let subjects = assign_subjects(converted, id_predicate);
    converted.iter().zip(&subjects).flat_map(|(c, s)| resubject(&c.metadata, s)).collect()
}

/// Orders IRIs by namespace, then numerically when the local names are
/// numbers, so that `.../9` sorts before `.../10`.
fn scene_order(a: &Iri, b: &Iri) -> Ordering {
    fn split(s: &str) -> (&str, &str) {
        match s.rfind(['/', '#']) {
            Some(i) => s.split_at(i + 1),
            None => ("", s),
        }
    }
    let (na, la) = split(a.as_str());
    let (nb, lb) = split(b.as_str());
    na.cmp(nb).then_with(|| match (la.parse::<u64>(), lb.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        _ => la.cmp(lb),
    })
    .then_with(|| a.cmp(b))
}

/// Collects scene records from reified triples. Returns the records in
/// scene order and the indices of the triples that do not describe scenes.
pub fn extract_scenes(triples: &[Triple], opts: &ConvertOptions) -> (Vec<SceneRecord>, Vec<usize>) {
    let has_predicate = kgc("hasPredicate");
    let rdf_type = Iri::new(vocab::RDF_TYPE);
    let mut is_scene: HashMap<&Iri, bool> = HashMap::new();
    for t in triples {
        if let Term::Iri(s) = &t.subject {
            let scene_like = t.predicate == has_predicate
                || (t.predicate == rdf_type
                    && t.object.as_iri().is_some_and(|o| opts.scene_classes.contains(o)));
            if scene_like {
                is_scene.insert(s, true);
            }
        }
    }
    let mut records: BTreeMap<&Iri, SceneRecord> = BTreeMap::new();
    let mut rest = Vec::new();
    for (i, t) in triples.iter().enumerate() {
        let Term::Iri(s) = &t.subject else {
            rest.push(i);
            continue;
        };
        if !is_scene.contains_key(s) {
            rest.push(i);
            continue;
        }
        let rec = records.entry(s).or_insert_with(|| SceneRecord {
            scene_id: s.clone(),
            predicate: None,
            role_map: BTreeMap::new(),
            type_terms: Vec::new(),
            extra_metadata: Vec::new(),
        });
        if t.predicate == has_predicate && rec.predicate.is_none() {
            if let Term::Iri(p) = &t.object {
                rec.predicate = Some(p.clone());
                continue;
            }
        }
        if t.predicate == rdf_type {
            rec.type_terms.push(t.object.clone());
        } else if let Some(role) = t.predicate.as_str().strip_prefix(vocab::KGC).filter(|_| t.predicate != has_predicate) {
            rec.role_map.entry(role.to_string()).or_default().push(t.object.clone());
        } else {
            rec.extra_metadata.push((t.predicate.clone(), t.object.clone()));
        }
    }
    let mut records: Vec<SceneRecord> = records.into_values().collect();
    records.sort_by(|a, b| scene_order(&a.scene_id, &b.scene_id));
    (records, rest)
}

/// Converts a whole reified document.
///
/// Scene references inside a quoted triple (for example a statement whose
/// `what` is another scene) become that scene's node, which nests quoted
/// triples. Scenes are processed in dependency order so that duplicate
/// detection sees fully resolved quoted triples; metadata links such as
/// `kgc:then` are rewritten after every scene has its final node.
pub fn convert_document(triples: &[Triple], opts: &ConvertOptions) -> (Vec<Triple>, ConversionReport) {
    let (records, rest) = extract_scenes(triples, opts);
    let mut report = ConversionReport::default();

    let mut valid: Vec<&SceneRecord> = Vec::new();
    for rec in &records {
        if rec.predicate.is_some() {
            valid.push(rec);
        } else {
            report.dropped_scenes.push((rec.scene_id.clone(), "missing kgc:hasPredicate".into()));
        }
    }
    let index: HashMap<&Iri, usize> = valid.iter().enumerate().map(|(i, r)| (&r.scene_id, i)).collect();
    let scene_ref = |t: &Term| -> Option<usize> { t.as_iri().and_then(|i| index.get(i).copied()) };

    // references that end up inside each scene's quoted triple
    let deps: Vec<Vec<usize>> = valid
        .iter()
        .map(|r| {
            let s = select_subject(r).map(|(_, t)| t);
            let o = select_object_role(r).map(|(_, t)| t);
            s.into_iter().chain(o).filter_map(scene_ref).collect()
        })
        .collect();

    // level = length of the longest reference chain; back edges are cyclic
    const UNVISITED: usize = usize::MAX;
    const ON_STACK: usize = usize::MAX - 1;
    let mut level = vec![UNVISITED; valid.len()];
    let mut cyclic = vec![Vec::new(); valid.len()];
    for root in 0..valid.len() {
        if level[root] != UNVISITED {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        level[root] = ON_STACK;
        while let Some((node, next)) = stack.pop() {
            if next < deps[node].len() {
                stack.push((node, next + 1));
                let d = deps[node][next];
                if level[d] == UNVISITED {
                    level[d] = ON_STACK;
                    stack.push((d, 0));
                } else if level[d] == ON_STACK {
                    cyclic[node].push(d);
                }
            } else {
                level[node] = deps[node]
                    .iter()
                    .filter(|d| !cyclic[node].contains(d))
                    .map(|d| level[*d] + 1)
                    .max()
                    .unwrap_or(0);
            }
        }
    }
    report.cyclic_references = cyclic.iter().map(Vec::len).sum();

    let mut by_level: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, l) in level.iter().enumerate() {
        by_level.entry(*l).or_default().push(i);
    }

    let mut node: Vec<Option<Term>> = vec![None; valid.len()];
    let mut inner: Vec<Option<Term>> = vec![None; valid.len()];
    let mut converted: Vec<Option<ConvertedScene>> = vec![None; valid.len()];
    for scenes in by_level.values() {
        let mut batch = Vec::with_capacity(scenes.len());
        for &i in scenes {
            let mut resolve = |t: &Term| -> Term {
                match scene_ref(t) {
                    Some(j) if !cyclic[i].contains(&j) && deps[i].contains(&j) => {
                        let target = match opts.link_target {
                            LinkTarget::Wrapper => &node[j],
                            LinkTarget::Inner => &inner[j],
                        };
                        target.clone().expect("dependencies are converted first")
                    }
                    _ => t.clone(),
                }
            };
            let (scene, subs) = convert_with(valid[i], &mut resolve).expect("predicate checked above");
            report.nothing_substitutions += subs;
            batch.push(scene);
        }
        let subjects = assign_subjects(&batch, &opts.id_predicate);
        for ((&i, scene), subject) in scenes.iter().zip(batch).zip(subjects) {
            if subject != scene.qt {
                report.duplicates_disambiguated += 1;
            }
            inner[i] = Some(scene.qt.clone());
            node[i] = Some(subject);
            converted[i] = Some(scene);
        }
    }
    report.scenes_converted = valid.len();

    let link = |t: &Term| -> Term {
        match scene_ref(t) {
            Some(j) => match opts.link_target {
                LinkTarget::Wrapper => node[j].clone(),
                LinkTarget::Inner => inner[j].clone(),
            }
            .expect("all scenes converted"),
            None => t.clone(),
        }
    };

    let mut out = Vec::new();
    for (i, scene) in converted.iter().enumerate() {
        let scene = scene.as_ref().expect("all scenes converted");
        let subject = node[i].as_ref().expect("all scenes converted");
        for t in &scene.metadata {
            out.push(Triple::new(subject.clone(), t.predicate.clone(), link(&t.object)));
        }
    }
    for i in rest {
        let t = &triples[i];
        out.push(Triple::new(t.subject.clone(), t.predicate.clone(), link(&t.object)));
    }
    (out, report)
}
