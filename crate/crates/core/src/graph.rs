//! Immutable, indexed RDF-star graph.
//!
//! Every term (including quoted triples nested at any depth) is interned
//! once and addressed by a [`TermId`]. Adjacency lists are sorted by the
//! canonical serialization of their entries so that seeded random choices
//! over them are reproducible.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::term::{vocab, Iri, Term, Triple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(u32);

impl TermId {
    pub fn from_index(i: usize) -> TermId {
        TermId(i as u32)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// An asserted triple in id form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IdTriple {
    pub subject: TermId,
    pub predicate: TermId,
    pub object: TermId,
}

#[derive(Default)]
pub struct Graph {
    terms: Vec<Term>,
    keys: Vec<String>,
    ids: HashMap<Term, TermId>,
    /// Component ids of quoted-triple terms.
    parts: Vec<Option<IdTriple>>,
    is_node: Vec<bool>,
    is_predicate: Vec<bool>,
    triples: Vec<IdTriple>,
    subj_index: Vec<Vec<u32>>,
    obj_index: Vec<Vec<u32>>,
    qt_subj_index: Vec<Vec<TermId>>,
    qt_obj_index: Vec<Vec<TermId>>,
    qt_lookup: HashMap<IdTriple, TermId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GraphStats {
    pub class_count: usize,
    pub instance_count: usize,
    pub property_count: usize,
    pub standard_triple_count: usize,
    /// Distinct quoted triples by nesting depth (1 = nothing quoted inside).
    pub qt_count_by_depth: BTreeMap<usize, usize>,
    pub total: usize,
}

impl GraphStats {
    /// `metric<TAB>value` rows.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "class\t{}", self.class_count);
        let _ = writeln!(out, "instance\t{}", self.instance_count);
        let _ = writeln!(out, "property\t{}", self.property_count);
        let _ = writeln!(out, "standard_triple\t{}", self.standard_triple_count);
        for (depth, count) in &self.qt_count_by_depth {
            let _ = writeln!(out, "qt_depth_{depth}\t{count}");
        }
        let _ = writeln!(out, "total\t{}", self.total);
        out
    }
}

#[derive(Clone, Debug)]
pub struct StatsOptions {
    /// Count quoted triples whose predicate is `id_predicate` (the wrappers
    /// that make duplicate statements distinct). Off by default, in which
    /// case wrappers are neither counted nor add to the depth of terms that
    /// contain them.
    pub include_id_wrappers: bool,
    pub id_predicate: Iri,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions { include_id_wrappers: false, id_predicate: Iri::new(vocab::KGC_SID) }
    }
}

impl Graph {
    /// Builds the graph, deduplicating asserted triples (first occurrence
    /// wins) and registering every nested quoted triple.
    pub fn build(triples: impl IntoIterator<Item = Triple>) -> Graph {
        let mut g = Graph::default();
        let mut seen = HashSet::new();
        for t in triples {
            let s = g.intern(&t.subject);
            let p = g.intern(&Term::Iri(t.predicate.clone()));
            let o = g.intern(&t.object);
            g.is_node[s.index()] = true;
            g.is_node[o.index()] = true;
            g.is_predicate[p.index()] = true;
            let id = IdTriple { subject: s, predicate: p, object: o };
            if seen.insert(id) {
                let idx = g.triples.len() as u32;
                g.triples.push(id);
                g.subj_index[s.index()].push(idx);
                g.obj_index[o.index()].push(idx);
            }
        }
        let triple_keys: Vec<String> = g.triples.iter().map(|t| g.triple_key(t)).collect();
        for list in g.subj_index.iter_mut().chain(g.obj_index.iter_mut()) {
            list.sort_by(|a, b| triple_keys[*a as usize].cmp(&triple_keys[*b as usize]));
        }
        let keys = &g.keys;
        for list in g.qt_subj_index.iter_mut().chain(g.qt_obj_index.iter_mut()) {
            list.sort_by(|a, b| keys[a.index()].cmp(&keys[b.index()]));
        }
        g
    }

    fn intern(&mut self, term: &Term) -> TermId {
        if let Some(id) = self.ids.get(term) {
            return *id;
        }
        let parts = term.as_quoted().map(|qt| {
            let s = self.intern(&qt.subject);
            let p = self.intern(&Term::Iri(qt.predicate.clone()));
            let o = self.intern(&qt.object);
            self.is_node[s.index()] = true;
            self.is_node[o.index()] = true;
            self.is_predicate[p.index()] = true;
            IdTriple { subject: s, predicate: p, object: o }
        });
        let id = TermId(u32::try_from(self.terms.len()).expect("more than u32::MAX terms"));
        self.terms.push(term.clone());
        self.keys.push(term.to_string());
        self.ids.insert(term.clone(), id);
        self.parts.push(parts);
        self.is_node.push(false);
        self.is_predicate.push(false);
        self.subj_index.push(Vec::new());
        self.obj_index.push(Vec::new());
        self.qt_subj_index.push(Vec::new());
        self.qt_obj_index.push(Vec::new());
        if let Some(p) = parts {
            self.qt_subj_index[p.subject.index()].push(id);
            self.qt_obj_index[p.object.index()].push(id);
            self.qt_lookup.insert(p, id);
        }
        id
    }

    fn triple_key(&self, t: &IdTriple) -> String {
        format!("{} {} {}", self.key(t.subject), self.key(t.predicate), self.key(t.object))
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn id(&self, term: &Term) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.terms[id.index()]
    }

    /// Canonical serialization of a term.
    pub fn key(&self, id: TermId) -> &str {
        &self.keys[id.index()]
    }

    pub fn is_node(&self, id: TermId) -> bool {
        self.is_node[id.index()]
    }

    pub fn is_predicate(&self, id: TermId) -> bool {
        self.is_predicate[id.index()]
    }

    pub fn is_quoted(&self, id: TermId) -> bool {
        self.parts[id.index()].is_some()
    }

    /// Components of a quoted-triple term.
    pub fn quoted_parts(&self, id: TermId) -> Option<IdTriple> {
        self.parts[id.index()]
    }

    /// The quoted triple `<< s p o >>`, if it occurs anywhere in the graph.
    pub fn find_quoted(&self, s: TermId, p: TermId, o: TermId) -> Option<TermId> {
        self.qt_lookup.get(&IdTriple { subject: s, predicate: p, object: o }).copied()
    }

    pub fn triple_ids(&self) -> &[IdTriple] {
        &self.triples
    }

    pub fn triple_at(&self, idx: u32) -> IdTriple {
        self.triples[idx as usize]
    }

    pub fn to_triple(&self, t: IdTriple) -> Triple {
        let predicate = self.term(t.predicate).as_iri().expect("predicate is an IRI").clone();
        Triple::new(self.term(t.subject).clone(), predicate, self.term(t.object).clone())
    }

    /// Asserted triples in first-occurrence order.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.triples.iter().map(|t| self.to_triple(*t))
    }

    /// Every term occurring in subject or object position of an asserted or
    /// quoted triple, in interning order.
    pub fn node_ids(&self) -> impl Iterator<Item = TermId> + '_ {
        (0..self.terms.len() as u32).map(TermId).filter(|id| self.is_node(*id))
    }

    pub fn node_set(&self) -> Vec<&Term> {
        self.node_ids().map(|id| self.term(id)).collect()
    }

    /// Indices of asserted triples with `id` as subject, canonically ordered.
    pub fn subject_triples(&self, id: TermId) -> &[u32] {
        &self.subj_index[id.index()]
    }

    pub fn object_triples(&self, id: TermId) -> &[u32] {
        &self.obj_index[id.index()]
    }

    /// Quoted triples (at any nesting level) whose subject is `id`.
    pub fn quoted_with_subject(&self, id: TermId) -> &[TermId] {
        &self.qt_subj_index[id.index()]
    }

    pub fn quoted_with_object(&self, id: TermId) -> &[TermId] {
        &self.qt_obj_index[id.index()]
    }

    pub fn triples_with_subject(&self, n: &Term) -> Vec<Triple> {
        self.id(n)
            .map(|id| self.subject_triples(id).iter().map(|i| self.to_triple(self.triple_at(*i))).collect())
            .unwrap_or_default()
    }

    pub fn triples_with_object(&self, n: &Term) -> Vec<Triple> {
        self.id(n)
            .map(|id| self.object_triples(id).iter().map(|i| self.to_triple(self.triple_at(*i))).collect())
            .unwrap_or_default()
    }

    pub fn qts_with_subject(&self, n: &Term) -> Vec<Term> {
        self.id(n)
            .map(|id| self.quoted_with_subject(id).iter().map(|q| self.term(*q).clone()).collect())
            .unwrap_or_default()
    }

    pub fn qts_with_object(&self, n: &Term) -> Vec<Term> {
        self.id(n)
            .map(|id| self.quoted_with_object(id).iter().map(|q| self.term(*q).clone()).collect())
            .unwrap_or_default()
    }

    /// SHA-256 over the sorted canonical asserted triples, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut lines: Vec<String> = self.triples.iter().map(|t| self.triple_key(t)).collect();
        lines.sort();
        let mut hasher = Sha256::new();
        for l in &lines {
            hasher.update(l.as_bytes());
            hasher.update(b"\n");
        }
        hex(&hasher.finalize())
    }

    pub fn compute_stats(&self, opts: &StatsOptions) -> GraphStats {
        let rdf_type = self.id(&Term::Iri(Iri::new(vocab::RDF_TYPE)));
        let id_pred = self.id(&Term::Iri(opts.id_predicate.clone()));
        let is_wrapper = |id: TermId| -> bool {
            !opts.include_id_wrappers
                && self.parts[id.index()].is_some_and(|p| Some(p.predicate) == id_pred)
        };

        let mut classes = HashSet::new();
        let mut instances = HashSet::new();
        let mut standard = 0;
        for t in &self.triples {
            if Some(t.predicate) == rdf_type {
                classes.insert(t.object);
                instances.insert(t.subject);
            }
            if !self.is_quoted(t.subject) && !self.is_quoted(t.object) {
                standard += 1;
            }
        }
        let property_count = (0..self.terms.len())
            .filter(|i| self.is_predicate[*i])
            .filter(|i| opts.include_id_wrappers || Some(TermId(*i as u32)) != id_pred)
            .count();

        // interning puts components before the terms that contain them
        let mut depth = vec![0usize; self.terms.len()];
        let mut by_depth = BTreeMap::new();
        for (i, parts) in self.parts.iter().enumerate() {
            let Some(p) = parts else { continue };
            let id = TermId(i as u32);
            if is_wrapper(id) {
                depth[i] = depth[p.subject.index()];
                continue;
            }
            depth[i] = 1 + depth[p.subject.index()].max(depth[p.object.index()]);
            *by_depth.entry(depth[i]).or_insert(0) += 1;
        }
        let total = standard + by_depth.values().sum::<usize>();
        GraphStats {
            class_count: classes.len(),
            instance_count: instances.len(),
            property_count,
            standard_triple_count: standard,
            qt_count_by_depth: by_depth,
            total,
        }
    }
}

/// Builds a graph from terms.
pub fn build_graph(triples: impl IntoIterator<Item = Triple>) -> Graph {
    Graph::build(triples)
}

/// Lower-case hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::turtle::parse_document;

    fn iri(s: &str) -> Term {
        Term::iri(s)
    }

    fn qt(s: Term, p: &str, o: Term) -> Term {
        Term::quoted(s, Iri::new(p), o)
    }

    /// The running example: e1 r1 << << e2 r2 e3 >> r3 e4 >> ; that QT r6 e7.
    pub(crate) fn figure_two() -> Vec<Triple> {
        let inner = qt(iri("e2"), "r2", iri("e3"));
        let outer = qt(inner, "r3", iri("e4"));
        vec![
            Triple::new(iri("e1"), Iri::new("r1"), outer.clone()),
            Triple::new(outer, Iri::new("r6"), iri("e7")),
        ]
    }

    #[test]
    fn figure_two_indexes() {
        let g = Graph::build(figure_two());
        let inner = qt(iri("e2"), "r2", iri("e3"));
        let outer = qt(inner.clone(), "r3", iri("e4"));
        assert_eq!(g.qts_with_subject(&iri("e2")), vec![inner.clone()]);
        assert_eq!(g.qts_with_object(&iri("e3")), vec![inner.clone()]);
        assert_eq!(g.qts_with_subject(&inner), vec![outer.clone()]);
        let from_e1 = g.triples_with_subject(&iri("e1"));
        assert_eq!(from_e1, vec![Triple::new(iri("e1"), Iri::new("r1"), outer.clone())]);
        assert!(g.node_set().contains(&&inner));
        assert!(!g.node_set().contains(&&iri("r2")));
    }

    #[test]
    fn empty_graph() {
        let g = Graph::build(Vec::new());
        assert!(g.is_empty());
        assert_eq!(g.compute_stats(&StatsOptions::default()), GraphStats::default());
        assert!(g.triples_with_subject(&iri("x")).is_empty());
    }

    #[test]
    fn subject_object_positions() {
        let triples = parse_document("<< <a> <p> <b> >> <q> <c> . <c> <r> <d> .").unwrap();
        let g = Graph::build(triples.clone());
        assert_eq!(g.triples_with_subject(&iri("c")), vec![triples[1].clone()]);
        assert_eq!(g.triples_with_object(&iri("c")), vec![triples[0].clone()]);
        assert!(g.qts_with_subject(&Literal::plain("x").into()).is_empty());
    }

    use crate::term::Literal;

    #[test]
    fn duplicates_removed() {
        let t = Triple::new(iri("a"), Iri::new("p"), iri("b"));
        let g = Graph::build(vec![t.clone(), t.clone()]);
        assert_eq!(g.len(), 1);
        assert_eq!(g.subject_triples(g.id(&iri("a")).unwrap()).len(), 1);
    }

    #[test]
    fn stats_hand_count() {
        // four standard triples and one whose subject is a depth-2 QT
        let src = "<a> a <C> . <b> a <C> . <a> <knows> <b> . <b> <age> 3 .
                   << << <a> <p> <b> >> <q> <c> >> <r> <d> .";
        let g = Graph::build(parse_document(src).unwrap());
        let s = g.compute_stats(&StatsOptions::default());
        assert_eq!(s.standard_triple_count, 4);
        assert_eq!(s.qt_count_by_depth, BTreeMap::from([(1, 1), (2, 1)]));
        assert_eq!(s.total, 6);
        assert_eq!(s.class_count, 1);
        assert_eq!(s.instance_count, 2);
        assert_eq!(s.property_count, 6);
    }

    #[test]
    fn id_wrappers_are_transparent() {
        let sid = vocab::KGC_SID;
        let src = format!(
            "<< << <a> <p> <b> >> <{sid}> 1 >> <when> <t1> .
             << << <a> <p> <b> >> <{sid}> 2 >> <when> <t2> .
             <x> <said> << << << <a> <p> <b> >> <{sid}> 1 >> <q> <c> >> ."
        );
        let g = Graph::build(parse_document(&src).unwrap());
        let s = g.compute_stats(&StatsOptions::default());
        assert_eq!(s.qt_count_by_depth, BTreeMap::from([(1, 1), (2, 1)]));
        let with = g.compute_stats(&StatsOptions { include_id_wrappers: true, ..Default::default() });
        assert_eq!(with.qt_count_by_depth, BTreeMap::from([(1, 1), (2, 2), (3, 1)]));
    }

    #[test]
    fn stats_tsv() {
        let g = Graph::build(figure_two());
        let tsv = g.compute_stats(&StatsOptions::default()).to_tsv();
        assert_eq!(
            tsv,
            "class\t0\ninstance\t0\nproperty\t4\nstandard_triple\t0\nqt_depth_1\t1\nqt_depth_2\t1\ntotal\t2\n"
        );
    }

    #[test]
    fn fingerprint_ignores_order() {
        let mut t = figure_two();
        let a = Graph::build(t.clone()).fingerprint();
        t.reverse();
        assert_eq!(a, Graph::build(t).fingerprint());
    }
}
