//! RDF-star terms and their canonical text form.
//!
//! The canonical serialization doubles as the vocabulary token of a node:
//! IRIs render as `<iri>`, literals as `"lexical"` with an optional
//! `^^<datatype>` or `@lang` suffix, and quoted triples as `<< S P O >>`
//! with single spaces, recursively. Two terms are equal exactly when their
//! canonical forms are byte-equal.

use std::fmt;
use std::sync::Arc;

pub mod vocab {
    pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    pub const OWL_NOTHING: &str = "http://www.w3.org/2002/07/owl#Nothing";
    pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
    pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
    pub const XSD_DOUBLE: &str = "http://www.w3.org/2001/XMLSchema#double";
    pub const XSD_BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";
    pub const KGC: &str = "http://kgc.knowledge-graph.jp/ontology/kgc.owl#";
    /// Reserved predicate that wraps duplicate quoted triples with a scene id.
    pub const KGC_SID: &str = "http://kgc.knowledge-graph.jp/ontology/kgc.owl#sid";
}

/// An IRI. Stored verbatim; no resolution against a base is performed.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Iri(Arc<str>);

impl Iri {
    pub fn new(iri: impl Into<Arc<str>>) -> Self {
        Iri(iri.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LiteralKind {
    Plain,
    Typed(Iri),
    /// Language tags are normalized to lower case.
    Lang(Arc<str>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub lexical: Arc<str>,
    pub kind: LiteralKind,
}

impl Literal {
    pub fn plain(lexical: impl Into<Arc<str>>) -> Self {
        Literal { lexical: lexical.into(), kind: LiteralKind::Plain }
    }

    pub fn typed(lexical: impl Into<Arc<str>>, datatype: Iri) -> Self {
        Literal { lexical: lexical.into(), kind: LiteralKind::Typed(datatype) }
    }

    pub fn lang(lexical: impl Into<Arc<str>>, tag: &str) -> Self {
        Literal { lexical: lexical.into(), kind: LiteralKind::Lang(tag.to_ascii_lowercase().into()) }
    }
}

/// A node or relation of an RDF-star graph.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
    Quoted(Arc<Triple>),
}

/// A triple; the same shape serves asserted and quoted triples.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    /// Panics if `subject` is a literal.
    pub fn new(subject: Term, predicate: Iri, object: Term) -> Self {
        assert!(!subject.is_literal(), "literal in subject position");
        Triple { subject, predicate, object }
    }
}

impl Term {
    pub fn iri(iri: &str) -> Self {
        Term::Iri(Iri::new(iri))
    }

    pub fn quoted(subject: Term, predicate: Iri, object: Term) -> Self {
        Term::Quoted(Arc::new(Triple::new(subject, predicate, object)))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    pub fn as_quoted(&self) -> Option<&Triple> {
        match self {
            Term::Quoted(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(i) => Some(i),
            _ => None,
        }
    }

    /// Quoted-triple nesting depth: 0 for IRIs and literals, 1 for a quoted
    /// triple with no quoted triple inside, and so on.
    pub fn depth(&self) -> usize {
        match self {
            Term::Quoted(t) => 1 + t.subject.depth().max(t.object.depth()),
            _ => 0,
        }
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<Literal> for Term {
    fn from(lit: Literal) -> Self {
        Term::Literal(lit)
    }
}

fn write_escaped(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\r' => f.write_str("\\r")?,
            '\t' => f.write_str("\\t")?,
            '\u{8}' => f.write_str("\\b")?,
            '\u{c}' => f.write_str("\\f")?,
            c => fmt::Write::write_char(f, c)?,
        }
    }
    Ok(())
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("\"")?;
        write_escaped(f, &self.lexical)?;
        f.write_str("\"")?;
        match &self.kind {
            LiteralKind::Plain => Ok(()),
            LiteralKind::Typed(dt) => write!(f, "^^{dt}"),
            LiteralKind::Lang(tag) => write!(f, "@{tag}"),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(i) => i.fmt(f),
            Term::Literal(l) => l.fmt(f),
            Term::Quoted(t) => write!(f, "<< {t} >>"),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Debug for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Canonical text form of a term.
pub fn serialize_term(t: &Term) -> String {
    t.to_string()
}
