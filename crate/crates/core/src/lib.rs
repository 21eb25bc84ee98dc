//! RDF-star knowledge graph embeddings: Turtle-star parsing, an indexed
//! graph store, quoted-triple-aware graph walks, skip-gram training and an
//! evaluation harness.

pub mod convert;
pub mod embeddings;
pub mod eval;
pub mod fixture;
pub mod graph;
pub mod term;
pub mod train;
pub mod turtle;
pub mod walk;

pub use graph::{build_graph, sha256_hex, Graph, GraphStats, StatsOptions, TermId};
pub use term::{serialize_term, Iri, Literal, LiteralKind, Term, Triple};
pub use turtle::{parse_document, parse_term, DiagnosticKind, ParseDiagnostics};
