#![allow(dead_code)]

use qtwalk_core::{Iri, Literal, Term, Triple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn entity(i: usize) -> Term {
    Term::iri(&format!("http://t.example/e{i}"))
}

pub fn predicate(i: usize) -> Iri {
    Iri::new(format!("http://t.example/p{i}"))
}

/// A quoted triple of exactly `depth` nesting levels over small pools.
pub fn quoted(rng: &mut impl Rng, depth: usize, entities: usize, predicates: usize) -> Term {
    let p = predicate(rng.random_range(0..predicates));
    if depth <= 1 {
        return Term::quoted(entity(rng.random_range(0..entities)), p, entity(rng.random_range(0..entities)));
    }
    let inner = quoted(rng, depth - 1, entities, predicates);
    let other = entity(rng.random_range(0..entities));
    if rng.random() {
        Term::quoted(inner, p, other)
    } else {
        Term::quoted(other, p, inner)
    }
}

/// Random RDF-star graph: entities, literals and quoted triples up to
/// depth 3 in subject and object positions.
pub fn random_graph(rng: &mut impl Rng, triples: usize, entities: usize, predicates: usize) -> Vec<Triple> {
    let mut qts: Vec<Term> = (0..(triples / 3).max(1))
        .map(|_| {
            let d = rng.random_range(1..=3);
            quoted(rng, d, entities, predicates)
        })
        .collect();
    qts.dedup();
    let node = |rng: &mut ChaCha8Rng, qts: &[Term]| -> Term {
        if rng.random_bool(0.3) {
            qts[rng.random_range(0..qts.len())].clone()
        } else {
            entity(rng.random_range(0..entities))
        }
    };
    let mut local = ChaCha8Rng::seed_from_u64(rng.random());
    (0..triples)
        .map(|_| {
            let s = node(&mut local, &qts);
            let p = predicate(local.random_range(0..predicates));
            let o = if local.random_bool(0.1) {
                Literal::plain(format!("v{}", local.random_range(0..5))).into()
            } else {
                node(&mut local, &qts)
            };
            Triple::new(s, p, o)
        })
        .collect()
}
