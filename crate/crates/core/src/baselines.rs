//! The three reference strategies: drop literals, one entity per value, one entity per predicate.

use crate::augment::{Augmentation, Minter};
use crate::graph::{IndexedGraph, LiteralGroup, LiteralStatement};
use crate::rdf::Term;

/// EXCLUDE: removes every literal statement without replacement.
pub fn exclude(group: &LiteralGroup) -> Augmentation {
    Augmentation {
        removed: group.len(),
        ..Augmentation::default()
    }
}

/// TRANSFORM (Literal2Entity): one entity per distinct lexical value of the predicate.
pub fn transform_literal2entity(group: &LiteralGroup, graph: &IndexedGraph, minter: &Minter) -> Augmentation {
    let mut aug = Augmentation {
        removed: group.len(),
        ..Augmentation::default()
    };
    for st in group.statements() {
        aug.link(
            graph.entity(st.subject).clone(),
            group.predicate_iri(),
            minter.value_entity(&lexical_key(&st.object)),
            None,
        );
    }
    aug.finish_entities();
    aug
}

/// ONEENTITY: every statement links to the single `<stem>AnyValue` entity.
pub fn one_entity(group: &LiteralGroup, graph: &IndexedGraph, minter: &Minter) -> Augmentation {
    let mut aug = Augmentation {
        removed: group.len(),
        ..Augmentation::default()
    };
    for st in group.statements() {
        aug.link(graph.entity(st.subject).clone(), group.predicate_iri(), minter.any_value(), None);
    }
    aug.finish_entities();
    aug
}

/// Lexical identity of an object: the literal's lexical form, or the IRI text for image references.
pub(crate) fn lexical_key(object: &Term) -> String {
    match object {
        Term::Literal(lit) => lit.lexical().to_string(),
        Term::Iri(iri) => iri.clone(),
        Term::BlankNode(b) => format!("_:{b}"),
    }
}

/// Single-statement fallbacks used by the richer strategies.
pub(crate) fn fallback_any_value(aug: &mut Augmentation, graph: &IndexedGraph, predicate: &str, st: &LiteralStatement, minter: &Minter) {
    aug.link(graph.entity(st.subject).clone(), predicate, minter.any_value(), None);
    aug.fallback_statements += 1;
}

pub(crate) fn fallback_value(aug: &mut Augmentation, graph: &IndexedGraph, predicate: &str, st: &LiteralStatement, minter: &Minter) {
    aug.link(graph.entity(st.subject).clone(), predicate, minter.value_entity(&lexical_key(&st.object)), None);
    aug.fallback_statements += 1;
}
