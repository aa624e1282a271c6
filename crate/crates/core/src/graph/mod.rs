//! Dictionary-encoded in-memory graph with literal statements grouped by
//! predicate and modality.

mod modality;
mod profile;

use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::rdf::{Term, Triple};

pub use modality::{classify_modality, classify_object, Modality, ModalityRules};
pub use profile::{profile, GraphProfile, LiteralCounts, ObjectCounts, Profiler};

/// Dense id of an entity (IRI or blank node).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityId(pub u64);

/// Dense id of a predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationId(pub u64);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Bijective value ↔ id map with ids in first-encounter order.
#[derive(Debug, Clone)]
pub struct Dictionary<T> {
    values: Vec<T>,
    ids: HashMap<T, u64>,
}

impl<T> Default for Dictionary<T> {
    fn default() -> Self {
        Dictionary {
            values: Vec::new(),
            ids: HashMap::new(),
        }
    }
}

impl<T: Hash + Eq + Clone> Dictionary<T> {
    pub fn get_or_insert(&mut self, value: &T) -> u64 {
        if let Some(&id) = self.ids.get(value) {
            return id;
        }
        let id = self.values.len() as u64;
        self.values.push(value.clone());
        self.ids.insert(value.clone(), id);
        id
    }

    pub fn id(&self, value: &T) -> Option<u64> {
        self.ids.get(value).copied()
    }

    pub fn value(&self, id: u64) -> Option<&T> {
        self.values.get(id as usize)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &T)> {
        self.values.iter().enumerate().map(|(i, v)| (i as u64, v))
    }
}

/// One literal-bearing statement: the subject plus its literal (or image IRI) object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiteralStatement {
    pub subject: EntityId,
    pub object: Term,
}

/// All statements of one predicate that share a modality.
#[derive(Debug, Clone)]
pub struct LiteralGroup {
    predicate: RelationId,
    predicate_iri: String,
    modality: Modality,
    statements: Vec<LiteralStatement>,
}

#[derive(Debug, thiserror::Error)]
#[error("a literal group must contain at least one statement")]
pub struct EmptyGroupError;

impl LiteralGroup {
    pub fn new(
        predicate: RelationId,
        predicate_iri: impl Into<String>,
        modality: Modality,
        statements: Vec<LiteralStatement>,
    ) -> Result<Self, EmptyGroupError> {
        if statements.is_empty() {
            return Err(EmptyGroupError);
        }
        Ok(LiteralGroup {
            predicate,
            predicate_iri: predicate_iri.into(),
            modality,
            statements,
        })
    }

    pub fn predicate(&self) -> RelationId {
        self.predicate
    }

    pub fn predicate_iri(&self) -> &str {
        &self.predicate_iri
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn statements(&self) -> &[LiteralStatement] {
        &self.statements
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// Number of distinct object values (`V` for this predicate).
    pub fn distinct_values(&self) -> usize {
        self.statements.iter().map(|s| &s.object).collect::<HashSet<_>>().len()
    }
}

/// Immutable indexed graph.
#[derive(Debug, Clone, Default)]
pub struct IndexedGraph {
    entities: Dictionary<Term>,
    relations: Dictionary<String>,
    relational: Vec<(EntityId, RelationId, EntityId)>,
    outgoing: Vec<Vec<(RelationId, EntityId)>>,
    incoming: Vec<Vec<(RelationId, EntityId)>>,
    groups: Vec<LiteralGroup>,
    duplicates: usize,
    rules: ModalityRules,
}

impl IndexedGraph {
    pub fn entity(&self, id: EntityId) -> &Term {
        self.entities.value(id.0).expect("entity id from this graph")
    }

    pub fn entity_id(&self, term: &Term) -> Option<EntityId> {
        self.entities.id(term).map(EntityId)
    }

    pub fn relation(&self, id: RelationId) -> &str {
        self.relations.value(id.0).expect("relation id from this graph")
    }

    pub fn relation_id(&self, iri: &str) -> Option<RelationId> {
        self.relations.id(&iri.to_string()).map(RelationId)
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn entities(&self) -> impl Iterator<Item = (EntityId, &Term)> {
        self.entities.iter().map(|(i, t)| (EntityId(i), t))
    }

    pub fn relations(&self) -> impl Iterator<Item = (RelationId, &str)> {
        self.relations.iter().map(|(i, r)| (RelationId(i), r.as_str()))
    }

    /// Relational edges in first-encounter order.
    pub fn relational_edges(&self) -> &[(EntityId, RelationId, EntityId)] {
        &self.relational
    }

    pub fn outgoing(&self, subject: EntityId) -> &[(RelationId, EntityId)] {
        self.outgoing.get(subject.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn incoming(&self, object: EntityId) -> &[(RelationId, EntityId)] {
        self.incoming.get(object.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Literal groups in first-encounter order of their (predicate, modality) key.
    pub fn literal_groups(&self) -> &[LiteralGroup] {
        &self.groups
    }

    pub fn literal_statement_count(&self) -> usize {
        self.groups.iter().map(LiteralGroup::len).sum()
    }

    /// Number of input triples dropped as exact duplicates.
    pub fn duplicate_count(&self) -> usize {
        self.duplicates
    }

    pub fn rules(&self) -> &ModalityRules {
        &self.rules
    }

    /// Relational triples as terms, in first-encounter order.
    pub fn relational_triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.relational.iter().map(|&(s, p, o)| {
            Triple::new(
                self.entity(s).clone(),
                Term::Iri(self.relation(p).to_string()),
                self.entity(o).clone(),
            )
        })
    }

    /// Every stored triple: relational edges first, then literal statements group by group.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        let literals = self.groups.iter().flat_map(move |g| {
            g.statements.iter().map(move |st| {
                Triple::new(
                    self.entity(st.subject).clone(),
                    Term::Iri(g.predicate_iri.clone()),
                    st.object.clone(),
                )
            })
        });
        self.relational_triples().chain(literals)
    }
}

/// Incremental builder behind [`build_index`].
pub struct GraphBuilder {
    graph: IndexedGraph,
    seen_edges: HashSet<(EntityId, RelationId, EntityId)>,
    seen_literals: HashSet<(EntityId, RelationId, Term)>,
    group_index: HashMap<(RelationId, Modality), usize>,
    pending: Vec<(RelationId, String, Modality, Vec<LiteralStatement>)>,
}

impl GraphBuilder {
    pub fn new(rules: ModalityRules) -> Self {
        GraphBuilder {
            graph: IndexedGraph {
                rules,
                ..IndexedGraph::default()
            },
            seen_edges: HashSet::new(),
            seen_literals: HashSet::new(),
            group_index: HashMap::new(),
            pending: Vec::new(),
        }
    }

    fn entity(&mut self, term: &Term) -> EntityId {
        let id = EntityId(self.graph.entities.get_or_insert(term));
        if id.index() >= self.graph.outgoing.len() {
            self.graph.outgoing.push(Vec::new());
            self.graph.incoming.push(Vec::new());
        }
        id
    }

    pub fn push(&mut self, triple: Triple) {
        let Triple {
            subject,
            predicate,
            object,
        } = triple;
        let predicate = match predicate {
            Term::Iri(iri) => iri,
            other => {
                log::warn!("skipping triple with non-IRI predicate {other}");
                return;
            }
        };
        let s = self.entity(&subject);
        let p = RelationId(self.graph.relations.get_or_insert(&predicate));
        match classify_object(&object, &predicate, &self.graph.rules) {
            None => {
                let o = self.entity(&object);
                if !self.seen_edges.insert((s, p, o)) {
                    self.graph.duplicates += 1;
                    return;
                }
                self.graph.relational.push((s, p, o));
                self.graph.outgoing[s.index()].push((p, o));
                self.graph.incoming[o.index()].push((p, s));
            }
            Some(modality) => {
                if !self.seen_literals.insert((s, p, object.clone())) {
                    self.graph.duplicates += 1;
                    return;
                }
                let next = self.pending.len();
                let idx = *self.group_index.entry((p, modality)).or_insert(next);
                if idx == next {
                    self.pending.push((p, predicate, modality, Vec::new()));
                }
                self.pending[idx].3.push(LiteralStatement { subject: s, object });
            }
        }
    }

    pub fn build(mut self) -> IndexedGraph {
        self.graph.groups = self
            .pending
            .into_iter()
            .map(|(p, iri, m, st)| LiteralGroup {
                predicate: p,
                predicate_iri: iri,
                modality: m,
                statements: st,
            })
            .collect();
        self.graph
    }
}

/// Builds the indexed graph. Ids follow first-encounter order; exact duplicates are dropped and counted.
pub fn build_index(triples: impl IntoIterator<Item = Triple>, rules: &ModalityRules) -> IndexedGraph {
    let mut builder = GraphBuilder::new(rules.clone());
    for t in triples {
        builder.push(t);
    }
    builder.build()
}
