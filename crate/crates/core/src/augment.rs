//! Shared output type of every strategy and the rules for minting new IRIs.

use std::collections::HashSet;

use sha2::{Digest, Sha256};

use crate::graph::LiteralGroup;
use crate::rdf::term_validate_iri;
use crate::rdf::{Term, Triple};

/// Values longer than this many characters are truncated and hash-suffixed.
pub const MAX_VALUE_CHARS: usize = 64;

/// What one strategy produced for one literal group.
#[derive(Debug, Clone, Default)]
pub struct Augmentation {
    /// Distinct minted IRIs, in first-use order.
    pub minted_entities: Vec<String>,
    /// Subject-linking triples that replace literal statements.
    pub triples: Vec<Triple>,
    /// Score attached to each entry of `triples`, when the strategy produces one.
    pub weights: Vec<Option<f64>>,
    /// Links among minted entities (bin chains, calendar structure, hierarchy).
    pub structural: Vec<Triple>,
    /// Literal statements removed from the graph.
    pub removed: usize,
    /// Statements that fell back to a baseline inside the strategy.
    pub fallback_statements: usize,
    /// Entities minted only by such fallbacks.
    pub fallback_entities: usize,
    pub warnings: Vec<String>,
    /// Strategy-specific audit data for the report (bin layouts, split trees, topic words).
    pub details: serde_json::Value,
}

impl Augmentation {
    /// Records a subject → minted-object link.
    pub fn link(&mut self, subject: Term, predicate: &str, object_iri: String, weight: Option<f64>) {
        self.triples.push(Triple::new(subject, Term::Iri(predicate.to_string()), Term::Iri(object_iri)));
        self.weights.push(weight);
    }

    /// Registers minted entities, keeping first-use order.
    pub(crate) fn finish_entities(&mut self) {
        let mut seen = HashSet::new();
        let mut order = Vec::new();
        let objects = self.triples.iter().map(|t| &t.object);
        let structural = self.structural.iter().flat_map(|t| [&t.subject, &t.object]);
        for term in objects.chain(structural) {
            if let Term::Iri(iri) = term {
                if seen.insert(iri.as_str()) {
                    order.push(iri.clone());
                }
            }
        }
        self.minted_entities = order;
    }

    /// Appends another augmentation's output (used when a strategy splits its work).
    pub(crate) fn absorb(&mut self, other: Augmentation) {
        self.triples.extend(other.triples);
        self.weights.extend(other.weights);
        self.structural.extend(other.structural);
        self.removed += other.removed;
        self.fallback_statements += other.fallback_statements;
        self.fallback_entities += other.fallback_entities;
        self.warnings.extend(other.warnings);
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NamespaceError {
    #[error("namespace {0:?} is not a valid absolute IRI: {1}")]
    Invalid(String, String),
    #[error("namespace {0:?} must end with '/', '#' or ':'")]
    NoSeparator(String),
}

/// Reserved prefix under which all minted terms live (the `new:` namespace).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Namespace {
    base: String,
}

impl Namespace {
    pub fn new(base: impl Into<String>) -> Result<Self, NamespaceError> {
        let base = base.into();
        term_validate_iri(&base).map_err(|e| NamespaceError::Invalid(base.clone(), e))?;
        if !(base.ends_with('/') || base.ends_with('#') || base.ends_with(':')) {
            return Err(NamespaceError::NoSeparator(base));
        }
        Ok(Namespace { base })
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn iri(&self, local: &str) -> String {
        format!("{}{}", self.base, local)
    }

    pub fn contains(&self, iri: &str) -> bool {
        iri.starts_with(&self.base)
    }

    /// Minter for a group, using the predicate's local name as stem.
    pub fn minter_for(&self, group: &LiteralGroup) -> Minter {
        Minter::new(self.clone(), predicate_stem(group.predicate_iri()))
    }
}

impl Default for Namespace {
    fn default() -> Self {
        Namespace {
            base: "http://literal-forge.org/new/".to_string(),
        }
    }
}

/// Names minted entities for one predicate.
#[derive(Debug, Clone)]
pub struct Minter {
    namespace: Namespace,
    stem: String,
}

impl Minter {
    pub fn new(namespace: Namespace, stem: impl Into<String>) -> Self {
        Minter {
            namespace,
            stem: stem.into(),
        }
    }

    pub fn namespace(&self) -> &Namespace {
        &self.namespace
    }

    pub fn stem(&self) -> &str {
        &self.stem
    }

    /// `new:<stem><suffix>`; `suffix` must already be IRI-safe.
    pub fn predicate_scoped(&self, suffix: &str) -> String {
        self.namespace.iri(&format!("{}{}", self.stem, suffix))
    }

    /// Global name, shared across predicates.
    pub fn global(&self, local: &str) -> String {
        self.namespace.iri(local)
    }

    pub fn value_entity(&self, lexical: &str) -> String {
        self.predicate_scoped(&encode_value(lexical))
    }

    pub fn any_value(&self) -> String {
        self.predicate_scoped("AnyValue")
    }
}

/// Local name of a predicate IRI, percent-encoded.
pub fn predicate_stem(iri: &str) -> String {
    let trimmed = iri.trim_end_matches(['/', '#']);
    let local = trimmed
        .rsplit(['/', '#'])
        .next()
        .filter(|s| !s.is_empty() && *s != trimmed)
        .or_else(|| trimmed.rsplit(':').next())
        .unwrap_or(trimmed);
    let stem = encode_value(local);
    if stem.is_empty() {
        "property".to_string()
    } else {
        stem
    }
}

/// Percent-encodes a lexical value for use in a local name.
///
/// Values longer than [`MAX_VALUE_CHARS`] characters are cut and suffixed
/// with `_` plus the first 8 hex digits of the SHA-256 of the full value.
pub fn encode_value(lexical: &str) -> String {
    let n_chars = lexical.chars().count();
    if n_chars <= MAX_VALUE_CHARS {
        return percent_encode(lexical);
    }
    let cut: String = lexical.chars().take(MAX_VALUE_CHARS).collect();
    let digest = Sha256::digest(lexical.as_bytes());
    format!("{}_{}", percent_encode(&cut), hex8(&digest))
}

fn hex8(digest: &[u8]) -> String {
    digest[..4].iter().map(|b| format!("{b:02x}")).collect()
}

fn percent_encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

/// Zero-padded index, at least two digits wide, wide enough for `count` items.
pub fn padded_index(index: usize, count: usize) -> String {
    let width = count.saturating_sub(1).to_string().len().max(2);
    format!("{index:0width$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems() {
        assert_eq!(predicate_stem("http://dbpedia.org/ontology/populationMetro"), "populationMetro");
        assert_eq!(predicate_stem("http://xmlns.com/foaf/0.1/depiction"), "depiction");
        assert_eq!(predicate_stem("http://example.org/vocab#height"), "height");
        assert_eq!(predicate_stem("http://example.org/height/"), "height");
        assert_eq!(predicate_stem("urn:isbn"), "isbn");
    }

    #[test]
    fn short_values_kept() {
        assert_eq!(encode_value("2362046"), "2362046");
        assert_eq!(encode_value("a b/ü"), "a%20b%2F%C3%BC");
    }

    #[test]
    fn long_values_hashed() {
        let a = "x".repeat(100);
        let b = format!("{}y", "x".repeat(99));
        let ea = encode_value(&a);
        let eb = encode_value(&b);
        assert_ne!(ea, eb);
        assert!(ea.starts_with(&"x".repeat(64)));
        assert_eq!(ea.len(), 64 + 1 + 8);
        assert_eq!(encode_value(&"x".repeat(64)), "x".repeat(64));
    }

    #[test]
    fn minted_names() {
        let ns = Namespace::new("http://example.org/new/").unwrap();
        let m = Minter::new(ns, "populationMetro");
        assert_eq!(m.value_entity("2362046"), "http://example.org/new/populationMetro2362046");
        assert_eq!(m.any_value(), "http://example.org/new/populationMetroAnyValue");
        assert!(Namespace::new("http://example.org/new").is_err());
        assert!(Namespace::new("new:").is_ok());
        assert!(Namespace::new("not an iri/").is_err());
    }

    #[test]
    fn padding() {
        assert_eq!(padded_index(2, 10), "02");
        assert_eq!(padded_index(7, 150), "007");
        assert_eq!(padded_index(0, 1), "00");
    }
}
