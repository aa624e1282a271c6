use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{classify_object, Dictionary, IndexedGraph, Modality, ModalityRules};
use crate::rdf::{Term, Triple};

/// Dataset statistics laid out like a benchmark-table row.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphProfile {
    pub relations: u64,
    /// Distinct terms in subject or object position, literal values included.
    pub nodes: u64,
    pub triples: u64,
    pub objects: ObjectCounts,
    pub literals: LiteralCounts,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectCounts {
    pub iris: u64,
    pub blank_nodes: u64,
    /// Objects routed to literal groups; IRI-valued image objects count here.
    pub literals: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiteralCounts {
    pub numbers: u64,
    pub dates: u64,
    pub text: u64,
    pub images: u64,
    pub others: u64,
}

impl GraphProfile {
    /// Checks that every split sums to its total.
    pub fn is_consistent(&self) -> bool {
        let o = &self.objects;
        let l = &self.literals;
        o.iris + o.blank_nodes + o.literals == self.triples
            && l.numbers + l.dates + l.text + l.images + l.others == o.literals
    }

    /// Two-column aligned table for terminals.
    pub fn render_table(&self) -> String {
        let rows: [(&str, u64); 13] = [
            ("Relations", self.relations),
            ("Nodes", self.nodes),
            ("Triples", self.triples),
            ("objects thereof...", u64::MAX),
            ("...IRIs", self.objects.iris),
            ("...blank nodes", self.objects.blank_nodes),
            ("...literals", self.objects.literals),
            ("thereof...", u64::MAX),
            ("...numbers", self.literals.numbers),
            ("...dates", self.literals.dates),
            ("...text", self.literals.text),
            ("...images", self.literals.images),
            ("...others", self.literals.others),
        ];
        let mut out = String::new();
        for (label, value) in rows {
            if value == u64::MAX {
                let _ = writeln!(out, "{label}");
            } else {
                let _ = writeln!(out, "{label:<20}{:>14}", group_thousands(value));
            }
        }
        out
    }
}

fn group_thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// Streaming profile accumulator; memory grows with the number of distinct
/// terms and triples, not with input size.
pub struct Profiler {
    rules: ModalityRules,
    nodes: Dictionary<Term>,
    relations: Dictionary<String>,
    seen: HashSet<(u64, u64, u64)>,
    profile: GraphProfile,
}

impl Profiler {
    pub fn new(rules: ModalityRules) -> Self {
        Profiler {
            rules,
            nodes: Dictionary::default(),
            relations: Dictionary::default(),
            seen: HashSet::new(),
            profile: GraphProfile::default(),
        }
    }

    pub fn push(&mut self, triple: &Triple) {
        let Term::Iri(predicate) = &triple.predicate else {
            return;
        };
        let s = self.nodes.get_or_insert(&triple.subject);
        let p = self.relations.get_or_insert(predicate);
        let o = self.nodes.get_or_insert(&triple.object);
        if !self.seen.insert((s, p, o)) {
            return;
        }
        let prof = &mut self.profile;
        prof.triples += 1;
        match classify_object(&triple.object, predicate, &self.rules) {
            None => match triple.object {
                Term::BlankNode(_) => prof.objects.blank_nodes += 1,
                _ => prof.objects.iris += 1,
            },
            Some(m) => {
                prof.objects.literals += 1;
                let l = &mut prof.literals;
                match m {
                    Modality::Numeric => l.numbers += 1,
                    Modality::Temporal => l.dates += 1,
                    Modality::Text => l.text += 1,
                    Modality::Image => l.images += 1,
                    Modality::Other => l.others += 1,
                }
            }
        }
    }

    pub fn finish(mut self) -> GraphProfile {
        self.profile.relations = self.relations.len() as u64;
        self.profile.nodes = self.nodes.len() as u64;
        self.profile
    }
}

/// Profiles an already indexed graph.
pub fn profile(graph: &IndexedGraph) -> GraphProfile {
    let mut p = Profiler::new(graph.rules().clone());
    for t in graph.triples() {
        p.push(&t);
    }
    p.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_index;
    use crate::rdf::{parse_str, vocab::FOAF_DEPICTION, ParseMode};

    #[test]
    fn mannheim_profile() {
        let triples = parse_str(crate::graph::tests::MANNHEIM, ParseMode::Strict).unwrap().triples;
        let rules = ModalityRules::default().with_image_predicate(FOAF_DEPICTION);
        let g = build_index(triples.clone(), &rules);
        let p = profile(&g);
        assert_eq!(p.triples, 6);
        assert_eq!(p.relations, 6);
        assert_eq!(p.objects.iris, 2);
        assert_eq!(p.objects.literals, 4);
        assert_eq!(
            p.literals,
            LiteralCounts {
                numbers: 1,
                dates: 1,
                text: 1,
                images: 1,
                others: 0
            }
        );
        // Mannheim, Germany, University, 3 literals, 1 image IRI
        assert_eq!(p.nodes, 7);
        assert!(p.is_consistent());

        let mut streaming = Profiler::new(rules);
        for t in &triples {
            streaming.push(t);
        }
        assert_eq!(streaming.finish(), p);
    }

    #[test]
    fn empty_profile_is_zero() {
        let g = build_index(Vec::new(), &ModalityRules::default());
        assert_eq!(profile(&g), GraphProfile::default());
    }

    #[test]
    fn table_rendering() {
        let p = GraphProfile {
            triples: 777_124,
            ..Default::default()
        };
        assert!(p.render_table().contains("777,124"));
    }
}
