//! Per-predicate accounting of what a run added and removed, the size-bound
//! checks, and an independent re-count from an output graph.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::graph::Modality;
use crate::rdf::{Term, Triple};

/// Entities and statements an operator may add, by strategy family.
///
/// Fallback statements always add one statement each, and the entities
/// they mint are allowed on top of the bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Bound {
    /// EXCLUDE: nothing added, every statement removed.
    Removal,
    /// TRANSFORM: δE ≤ V, δS = S.
    Values { values: usize },
    /// ONEENTITY: δE ≤ 1, δS = S.
    Single,
    /// Binning: δE ≤ bins; δS = S unless values map to several bins.
    Bins { bins: usize, multi_edge: bool },
    /// DATFEAT: δE ≤ 7 + 31 + 12 + 4 + years, δS = 5·S.
    Calendar { years: usize },
    /// LDA: δE ≤ T, S ≤ δS ≤ T·S.
    Topics { topics: usize },
    /// Image labels: δE ≤ vocabulary, δS = k·S.
    Labels { vocabulary: Option<usize>, per_image: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    /// Allowed deviation (multi-bin edges).
    Exception(String),
    Fail(String),
}

impl Verdict {
    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail(_))
    }
}

/// One literal group (predicate + modality).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub predicate: String,
    pub modality: Modality,
    /// Configured strategy.
    pub strategy: String,
    /// What actually ran (differs after a group-level fallback).
    pub applied: String,
    /// S: literal statements of the group.
    pub statements: usize,
    /// V: distinct lexical values.
    pub distinct_values: usize,
    /// Minted entities first introduced by this row.
    pub delta_entities: usize,
    /// Distinct minted entities this row links to.
    pub entities_used: usize,
    /// Distinct new subject links.
    pub delta_statements: usize,
    /// Links produced before de-duplication.
    pub emitted_statements: usize,
    /// Emitted links already present in the output.
    pub collapsed: usize,
    pub structural_statements: usize,
    pub removed: usize,
    pub fallback_statements: usize,
    pub fallback_entities: usize,
    pub bound: Bound,
    pub verdict: Verdict,
    pub warnings: Vec<String>,
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub statements: usize,
    pub removed: usize,
    pub delta_entities: usize,
    pub delta_statements: usize,
    pub emitted_statements: usize,
    pub collapsed: usize,
    pub structural_statements: usize,
    pub fallback_statements: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredicateSummary {
    pub delta_statements: usize,
    pub entities_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationReport {
    pub namespace: String,
    pub seed: u64,
    pub input_triples: usize,
    pub duplicate_input_triples: usize,
    pub relational_statements: usize,
    pub output_triples: usize,
    pub rows: Vec<ReportRow>,
    /// Calendar links shared by all DATFEAT groups.
    pub shared_structural_statements: usize,
    pub totals: Totals,
    pub predicates: BTreeMap<String, PredicateSummary>,
    pub warnings: Vec<String>,
}

impl AugmentationReport {
    pub fn sum_rows(&self) -> Totals {
        let mut t = Totals::default();
        for r in &self.rows {
            t.statements += r.statements;
            t.removed += r.removed;
            t.delta_entities += r.delta_entities;
            t.delta_statements += r.delta_statements;
            t.emitted_statements += r.emitted_statements;
            t.collapsed += r.collapsed;
            t.structural_statements += r.structural_statements;
            t.fallback_statements += r.fallback_statements;
        }
        t.structural_statements += self.shared_structural_statements;
        t
    }
}

/// Checks one row against its bound.
pub fn check_row(row: &ReportRow) -> Verdict {
    let s = row.statements;
    let f = row.fallback_statements.min(s);
    let regular = s - f;
    let e = row.entities_used;
    let emitted = row.emitted_statements;
    let extra = row.fallback_entities;
    let fail = |m: String| Verdict::Fail(m);
    if row.delta_entities > e {
        return fail(format!("δE {} exceeds entities used {e}", row.delta_entities));
    }
    if row.delta_statements + row.collapsed != emitted {
        return fail(format!(
            "δS {} + collapsed {} != emitted {emitted}",
            row.delta_statements, row.collapsed
        ));
    }
    if row.removed != s {
        return fail(format!("removed {} != S {s}", row.removed));
    }
    let entity_bound = match &row.bound {
        Bound::Removal => 0,
        Bound::Values { values } => *values,
        Bound::Single => 1,
        Bound::Bins { bins, .. } => *bins,
        Bound::Calendar { years } => 7 + 31 + 12 + 4 + years,
        Bound::Topics { topics } => *topics,
        Bound::Labels { vocabulary, .. } => vocabulary.unwrap_or(usize::MAX),
    }
    .saturating_add(extra);
    if e > entity_bound {
        return fail(format!("δE {e} exceeds bound {entity_bound}"));
    }
    match &row.bound {
        Bound::Removal => {
            if emitted != 0 || row.structural_statements != 0 {
                return fail(format!("EXCLUDE emitted {emitted} statements"));
            }
        }
        Bound::Values { .. } | Bound::Single => {
            if emitted != s {
                return fail(format!("δS {emitted} != S {s}"));
            }
        }
        Bound::Bins { multi_edge, .. } => {
            if *multi_edge {
                if emitted < s {
                    return fail(format!("δS {emitted} < S {s}"));
                }
                if emitted > s {
                    return Verdict::Exception(format!("overlapping/hierarchical bins: δS {emitted} > S {s}"));
                }
            } else if emitted != s {
                return fail(format!("δS {emitted} != S {s}"));
            }
        }
        Bound::Calendar { .. } => {
            if emitted != 5 * regular + f {
                return fail(format!("δS {emitted} != 5·{regular} + {f}"));
            }
        }
        Bound::Topics { topics } => {
            if emitted > topics * regular + f || emitted < s {
                return fail(format!("δS {emitted} outside [{s}, {topics}·{regular} + {f}]"));
            }
        }
        Bound::Labels { per_image, .. } => {
            if emitted > per_image * regular + f || emitted < s {
                return fail(format!("δS {emitted} outside [{s}, {per_image}·{regular} + {f}]"));
            }
        }
    }
    Verdict::Pass
}

/// Verdict per row, in row order.
pub fn verify_bounds(report: &AugmentationReport) -> Vec<(String, Modality, Verdict)> {
    report
        .rows
        .iter()
        .map(|r| (r.predicate.clone(), r.modality, check_row(r)))
        .collect()
}

/// Re-counts an output graph and compares it with its report.
///
/// Returns one message per problem; empty means the output and report agree
/// and every bound holds.
pub fn verify_output(output: &[Triple], report: &AugmentationReport) -> Vec<String> {
    let mut problems = Vec::new();
    let ns = report.namespace.as_str();
    let minted = |t: &Term| matches!(t, Term::Iri(i) if i.starts_with(ns));

    let sums = report.sum_rows();
    if sums != report.totals {
        problems.push(format!("totals {:?} do not equal the sum of rows {:?}", report.totals, sums));
    }
    for (p, m, v) in verify_bounds(report) {
        if let Verdict::Fail(why) = v {
            problems.push(format!("{p} ({}): {why}", m.as_str()));
        }
    }

    let distinct: Vec<&Triple> = {
        let mut seen = HashSet::new();
        output.iter().filter(|t| seen.insert(*t)).collect()
    };
    if distinct.len() != report.output_triples {
        problems.push(format!("output has {} triples, report says {}", distinct.len(), report.output_triples));
    }

    let mut relational = 0usize;
    let mut structural = 0usize;
    let mut links: HashMap<&str, (usize, HashSet<&str>)> = HashMap::new();
    let mut entities: HashSet<&str> = HashSet::new();
    for t in &distinct {
        if let Term::Literal(_) = t.object {
            problems.push(format!("literal remains in output: {t}"));
            continue;
        }
        let pred = t.predicate.as_iri().unwrap_or("");
        if minted(&t.predicate) {
            structural += 1;
            for end in [&t.subject, &t.object] {
                if let Term::Iri(i) = end {
                    entities.insert(i);
                }
            }
        } else if minted(&t.object) {
            if minted(&t.subject) {
                problems.push(format!("minted subject on a subject link: {t}"));
            }
            let obj = t.object.as_iri().unwrap();
            entities.insert(obj);
            let entry = links.entry(pred).or_default();
            entry.0 += 1;
            entry.1.insert(obj);
        } else {
            if minted(&t.subject) {
                problems.push(format!("minted subject outside structure: {t}"));
            }
            relational += 1;
        }
    }
    if relational != report.relational_statements {
        problems.push(format!(
            "{relational} relational triples in output, report says {}",
            report.relational_statements
        ));
    }
    if structural != report.totals.structural_statements {
        problems.push(format!(
            "{structural} structural triples in output, report says {}",
            report.totals.structural_statements
        ));
    }
    if entities.len() != report.totals.delta_entities {
        problems.push(format!(
            "{} minted entities in output, report says {}",
            entities.len(),
            report.totals.delta_entities
        ));
    }

    let mut row_sums: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &report.rows {
        *row_sums.entry(r.predicate.as_str()).or_default() += r.delta_statements;
    }
    for (p, sum) in &row_sums {
        let summary = report.predicates.get(*p).cloned().unwrap_or_default();
        let (count, objects) = links.get(p).map(|(c, o)| (*c, o.len())).unwrap_or((0, 0));
        if summary.delta_statements != *sum {
            problems.push(format!("{p}: predicate δS {} != sum of rows {sum}", summary.delta_statements));
        }
        if count != summary.delta_statements {
            problems.push(format!("{p}: {count} links in output, report says {}", summary.delta_statements));
        }
        if objects != summary.entities_used {
            problems.push(format!("{p}: {objects} linked entities in output, report says {}", summary.entities_used));
        }
    }
    for p in links.keys() {
        if !row_sums.contains_key(p) {
            problems.push(format!("{p}: minted links for a predicate missing from the report"));
        }
    }
    problems
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(bound: Bound, s: usize, e: usize, emitted: usize) -> ReportRow {
        ReportRow {
            predicate: "http://example.org/p".into(),
            modality: Modality::Numeric,
            strategy: "X".into(),
            applied: "X".into(),
            statements: s,
            distinct_values: s,
            delta_entities: e,
            entities_used: e,
            delta_statements: emitted,
            emitted_statements: emitted,
            collapsed: 0,
            structural_statements: 0,
            removed: s,
            fallback_statements: 0,
            fallback_entities: 0,
            bound,
            verdict: Verdict::Pass,
            warnings: vec![],
            details: serde_json::Value::Null,
        }
    }

    #[test]
    fn bounds() {
        assert_eq!(check_row(&row(Bound::Single, 10, 1, 10)), Verdict::Pass);
        assert!(check_row(&row(Bound::Single, 10, 2, 10)).is_fail());
        assert_eq!(check_row(&row(Bound::Calendar { years: 100 }, 100, 150, 500)), Verdict::Pass);
        assert!(check_row(&row(Bound::Calendar { years: 100 }, 100, 150, 499)).is_fail());
        assert_eq!(check_row(&row(Bound::Topics { topics: 20 }, 10, 20, 100)), Verdict::Pass);
        assert!(check_row(&row(Bound::Topics { topics: 20 }, 10, 21, 100)).is_fail());
        assert!(check_row(&row(Bound::Topics { topics: 2 }, 10, 2, 21)).is_fail());
        assert!(matches!(
            check_row(&row(Bound::Bins { bins: 4, multi_edge: true }, 10, 4, 14)),
            Verdict::Exception(_)
        ));
        assert!(check_row(&row(Bound::Bins { bins: 4, multi_edge: false }, 10, 4, 14)).is_fail());
        assert_eq!(check_row(&row(Bound::Removal, 10, 0, 0)), Verdict::Pass);
        let mut r = row(Bound::Single, 10, 1, 10);
        r.delta_entities = 2;
        assert!(check_row(&r).is_fail());
    }
}
