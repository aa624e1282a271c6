//! Discretization of numeric literal values into connected bin entities.
//!
//! A layout is computed from the retained values of one predicate (or one
//! subpopulation of it). Each leaf bin covers `[lower, upper)`, the last one
//! is closed. Overlap widens every bin on the sides where it touches a
//! neighbour by `overlap × width`, so values near a boundary belong to both
//! bins. Hierarchy levels halve the bin count per level; leaf `i` belongs to
//! the level-`j` bin `i >> j`.

pub mod lof;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::augment::{padded_index, Augmentation, Minter};
use crate::baselines::fallback_value;
use crate::graph::{IndexedGraph, LiteralGroup, LiteralStatement};
use crate::rdf::{Literal, Term, Triple};

pub use lof::{local_outlier_factors, lof_scores, LofResult, LofSettings};

/// Local name of the inter-bin adjacency predicate.
pub const NEXT_BIN: &str = "nextBin";
/// Local name of the child → parent bin predicate.
pub const PARENT_BIN: &str = "parentBin";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinCount {
    /// nBINS: at most `n` bins.
    Fixed(usize),
    /// p%BINS: a fraction of the number of unique values.
    Percent(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinScheme {
    #[default]
    EqualWidth,
    EqualFrequency,
}

/// How values outside the layout range (LOF outliers) are represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutlierPolicy {
    /// Link to `<stem>OutlierLow` / `<stem>OutlierHigh`.
    #[default]
    Dedicated,
    /// Link to the first or last bin.
    NearestBin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinningSpec {
    pub mode: BinCount,
    pub overlap: f64,
    pub hierarchy_depth: u32,
    pub connect_adjacent: bool,
    pub scheme: BinScheme,
    pub outliers: OutlierPolicy,
}

impl Default for BinningSpec {
    fn default() -> Self {
        BinningSpec {
            mode: BinCount::Fixed(10),
            overlap: 0.0,
            hierarchy_depth: 0,
            connect_adjacent: true,
            scheme: BinScheme::EqualWidth,
            outliers: OutlierPolicy::Dedicated,
        }
    }
}

impl BinningSpec {
    pub fn fixed(n: usize) -> Self {
        BinningSpec {
            mode: BinCount::Fixed(n),
            ..Self::default()
        }
    }

    pub fn percent(p: f64) -> Self {
        BinningSpec {
            mode: BinCount::Percent(p),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), BinningError> {
        match self.mode {
            BinCount::Fixed(0) => return Err(BinningError::InvalidSpec("bin count n must be at least 1".into())),
            BinCount::Percent(p) if !(p > 0.0 && p <= 1.0) => {
                return Err(BinningError::InvalidSpec(format!("percentage {p} must lie in (0, 1]")))
            }
            _ => {}
        }
        if !(self.overlap >= 0.0 && self.overlap < 1.0) {
            return Err(BinningError::InvalidSpec(format!("overlap {} must lie in [0, 1)", self.overlap)));
        }
        Ok(())
    }

    /// True when every value maps to exactly one bin.
    pub fn is_flat(&self) -> bool {
        self.overlap == 0.0 && self.hierarchy_depth == 0
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BinningError {
    #[error("invalid binning spec: {0}")]
    InvalidSpec(String),
    #[error("cannot bin an empty set of values")]
    NoValues,
}

#[derive(Debug, thiserror::Error)]
#[error("not a finite number: {0:?}")]
pub struct NumericParseError(pub String);

/// Parses a numeric lexical form into `f64` (correctly rounded). Non-finite values are rejected.
pub fn parse_numeric(literal: &Literal) -> Result<f64, NumericParseError> {
    let text = literal.lexical().trim();
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(NumericParseError(literal.lexical().to_string())),
    }
}

/// Number of bins for a predicate with `occurrences` values of which `unique` are distinct.
pub fn bin_count(occurrences: usize, unique: usize, spec: &BinningSpec) -> usize {
    debug_assert!(unique >= 1 && unique <= occurrences.max(unique));
    match spec.mode {
        BinCount::Fixed(n) => n.min(unique).max(1),
        BinCount::Percent(p) => ((p * unique as f64).round() as usize).max(1),
    }
}

/// One bin at one level, with its (possibly widened) membership interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinLayout {
    /// Leaf boundaries, `bins + 1` entries, strictly increasing unless all values are equal.
    pub boundaries: Vec<f64>,
    /// `levels[0]` are the leaves, each further level is coarser.
    pub levels: Vec<Vec<Bin>>,
    pub overlap: f64,
}

/// Reference to a bin, or to an outlier entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinRef {
    Bin { level: u32, index: usize },
    OutlierLow,
    OutlierHigh,
}

impl BinLayout {
    pub fn min(&self) -> f64 {
        self.boundaries[0]
    }

    pub fn max(&self) -> f64 {
        *self.boundaries.last().unwrap()
    }

    pub fn leaf_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Bins across all levels (the `n` in the entity bound).
    pub fn total_bins(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// Leaf index under the disjoint partition.
    pub fn leaf_index(&self, value: f64) -> usize {
        let interior = &self.boundaries[1..self.leaf_count()];
        interior.partition_point(|b| *b <= value)
    }
}

/// Builds the layout for `values` (must be non-empty).
pub fn compute_bins(values: &[f64], spec: &BinningSpec) -> Result<BinLayout, BinningError> {
    spec.validate()?;
    if values.is_empty() {
        return Err(BinningError::NoValues);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min = sorted[0];
    let max = *sorted.last().unwrap();
    let mut unique = sorted.clone();
    unique.dedup();
    let k = bin_count(values.len(), unique.len(), spec);

    let boundaries = if min == max {
        vec![min, max]
    } else {
        let mut b = Vec::with_capacity(k + 1);
        b.push(min);
        match spec.scheme {
            BinScheme::EqualWidth => {
                let width = (max - min) / k as f64;
                b.extend((1..k).map(|i| min + i as f64 * width));
            }
            BinScheme::EqualFrequency => {
                b.extend((1..k).map(|i| quantile(&sorted, i as f64 / k as f64)));
            }
        }
        b.push(max);
        // merge duplicate boundaries and anything that collapsed onto the ends
        let mut merged: Vec<f64> = Vec::with_capacity(b.len());
        for x in b {
            if merged.last().is_none_or(|&last| x > last) {
                merged.push(x);
            }
        }
        if *merged.last().unwrap() != max {
            merged.pop();
            merged.push(max);
        }
        merged
    };

    let leaves = boundaries.len() - 1;
    let leaf_bins: Vec<Bin> = (0..leaves)
        .map(|i| {
            let (lo, hi) = (boundaries[i], boundaries[i + 1]);
            let pad = spec.overlap * (hi - lo);
            Bin {
                lower: if i > 0 { lo - pad } else { lo },
                upper: if i + 1 < leaves { hi + pad } else { hi },
            }
        })
        .collect();
    let mut levels = vec![leaf_bins];
    let mut count = leaves;
    for j in 1..=spec.hierarchy_depth {
        let next = leaves.div_ceil(1 << j);
        if next == count {
            break;
        }
        count = next;
        let level = (0..count)
            .map(|p| {
                let first = p << j;
                let last = (((p + 1) << j) - 1).min(leaves - 1);
                Bin {
                    lower: levels[0][first].lower,
                    upper: levels[0][last].upper,
                }
            })
            .collect();
        levels.push(level);
    }
    Ok(BinLayout {
        boundaries,
        levels,
        overlap: spec.overlap,
    })
}

/// Linear-interpolation empirical quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// All bins containing `value`, across overlap and hierarchy levels. Never empty.
pub fn assign_bins(value: f64, layout: &BinLayout, policy: OutlierPolicy) -> Vec<BinRef> {
    let leaves = layout.leaf_count();
    let clamped = if value < layout.min() {
        match policy {
            OutlierPolicy::Dedicated => return vec![BinRef::OutlierLow],
            OutlierPolicy::NearestBin => layout.min(),
        }
    } else if value > layout.max() {
        match policy {
            OutlierPolicy::Dedicated => return vec![BinRef::OutlierHigh],
            OutlierPolicy::NearestBin => layout.max(),
        }
    } else {
        value
    };

    let mut leaf_hits: Vec<usize> = if layout.overlap == 0.0 {
        vec![layout.leaf_index(clamped)]
    } else {
        let home = layout.leaf_index(clamped);
        let lo = home.saturating_sub(1);
        let hi = (home + 1).min(leaves - 1);
        (lo..=hi)
            .filter(|&i| {
                let b = layout.levels[0][i];
                b.lower <= clamped && (clamped < b.upper || (i + 1 == leaves && clamped <= b.upper))
            })
            .collect()
    };
    if leaf_hits.is_empty() {
        leaf_hits.push(layout.leaf_index(clamped));
    }

    let mut out: BTreeSet<BinRef> = BTreeSet::new();
    for &leaf in &leaf_hits {
        for level in 0..layout.levels.len() as u32 {
            out.insert(BinRef::Bin {
                level,
                index: leaf >> level,
            });
        }
    }
    out.into_iter().collect()
}

/// Per-statement outcome handed to [`emit_bin_triples`].
#[derive(Debug, Clone, PartialEq)]
pub enum BinAssignment {
    Bins(Vec<BinRef>),
    /// The value could not be parsed; the statement falls back to TRANSFORM.
    Unparsed,
}

/// Names bins of one layout (optionally one subpopulation of the predicate).
#[derive(Debug, Clone)]
pub struct BinNamer<'a> {
    pub minter: &'a Minter,
    /// Inserted between the stem and `Bin`, e.g. `Pop01`.
    pub scope: String,
}

impl BinNamer<'_> {
    pub fn name(&self, layout: &BinLayout, r: BinRef) -> String {
        match r {
            BinRef::Bin { level: 0, index } => self
                .minter
                .predicate_scoped(&format!("{}Bin{}", self.scope, padded_index(index, layout.levels[0].len()))),
            BinRef::Bin { level, index } => self.minter.predicate_scoped(&format!(
                "{}Level{}Bin{}",
                self.scope,
                level,
                padded_index(index, layout.levels[level as usize].len())
            )),
            BinRef::OutlierLow => self.minter.predicate_scoped(&format!("{}OutlierLow", self.scope)),
            BinRef::OutlierHigh => self.minter.predicate_scoped(&format!("{}OutlierHigh", self.scope)),
        }
    }
}

/// Emits one triple per (statement, assigned bin) plus adjacency and hierarchy links
/// among the occupied bins.
///
/// `statements` and `assignments` are parallel.
pub fn emit_bin_triples(
    group: &LiteralGroup,
    statements: &[&LiteralStatement],
    graph: &IndexedGraph,
    namer: &BinNamer<'_>,
    layout: &BinLayout,
    assignments: &[BinAssignment],
    connect_adjacent: bool,
) -> Augmentation {
    assert_eq!(statements.len(), assignments.len());
    let mut aug = Augmentation {
        removed: statements.len(),
        ..Augmentation::default()
    };
    let mut occupied: BTreeMap<u32, BTreeSet<usize>> = BTreeMap::new();
    let mut fallback_values = HashSet::new();
    for (st, assignment) in statements.iter().zip(assignments) {
        match assignment {
            BinAssignment::Bins(refs) => {
                for &r in refs {
                    if let BinRef::Bin { level, index } = r {
                        occupied.entry(level).or_default().insert(index);
                    }
                    aug.link(graph.entity(st.subject).clone(), group.predicate_iri(), namer.name(layout, r), None);
                }
            }
            BinAssignment::Unparsed => {
                fallback_values.insert(st.object.clone());
                fallback_value(&mut aug, graph, group.predicate_iri(), st, namer.minter);
            }
        }
    }
    aug.fallback_entities = fallback_values.len();

    let bin_iri = |level: u32, index: usize| Term::Iri(namer.name(layout, BinRef::Bin { level, index }));
    if connect_adjacent {
        let next = Term::Iri(namer.minter.global(NEXT_BIN));
        for (&level, bins) in &occupied {
            let bins: Vec<usize> = bins.iter().copied().collect();
            for pair in bins.windows(2) {
                aug.structural
                    .push(Triple::new(bin_iri(level, pair[0]), next.clone(), bin_iri(level, pair[1])));
            }
        }
    }
    let parent = Term::Iri(namer.minter.global(PARENT_BIN));
    for (&level, bins) in occupied.range(..layout.levels.len() as u32 - 1) {
        for &index in bins {
            aug.structural
                .push(Triple::new(bin_iri(level, index), parent.clone(), bin_iri(level + 1, index >> 1)));
        }
    }
    aug.finish_entities();
    aug
}

/// Layout summary for the report.
pub fn layout_details(layout: &BinLayout, assignments: &[BinAssignment], scope: &str) -> serde_json::Value {
    let mut counts = vec![0usize; layout.leaf_count()];
    let (mut low, mut high) = (0usize, 0usize);
    for a in assignments {
        if let BinAssignment::Bins(refs) = a {
            for r in refs {
                match r {
                    BinRef::Bin { level: 0, index } => counts[*index] += 1,
                    BinRef::OutlierLow => low += 1,
                    BinRef::OutlierHigh => high += 1,
                    _ => {}
                }
            }
        }
    }
    json!({
        "scope": scope,
        "boundaries": layout.boundaries,
        "leaf_counts": counts,
        "levels": layout.levels.len(),
        "outliers_low": low,
        "outliers_high": high,
    })
}

/// Bins one set of statements: optional LOF filtering, layout, assignment, emission.
///
/// `values[i]` is the parsed value of `statements[i]` (`None` when unparseable).
#[allow(clippy::too_many_arguments)]
pub(crate) fn bin_statements(
    group: &LiteralGroup,
    statements: &[&LiteralStatement],
    values: &[Option<f64>],
    graph: &IndexedGraph,
    namer: &BinNamer<'_>,
    spec: &BinningSpec,
    lof: Option<&LofSettings>,
) -> Result<(Augmentation, Option<BinLayout>), BinningError> {
    let parsed: Vec<f64> = values.iter().flatten().copied().collect();
    let mut warnings = Vec::new();
    let retained: Vec<f64> = match lof {
        Some(settings) => {
            let r = lof_scores(&parsed, settings);
            if r.skipped {
                warnings.push(format!(
                    "{}{}: LOF skipped ({} values, k = {})",
                    group.predicate_iri(),
                    namer.scope,
                    parsed.len(),
                    settings.k
                ));
            }
            r.retained.iter().map(|&i| parsed[i]).collect()
        }
        None => parsed.clone(),
    };

    if retained.is_empty() {
        // nothing parseable: everything goes to the fallback
        let assignments = vec![BinAssignment::Unparsed; statements.len()];
        let dummy = BinLayout {
            boundaries: vec![0.0, 0.0],
            levels: vec![vec![Bin { lower: 0.0, upper: 0.0 }]],
            overlap: 0.0,
        };
        let mut aug = emit_bin_triples(group, statements, graph, namer, &dummy, &assignments, false);
        aug.warnings.extend(warnings);
        return Ok((aug, None));
    }

    let layout = compute_bins(&retained, spec)?;
    let assignments: Vec<BinAssignment> = values
        .iter()
        .map(|v| match v {
            Some(v) => BinAssignment::Bins(assign_bins(*v, &layout, spec.outliers)),
            None => BinAssignment::Unparsed,
        })
        .collect();
    let mut aug = emit_bin_triples(group, statements, graph, namer, &layout, &assignments, spec.connect_adjacent);
    aug.warnings.extend(warnings);
    let mut unique = retained.clone();
    unique.sort_by(f64::total_cmp);
    unique.dedup();
    aug.details = layout_details(&layout, &assignments, &namer.scope);
    aug.details["requested_bins"] = json!(bin_count(retained.len(), unique.len(), spec));
    aug.details["bins"] = json!(layout.total_bins());
    aug.details["lof"] = json!(lof.is_some());
    Ok((aug, Some(layout)))
}

/// nBINS / p%BINS on a numeric group, optionally preceded by LOF outlier removal.
pub fn numeric_binning(
    group: &LiteralGroup,
    graph: &IndexedGraph,
    minter: &Minter,
    spec: &BinningSpec,
    lof: Option<&LofSettings>,
) -> Result<Augmentation, BinningError> {
    let statements: Vec<&LiteralStatement> = group.statements().iter().collect();
    let values = parse_group_values(&statements);
    let namer = BinNamer {
        minter,
        scope: String::new(),
    };
    let (mut aug, _) = bin_statements(group, &statements, &values, graph, &namer, spec, lof)?;
    aug.details = json!({ "layouts": [aug.details.take()] });
    Ok(aug)
}

pub(crate) fn parse_group_values(statements: &[&LiteralStatement]) -> Vec<Option<f64>> {
    statements
        .iter()
        .map(|st| st.object.as_literal().and_then(|l| parse_numeric(l).ok()))
        .collect()
}
