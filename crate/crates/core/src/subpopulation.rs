//! Splitting a predicate's value population by the relational signature of
//! its subjects, so that each structurally distinct subpopulation is binned
//! on its own range.
//!
//! The split tree is greedy and binary. At each node every signature feature
//! is tried as a presence/absence split, and the one whose two children
//! differ most (KL divergence of the child feature distributions, taken over
//! the node's feature vocabulary) wins. A node stops splitting once it holds
//! fewer values than the threshold, when no feature separates it, or when
//! the best divergence is below [`MIN_DIVERGENCE`].

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::augment::{Augmentation, Minter};
use crate::binning::{bin_statements, parse_group_values, BinNamer, BinningError, BinningSpec, LofSettings};
use crate::graph::{EntityId, IndexedGraph, LiteralGroup, LiteralStatement, RelationId};

/// Default population threshold, in values.
pub const DEFAULT_THRESHOLD: usize = 300;
/// Splits with a smaller divergence are not applied.
pub const MIN_DIVERGENCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignatureMode {
    /// Sets of incident relations (KL-REL).
    #[serde(rename = "REL")]
    Rel,
    /// Sets of (relation, neighbour) pairs (KL-RELENT).
    #[serde(rename = "RELENT")]
    RelEnt,
}

/// One element of an entity signature. Direction is part of the feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    Out(RelationId),
    In(RelationId),
    OutTo(RelationId, EntityId),
    InFrom(RelationId, EntityId),
}

impl Feature {
    pub fn describe(&self, graph: &IndexedGraph) -> String {
        match *self {
            Feature::Out(r) => format!("out <{}>", graph.relation(r)),
            Feature::In(r) => format!("in <{}>", graph.relation(r)),
            Feature::OutTo(r, e) => format!("out <{}> {}", graph.relation(r), graph.entity(e)),
            Feature::InFrom(r, e) => format!("in <{}> {}", graph.relation(r), graph.entity(e)),
        }
    }
}

/// Signature of `subject` from relational adjacency only.
pub fn signature(subject: EntityId, graph: &IndexedGraph, mode: SignatureMode) -> BTreeSet<Feature> {
    let out = graph.outgoing(subject).iter();
    let inc = graph.incoming(subject).iter();
    match mode {
        SignatureMode::Rel => out
            .map(|&(r, _)| Feature::Out(r))
            .chain(inc.map(|&(r, _)| Feature::In(r)))
            .collect(),
        SignatureMode::RelEnt => out
            .map(|&(r, o)| Feature::OutTo(r, o))
            .chain(inc.map(|&(r, s)| Feature::InFrom(r, s)))
            .collect(),
    }
}

/// Smoothed categorical distribution over signature features.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationDistribution {
    pub support: Vec<Feature>,
    pub probabilities: Vec<f64>,
    pub smoothing: f64,
}

impl RelationDistribution {
    /// Empirical frequencies over `support` with additive smoothing ε = 1/(10·|support|).
    pub fn from_counts(support: Vec<Feature>, counts: &[f64]) -> Self {
        assert_eq!(support.len(), counts.len());
        let n = support.len();
        if n == 0 {
            return RelationDistribution {
                support,
                probabilities: Vec::new(),
                smoothing: 0.0,
            };
        }
        let eps = 1.0 / (10.0 * n as f64);
        let total: f64 = counts.iter().sum::<f64>() + eps * n as f64;
        RelationDistribution {
            probabilities: counts.iter().map(|c| (c + eps) / total).collect(),
            support,
            smoothing: eps,
        }
    }

    pub fn probability(&self, feature: &Feature) -> Option<f64> {
        self.support.iter().position(|f| f == feature).map(|i| self.probabilities[i])
    }
}

/// Feature distribution of a subject multiset over the union of their signatures.
pub fn relation_distribution(subjects: &[EntityId], graph: &IndexedGraph, mode: SignatureMode) -> RelationDistribution {
    let signatures: Vec<BTreeSet<Feature>> = subjects.iter().map(|&s| signature(s, graph, mode)).collect();
    let vocabulary: BTreeSet<Feature> = signatures.iter().flatten().copied().collect();
    let support: Vec<Feature> = vocabulary.into_iter().collect();
    let index: HashMap<Feature, usize> = support.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let mut counts = vec![0.0; support.len()];
    for sig in &signatures {
        for f in sig {
            counts[index[f]] += 1.0;
        }
    }
    RelationDistribution::from_counts(support, &counts)
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum KlError {
    #[error("distributions have different supports")]
    SupportMismatch,
}

/// KL(P‖Q) in nats.
pub fn kl_divergence(p: &RelationDistribution, q: &RelationDistribution) -> Result<f64, KlError> {
    if p.support != q.support {
        return Err(KlError::SupportMismatch);
    }
    Ok(kl_probabilities(&p.probabilities, &q.probabilities))
}

fn kl_probabilities(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&pi, &qi)| {
            if pi == 0.0 {
                0.0
            } else if qi == 0.0 {
                f64::INFINITY
            } else {
                pi * (pi / qi).ln()
            }
        })
        .sum::<f64>()
        .max(0.0)
}

/// Node of the split tree. Members are indices into the group's statements.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitNode {
    pub members: Vec<usize>,
    pub kind: SplitKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitKind {
    Leaf { indivisible: bool },
    Split {
        feature: Feature,
        divergence: f64,
        with: Box<SplitNode>,
        without: Box<SplitNode>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSplit {
    pub root: SplitNode,
    pub threshold: usize,
    pub mode: SignatureMode,
}

impl SplitNode {
    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a SplitNode>) {
        match &self.kind {
            SplitKind::Leaf { .. } => out.push(self),
            SplitKind::Split { with, without, .. } => {
                with.collect_leaves(out);
                without.collect_leaves(out);
            }
        }
    }

    fn to_json(&self, graph: &IndexedGraph) -> serde_json::Value {
        match &self.kind {
            SplitKind::Leaf { indivisible } => json!({ "size": self.members.len(), "indivisible": indivisible }),
            SplitKind::Split {
                feature,
                divergence,
                with,
                without,
            } => json!({
                "size": self.members.len(),
                "feature": feature.describe(graph),
                "divergence": divergence,
                "with": with.to_json(graph),
                "without": without.to_json(graph),
            }),
        }
    }
}

impl PopulationSplit {
    /// Leaves in depth-first order, `with` branch first.
    pub fn leaves(&self) -> Vec<&SplitNode> {
        let mut out = Vec::new();
        self.root.collect_leaves(&mut out);
        out
    }

    pub fn to_json(&self, graph: &IndexedGraph) -> serde_json::Value {
        json!({
            "mode": self.mode,
            "threshold": self.threshold,
            "tree": self.root.to_json(graph),
        })
    }
}

/// Recursively splits the group's value population.
pub fn split_population(
    group: &LiteralGroup,
    graph: &IndexedGraph,
    mode: SignatureMode,
    threshold: usize,
) -> PopulationSplit {
    let mut cache: HashMap<EntityId, Vec<Feature>> = HashMap::new();
    let member_sigs: Vec<Vec<Feature>> = group
        .statements()
        .iter()
        .map(|st| {
            cache
                .entry(st.subject)
                .or_insert_with(|| signature(st.subject, graph, mode).into_iter().collect())
                .clone()
        })
        .collect();
    let members: Vec<usize> = (0..group.len()).collect();
    PopulationSplit {
        root: split_node(members, &member_sigs, mode, threshold),
        threshold,
        mode,
    }
}

fn split_node(members: Vec<usize>, sigs: &[Vec<Feature>], mode: SignatureMode, threshold: usize) -> SplitNode {
    if members.len() < threshold {
        return SplitNode {
            members,
            kind: SplitKind::Leaf { indivisible: false },
        };
    }
    match best_split(&members, sigs, mode) {
        Some((feature, divergence)) if divergence >= MIN_DIVERGENCE => {
            let (with, without): (Vec<usize>, Vec<usize>) =
                members.iter().partition(|&&m| sigs[m].binary_search(&feature).is_ok());
            SplitNode {
                members,
                kind: SplitKind::Split {
                    feature,
                    divergence,
                    with: Box::new(split_node(with, sigs, mode, threshold)),
                    without: Box::new(split_node(without, sigs, mode, threshold)),
                },
            }
        }
        _ => SplitNode {
            members,
            kind: SplitKind::Leaf { indivisible: true },
        },
    }
}

/// Highest-divergence presence split, ties to the smallest feature.
fn best_split(members: &[usize], sigs: &[Vec<Feature>], mode: SignatureMode) -> Option<(Feature, f64)> {
    let mut freq: HashMap<Feature, usize> = HashMap::new();
    for &m in members {
        for f in &sigs[m] {
            *freq.entry(*f).or_default() += 1;
        }
    }
    let min_freq = match mode {
        SignatureMode::Rel => 1,
        SignatureMode::RelEnt => 2,
    };
    let vocab: Vec<Feature> = freq
        .iter()
        .filter(|(_, &c)| c >= min_freq)
        .map(|(f, _)| *f)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if vocab.is_empty() {
        return None;
    }
    let index: HashMap<Feature, usize> = vocab.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let encoded: Vec<(usize, Vec<usize>)> = members
        .iter()
        .map(|&m| (m, sigs[m].iter().filter_map(|f| index.get(f).copied()).collect()))
        .collect();

    let mut total = vec![0.0; vocab.len()];
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); vocab.len()];
    for (pos, (_, sig)) in encoded.iter().enumerate() {
        for &f in sig {
            total[f] += 1.0;
            holders[f].push(pos);
        }
    }

    let mut best: Option<(Feature, f64)> = None;
    let mut with = vec![0.0; vocab.len()];
    for (fi, feature) in vocab.iter().enumerate() {
        let n_with = holders[fi].len();
        if n_with == 0 || n_with == members.len() {
            continue;
        }
        with.iter_mut().for_each(|c| *c = 0.0);
        for &pos in &holders[fi] {
            for &g in &encoded[pos].1 {
                with[g] += 1.0;
            }
        }
        let without: Vec<f64> = total.iter().zip(&with).map(|(t, w)| t - w).collect();
        let p = RelationDistribution::from_counts(vocab.clone(), &with);
        let q = RelationDistribution::from_counts(vocab.clone(), &without);
        let d = kl_probabilities(&p.probabilities, &q.probabilities);
        if best.is_none_or(|(_, b)| d > b) {
            best = Some((*feature, d));
        }
    }
    best
}

/// KL-REL / KL-RELENT: split the population, then bin every leaf separately.
///
/// A single-leaf population is named exactly like plain nBINS.
pub fn kl_rel_binning(
    group: &LiteralGroup,
    graph: &IndexedGraph,
    minter: &Minter,
    mode: SignatureMode,
    threshold: usize,
    spec: &BinningSpec,
    lof: Option<&LofSettings>,
) -> Result<Augmentation, BinningError> {
    let split = split_population(group, graph, mode, threshold);
    let leaves = split.leaves();
    let mut aug = Augmentation::default();
    let mut layouts = Vec::new();
    for (i, leaf) in leaves.iter().enumerate() {
        let statements: Vec<&LiteralStatement> = leaf.members.iter().map(|&m| &group.statements()[m]).collect();
        let values = parse_group_values(&statements);
        let scope = if leaves.len() == 1 {
            String::new()
        } else {
            format!("Pop{}", crate::augment::padded_index(i, leaves.len()))
        };
        let namer = BinNamer { minter, scope };
        let (mut part, _) = bin_statements(group, &statements, &values, graph, &namer, spec, lof)?;
        layouts.push(part.details.take());
        aug.absorb(part);
    }
    let all: Vec<&LiteralStatement> = group.statements().iter().collect();
    let unparsed: BTreeSet<String> = all
        .iter()
        .zip(parse_group_values(&all))
        .filter(|(_, v)| v.is_none())
        .map(|(st, _)| crate::baselines::lexical_key(&st.object))
        .collect();
    aug.fallback_entities = unparsed.len();
    aug.finish_entities();
    aug.details = json!({ "split": split.to_json(graph), "leaves": leaves.len(), "layouts": layouts });
    Ok(aug)
}
