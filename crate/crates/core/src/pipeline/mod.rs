//! Runs a strategy on every literal group, merges the results into one
//! relational graph and accounts for every added entity and statement.
//!
//! Output order is fixed: the original relational triples, then each
//! group's links and structure in group order, then the calendar structure
//! shared by date features. Groups run in parallel; the worker count never
//! changes the output.

mod config;
mod report;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{self, Write};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub use config::{
    combined_for, compose_combined, ConfigError, FallbackPolicy, ProviderConfig, SpecEntry, StrategyConfig, StrategyKind,
    StrategySpec, UnknownStrategy,
};
pub use report::{
    check_row, verify_bounds, verify_output, AugmentationReport, Bound, PredicateSummary, ReportRow, Totals, Verdict,
};

use crate::augment::{predicate_stem, Augmentation, Minter, Namespace};
use crate::baselines::{exclude, one_entity, transform_literal2entity};
use crate::binning::{numeric_binning, OutlierPolicy};
use crate::graph::{IndexedGraph, LiteralGroup};
use crate::image::{emit_image_triples, HttpTagProvider, TagMapProvider, TagProvider};
use crate::rdf::{write_triple_line, Term, Triple};
use crate::subpopulation::{kl_rel_binning, SignatureMode};
use crate::temporal::{calendar_structure, datbin, datfeat_links, parse_date};
use crate::text::lda_topics;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("strategy {strategy} failed on {predicate}: {message}")]
    Strategy {
        predicate: String,
        strategy: String,
        message: String,
    },
}

impl From<ConfigError> for PipelineError {
    fn from(e: ConfigError) -> Self {
        PipelineError::Config(e.to_string())
    }
}

/// A minted link with its score.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEdge {
    pub triple: Triple,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct TransformOutput {
    pub triples: Vec<Triple>,
    pub report: AugmentationReport,
    /// Present when the config asks for weights.
    pub weights: Option<Vec<WeightedEdge>>,
}

impl TransformOutput {
    /// Canonical N-Triples of the output graph.
    pub fn write_ntriples<W: Write>(&self, out: W) -> io::Result<()> {
        write_lines(self.triples.iter(), out)
    }

    /// `<N-Triples line>\t<weight>` per weighted edge.
    pub fn write_weights<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut line = String::new();
        for e in self.weights.iter().flatten() {
            line.clear();
            write_triple_line(&mut line, &e.triple);
            let trimmed = line.trim_end_matches('\n');
            writeln!(out, "{trimmed}\t{}", e.weight)?;
        }
        out.flush()
    }
}

fn write_lines<'a, W: Write>(triples: impl Iterator<Item = &'a Triple>, mut out: W) -> io::Result<()> {
    let mut line = String::new();
    for t in triples {
        line.clear();
        write_triple_line(&mut line, t);
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

/// Configured pipeline, ready to run on graphs.
pub struct Pipeline {
    config: StrategyConfig,
    namespace: Namespace,
    provider: Option<Box<dyn TagProvider>>,
    workers: Option<usize>,
}

struct GroupResult {
    aug: Augmentation,
    strategy: String,
    applied: String,
    bound: Bound,
    warnings: Vec<String>,
}

impl Pipeline {
    pub fn new(config: StrategyConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let namespace = config.namespace()?;
        let provider: Option<Box<dyn TagProvider>> = match &config.image_provider {
            None => None,
            Some(ProviderConfig::TagMap(path)) => Some(Box::new(
                TagMapProvider::from_path(path).map_err(|e| PipelineError::Config(e.to_string()))?,
            )),
            Some(ProviderConfig::Http(settings)) => Some(Box::new(
                HttpTagProvider::new(settings.clone()).map_err(|e| PipelineError::Config(e.to_string()))?,
            )),
        };
        Ok(Pipeline {
            config,
            namespace,
            provider,
            workers: None,
        })
    }

    /// Replaces the configured image provider.
    pub fn with_provider(mut self, provider: Box<dyn TagProvider>) -> Self {
        self.provider = Some(provider);
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers.max(1));
        self
    }

    pub fn config(&self) -> &StrategyConfig {
        &self.config
    }

    pub fn run(&self, graph: &IndexedGraph) -> Result<TransformOutput, PipelineError> {
        self.check_hygiene(graph)?;
        let groups = graph.literal_groups();
        let (stems, mut warnings) = assign_stems(groups);

        let run_all = || -> Vec<Result<GroupResult, PipelineError>> {
            groups
                .par_iter()
                .enumerate()
                .map(|(i, g)| self.run_group(g, graph, Minter::new(self.namespace.clone(), stems[i].clone())))
                .collect()
        };
        let results = match self.workers {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| PipelineError::Config(e.to_string()))?
                .install(run_all),
            None => run_all(),
        };
        let results: Vec<GroupResult> = results.into_iter().collect::<Result<_, _>>()?;

        let mut out: Vec<Triple> = graph.relational_triples().collect();
        let relational = out.len();
        let mut seen: HashSet<Triple> = out.iter().cloned().collect();
        let mut entities: HashSet<String> = HashSet::new();
        let mut weights = Vec::new();
        let mut rows = Vec::with_capacity(groups.len());
        let mut calendar_used: BTreeSet<String> = BTreeSet::new();
        let mut per_predicate: BTreeMap<String, (usize, HashSet<String>)> = BTreeMap::new();

        for (group, r) in groups.iter().zip(results) {
            let GroupResult {
                aug,
                strategy,
                applied,
                bound,
                warnings: group_warnings,
            } = r;
            let mut delta_entities = 0;
            let mut delta_statements = 0;
            let mut used: HashSet<&str> = HashSet::new();
            for (t, w) in aug.triples.iter().zip(&aug.weights) {
                let obj = t.object.as_iri().unwrap_or_default();
                used.insert(obj);
                if entities.insert(obj.to_string()) {
                    delta_entities += 1;
                }
                if seen.insert(t.clone()) {
                    delta_statements += 1;
                    out.push(t.clone());
                    if let Some(w) = w.filter(|w| *w > 0.0) {
                        weights.push(WeightedEdge {
                            triple: t.clone(),
                            weight: w,
                        });
                    }
                }
            }
            let mut structural = 0;
            for t in &aug.structural {
                for end in [&t.subject, &t.object] {
                    if let Term::Iri(i) = end {
                        if entities.insert(i.clone()) {
                            delta_entities += 1;
                        }
                    }
                }
                if seen.insert(t.clone()) {
                    structural += 1;
                    out.push(t.clone());
                }
            }
            if matches!(bound, Bound::Calendar { .. }) {
                calendar_used.extend(used.iter().map(|s| s.to_string()));
            }
            let entry = per_predicate.entry(group.predicate_iri().to_string()).or_default();
            entry.0 += delta_statements;
            entry.1.extend(used.iter().map(|s| s.to_string()));

            let mut row_warnings = group_warnings;
            row_warnings.extend(aug.warnings.iter().cloned());
            let emitted = aug.triples.len();
            let mut row = ReportRow {
                predicate: group.predicate_iri().to_string(),
                modality: group.modality(),
                strategy,
                applied,
                statements: group.len(),
                distinct_values: group.distinct_values(),
                delta_entities,
                entities_used: used.len(),
                delta_statements,
                emitted_statements: emitted,
                collapsed: emitted - delta_statements,
                structural_statements: structural,
                removed: aug.removed,
                fallback_statements: aug.fallback_statements,
                fallback_entities: aug.fallback_entities,
                bound,
                verdict: Verdict::Pass,
                warnings: row_warnings,
                details: aug.details,
            };
            row.verdict = check_row(&row);
            if let Verdict::Fail(why) = &row.verdict {
                log::warn!("{} ({}): bound check failed: {why}", row.predicate, row.modality.as_str());
            }
            rows.push(row);
        }

        let used: Vec<&str> = calendar_used.iter().map(String::as_str).collect();
        let mut shared = 0;
        for t in calendar_structure(&self.namespace, &used, self.config.calendar) {
            if seen.insert(t.clone()) {
                shared += 1;
                out.push(t);
            }
        }

        if !self.config.emit_weights {
            weights.clear();
        }
        warnings.extend(rows.iter().filter(|r| r.applied != r.strategy).map(|r| {
            format!("{}: {} replaced by fallback {}", r.predicate, r.strategy, r.applied)
        }));
        let mut report = AugmentationReport {
            namespace: self.namespace.base().to_string(),
            seed: self.config.seed,
            input_triples: relational + graph.literal_statement_count(),
            duplicate_input_triples: graph.duplicate_count(),
            relational_statements: relational,
            output_triples: out.len(),
            rows,
            shared_structural_statements: shared,
            totals: Totals::default(),
            predicates: per_predicate
                .into_iter()
                .map(|(p, (ds, objs))| {
                    (
                        p,
                        PredicateSummary {
                            delta_statements: ds,
                            entities_used: objs.len(),
                        },
                    )
                })
                .collect(),
            warnings,
        };
        report.totals = report.sum_rows();
        Ok(TransformOutput {
            triples: out,
            report,
            weights: self.config.emit_weights.then_some(weights),
        })
    }

    /// Minted names must not clash with anything already in the graph.
    fn check_hygiene(&self, graph: &IndexedGraph) -> Result<(), PipelineError> {
        let clash = |iri: &str| self.namespace.contains(iri);
        let entity = graph.entities().find_map(|(_, t)| t.as_iri().filter(|i| clash(i)));
        let relation = graph.relations().map(|(_, r)| r).find(|r| clash(r));
        let object = graph
            .literal_groups()
            .iter()
            .flat_map(|g| g.statements())
            .find_map(|st| st.object.as_iri().filter(|i| clash(i)));
        match entity.or(relation).or(object) {
            Some(iri) => Err(PipelineError::Config(format!(
                "input IRI <{iri}> lies inside the reserved namespace <{}>",
                self.namespace.base()
            ))),
            None => Ok(()),
        }
    }

    fn run_group(&self, group: &LiteralGroup, graph: &IndexedGraph, minter: Minter) -> Result<GroupResult, PipelineError> {
        let spec = self.config.resolve(group.predicate_iri(), group.modality());
        let name = spec.name();
        let seed = group_seed(self.config.seed, group);
        log::info!("{} ({}): {name}, {} statements", group.predicate_iri(), group.modality().as_str(), group.len());
        match self.run_strategy(group, graph, &minter, &spec, seed) {
            Ok((aug, bound)) => Ok(GroupResult {
                aug,
                strategy: name.clone(),
                applied: name,
                bound,
                warnings: Vec::new(),
            }),
            Err(message) => {
                let warning = format!("{}: {name} failed: {message}", group.predicate_iri());
                log::warn!("{warning}");
                let (aug, applied, bound) = match self.config.fallback {
                    FallbackPolicy::OneEntity => (one_entity(group, graph, &minter), "ONEENTITY", Bound::Single),
                    FallbackPolicy::Exclude => (exclude(group), "EXCLUDE", Bound::Removal),
                    FallbackPolicy::None => {
                        return Err(PipelineError::Strategy {
                            predicate: group.predicate_iri().to_string(),
                            strategy: name,
                            message,
                        })
                    }
                };
                Ok(GroupResult {
                    aug,
                    strategy: name,
                    applied: applied.to_string(),
                    bound,
                    warnings: vec![warning],
                })
            }
        }
    }

    fn run_strategy(
        &self,
        group: &LiteralGroup,
        graph: &IndexedGraph,
        minter: &Minter,
        spec: &StrategySpec,
        seed: u64,
    ) -> Result<(Augmentation, Bound), String> {
        let bins = |aug: &Augmentation| bin_bound(aug, spec);
        Ok(match spec.strategy {
            StrategyKind::Exclude => (exclude(group), Bound::Removal),
            StrategyKind::Transform => (
                transform_literal2entity(group, graph, minter),
                Bound::Values {
                    values: group.distinct_values(),
                },
            ),
            StrategyKind::OneEntity => (one_entity(group, graph, minter), Bound::Single),
            StrategyKind::Bins => {
                let aug = numeric_binning(group, graph, minter, &spec.binning, spec.lof.as_ref()).map_err(|e| e.to_string())?;
                let b = bins(&aug);
                (aug, b)
            }
            StrategyKind::KlRel | StrategyKind::KlRelEnt => {
                let mode = if spec.strategy == StrategyKind::KlRel {
                    SignatureMode::Rel
                } else {
                    SignatureMode::RelEnt
                };
                let aug = kl_rel_binning(
                    group,
                    graph,
                    minter,
                    mode,
                    spec.population_threshold,
                    &spec.binning,
                    spec.lof.as_ref(),
                )
                .map_err(|e| e.to_string())?;
                let b = bins(&aug);
                (aug, b)
            }
            StrategyKind::DatBin => {
                let aug = datbin(group, graph, minter, &spec.binning).map_err(|e| e.to_string())?;
                let b = bins(&aug);
                (aug, b)
            }
            StrategyKind::DatFeat => {
                let years: BTreeSet<i64> = group
                    .statements()
                    .iter()
                    .filter_map(|st| st.object.as_literal().and_then(|l| parse_date(l).ok()))
                    .map(|d| d.year())
                    .collect();
                (datfeat_links(group, graph, minter), Bound::Calendar { years: years.len() })
            }
            StrategyKind::Lda => {
                let aug = lda_topics(group, graph, minter, &spec.lda, seed).map_err(|e| e.to_string())?;
                (
                    aug,
                    Bound::Topics {
                        topics: spec.lda.topics,
                    },
                )
            }
            StrategyKind::Image => {
                let provider = self
                    .provider
                    .as_deref()
                    .ok_or_else(|| "no image provider configured".to_string())?;
                let aug = emit_image_triples(group, graph, provider, minter, &spec.image).map_err(|e| e.to_string())?;
                (
                    aug,
                    Bound::Labels {
                        vocabulary: provider.vocabulary_size(),
                        per_image: spec.image.top_k,
                    },
                )
            }
            StrategyKind::Combined => unreachable!("COMBINED is resolved per modality"),
        })
    }
}

/// Runs `config` on `graph` with the default worker count.
pub fn apply(graph: &IndexedGraph, config: &StrategyConfig) -> Result<TransformOutput, PipelineError> {
    Pipeline::new(config.clone())?.run(graph)
}

/// Bin entities allowed by the layouts in a binning augmentation's details.
fn bin_bound(aug: &Augmentation, spec: &StrategySpec) -> Bound {
    let outlier_bins = match (spec.lof.is_some(), spec.binning.outliers) {
        (true, OutlierPolicy::Dedicated) => 2,
        _ => 0,
    };
    let mut bins = 0;
    for layout in aug.details["layouts"].as_array().into_iter().flatten() {
        let Some(n) = layout["requested_bins"].as_u64() else { continue };
        let levels = layout["levels"].as_u64().unwrap_or(1) as u32;
        bins += (0..levels).map(|j| (n as usize).div_ceil(1 << j)).sum::<usize>() + outlier_bins;
    }
    Bound::Bins {
        bins,
        multi_edge: !spec.binning.is_flat(),
    }
}

/// Per-predicate stems; predicates with the same local name get `_2`, `_3`, ...
fn assign_stems(groups: &[LiteralGroup]) -> (Vec<String>, Vec<String>) {
    let mut by_predicate: HashMap<&str, String> = HashMap::new();
    let mut taken: HashSet<String> = HashSet::new();
    let mut warnings = Vec::new();
    let stems = groups
        .iter()
        .map(|g| {
            let p = g.predicate_iri();
            by_predicate
                .entry(p)
                .or_insert_with(|| {
                    let base = predicate_stem(p);
                    let mut stem = base.clone();
                    let mut n = 2;
                    while !taken.insert(stem.clone()) {
                        stem = format!("{base}_{n}");
                        n += 1;
                    }
                    if stem != base {
                        warnings.push(format!("{p}: stem {base} already in use, minting under {stem}"));
                    }
                    stem
                })
                .clone()
        })
        .collect();
    (stems, warnings)
}

/// Seed of one group's stochastic steps, independent of scheduling.
fn group_seed(seed: u64, group: &LiteralGroup) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(group.predicate_iri().as_bytes());
    h.update([0]);
    h.update(group.modality().as_str().as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_index, ModalityRules};
    use crate::image::Label;
    use crate::rdf::parse_str;
    use crate::rdf::vocab::FOAF_DEPICTION;

    const MANNHEIM: &str = crate::graph::tests::MANNHEIM;

    fn mannheim() -> IndexedGraph {
        let rules = ModalityRules::default().with_image_predicate(FOAF_DEPICTION);
        build_index(parse_str(MANNHEIM, crate::rdf::ParseMode::Strict).unwrap().triples, &rules)
    }

    fn config(defaults: &str) -> StrategyConfig {
        let mut c = StrategyConfig::from_json(&format!(
            r#"{{"namespace": "http://example.org/new/", "defaults": {defaults}}}"#
        ))
        .unwrap();
        c.modalities = ModalityRules::default().with_image_predicate(FOAF_DEPICTION);
        c
    }

    fn building_map() -> Box<dyn TagProvider> {
        let image = mannheim()
            .literal_groups()
            .iter()
            .find(|g| g.modality() == crate::graph::Modality::Image)
            .unwrap()
            .statements()[0]
            .object
            .as_iri()
            .unwrap()
            .to_string();
        let map = BTreeMap::from([(
            image,
            vec![
                Label {
                    name: "building".into(),
                    score: 0.7,
                },
                Label {
                    name: "person".into(),
                    score: 0.2,
                },
            ],
        )]);
        Box::new(TagMapProvider::from_map(map).unwrap())
    }

    #[test]
    fn exclude_leaves_relational_subgraph() {
        let g = mannheim();
        let out = apply(&g, &config(r#""EXCLUDE""#)).unwrap();
        let relational: Vec<Triple> = g.relational_triples().collect();
        assert_eq!(out.triples, relational);
        assert!(verify_output(&out.triples, &out.report).is_empty());
        assert_eq!(out.report.totals.removed, 4);
    }

    #[test]
    fn transform_keeps_triple_count() {
        let g = mannheim();
        let out = apply(&g, &config(r#""TRANSFORM""#)).unwrap();
        assert_eq!(out.triples.len(), 6);
        assert!(out.triples.iter().all(|t| !t.object.is_literal()));
        assert!(verify_output(&out.triples, &out.report).is_empty());
    }

    #[test]
    fn combined_on_mannheim() {
        let g = mannheim();
        let mut c = config(r#""COMBINED""#);
        c.emit_weights = true;
        let out = Pipeline::new(c).unwrap().with_provider(building_map()).run(&g).unwrap();
        let objects: Vec<&str> = out.triples[2..].iter().map(|t| t.object.as_iri().unwrap()).collect();
        assert_eq!(objects[0], "http://example.org/new/populationMetroBin00");
        assert_eq!(objects[1], "http://example.org/new/foundingDateBin00");
        assert!(objects[2].starts_with("http://example.org/new/abstractTopic"));
        assert_eq!(*objects.last().unwrap(), "http://example.org/new/VGG_building");
        assert!(out.report.rows.iter().all(|r| r.applied == r.strategy));
        assert!(verify_output(&out.triples, &out.report).is_empty(), "{:?}", verify_output(&out.triples, &out.report));
        let weights = out.weights.unwrap();
        assert_eq!(weights.last().unwrap().weight, 0.7);
    }

    #[test]
    fn missing_provider_falls_back() {
        let g = mannheim();
        let out = apply(&g, &config(r#""IMAGE""#)).unwrap();
        assert!(out.report.rows.iter().all(|r| r.applied == "ONEENTITY"));
        assert!(!out.report.warnings.is_empty());
        let mut strict = config(r#""IMAGE""#);
        strict.fallback = FallbackPolicy::None;
        assert!(matches!(apply(&g, &strict), Err(PipelineError::Strategy { .. })));
    }

    #[test]
    fn namespace_clash_rejected() {
        let g = mannheim();
        let mut c = config(r#""TRANSFORM""#);
        c.namespace = "http://dbpedia.org/".into();
        assert!(matches!(apply(&g, &c), Err(PipelineError::Config(_))));
    }

    #[test]
    fn datfeat_shared_structure() {
        let g = mannheim();
        let out = apply(&g, &config(r#"{"temporal": "DATFEAT"}"#)).unwrap();
        let row = out.report.rows.iter().find(|r| r.strategy == "DATFEAT").unwrap();
        assert_eq!(row.emitted_statements, 5);
        assert_eq!(out.report.shared_structural_statements, 1);
        assert!(verify_output(&out.triples, &out.report).is_empty());
    }

    #[test]
    fn tampering_detected() {
        let g = mannheim();
        let out = apply(&g, &config(r#""ONEENTITY""#)).unwrap();
        let mut report = out.report.clone();
        report.rows[0].delta_entities += 1;
        assert!(!verify_output(&out.triples, &report).is_empty());
        let mut triples = out.triples.clone();
        triples.push(g.triples().find(|t| t.object.is_literal()).unwrap());
        assert!(!verify_output(&triples, &out.report).is_empty());
    }

    #[test]
    fn stems_disambiguated() {
        let text = r#"<http://a.org/x> <http://a.org/height> "1"^^<http://www.w3.org/2001/XMLSchema#integer> .
<http://a.org/x> <http://b.org/height> "1"^^<http://www.w3.org/2001/XMLSchema#integer> .
"#;
        let g = build_index(parse_str(text, crate::rdf::ParseMode::Strict).unwrap().triples, &ModalityRules::default());
        let out = apply(&g, &config(r#""TRANSFORM""#)).unwrap();
        let objs: Vec<&str> = out.triples.iter().map(|t| t.object.as_iri().unwrap()).collect();
        assert_eq!(objs, ["http://example.org/new/height1", "http://example.org/new/height_21"]);
    }
}
