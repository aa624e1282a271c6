//! Text literals: one LDA topic model per predicate, trained by collapsed
//! Gibbs sampling, with subjects linked to every topic whose document
//! probability reaches the threshold.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::augment::{padded_index, Augmentation, Minter};
use crate::baselines::fallback_any_value;
use crate::graph::{IndexedGraph, LiteralGroup};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaSettings {
    /// Topic count T.
    pub topics: usize,
    /// Document-topic prior; `None` means 50/T.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    /// Minimum θ for a topic link.
    pub threshold: f64,
    pub min_token_len: usize,
    /// Stopwords keyed by language tag (`en`, `de`, ...).
    pub stopwords: BTreeMap<String, Vec<String>>,
    /// Words listed per topic in the report.
    pub top_words: usize,
}

impl Default for LdaSettings {
    fn default() -> Self {
        LdaSettings {
            topics: 20,
            alpha: None,
            beta: 0.01,
            iterations: 500,
            threshold: 0.10,
            min_token_len: 2,
            stopwords: BTreeMap::new(),
            top_words: 10,
        }
    }
}

impl LdaSettings {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topics as f64)
    }

    pub fn validate(&self) -> Result<(), LdaError> {
        let bad = |m: &str| Err(LdaError::InvalidSettings(m.to_string()));
        if self.topics == 0 {
            return bad("topics must be at least 1");
        }
        if !(self.alpha() > 0.0) || !(self.beta > 0.0) {
            return bad("alpha and beta must be positive");
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return bad("threshold must be in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LdaError {
    #[error("corpus has no non-empty document")]
    EmptyCorpus,
    #[error("unknown document {0}")]
    UnknownDocument(usize),
    #[error("invalid LDA settings: {0}")]
    InvalidSettings(String),
}

/// Lowercases, splits on runs of non-alphanumeric characters and drops short tokens.
#[derive(Debug, Clone, Default)]
pub struct Tokenizer {
    pub min_len: usize,
    stopwords: HashMap<String, BTreeSet<String>>,
}

impl Tokenizer {
    pub fn new(min_len: usize) -> Self {
        Tokenizer {
            min_len,
            stopwords: HashMap::new(),
        }
    }

    pub fn from_settings(settings: &LdaSettings) -> Self {
        let mut t = Tokenizer::new(settings.min_token_len);
        for (lang, words) in &settings.stopwords {
            t = t.with_stopwords(lang, words.iter().map(String::as_str));
        }
        t
    }

    pub fn with_stopwords<'a>(mut self, language: &str, words: impl IntoIterator<Item = &'a str>) -> Self {
        self.stopwords
            .entry(language.to_lowercase())
            .or_default()
            .extend(words.into_iter().map(str::to_lowercase));
        self
    }

    fn stoplist(&self, language: Option<&str>) -> Option<&BTreeSet<String>> {
        let lang = language?.to_lowercase();
        self.stopwords
            .get(&lang)
            .or_else(|| self.stopwords.get(lang.split('-').next().unwrap_or("")))
    }

    pub fn tokenize(&self, text: &str, language: Option<&str>) -> Vec<String> {
        let stop = self.stoplist(language);
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| t.chars().count() >= self.min_len)
            .map(str::to_lowercase)
            .filter(|t| stop.is_none_or(|s| !s.contains(t)))
            .collect()
    }
}

/// Tokenizes with the default rules (minimum length 2, no stopwords).
pub fn tokenize(text: &str, language: Option<&str>) -> Vec<String> {
    Tokenizer::new(2).tokenize(text, language)
}

/// Bag-of-words documents, one per statement, over a dense vocabulary.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub documents: Vec<Vec<u32>>,
    pub vocabulary: Vec<String>,
    index: HashMap<String, u32>,
}

impl Corpus {
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = (&'a str, Option<&'a str>)>, tokenizer: &Tokenizer) -> Self {
        let mut corpus = Corpus::default();
        for (text, lang) in texts {
            let doc = tokenizer
                .tokenize(text, lang)
                .into_iter()
                .map(|tok| corpus.word_id(tok))
                .collect();
            corpus.documents.push(doc);
        }
        corpus
    }

    /// One document per statement of the group, in statement order.
    pub fn from_group(group: &LiteralGroup, tokenizer: &Tokenizer) -> Self {
        Corpus::from_texts(
            group.statements().iter().map(|st| match st.object.as_literal() {
                Some(l) => (l.lexical(), l.language()),
                None => ("", None),
            }),
            tokenizer,
        )
    }

    fn word_id(&mut self, token: String) -> u32 {
        if let Some(&id) = self.index.get(&token) {
            return id;
        }
        let id = self.vocabulary.len() as u32;
        self.index.insert(token.clone(), id);
        self.vocabulary.push(token);
        id
    }

    pub fn word(&self, id: u32) -> &str {
        &self.vocabulary[id as usize]
    }

    pub fn token_count(&self) -> usize {
        self.documents.iter().map(Vec::len).sum()
    }

    pub fn empty_documents(&self) -> Vec<usize> {
        (0..self.documents.len()).filter(|&d| self.documents[d].is_empty()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct TopicModel {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Topic-word distribution, T rows of |V|.
    pub phi: Vec<Vec<f64>>,
    /// Document-topic distribution, one row of T per document.
    pub theta: Vec<Vec<f64>>,
    pub seed: u64,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

/// Collapsed Gibbs sampling; deterministic for a given seed.
pub fn train_lda(corpus: &Corpus, topics: usize, alpha: f64, beta: f64, iterations: usize, seed: u64) -> Result<TopicModel, LdaError> {
    if topics == 0 {
        return Err(LdaError::InvalidSettings("topics must be at least 1".into()));
    }
    let non_empty = corpus.documents.iter().filter(|d| !d.is_empty()).count();
    if non_empty == 0 {
        return Err(LdaError::EmptyCorpus);
    }
    let mut warnings = Vec::new();
    if topics > non_empty {
        warnings.push(format!("{topics} topics for {non_empty} non-empty documents"));
    }
    let t = topics;
    let v = corpus.vocabulary.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // word-major counts: nwk[w * t + k]
    let mut nwk = vec![0u32; v * t];
    let mut nk = vec![0u32; t];
    let mut ndk: Vec<Vec<u32>> = vec![vec![0; t]; corpus.documents.len()];
    let mut z: Vec<Vec<u32>> = Vec::with_capacity(corpus.documents.len());
    for (d, doc) in corpus.documents.iter().enumerate() {
        let zd: Vec<u32> = doc
            .iter()
            .map(|&w| {
                let k = rng.gen_range(0..t);
                nwk[w as usize * t + k] += 1;
                nk[k] += 1;
                ndk[d][k] += 1;
                k as u32
            })
            .collect();
        z.push(zd);
    }

    let vbeta = v as f64 * beta;
    let mut p = vec![0.0; t];
    for _ in 0..iterations {
        for (d, doc) in corpus.documents.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let w = w as usize;
                let old = z[d][i] as usize;
                nwk[w * t + old] -= 1;
                nk[old] -= 1;
                ndk[d][old] -= 1;
                let row = &nwk[w * t..w * t + t];
                let mut total = 0.0;
                for k in 0..t {
                    total += (ndk[d][k] as f64 + alpha) * (row[k] as f64 + beta) / (nk[k] as f64 + vbeta);
                    p[k] = total;
                }
                let u = rng.gen::<f64>() * total;
                let new = p.partition_point(|&c| c <= u).min(t - 1);
                nwk[w * t + new] += 1;
                nk[new] += 1;
                ndk[d][new] += 1;
                z[d][i] = new as u32;
            }
        }
    }

    let phi = (0..t)
        .map(|k| normalize((0..v).map(|w| nwk[w * t + k] as f64 + beta).collect()))
        .collect();
    let theta = ndk
        .iter()
        .map(|row| normalize(row.iter().map(|&c| c as f64 + alpha).collect()))
        .collect();
    Ok(TopicModel {
        topics,
        alpha,
        beta,
        phi,
        theta,
        seed,
        iterations,
        warnings,
    })
}

fn normalize(mut row: Vec<f64>) -> Vec<f64> {
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= s);
    row
}

pub fn document_topics(model: &TopicModel, document: usize) -> Result<&[f64], LdaError> {
    model
        .theta
        .get(document)
        .map(Vec::as_slice)
        .ok_or(LdaError::UnknownDocument(document))
}

/// Topics with θ ≥ threshold, best first (ties to the lower index); the single
/// best topic when none qualifies.
pub fn selected_topics(theta: &[f64], threshold: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..theta.len()).collect();
    order.sort_by(|&a, &b| theta[b].total_cmp(&theta[a]).then(a.cmp(&b)));
    let above: Vec<usize> = order.iter().copied().filter(|&k| theta[k] >= threshold).collect();
    if above.is_empty() {
        order.truncate(1);
        order
    } else {
        above
    }
}

/// The `n` most probable words of each topic.
pub fn top_words(model: &TopicModel, corpus: &Corpus, n: usize) -> Vec<Vec<(String, f64)>> {
    model
        .phi
        .iter()
        .map(|row| {
            let mut ids: Vec<usize> = (0..row.len()).collect();
            ids.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            ids.into_iter()
                .take(n)
                .map(|w| (corpus.word(w as u32).to_string(), row[w]))
                .collect()
        })
        .collect()
}

pub fn topic_entity(minter: &Minter, topic: usize, topics: usize) -> String {
    minter.predicate_scoped(&format!("Topic{}", padded_index(topic, topics)))
}

/// Links each statement's subject to its selected topics, weighted by θ.
///
/// Statements whose document is empty fall back to ONEENTITY.
pub fn emit_topic_triples(
    group: &LiteralGroup,
    graph: &IndexedGraph,
    corpus: &Corpus,
    model: &TopicModel,
    minter: &Minter,
    threshold: f64,
) -> Augmentation {
    let mut aug = Augmentation {
        removed: group.len(),
        ..Augmentation::default()
    };
    for (d, st) in group.statements().iter().enumerate() {
        if corpus.documents[d].is_empty() {
            fallback_any_value(&mut aug, graph, group.predicate_iri(), st, minter);
            continue;
        }
        let theta = &model.theta[d];
        for k in selected_topics(theta, threshold) {
            aug.link(
                graph.entity(st.subject).clone(),
                group.predicate_iri(),
                topic_entity(minter, k, model.topics),
                Some(theta[k]),
            );
        }
    }
    if aug.fallback_statements > 0 {
        aug.fallback_entities = 1;
    }
    aug.finish_entities();
    aug
}

/// LDA strategy for one text group.
pub fn lda_topics(group: &LiteralGroup, graph: &IndexedGraph, minter: &Minter, settings: &LdaSettings, seed: u64) -> Result<Augmentation, LdaError> {
    settings.validate()?;
    let corpus = Corpus::from_group(group, &Tokenizer::from_settings(settings));
    let model = train_lda(&corpus, settings.topics, settings.alpha(), settings.beta, settings.iterations, seed)?;
    let mut aug = emit_topic_triples(group, graph, &corpus, &model, minter, settings.threshold);
    aug.warnings
        .extend(model.warnings.iter().map(|w| format!("{}: {w}", group.predicate_iri())));
    let words: Vec<serde_json::Value> = top_words(&model, &corpus, settings.top_words)
        .into_iter()
        .enumerate()
        .map(|(k, ws)| {
            json!({
                "topic": topic_entity(minter, k, model.topics),
                "words": ws.into_iter().map(|(w, p)| json!([w, p])).collect::<Vec<_>>(),
            })
        })
        .collect();
    aug.details = json!({
        "topics": model.topics,
        "alpha": model.alpha,
        "beta": model.beta,
        "iterations": model.iterations,
        "seed": model.seed,
        "vocabulary": corpus.vocabulary.len(),
        "empty_documents": corpus.empty_documents().len(),
        "top_words": words,
    });
    Ok(aug)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::Namespace;
    use crate::graph::{build_index, ModalityRules};
    use crate::rdf::{Literal, Term, Triple};
    use proptest::prelude::*;

    fn separable_corpus(doc_len: usize) -> Corpus {
        let a = ["river", "bridge", "harbour", "canal", "boat"];
        let b = ["violin", "opera", "choir", "sonata", "piano"];
        let texts: Vec<String> = (0..40)
            .map(|d| {
                let words = if d % 2 == 0 { &a } else { &b };
                (0..doc_len).map(|i| words[(i * 7 + d) % 5]).collect::<Vec<_>>().join(" ")
            })
            .collect();
        Corpus::from_texts(texts.iter().map(|t| (t.as_str(), None)), &Tokenizer::new(2))
    }

    fn text_graph(texts: &[&str]) -> IndexedGraph {
        let triples = texts.iter().enumerate().map(|(i, t)| {
            Triple::new(
                Term::iri(format!("http://example.org/s{i}")),
                Term::iri("http://dbpedia.org/ontology/abstract"),
                Term::literal(Literal::lang(*t, "en")),
            )
        });
        build_index(triples, &ModalityRules::default())
    }

    #[test]
    fn tokenizer_rules() {
        assert_eq!(
            tokenize("Mannheim, officially the University City", Some("en")),
            ["mannheim", "officially", "the", "university", "city"]
        );
        assert!(tokenize("", None).is_empty());
        assert!(tokenize("a b", None).is_empty());
        assert_eq!(tokenize("ÜBER Straße, Köln", None), ["über", "straße", "köln"]);
        let t = Tokenizer::new(2).with_stopwords("en", ["the"]);
        assert_eq!(t.tokenize("The city", Some("en-GB")), ["city"]);
        assert_eq!(t.tokenize("The city", Some("de")), ["the", "city"]);
    }

    #[test]
    fn single_topic_collapse() {
        let c = Corpus::from_texts([("aa bb aa", None), ("bb cc", None)], &Tokenizer::new(2));
        let m = train_lda(&c, 1, 1.0, 0.5, 10, 3).unwrap();
        assert!(m.theta.iter().all(|r| r == &vec![1.0]));
        // counts aa 2, bb 2, cc 1; (n + β) / (N + Vβ)
        let expected = [2.5 / 6.5, 2.5 / 6.5, 1.5 / 6.5];
        for (p, e) in m.phi[0].iter().zip(expected) {
            assert!((p - e).abs() < 1e-12);
        }
        assert_eq!(document_topics(&m, 1).unwrap(), &[1.0]);
        assert_eq!(document_topics(&m, 2), Err(LdaError::UnknownDocument(2)));
    }

    #[test]
    fn empty_corpus_rejected() {
        let c = Corpus::from_texts([("a", None), ("", None)], &Tokenizer::new(2));
        assert_eq!(train_lda(&c, 2, 1.0, 0.1, 5, 0).unwrap_err(), LdaError::EmptyCorpus);
    }

    #[test]
    fn separable_fixture() {
        // θ_max ≤ (L + α) / (L + Tα), so 0.9 needs L > 200 tokens at α = 25
        let c = separable_corpus(300);
        for seed in 0..5 {
            let m = train_lda(&c, 2, 25.0, 0.01, 500, seed).unwrap();
            let dominant: Vec<usize> = m.theta.iter().map(|r| selected_topics(r, 0.5)[0]).collect();
            for (d, row) in m.theta.iter().enumerate() {
                assert!(row[dominant[d]] > 0.9, "seed {seed} doc {d}: {row:?}");
            }
            assert!(dominant.iter().step_by(2).all(|&k| k == dominant[0]));
            assert!(dominant.iter().skip(1).step_by(2).all(|&k| k != dominant[0]));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let c = separable_corpus(20);
        let a = train_lda(&c, 3, 1.0, 0.01, 30, 11).unwrap();
        let b = train_lda(&c, 3, 1.0, 0.01, 30, 11).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.phi, b.phi);
    }

    #[test]
    fn topic_selection() {
        let mut theta = vec![0.01; 20];
        theta[4] = 0.6;
        theta[17] = 0.3 - 0.01 * 2.0;
        assert_eq!(selected_topics(&theta, 0.10), vec![4, 17]);
        assert_eq!(selected_topics(&[0.05; 20], 0.10), vec![0]);
        assert_eq!(selected_topics(&[1.0], 1.0), vec![0]);
        assert_eq!(selected_topics(&[0.5, 0.5], 1.0), vec![0]);
    }

    #[test]
    fn emits_topics_and_fallbacks() {
        let texts = [
            "river bridge harbour canal boat river bridge",
            "violin opera choir sonata piano violin",
            "a",
            "river canal boat harbour",
        ];
        let g = text_graph(&texts);
        let group = &g.literal_groups()[0];
        let minter = Minter::new(Namespace::new("http://example.org/new/").unwrap(), "abstract");
        let settings = LdaSettings {
            topics: 20,
            iterations: 50,
            ..LdaSettings::default()
        };
        let aug = lda_topics(group, &g, &minter, &settings, 1).unwrap();
        assert_eq!(aug.fallback_statements, 1);
        assert!(aug.triples.iter().any(|t| t.object == Term::iri("http://example.org/new/abstractAnyValue")));
        let topic_entities = aug.minted_entities.iter().filter(|e| e.contains("Topic")).count();
        assert!(topic_entities <= 20);
        assert!(aug.triples.len() <= 20 * 3 + 1);
        assert!(aug.minted_entities.iter().all(|e| !e.contains("Topic") || e.len() == "http://example.org/new/abstractTopic00".len()));
        assert_eq!(aug.weights.len(), aug.triples.len());
    }

    proptest! {
        #[test]
        fn rows_normalized(docs in prop::collection::vec(prop::collection::vec(0u8..6, 0..12), 1..8), t in 1usize..5, seed in any::<u64>()) {
            let texts: Vec<String> = docs.iter().map(|d| d.iter().map(|w| format!("w{w}")).collect::<Vec<_>>().join(" ")).collect();
            let c = Corpus::from_texts(texts.iter().map(|s| (s.as_str(), None)), &Tokenizer::new(2));
            prop_assume!(c.token_count() > 0);
            let m = train_lda(&c, t, 50.0 / t as f64, 0.01, 5, seed).unwrap();
            for row in m.theta.iter().chain(&m.phi) {
                prop_assert!(row.iter().all(|&x| x >= 0.0));
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            }
            for row in &m.theta {
                prop_assert!(selected_topics(row, 0.10).len() <= 10);
            }
        }
    }
}
