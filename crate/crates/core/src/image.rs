//! Image references: each image is replaced by an entity for its top
//! classifier label, looked up through a [`TagProvider`].
//!
//! Inference happens outside this crate. [`TagMapProvider`] reads labels
//! precomputed by any classifier; [`HttpTagProvider`] asks a live endpoint.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::augment::{encode_value, Augmentation, Minter};
use crate::baselines::fallback_any_value;
use crate::graph::{EntityId, IndexedGraph, LiteralGroup};
use crate::rdf::Term;

pub const DEFAULT_LABEL_PREFIX: &str = "VGG_";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImagePayload {
    Iri(String),
    Embedded(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRef {
    /// Index of the statement within its group.
    pub statement: usize,
    pub subject: EntityId,
    pub predicate: String,
    pub payload: ImagePayload,
}

impl ImageRef {
    /// Tag-map key: the IRI itself, or `sha256:<hex>` of embedded bytes.
    pub fn key(&self) -> String {
        match &self.payload {
            ImagePayload::Iri(iri) => iri.clone(),
            ImagePayload::Embedded(bytes) => content_key(bytes),
        }
    }
}

pub fn content_key(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

/// One reference per statement. Undecodable embedded payloads are returned as errors.
pub fn resolve_image_refs(group: &LiteralGroup) -> Vec<Result<ImageRef, String>> {
    group
        .statements()
        .iter()
        .enumerate()
        .map(|(i, st)| {
            let payload = match &st.object {
                Term::Iri(iri) => ImagePayload::Iri(iri.clone()),
                Term::Literal(lit) => {
                    let compact: String = lit.lexical().chars().filter(|c| !c.is_ascii_whitespace()).collect();
                    let bytes = base64::engine::general_purpose::STANDARD
                        .decode(compact.as_bytes())
                        .map_err(|e| format!("statement {i}: invalid base64 image: {e}"))?;
                    if bytes.is_empty() {
                        return Err(format!("statement {i}: empty image payload"));
                    }
                    ImagePayload::Embedded(bytes)
                }
                Term::BlankNode(b) => return Err(format!("statement {i}: blank node _:{b} is not an image")),
            };
            Ok(ImageRef {
                statement: i,
                subject: st.subject,
                predicate: group.predicate_iri().to_string(),
                payload,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub name: String,
    pub score: f64,
}

/// Labels ranked by score (descending), ties in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelDistribution {
    labels: Vec<Label>,
    provider: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("invalid label distribution: {0}")]
    InvalidLabels(String),
    #[error("tag map: {0}")]
    TagMap(String),
    #[error("image provider unreachable for {key}: {reason}")]
    Unreachable { key: String, reason: String },
}

impl LabelDistribution {
    pub fn new(mut labels: Vec<Label>, provider: impl Into<String>) -> Result<Self, ProviderError> {
        if labels.is_empty() {
            return Err(ProviderError::InvalidLabels("no labels".into()));
        }
        for l in &labels {
            if l.name.trim().is_empty() {
                return Err(ProviderError::InvalidLabels("empty label name".into()));
            }
            if !(0.0..=1.0).contains(&l.score) {
                return Err(ProviderError::InvalidLabels(format!("score {} of {:?} outside [0, 1]", l.score, l.name)));
            }
        }
        labels.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.name.cmp(&b.name)));
        Ok(LabelDistribution {
            labels,
            provider: provider.into(),
        })
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn provider(&self) -> &str {
        &self.provider
    }
}

/// Most likely label.
pub fn top_label(distribution: &LabelDistribution) -> &str {
    &distribution.labels[0].name
}

/// Source of image labels. `Ok(None)` is a miss.
pub trait TagProvider: Send + Sync {
    fn id(&self) -> &str;

    fn lookup(&self, image: &ImageRef) -> Result<Option<LabelDistribution>, ProviderError>;

    /// Upper bound on distinct labels, when known.
    fn vocabulary_size(&self) -> Option<usize>;

    /// Looks up many images; results are parallel to `images`.
    fn lookup_all(&self, images: &[&ImageRef]) -> Result<Vec<Option<LabelDistribution>>, ProviderError> {
        images.iter().map(|i| self.lookup(i)).collect()
    }
}

/// Precomputed labels keyed by image IRI or content hash.
#[derive(Debug, Clone, Default)]
pub struct TagMapProvider {
    map: HashMap<String, LabelDistribution>,
    vocabulary: usize,
}

impl TagMapProvider {
    pub const ID: &'static str = "tag-map";

    pub fn from_map(map: BTreeMap<String, Vec<Label>>) -> Result<Self, ProviderError> {
        let mut names = BTreeSet::new();
        let mut out = HashMap::new();
        for (key, labels) in map {
            let dist = LabelDistribution::new(labels, Self::ID).map_err(|e| ProviderError::TagMap(format!("{key}: {e}")))?;
            names.extend(dist.labels.iter().map(|l| l.name.clone()));
            out.insert(key, dist);
        }
        Ok(TagMapProvider {
            map: out,
            vocabulary: names.len(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ProviderError> {
        let map: BTreeMap<String, Vec<Label>> =
            serde_json::from_str(text).map_err(|e| ProviderError::TagMap(e.to_string()))?;
        Self::from_map(map)
    }

    pub fn from_path(path: &Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path).map_err(|e| ProviderError::TagMap(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl TagProvider for TagMapProvider {
    fn id(&self) -> &str {
        Self::ID
    }

    fn lookup(&self, image: &ImageRef) -> Result<Option<LabelDistribution>, ProviderError> {
        Ok(self.map.get(&image.key()).cloned())
    }

    fn vocabulary_size(&self) -> Option<usize> {
        Some(self.vocabulary)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpProviderSettings {
    pub endpoint: String,
    pub timeout_ms: u64,
    pub retries: u32,
    pub backoff_ms: u64,
    pub max_in_flight: usize,
    /// Size of the classifier's label set.
    pub vocabulary_size: usize,
}

impl Default for HttpProviderSettings {
    fn default() -> Self {
        HttpProviderSettings {
            endpoint: String::new(),
            timeout_ms: 30_000,
            retries: 3,
            backoff_ms: 200,
            max_in_flight: 8,
            vocabulary_size: 1000,
        }
    }
}

/// Client for a classifier endpoint.
///
/// Request: `POST` with `{"key": ..., "iri": ...}` or `{"key": ..., "data": <base64>}`.
/// Response: `{"labels": [{"name": ..., "score": ...}, ...]}`; 404 is a miss.
pub struct HttpTagProvider {
    settings: HttpProviderSettings,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct LabelResponse {
    labels: Vec<Label>,
}

impl HttpTagProvider {
    pub const ID: &'static str = "http";

    pub fn new(settings: HttpProviderSettings) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(settings.timeout_ms))
            .build()
            .map_err(|e| ProviderError::Unreachable {
                key: settings.endpoint.clone(),
                reason: e.to_string(),
            })?;
        Ok(HttpTagProvider { settings, client })
    }

    fn request_body(image: &ImageRef) -> serde_json::Value {
        match &image.payload {
            ImagePayload::Iri(iri) => json!({ "key": image.key(), "iri": iri }),
            ImagePayload::Embedded(bytes) => json!({
                "key": image.key(),
                "data": base64::engine::general_purpose::STANDARD.encode(bytes),
            }),
        }
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<Option<LabelDistribution>, String> {
        let resp = self
            .client
            .post(&self.settings.endpoint)
            .json(body)
            .send()
            .map_err(|e| e.to_string())?;
        let status = resp.status();
        if status == reqwest::StatusCode::NOT_FOUND {
            return Ok(None);
        }
        if !status.is_success() {
            return Err(format!("HTTP {status}"));
        }
        let parsed: LabelResponse = resp.json().map_err(|e| e.to_string())?;
        if parsed.labels.is_empty() {
            return Ok(None);
        }
        LabelDistribution::new(parsed.labels, Self::ID)
            .map(Some)
            .map_err(|e| e.to_string())
    }
}

impl TagProvider for HttpTagProvider {
    fn id(&self) -> &str {
        Self::ID
    }

    fn lookup(&self, image: &ImageRef) -> Result<Option<LabelDistribution>, ProviderError> {
        let body = Self::request_body(image);
        let mut last = String::new();
        for attempt in 0..=self.settings.retries {
            if attempt > 0 {
                thread::sleep(Duration::from_millis(self.settings.backoff_ms << (attempt - 1)));
            }
            match self.attempt(&body) {
                Ok(r) => return Ok(r),
                Err(e) => {
                    log::debug!("image lookup {} attempt {attempt} failed: {e}", image.key());
                    last = e;
                }
            }
        }
        Err(ProviderError::Unreachable {
            key: image.key(),
            reason: last,
        })
    }

    fn vocabulary_size(&self) -> Option<usize> {
        Some(self.settings.vocabulary_size)
    }

    fn lookup_all(&self, images: &[&ImageRef]) -> Result<Vec<Option<LabelDistribution>>, ProviderError> {
        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<Option<Result<Option<LabelDistribution>, ProviderError>>>> =
            Mutex::new(vec![None; images.len()]);
        let workers = self.settings.max_in_flight.clamp(1, images.len().max(1));
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= images.len() {
                        break;
                    }
                    let r = self.lookup(images[i]);
                    results.lock().unwrap()[i] = Some(r);
                });
            }
        });
        results.into_inner().unwrap().into_iter().map(|r| r.unwrap()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageSettings {
    /// Prefix of label entity names.
    pub prefix: String,
    /// Labels linked per image.
    pub top_k: usize,
}

impl Default for ImageSettings {
    fn default() -> Self {
        ImageSettings {
            prefix: DEFAULT_LABEL_PREFIX.to_string(),
            top_k: 1,
        }
    }
}

pub fn label_entity(minter: &Minter, prefix: &str, label: &str) -> String {
    minter.global(&format!("{prefix}{}", encode_value(label)))
}

/// Links each image statement to its label entities, weighted by score.
///
/// Misses and undecodable payloads fall back to ONEENTITY.
pub fn emit_image_triples(
    group: &LiteralGroup,
    graph: &IndexedGraph,
    provider: &dyn TagProvider,
    minter: &Minter,
    settings: &ImageSettings,
) -> Result<Augmentation, ProviderError> {
    let refs = resolve_image_refs(group);
    let mut aug = Augmentation {
        removed: group.len(),
        ..Augmentation::default()
    };

    // one lookup per distinct key
    let mut unique: Vec<&ImageRef> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    for r in refs.iter().flatten() {
        slot.entry(r.key()).or_insert_with(|| {
            unique.push(r);
            unique.len() - 1
        });
    }
    let found = provider.lookup_all(&unique)?;

    let mut misses = 0usize;
    for (st, r) in group.statements().iter().zip(&refs) {
        let dist = match r {
            Ok(r) => found[slot[&r.key()]].as_ref(),
            Err(e) => {
                aug.warnings.push(format!("{}: {e}", group.predicate_iri()));
                None
            }
        };
        match dist {
            Some(dist) => {
                for label in dist.labels().iter().take(settings.top_k.max(1)) {
                    aug.link(
                        graph.entity(st.subject).clone(),
                        group.predicate_iri(),
                        label_entity(minter, &settings.prefix, &label.name),
                        Some(label.score),
                    );
                }
            }
            None => {
                misses += 1;
                fallback_any_value(&mut aug, graph, group.predicate_iri(), st, minter);
            }
        }
    }
    if misses > 0 {
        aug.fallback_entities = 1;
        aug.warnings.push(format!(
            "{}: {misses} image(s) without labels from provider {}",
            group.predicate_iri(),
            provider.id()
        ));
    }
    aug.finish_entities();
    aug.details = json!({
        "provider": provider.id(),
        "vocabulary_size": provider.vocabulary_size(),
        "lookups": unique.len(),
        "misses": misses,
    });
    Ok(aug)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::Namespace;
    use crate::graph::{build_index, ModalityRules};
    use crate::rdf::vocab::{FOAF_DEPICTION, KGBENCH_BASE64_IMAGE};
    use crate::rdf::{Literal, Triple};
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    fn label(name: &str, score: f64) -> Label {
        Label {
            name: name.into(),
            score,
        }
    }

    fn image_graph(objects: Vec<Term>) -> IndexedGraph {
        let triples = objects.into_iter().enumerate().map(|(i, o)| {
            Triple::new(Term::iri(format!("http://example.org/s{i}")), Term::iri(FOAF_DEPICTION), o)
        });
        build_index(triples, &ModalityRules::default().with_image_predicate(FOAF_DEPICTION))
    }

    fn minter() -> Minter {
        Minter::new(Namespace::new("http://example.org/new/").unwrap(), "depiction")
    }

    fn tag_map() -> TagMapProvider {
        TagMapProvider::from_json(
            r#"{
                "http://example.org/img/Mannheim.jpg": [{"name": "person", "score": 0.2}, {"name": "building", "score": 0.7}],
                "http://example.org/img/b.jpg": [{"name": "building", "score": 0.9}],
                "sha256:9f86d081884c7d659a2feaa0c55ad015a3bf4f1b2b0b822cd15d6c15b0f00a08": [{"name": "cat", "score": 1.0}]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn distributions_ranked() {
        let d = LabelDistribution::new(vec![label("person", 0.2), label("building", 0.7)], "t").unwrap();
        assert_eq!(top_label(&d), "building");
        let d = LabelDistribution::new(vec![label("b", 0.5), label("a", 0.5)], "t").unwrap();
        assert_eq!(top_label(&d), "a");
        let d = LabelDistribution::new(vec![label("only", 0.1)], "t").unwrap();
        assert_eq!(top_label(&d), "only");
        assert!(LabelDistribution::new(vec![], "t").is_err());
        assert!(LabelDistribution::new(vec![label("", 0.5)], "t").is_err());
        assert!(LabelDistribution::new(vec![label("x", 1.5)], "t").is_err());
    }

    #[test]
    fn refs_and_keys() {
        let g = image_graph(vec![
            Term::iri("http://example.org/img/Mannheim.jpg"),
            Term::literal(Literal::typed("dGVzdA==", KGBENCH_BASE64_IMAGE)),
            Term::literal(Literal::typed("!!!", KGBENCH_BASE64_IMAGE)),
        ]);
        let refs = resolve_image_refs(&g.literal_groups()[0]);
        assert_eq!(refs.len(), 3);
        assert_eq!(refs[0].as_ref().unwrap().payload, ImagePayload::Iri("http://example.org/img/Mannheim.jpg".into()));
        let emb = refs[1].as_ref().unwrap();
        assert_eq!(emb.payload, ImagePayload::Embedded(b"test".to_vec()));
        assert_eq!(emb.key(), "sha256:9f86d081884c7d659a2feaa0c55ad015a3bf4f1b2b0b822cd15d6c15b0f00a08");
        assert!(refs[2].is_err());
    }

    #[test]
    fn mannheim_building() {
        let g = image_graph(vec![Term::iri("http://example.org/img/Mannheim.jpg")]);
        let aug = emit_image_triples(&g.literal_groups()[0], &g, &tag_map(), &minter(), &ImageSettings::default()).unwrap();
        assert_eq!(aug.triples.len(), 1);
        assert_eq!(aug.triples[0].object, Term::iri("http://example.org/new/VGG_building"));
        assert_eq!(aug.weights, vec![Some(0.7)]);
    }

    #[test]
    fn shared_labels_and_misses() {
        let g = image_graph(vec![
            Term::iri("http://example.org/img/Mannheim.jpg"),
            Term::iri("http://example.org/img/b.jpg"),
            Term::iri("http://example.org/img/unknown.jpg"),
            Term::literal(Literal::typed("dGVzdA==", KGBENCH_BASE64_IMAGE)),
        ]);
        let provider = tag_map();
        assert_eq!(provider.vocabulary_size(), Some(3));
        let aug = emit_image_triples(&g.literal_groups()[0], &g, &provider, &minter(), &ImageSettings::default()).unwrap();
        assert_eq!(aug.triples.len(), 4);
        assert_eq!(
            aug.minted_entities,
            [
                "http://example.org/new/VGG_building",
                "http://example.org/new/depictionAnyValue",
                "http://example.org/new/VGG_cat"
            ]
        );
        assert_eq!(aug.fallback_statements, 1);
        assert_eq!(aug.warnings.len(), 1);
    }

    #[test]
    fn tag_map_output_is_stable() {
        let g = image_graph(vec![Term::iri("http://example.org/img/b.jpg"), Term::iri("http://example.org/img/Mannheim.jpg")]);
        let run = || {
            let aug = emit_image_triples(&g.literal_groups()[0], &g, &tag_map(), &minter(), &ImageSettings::default()).unwrap();
            crate::rdf::to_ntriples_string(&aug.triples).unwrap()
        };
        assert_eq!(run(), run());
    }

    /// Serves `responses` in order, one per connection, and records request bodies.
    fn serve(responses: Vec<(u16, String)>) -> (String, thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = thread::spawn(move || {
            let mut bodies = Vec::new();
            for (status, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                bodies.push(String::from_utf8(buf).unwrap());
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
            bodies
        });
        (format!("http://{addr}/classify"), handle)
    }

    fn http(endpoint: String) -> HttpTagProvider {
        HttpTagProvider::new(HttpProviderSettings {
            endpoint,
            backoff_ms: 1,
            timeout_ms: 5_000,
            max_in_flight: 1,
            ..HttpProviderSettings::default()
        })
        .unwrap()
    }

    #[test]
    fn http_provider_retries_then_parses() {
        let ok = r#"{"labels": [{"name": "person", "score": 0.3}, {"name": "building", "score": 0.6}]}"#.to_string();
        let (endpoint, server) = serve(vec![(500, "{}".into()), (200, ok)]);
        let provider = http(endpoint);
        let g = image_graph(vec![Term::iri("http://example.org/img/Mannheim.jpg")]);
        let aug = emit_image_triples(&g.literal_groups()[0], &g, &provider, &minter(), &ImageSettings::default()).unwrap();
        assert_eq!(aug.triples[0].object, Term::iri("http://example.org/new/VGG_building"));
        let bodies = server.join().unwrap();
        assert_eq!(bodies.len(), 2);
        let req: serde_json::Value = serde_json::from_str(&bodies[1]).unwrap();
        assert_eq!(req["iri"], "http://example.org/img/Mannheim.jpg");
    }

    #[test]
    fn http_not_found_is_a_miss() {
        let (endpoint, server) = serve(vec![(404, "{}".into())]);
        let provider = http(endpoint);
        let g = image_graph(vec![Term::literal(Literal::typed("dGVzdA==", KGBENCH_BASE64_IMAGE))]);
        let aug = emit_image_triples(&g.literal_groups()[0], &g, &provider, &minter(), &ImageSettings::default()).unwrap();
        assert_eq!(aug.fallback_statements, 1);
        let bodies = server.join().unwrap();
        let req: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
        assert_eq!(req["data"], "dGVzdA==");
    }

    #[test]
    fn http_unreachable_fails() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let endpoint = format!("http://{}/x", listener.local_addr().unwrap());
        drop(listener);
        let provider = http(endpoint);
        let g = image_graph(vec![Term::iri("http://example.org/img/a.jpg")]);
        let err = emit_image_triples(&g.literal_groups()[0], &g, &provider, &minter(), &ImageSettings::default()).unwrap_err();
        assert!(matches!(err, ProviderError::Unreachable { .. }));
    }
}
