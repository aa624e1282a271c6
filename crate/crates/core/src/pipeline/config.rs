//! Strategy configuration: which operator runs on which literal group.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::augment::Namespace;
use crate::binning::{BinCount, BinningSpec, LofSettings};
use crate::graph::{Modality, ModalityRules};
use crate::image::{HttpProviderSettings, ImageSettings};
use crate::subpopulation::DEFAULT_THRESHOLD;
use crate::temporal::CalendarLinks;
use crate::text::LdaSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Exclude,
    Transform,
    OneEntity,
    /// nBINS or p%BINS, depending on the binning mode.
    Bins,
    KlRel,
    KlRelEnt,
    DatBin,
    DatFeat,
    Lda,
    Image,
    /// Resolved per modality by [`compose_combined`].
    Combined,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 11] = [
        StrategyKind::Exclude,
        StrategyKind::Transform,
        StrategyKind::OneEntity,
        StrategyKind::Bins,
        StrategyKind::KlRel,
        StrategyKind::KlRelEnt,
        StrategyKind::DatBin,
        StrategyKind::DatFeat,
        StrategyKind::Lda,
        StrategyKind::Image,
        StrategyKind::Combined,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Exclude => "EXCLUDE",
            StrategyKind::Transform => "TRANSFORM",
            StrategyKind::OneEntity => "ONEENTITY",
            StrategyKind::Bins => "nBINS",
            StrategyKind::KlRel => "KL-REL",
            StrategyKind::KlRelEnt => "KL-RELENT",
            StrategyKind::DatBin => "DATBIN",
            StrategyKind::DatFeat => "DATFEAT",
            StrategyKind::Lda => "LDA",
            StrategyKind::Image => "IMAGE",
            StrategyKind::Combined => "COMBINED",
        }
    }

    fn uses_lof(self) -> bool {
        matches!(self, StrategyKind::Bins | StrategyKind::KlRel | StrategyKind::KlRelEnt)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("unknown strategy {0:?}")]
pub struct UnknownStrategy(pub String);

impl FromStr for StrategyKind {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.trim().to_ascii_uppercase().chars().filter(|c| *c != '_').collect();
        Ok(match norm.as_str() {
            "EXCLUDE" => StrategyKind::Exclude,
            "TRANSFORM" | "LITERAL2ENTITY" => StrategyKind::Transform,
            "ONEENTITY" => StrategyKind::OneEntity,
            "NBINS" | "BINS" | "P%BINS" | "PBINS" => StrategyKind::Bins,
            "KL-REL" | "KLREL" => StrategyKind::KlRel,
            "KL-RELENT" | "KLRELENT" => StrategyKind::KlRelEnt,
            "DATBIN" => StrategyKind::DatBin,
            "DATFEAT" => StrategyKind::DatFeat,
            "LDA" | "TXTLDA" => StrategyKind::Lda,
            "IMAGE" | "VGG16" => StrategyKind::Image,
            "COMBINED" => StrategyKind::Combined,
            _ => return Err(UnknownStrategy(s.to_string())),
        })
    }
}

/// A strategy plus its parameters.
///
/// In JSON either a bare name (`"KL-REL+LOF"`) or an object with a
/// `strategy` field and optional parameter blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategySpec {
    #[serde(serialize_with = "ser_kind", deserialize_with = "de_kind_field")]
    pub strategy: StrategyKind,
    pub binning: BinningSpec,
    /// LOF pre-filter for the binning strategies; enabled by a `+LOF` suffix too.
    pub lof: Option<LofSettings>,
    pub population_threshold: usize,
    pub lda: LdaSettings,
    pub image: ImageSettings,
}

impl Default for StrategySpec {
    fn default() -> Self {
        StrategySpec::named(StrategyKind::Transform)
    }
}

fn ser_kind<S: Serializer>(k: &StrategyKind, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(k.as_str())
}

fn de_kind_field<'de, D: Deserializer<'de>>(d: D) -> Result<StrategyKind, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(D::Error::custom)
}

impl StrategySpec {
    pub fn named(kind: StrategyKind) -> Self {
        StrategySpec {
            strategy: kind,
            binning: BinningSpec::default(),
            lof: None,
            population_threshold: DEFAULT_THRESHOLD,
            lda: LdaSettings::default(),
            image: ImageSettings::default(),
        }
    }

    pub fn with_lof(mut self) -> Self {
        self.lof = Some(LofSettings::default());
        self
    }

    /// Report name, e.g. `KL-REL+LOF` or `p%BINS`.
    pub fn name(&self) -> String {
        let base = match (self.strategy, self.binning.mode) {
            (StrategyKind::Bins, BinCount::Percent(_)) => "p%BINS",
            (k, _) => k.as_str(),
        };
        if self.lof.is_some() && self.strategy.uses_lof() {
            format!("{base}+LOF")
        } else {
            base.to_string()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.binning.validate().map_err(|e| e.to_string())?;
        self.lda.validate().map_err(|e| e.to_string())?;
        if let Some(l) = &self.lof {
            if l.k == 0 || !(l.threshold > 0.0) {
                return Err("LOF needs k >= 1 and a positive threshold".into());
            }
        }
        if self.image.top_k == 0 {
            return Err("image top_k must be at least 1".into());
        }
        Ok(())
    }
}

impl FromStr for StrategySpec {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        let (base, lof) = match upper.strip_suffix("+LOF") {
            Some(b) => (b, true),
            None => (upper.as_str(), false),
        };
        let mut spec = if let Some(n) = base.strip_suffix("%BINS").and_then(|p| p.parse::<f64>().ok()) {
            let mut spec = StrategySpec::named(StrategyKind::Bins);
            spec.binning.mode = BinCount::Percent(n / 100.0);
            spec
        } else if let Some(n) = base.strip_suffix("BINS").and_then(|p| p.parse::<usize>().ok()) {
            let mut spec = StrategySpec::named(StrategyKind::Bins);
            spec.binning.mode = BinCount::Fixed(n);
            spec
        } else {
            let kind: StrategyKind = base.parse().map_err(|_| UnknownStrategy(s.to_string()))?;
            let mut spec = StrategySpec::named(kind);
            if kind == StrategyKind::Bins && (base.starts_with('P')) {
                spec.binning.mode = BinCount::Percent(0.10);
            }
            spec
        };
        let kind = spec.strategy;
        if lof {
            if !kind.uses_lof() {
                return Err(UnknownStrategy(s.to_string()));
            }
            spec = spec.with_lof();
        }
        Ok(spec)
    }
}

/// Accepts a bare strategy name or a full object.
fn spec_from_value(v: serde_json::Value) -> Result<StrategySpec, String> {
    match v {
        serde_json::Value::String(s) => s.parse().map_err(|e: UnknownStrategy| e.to_string()),
        serde_json::Value::Object(mut map) => {
            // a "+LOF" suffix in the object form enables LOF unless settings are given
            let mut lof = false;
            if let Some(serde_json::Value::String(name)) = map.get_mut("strategy") {
                if let Some(base) = name.to_ascii_uppercase().strip_suffix("+LOF") {
                    *name = base.to_string();
                    lof = true;
                }
            }
            let mut spec: StrategySpec = serde_json::from_value(serde_json::Value::Object(map)).map_err(|e| e.to_string())?;
            if lof && spec.lof.is_none() {
                spec.lof = Some(LofSettings::default());
            }
            Ok(spec)
        }
        other => Err(format!("expected a strategy name or object, found {other}")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecEntry(pub StrategySpec);

impl<'de> Deserialize<'de> for SpecEntry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        spec_from_value(v).map(SpecEntry).map_err(D::Error::custom)
    }
}

impl Serialize for SpecEntry {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// What happens to a group whose strategy fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FallbackPolicy {
    #[default]
    #[serde(rename = "ONEENTITY")]
    OneEntity,
    #[serde(rename = "EXCLUDE")]
    Exclude,
    /// Abort the run.
    #[serde(rename = "NONE")]
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProviderConfig {
    /// JSON tag map file.
    TagMap(PathBuf),
    Http(HttpProviderSettings),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyConfig {
    pub namespace: String,
    pub seed: u64,
    /// Per-modality strategies; a single name applies to every modality.
    #[serde(deserialize_with = "de_defaults")]
    pub defaults: BTreeMap<Modality, SpecEntry>,
    /// Per-predicate strategies, keyed by predicate IRI.
    pub overrides: BTreeMap<String, SpecEntry>,
    pub image_provider: Option<ProviderConfig>,
    pub emit_weights: bool,
    pub fallback: FallbackPolicy,
    pub modalities: ModalityRules,
    pub calendar: CalendarLinks,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            namespace: Namespace::default().base().to_string(),
            seed: 0,
            defaults: combined_defaults(),
            overrides: BTreeMap::new(),
            image_provider: None,
            emit_weights: false,
            fallback: FallbackPolicy::default(),
            modalities: ModalityRules::default(),
            calendar: CalendarLinks::default(),
        }
    }
}

fn combined_defaults() -> BTreeMap<Modality, SpecEntry> {
    Modality::ALL.iter().map(|&m| (m, SpecEntry(combined_for(m)))).collect()
}

fn de_defaults<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Modality, SpecEntry>, D::Error> {
    let v = serde_json::Value::deserialize(d)?;
    let mut out = combined_defaults();
    match v {
        serde_json::Value::Object(map) => {
            for (key, value) in map {
                let m: Modality =
                    serde_json::from_value(serde_json::Value::String(key.clone())).map_err(|_| D::Error::custom(format!("unknown modality {key:?}")))?;
                out.insert(m, SpecEntry(spec_from_value(value).map_err(D::Error::custom)?));
            }
        }
        other => {
            let spec = spec_from_value(other).map_err(D::Error::custom)?;
            for m in Modality::ALL {
                out.insert(m, SpecEntry(spec.clone()));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
}

impl StrategyConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: StrategyConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Every modality set to `spec` (COMBINED resolves per modality).
    pub fn set_all(&mut self, spec: StrategySpec) {
        for m in Modality::ALL {
            self.defaults.insert(m, SpecEntry(spec.clone()));
        }
    }

    pub fn namespace(&self) -> Result<Namespace, ConfigError> {
        Namespace::new(self.namespace.clone()).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.namespace()?;
        let check = |what: &str, s: &StrategySpec| s.validate().map_err(|e| ConfigError::Invalid(format!("{what}: {e}")));
        for (m, s) in &self.defaults {
            check(m.as_str(), &s.0)?;
        }
        for (p, s) in &self.overrides {
            check(p, &s.0)?;
        }
        Ok(())
    }

    /// Strategy for a group: predicate override, else modality default, COMBINED resolved.
    pub fn resolve(&self, predicate: &str, modality: Modality) -> StrategySpec {
        let spec = self
            .overrides
            .get(predicate)
            .or_else(|| self.defaults.get(&modality))
            .map(|e| e.0.clone())
            .unwrap_or_else(|| combined_for(modality));
        if spec.strategy == StrategyKind::Combined {
            combined_for(modality)
        } else {
            spec
        }
    }
}

/// The COMBINED choice for one modality.
pub fn combined_for(modality: Modality) -> StrategySpec {
    match modality {
        Modality::Numeric => StrategySpec::named(StrategyKind::KlRel).with_lof(),
        Modality::Temporal => StrategySpec::named(StrategyKind::DatBin),
        Modality::Text => StrategySpec::named(StrategyKind::Lda),
        Modality::Image => StrategySpec::named(StrategyKind::Image),
        Modality::Other => StrategySpec::named(StrategyKind::Transform),
    }
}

/// Resolved modality → strategy map of a config (COMBINED expanded).
pub fn compose_combined(config: &StrategyConfig) -> BTreeMap<Modality, StrategySpec> {
    Modality::ALL
        .iter()
        .map(|&m| {
            let spec = config.defaults.get(&m).map(|e| e.0.clone()).unwrap_or_else(|| combined_for(m));
            let spec = if spec.strategy == StrategyKind::Combined { combined_for(m) } else { spec };
            (m, spec)
        })
        .collect()
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
