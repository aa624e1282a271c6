use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rdf::vocab::{self, xsd_local, RDF_LANG_STRING};
use crate::rdf::{Literal, Term};

/// The kind of information a literal statement carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Numeric,
    Temporal,
    Text,
    Image,
    Other,
}

impl Modality {
    pub const ALL: [Modality; 5] = [
        Modality::Numeric,
        Modality::Temporal,
        Modality::Text,
        Modality::Image,
        Modality::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Numeric => "numeric",
            Modality::Temporal => "temporal",
            Modality::Text => "text",
            Modality::Image => "image",
            Modality::Other => "other",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Configuration for [`classify_modality`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModalityRules {
    /// Predicates whose objects (IRIs or literals) are images.
    pub image_predicates: BTreeSet<String>,
    /// Literal datatypes that carry embedded image bytes.
    pub image_datatypes: BTreeSet<String>,
    /// Per-predicate modality, taking precedence over datatype rules.
    pub overrides: BTreeMap<String, Modality>,
}

impl Default for ModalityRules {
    fn default() -> Self {
        ModalityRules {
            image_predicates: BTreeSet::new(),
            image_datatypes: [vocab::XSD_BASE64_BINARY, vocab::KGBENCH_BASE64_IMAGE]
                .into_iter()
                .map(String::from)
                .collect(),
            overrides: BTreeMap::new(),
        }
    }
}

impl ModalityRules {
    pub fn with_image_predicate(mut self, predicate: impl Into<String>) -> Self {
        self.image_predicates.insert(predicate.into());
        self
    }
}

/// Assigns a modality to a literal found under `predicate`. Total: unknown datatypes are `Other`.
pub fn classify_modality(literal: &Literal, predicate: &str, rules: &ModalityRules) -> Modality {
    if let Some(m) = rules.overrides.get(predicate) {
        return *m;
    }
    if rules.image_predicates.contains(predicate) || rules.image_datatypes.contains(literal.datatype()) {
        return Modality::Image;
    }
    if literal.datatype() == RDF_LANG_STRING {
        return Modality::Text;
    }
    match xsd_local(literal.datatype()) {
        Some(local) if vocab::XSD_NUMERIC.contains(&local) => Modality::Numeric,
        Some(local) if vocab::XSD_TEMPORAL.contains(&local) => Modality::Temporal,
        Some(local) if vocab::XSD_TEXT.contains(&local) => Modality::Text,
        _ => Modality::Other,
    }
}

/// Routes an object term: `None` means an ordinary relational edge.
///
/// IRI-valued objects of configured image predicates count as image information.
pub fn classify_object(object: &Term, predicate: &str, rules: &ModalityRules) -> Option<Modality> {
    match object {
        Term::Literal(lit) => Some(classify_modality(lit, predicate, rules)),
        Term::Iri(_) if rules.image_predicates.contains(predicate) => Some(Modality::Image),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::vocab::*;

    const POP: &str = "http://dbpedia.org/ontology/populationMetro";

    #[test]
    fn datatype_rules() {
        let rules = ModalityRules::default();
        let c = |lit: Literal| classify_modality(&lit, POP, &rules);
        assert_eq!(c(Literal::typed("2362046", XSD_NON_NEGATIVE_INTEGER)), Modality::Numeric);
        assert_eq!(c(Literal::typed("1.5e3", XSD_DOUBLE)), Modality::Numeric);
        assert_eq!(c(Literal::typed("1607-01-24", XSD_DATE)), Modality::Temporal);
        assert_eq!(c(Literal::typed("1607", XSD_G_YEAR)), Modality::Temporal);
        assert_eq!(c(Literal::lang("Mannheim ...", "en")), Modality::Text);
        assert_eq!(c(Literal::plain("x")), Modality::Text);
        assert_eq!(c(Literal::typed("aGVsbG8=", XSD_BASE64_BINARY)), Modality::Image);
        assert_eq!(c(Literal::typed("POINT(1 2)", "http://www.opengis.net/ont/geosparql#wktLiteral")), Modality::Other);
    }

    #[test]
    fn image_predicate_and_overrides() {
        let mut rules = ModalityRules::default().with_image_predicate(FOAF_DEPICTION);
        let img = Term::iri("http://commons.wikimedia.org/wiki/Special:FilePath/NUB_Mannheim_2014-03-13.jpg");
        assert_eq!(classify_object(&img, FOAF_DEPICTION, &rules), Some(Modality::Image));
        assert_eq!(classify_object(&img, POP, &rules), None);
        assert_eq!(classify_object(&Term::blank("b"), FOAF_DEPICTION, &rules), None);

        rules.overrides.insert(POP.into(), Modality::Other);
        let lit = Literal::typed("1", XSD_INTEGER);
        assert_eq!(classify_modality(&lit, POP, &rules), Modality::Other);
    }
}
