use std::fmt;

use super::vocab::{RDF_LANG_STRING, XSD_STRING};

/// An RDF term: IRI, blank node or literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    BlankNode(String),
    Literal(Literal),
}

/// A literal with its lexical form kept byte-exact.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    lexical: String,
    datatype: String,
    language: Option<String>,
}

impl Literal {
    /// A literal typed with `datatype`.
    pub fn typed(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: datatype.into(),
            language: None,
        }
    }

    /// An `xsd:string` literal.
    pub fn plain(lexical: impl Into<String>) -> Self {
        Self::typed(lexical, XSD_STRING)
    }

    /// A language-tagged `rdf:langString` literal.
    pub fn lang(lexical: impl Into<String>, language: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: RDF_LANG_STRING.to_string(),
            language: Some(language.into()),
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> &str {
        &self.datatype
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }
}

impl Term {
    pub fn iri(iri: impl Into<String>) -> Self {
        Term::Iri(iri.into())
    }

    pub fn blank(label: impl Into<String>) -> Self {
        Term::BlankNode(label.into())
    }

    pub fn literal(lit: Literal) -> Self {
        Term::Literal(lit)
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            _ => None,
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    /// Checks the term invariants, returning a description of the first violation.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Term::Iri(iri) => validate_iri(iri),
            Term::BlankNode(label) => {
                if is_valid_blank_label(label) {
                    Ok(())
                } else {
                    Err(format!("invalid blank node label {label:?}"))
                }
            }
            Term::Literal(lit) => {
                match &lit.language {
                    Some(tag) => {
                        if !is_valid_language_tag(tag) {
                            return Err(format!("invalid language tag {tag:?}"));
                        }
                        if lit.datatype != RDF_LANG_STRING {
                            return Err(format!(
                                "language-tagged literal must have datatype rdf:langString, found <{}>",
                                lit.datatype
                            ));
                        }
                    }
                    None => {
                        if lit.datatype == RDF_LANG_STRING {
                            return Err("rdf:langString literal without language tag".into());
                        }
                    }
                }
                validate_iri(&lit.datatype).map_err(|e| format!("datatype: {e}"))
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        super::ntriples::write_term(&mut out, self);
        f.write_str(&out)
    }
}

/// N-Triples form without the trailing newline.
impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

/// A subject-predicate-object statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Self {
        Triple {
            subject,
            predicate,
            object,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match &self.subject {
            Term::Literal(_) => return Err(format!("literal in subject position: {}", self.subject)),
            t => t.validate().map_err(|e| format!("subject: {e}"))?,
        }
        match &self.predicate {
            Term::Iri(iri) => validate_iri(iri).map_err(|e| format!("predicate: {e}"))?,
            t => return Err(format!("predicate must be an IRI: {t}")),
        }
        self.object.validate().map_err(|e| format!("object: {e}"))
    }
}

pub(crate) fn validate_iri(iri: &str) -> Result<(), String> {
    if iri.is_empty() {
        return Err("empty IRI".into());
    }
    if let Some(c) = iri.chars().find(|&c| is_forbidden_iri_char(c)) {
        return Err(format!("IRI {iri:?} contains forbidden character {c:?}"));
    }
    if !has_scheme(iri) {
        return Err(format!("IRI {iri:?} is not absolute"));
    }
    Ok(())
}

pub(crate) fn is_forbidden_iri_char(c: char) -> bool {
    c <= ' ' || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')
}

fn has_scheme(iri: &str) -> bool {
    let mut chars = iri.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    for c in chars {
        if c == ':' {
            return true;
        }
        if !(c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')) {
            return false;
        }
    }
    false
}

fn is_pn_chars_base(c: char) -> bool {
    c.is_ascii_alphabetic()
        || matches!(c,
            '\u{00C0}'..='\u{00D6}'
            | '\u{00D8}'..='\u{00F6}'
            | '\u{00F8}'..='\u{02FF}'
            | '\u{0370}'..='\u{037D}'
            | '\u{037F}'..='\u{1FFF}'
            | '\u{200C}'..='\u{200D}'
            | '\u{2070}'..='\u{218F}'
            | '\u{2C00}'..='\u{2FEF}'
            | '\u{3001}'..='\u{D7FF}'
            | '\u{F900}'..='\u{FDCF}'
            | '\u{FDF0}'..='\u{FFFD}'
            | '\u{10000}'..='\u{EFFFF}')
}

fn is_pn_chars(c: char) -> bool {
    is_pn_chars_base(c)
        || c == '_'
        || c == '-'
        || c.is_ascii_digit()
        || matches!(c, '\u{00B7}' | '\u{0300}'..='\u{036F}' | '\u{203F}'..='\u{2040}')
}

pub(crate) fn is_valid_blank_label(label: &str) -> bool {
    let mut chars = label.chars();
    match chars.next() {
        Some(c) if is_pn_chars_base(c) || c == '_' || c.is_ascii_digit() => {}
        _ => return false,
    }
    if label.ends_with('.') {
        return false;
    }
    chars.all(|c| is_pn_chars(c) || c == '.')
}

pub(crate) fn is_valid_language_tag(tag: &str) -> bool {
    let mut parts = tag.split('-');
    match parts.next() {
        Some(p) if !p.is_empty() && p.chars().all(|c| c.is_ascii_alphabetic()) => {}
        _ => return false,
    }
    parts.all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphanumeric()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iri_rules() {
        assert!(validate_iri("http://dbpedia.org/resource/Mannheim").is_ok());
        assert!(validate_iri("urn:x").is_ok());
        assert!(validate_iri("").is_err());
        assert!(validate_iri("a").is_err());
        assert!(validate_iri("http://x y").is_err());
        assert!(validate_iri("http://x>").is_err());
    }

    #[test]
    fn blank_labels() {
        assert!(is_valid_blank_label("b0"));
        assert!(is_valid_blank_label("_x.y"));
        assert!(is_valid_blank_label("0abc"));
        assert!(!is_valid_blank_label(""));
        assert!(!is_valid_blank_label("x."));
        assert!(!is_valid_blank_label("-x"));
        assert!(!is_valid_blank_label("a b"));
    }

    #[test]
    fn literal_invariants() {
        assert!(Term::literal(Literal::lang("x", "en-GB")).validate().is_ok());
        assert!(Term::literal(Literal::lang("x", "en_GB")).validate().is_err());
        assert!(Term::literal(Literal::typed("x", RDF_LANG_STRING)).validate().is_err());
        assert!(Term::literal(Literal::typed("x", "garbage")).validate().is_err());
    }

    #[test]
    fn triple_positions() {
        let lit = Term::literal(Literal::plain("x"));
        let iri = Term::iri("http://e/a");
        assert!(Triple::new(lit.clone(), iri.clone(), iri.clone()).validate().is_err());
        assert!(Triple::new(iri.clone(), Term::blank("b"), iri.clone()).validate().is_err());
        assert!(Triple::new(Term::blank("b"), iri.clone(), lit).validate().is_ok());
    }
}
