//! Line-oriented N-Triples reader and canonical writer.

use std::fmt;
use std::io::{self, BufRead, Write};

use super::term::{is_forbidden_iri_char, is_valid_blank_label, is_valid_language_tag, validate_iri};
use super::vocab::{RDF_LANG_STRING, XSD_STRING};
use super::{Literal, Term, Triple};

/// Whether malformed lines abort parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Malformed lines are reported and skipped.
    #[default]
    Lenient,
    /// The first malformed line is fatal.
    Strict,
}

/// A problem found on one input line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("I/O error while reading N-Triples: {0}")]
    Io(#[from] io::Error),
    #[error("malformed N-Triples at {0}")]
    Malformed(ParseDiagnostic),
}

#[derive(Debug, thiserror::Error)]
pub enum SerializeError {
    #[error("I/O error while writing N-Triples: {0}")]
    Io(#[from] io::Error),
    #[error("cannot serialize triple #{index}: {reason}")]
    InvalidTerm { index: usize, reason: String },
}

/// Result of a parse: the triples in input order plus per-line diagnostics.
#[derive(Debug, Default, Clone)]
pub struct ParseOutput {
    pub triples: Vec<Triple>,
    pub diagnostics: Vec<ParseDiagnostic>,
}

/// Parses a whole N-Triples stream.
///
/// In lenient mode malformed lines become diagnostics; in strict mode the
/// first one is returned as [`ParseError::Malformed`].
pub fn parse_ntriples<R: BufRead>(input: R, mode: ParseMode) -> Result<ParseOutput, ParseError> {
    let mut out = ParseOutput::default();
    for item in NTriplesReader::new(input) {
        match item? {
            Ok(t) => out.triples.push(t),
            Err(d) if mode == ParseMode::Strict => return Err(ParseError::Malformed(d)),
            Err(d) => out.diagnostics.push(d),
        }
    }
    Ok(out)
}

/// Convenience wrapper over [`parse_ntriples`] for in-memory text.
pub fn parse_str(input: &str, mode: ParseMode) -> Result<ParseOutput, ParseError> {
    parse_ntriples(input.as_bytes(), mode)
}

/// Streaming reader yielding one item per statement line.
///
/// Blank lines and comment lines are skipped. The outer `Result` carries I/O
/// failures, the inner one carries line-level syntax problems.
pub struct NTriplesReader<R> {
    input: R,
    buf: Vec<u8>,
    line: usize,
}

impl<R: BufRead> NTriplesReader<R> {
    pub fn new(input: R) -> Self {
        NTriplesReader {
            input,
            buf: Vec::with_capacity(256),
            line: 0,
        }
    }
}

impl<R: BufRead> Iterator for NTriplesReader<R> {
    type Item = io::Result<Result<Triple, ParseDiagnostic>>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.input.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e)),
            }
            self.line += 1;
            let line_no = self.line;
            let text = match std::str::from_utf8(&self.buf) {
                Ok(t) => t,
                Err(e) => {
                    return Some(Ok(Err(ParseDiagnostic {
                        line: line_no,
                        message: format!("invalid UTF-8: {e}"),
                    })))
                }
            };
            match parse_line(text) {
                Ok(None) => continue,
                Ok(Some(t)) => return Some(Ok(Ok(t))),
                Err(message) => return Some(Ok(Err(ParseDiagnostic { line: line_no, message }))),
            }
        }
    }
}

/// Parses one line. `Ok(None)` for blank and comment lines.
pub fn parse_line(line: &str) -> Result<Option<Triple>, String> {
    let mut cur = Cursor { s: line, pos: 0 };
    cur.skip_ws();
    if cur.at_end() || cur.peek() == Some(b'#') {
        return Ok(None);
    }
    let subject = match cur.peek() {
        Some(b'<') => Term::Iri(cur.iri()?),
        Some(b'_') => Term::BlankNode(cur.blank()?),
        _ => return Err(format!("expected subject IRI or blank node at column {}", cur.pos + 1)),
    };
    cur.skip_ws();
    let predicate = match cur.peek() {
        Some(b'<') => Term::Iri(cur.iri()?),
        _ => return Err(format!("expected predicate IRI at column {}", cur.pos + 1)),
    };
    cur.skip_ws();
    let object = match cur.peek() {
        Some(b'<') => Term::Iri(cur.iri()?),
        Some(b'_') => Term::BlankNode(cur.blank()?),
        Some(b'"') => Term::Literal(cur.literal()?),
        _ => return Err(format!("expected object term at column {}", cur.pos + 1)),
    };
    cur.skip_ws();
    if cur.peek() != Some(b'.') {
        return Err(format!("expected '.' at column {}", cur.pos + 1));
    }
    cur.pos += 1;
    cur.skip_ws();
    if !cur.at_end() && cur.peek() != Some(b'#') {
        return Err(format!("trailing content at column {}", cur.pos + 1));
    }
    Ok(Some(Triple::new(subject, predicate, object)))
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn bytes(&self) -> &'a [u8] {
        self.s.as_bytes()
    }

    fn peek(&self) -> Option<u8> {
        self.bytes().get(self.pos).copied()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.s.len()
    }

    fn skip_ws(&mut self) {
        while let Some(b' ' | b'\t' | b'\r' | b'\n') = self.peek() {
            self.pos += 1;
        }
    }

    fn iri(&mut self) -> Result<String, String> {
        let start = self.pos;
        self.pos += 1;
        let mut out = String::new();
        loop {
            let rest = &self.s[self.pos..];
            let stop = rest
                .find(|c: char| c == '>' || c == '\\' || is_forbidden_iri_char(c))
                .ok_or_else(|| format!("unterminated IRI at column {}", start + 1))?;
            out.push_str(&rest[..stop]);
            self.pos += stop;
            match self.peek() {
                Some(b'>') => {
                    self.pos += 1;
                    break;
                }
                Some(b'\\') => out.push(self.uchar()?),
                _ => {
                    let c = self.s[self.pos..].chars().next().unwrap_or(' ');
                    return Err(format!("character {c:?} not allowed in IRI at column {}", self.pos + 1));
                }
            }
        }
        validate_iri(&out)?;
        Ok(out)
    }

    fn uchar(&mut self) -> Result<char, String> {
        let (len, at) = match self.bytes().get(self.pos + 1) {
            Some(b'u') => (4, self.pos),
            Some(b'U') => (8, self.pos),
            _ => return Err(format!("invalid escape at column {}", self.pos + 1)),
        };
        let hex = self
            .s
            .get(at + 2..at + 2 + len)
            .filter(|h| h.bytes().all(|b| b.is_ascii_hexdigit()))
            .ok_or_else(|| format!("truncated \\u escape at column {}", at + 1))?;
        let code = u32::from_str_radix(hex, 16).map_err(|e| e.to_string())?;
        let c = char::from_u32(code).ok_or_else(|| format!("escape \\u{hex} is not a scalar value"))?;
        self.pos = at + 2 + len;
        Ok(c)
    }

    fn blank(&mut self) -> Result<String, String> {
        if !self.s[self.pos..].starts_with("_:") {
            return Err(format!("expected '_:' at column {}", self.pos + 1));
        }
        let start = self.pos + 2;
        let rest = &self.s[start..];
        let mut end = rest
            .find(|c: char| c.is_whitespace() || matches!(c, '<' | '"' | '#'))
            .unwrap_or(rest.len());
        // a trailing '.' belongs to the statement terminator
        while end > 0 && rest.as_bytes()[end - 1] == b'.' {
            end -= 1;
        }
        let label = &rest[..end];
        if !is_valid_blank_label(label) {
            return Err(format!("invalid blank node label {label:?}"));
        }
        self.pos = start + end;
        Ok(label.to_string())
    }

    fn literal(&mut self) -> Result<Literal, String> {
        let start = self.pos;
        self.pos += 1;
        let mut lexical = String::new();
        loop {
            let rest = &self.s[self.pos..];
            let stop = rest
                .find(['"', '\\', '\n', '\r'])
                .ok_or_else(|| format!("unterminated literal at column {}", start + 1))?;
            lexical.push_str(&rest[..stop]);
            self.pos += stop;
            match self.peek() {
                Some(b'"') => {
                    self.pos += 1;
                    break;
                }
                Some(b'\\') => {
                    let esc = match self.bytes().get(self.pos + 1) {
                        Some(b't') => Some('\t'),
                        Some(b'b') => Some('\u{8}'),
                        Some(b'n') => Some('\n'),
                        Some(b'r') => Some('\r'),
                        Some(b'f') => Some('\u{c}'),
                        Some(b'"') => Some('"'),
                        Some(b'\'') => Some('\''),
                        Some(b'\\') => Some('\\'),
                        _ => None,
                    };
                    match esc {
                        Some(c) => {
                            lexical.push(c);
                            self.pos += 2;
                        }
                        None => lexical.push(self.uchar()?),
                    }
                }
                _ => return Err(format!("raw line break inside literal at column {}", self.pos + 1)),
            }
        }
        match self.peek() {
            Some(b'^') => {
                if self.bytes().get(self.pos + 1) != Some(&b'^') || self.bytes().get(self.pos + 2) != Some(&b'<') {
                    return Err(format!("expected '^^<' datatype IRI at column {}", self.pos + 1));
                }
                self.pos += 2;
                let datatype = self.iri()?;
                if datatype == RDF_LANG_STRING {
                    return Err("rdf:langString literal without language tag".into());
                }
                Ok(Literal::typed(lexical, datatype))
            }
            Some(b'@') => {
                let rest = &self.s[self.pos + 1..];
                let end = rest
                    .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                    .unwrap_or(rest.len());
                let tag = &rest[..end];
                if !is_valid_language_tag(tag) {
                    return Err(format!("invalid language tag {tag:?}"));
                }
                self.pos += 1 + end;
                Ok(Literal::lang(lexical, tag))
            }
            _ => Ok(Literal::typed(lexical, XSD_STRING)),
        }
    }
}

pub(crate) fn write_term(out: &mut String, term: &Term) {
    match term {
        Term::Iri(iri) => {
            out.push('<');
            out.push_str(iri);
            out.push('>');
        }
        Term::BlankNode(label) => {
            out.push_str("_:");
            out.push_str(label);
        }
        Term::Literal(lit) => {
            out.push('"');
            escape_lexical(out, lit.lexical());
            out.push('"');
            if let Some(lang) = lit.language() {
                out.push('@');
                out.push_str(lang);
            } else if lit.datatype() != XSD_STRING {
                out.push_str("^^<");
                out.push_str(lit.datatype());
                out.push('>');
            }
        }
    }
}

fn escape_lexical(out: &mut String, s: &str) {
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{8}' => out.push_str("\\b"),
            '\u{c}' => out.push_str("\\f"),
            '\u{0}'..='\u{1f}' | '\u{7f}' => {
                use std::fmt::Write as _;
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
}

/// Appends the canonical line for `triple` (including the trailing newline).
pub fn write_triple_line(out: &mut String, triple: &Triple) {
    write_term(out, &triple.subject);
    out.push(' ');
    write_term(out, &triple.predicate);
    out.push(' ');
    write_term(out, &triple.object);
    out.push_str(" .\n");
}

/// Writes triples as canonical N-Triples, validating every term first.
pub fn serialize_ntriples<'a, W, I>(triples: I, mut out: W) -> Result<(), SerializeError>
where
    W: Write,
    I: IntoIterator<Item = &'a Triple>,
{
    let mut line = String::with_capacity(256);
    for (index, triple) in triples.into_iter().enumerate() {
        triple
            .validate()
            .map_err(|reason| SerializeError::InvalidTerm { index, reason })?;
        line.clear();
        write_triple_line(&mut line, triple);
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Serializes into an in-memory string.
pub fn to_ntriples_string(triples: &[Triple]) -> Result<String, SerializeError> {
    let mut buf = Vec::new();
    serialize_ntriples(triples, &mut buf)?;
    Ok(String::from_utf8(buf).expect("serializer emits UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::vocab::XSD_NON_NEGATIVE_INTEGER;

    fn one(line: &str) -> Triple {
        parse_line(line).unwrap().unwrap()
    }

    #[test]
    fn expanded_mannheim_statement() {
        let t = one("<http://dbpedia.org/resource/Mannheim> <http://dbpedia.org/ontology/country> <http://dbpedia.org/resource/Germany> .");
        assert_eq!(t.subject, Term::iri("http://dbpedia.org/resource/Mannheim"));
        assert_eq!(t.predicate, Term::iri("http://dbpedia.org/ontology/country"));
        assert_eq!(t.object, Term::iri("http://dbpedia.org/resource/Germany"));
    }

    #[test]
    fn empty_input() {
        let out = parse_str("", ParseMode::Strict).unwrap();
        assert!(out.triples.is_empty());
        assert!(out.diagnostics.is_empty());
    }

    #[test]
    fn garbage_datatype_is_one_diagnostic() {
        let out = parse_str("<a> <b> \"x\"^^garbage .", ParseMode::Lenient).unwrap();
        assert!(out.triples.is_empty());
        assert_eq!(out.diagnostics.len(), 1);
        assert_eq!(out.diagnostics[0].line, 1);
        let err = parse_str("<a> <b> \"x\"^^garbage .", ParseMode::Strict).unwrap_err();
        assert!(matches!(err, ParseError::Malformed(d) if d.line == 1));
    }

    #[test]
    fn diagnostics_keep_line_numbers() {
        let src = "# header\n<http://a/s> <http://a/p> \"ok\" .\nnot a triple\n\n<http://a/s> <http://a/p> _:b1 .\n";
        let out = parse_str(src, ParseMode::Lenient).unwrap();
        assert_eq!(out.triples.len(), 2);
        assert_eq!(out.diagnostics.len(), 1);
        assert_eq!(out.diagnostics[0].line, 3);
    }

    #[test]
    fn escapes_decoded() {
        let t = one(r#"<http://a/s> <http://a/p> "q\"uote\nline \u00E9\U0001F600 tab\t" ."#);
        assert_eq!(t.object.as_literal().unwrap().lexical(), "q\"uote\nline é😀 tab\t");
        let t = one(r"<http://a/\u0073> <http://a/p> <http://a/o> .");
        assert_eq!(t.subject, Term::iri("http://a/s"));
    }

    #[test]
    fn language_and_datatype() {
        let t = one(r#"_:x <http://a/p> "Mannheim"@en ."#);
        let lit = t.object.as_literal().unwrap();
        assert_eq!(lit.language(), Some("en"));
        assert_eq!(lit.datatype(), RDF_LANG_STRING);
        let t = one(r#"_:x <http://a/p> "plain" ."#);
        assert_eq!(t.object.as_literal().unwrap().datatype(), XSD_STRING);
    }

    #[test]
    fn blank_node_before_dot() {
        let t = one("_:a <http://a/p> _:b.");
        assert_eq!(t.object, Term::blank("b"));
    }

    #[test]
    fn malformed_lines() {
        for bad in [
            "<http://a/s> <http://a/p> .",
            "<http://a/s> <http://a/p> <http://a/o>",
            "<http://a/s> <http://a/p> \"x .",
            "\"x\" <http://a/p> <http://a/o> .",
            "<http://a/s> _:p <http://a/o> .",
            "<http://a/s> <http://a/p> <http://a/o> . extra",
            "<http://a/s> <http://a/p> \"x\"@ .",
            "<http://a/s> <http://a/p> \"x\\q\" .",
            "<http://a /s> <http://a/p> <http://a/o> .",
        ] {
            assert!(parse_line(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn population_statement_serialization() {
        let t = Triple::new(
            Term::iri("http://dbpedia.org/resource/Mannheim"),
            Term::iri("http://dbpedia.org/ontology/populationMetro"),
            Term::literal(Literal::typed("2362046", XSD_NON_NEGATIVE_INTEGER)),
        );
        assert_eq!(
            to_ntriples_string(&[t]).unwrap(),
            "<http://dbpedia.org/resource/Mannheim> <http://dbpedia.org/ontology/populationMetro> \"2362046\"^^<http://www.w3.org/2001/XMLSchema#nonNegativeInteger> .\n"
        );
    }

    #[test]
    fn serializer_escapes_and_roundtrips() {
        let t = Triple::new(
            Term::blank("b0"),
            Term::iri("http://a/p"),
            Term::literal(Literal::plain("say \"hi\"\nbye\\ \u{1}")),
        );
        let text = to_ntriples_string(std::slice::from_ref(&t)).unwrap();
        assert_eq!(text, "_:b0 <http://a/p> \"say \\\"hi\\\"\\nbye\\\\ \\u0001\" .\n");
        let back = parse_str(&text, ParseMode::Strict).unwrap();
        assert_eq!(back.triples, vec![t]);
    }

    #[test]
    fn serializer_rejects_invalid_terms() {
        let t = Triple::new(
            Term::iri("http://a/s"),
            Term::iri("not absolute"),
            Term::iri("http://a/o"),
        );
        let err = to_ntriples_string(&[t]).unwrap_err();
        assert!(err.to_string().contains("not absolute"), "{err}");
        assert_eq!(to_ntriples_string(&[]).unwrap(), "");
    }
}
