//! RDF terms and N-Triples I/O.

mod ntriples;
mod term;
pub mod vocab;

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;

pub use ntriples::{
    parse_line, parse_ntriples, parse_str, serialize_ntriples, to_ntriples_string, write_triple_line,
    NTriplesReader, ParseDiagnostic, ParseError, ParseMode, ParseOutput, SerializeError,
};
pub use term::{Literal, Term, Triple};
pub(crate) use term::validate_iri as term_validate_iri;

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// Wraps `reader`, transparently decompressing it when it starts with the gzip magic bytes.
pub fn maybe_gunzip<R: Read + 'static>(reader: R) -> io::Result<Box<dyn BufRead>> {
    let mut buffered = BufReader::with_capacity(1 << 16, reader);
    let head = buffered.fill_buf()?;
    if head.len() >= 2 && head[..2] == GZIP_MAGIC {
        Ok(Box::new(BufReader::with_capacity(1 << 16, MultiGzDecoder::new(buffered))))
    } else {
        Ok(Box::new(buffered))
    }
}

/// Opens an N-Triples file (plain or gzip-compressed). `-` reads standard input.
pub fn open_input(path: &Path) -> io::Result<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        maybe_gunzip(io::stdin())
    } else {
        maybe_gunzip(File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use std::io::Write;

    #[test]
    fn gzip_detected_by_magic() {
        let text = "<http://a/s> <http://a/p> \"v\" .\n";
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(text.as_bytes()).unwrap();
        let gz = enc.finish().unwrap();

        let out = parse_ntriples(maybe_gunzip(io::Cursor::new(gz)).unwrap(), ParseMode::Strict).unwrap();
        assert_eq!(out.triples.len(), 1);
        let plain = parse_ntriples(maybe_gunzip(io::Cursor::new(text.as_bytes().to_vec())).unwrap(), ParseMode::Strict)
            .unwrap();
        assert_eq!(plain.triples, out.triples);
    }
}
