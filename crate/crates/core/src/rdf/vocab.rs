//! Well-known IRIs.

pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const XSD_DATE: &str = "http://www.w3.org/2001/XMLSchema#date";
pub const XSD_DATE_TIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";
pub const XSD_G_YEAR: &str = "http://www.w3.org/2001/XMLSchema#gYear";
pub const XSD_G_YEAR_MONTH: &str = "http://www.w3.org/2001/XMLSchema#gYearMonth";
pub const XSD_BASE64_BINARY: &str = "http://www.w3.org/2001/XMLSchema#base64Binary";
pub const XSD_NON_NEGATIVE_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#nonNegativeInteger";
pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
pub const XSD_DOUBLE: &str = "http://www.w3.org/2001/XMLSchema#double";

pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";

/// Image datatype used by the kgbench dumps for embedded pictures.
pub const KGBENCH_BASE64_IMAGE: &str = "http://kgbench.info/dt#base64Image";

pub const FOAF_DEPICTION: &str = "http://xmlns.com/foaf/0.1/depiction";

/// Local names of the XSD numeric datatypes.
pub(crate) const XSD_NUMERIC: &[&str] = &[
    "integer",
    "decimal",
    "float",
    "double",
    "nonNegativeInteger",
    "positiveInteger",
    "nonPositiveInteger",
    "negativeInteger",
    "long",
    "int",
    "short",
    "byte",
    "unsignedLong",
    "unsignedInt",
    "unsignedShort",
    "unsignedByte",
];

pub(crate) const XSD_TEMPORAL: &[&str] = &["date", "dateTime", "gYear", "gYearMonth"];

pub(crate) const XSD_TEXT: &[&str] = &["string", "normalizedString", "token"];

pub(crate) fn xsd_local(datatype: &str) -> Option<&str> {
    datatype.strip_prefix(XSD)
}
