//! Date literals: DATBIN (timestamps binned like numbers) and DATFEAT (five
//! calendar feature entities per date, plus calendar structure links).
//!
//! Dates use the proleptic Gregorian calendar. Feature entities are global:
//! `new:wednesday` is the same node for every date predicate.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::augment::{Augmentation, Minter, Namespace};
use crate::baselines::fallback_value;
use crate::binning::{bin_statements, BinNamer, BinningError, BinningSpec};
use crate::graph::{IndexedGraph, LiteralGroup, LiteralStatement};
use crate::rdf::{Literal, Term, Triple};

pub const IN_QUARTER: &str = "inQuarter";
pub const NEXT_DAY: &str = "nextDay";
pub const NEXT_MONTH: &str = "nextMonth";
pub const NEXT_YEAR: &str = "nextYear";

pub const WEEKDAYS: [&str; 7] = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CalendarDate {
    year: i64,
    month: u32,
    day: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid date {lexical:?}: {reason}")]
pub struct DateError {
    pub lexical: String,
    pub reason: String,
}

pub fn is_leap_year(year: i64) -> bool {
    year % 4 == 0 && (year % 100 != 0 || year % 400 == 0)
}

pub fn days_in_month(year: i64, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap_year(year) => 29,
        2 => 28,
        _ => 0,
    }
}

impl CalendarDate {
    pub fn new(year: i64, month: u32, day: u32) -> Option<Self> {
        if !(1..=12).contains(&month) || day == 0 || day > days_in_month(year, month) {
            return None;
        }
        Some(CalendarDate { year, month, day })
    }

    pub fn year(&self) -> i64 {
        self.year
    }

    pub fn month(&self) -> u32 {
        self.month
    }

    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn quarter(&self) -> u32 {
        self.month.div_ceil(3)
    }

    /// Days since 1970-01-01.
    pub fn days_since_epoch(&self) -> i64 {
        // Hinnant's days_from_civil
        let y = if self.month <= 2 { self.year - 1 } else { self.year };
        let era = y.div_euclid(400);
        let yoe = y - era * 400;
        let m = self.month as i64;
        let mp = if m > 2 { m - 3 } else { m + 9 };
        let doy = (153 * mp + 2) / 5 + self.day as i64 - 1;
        let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        era * 146_097 + doe - 719_468
    }

    /// 0 = Monday … 6 = Sunday.
    pub fn weekday_index(&self) -> usize {
        (self.days_since_epoch() + 3).rem_euclid(7) as usize
    }

    pub fn weekday(&self) -> &'static str {
        WEEKDAYS[self.weekday_index()]
    }
}

impl fmt::Display for CalendarDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.year < 0 {
            write!(f, "-{:04}-{:02}-{:02}", -self.year, self.month, self.day)
        } else {
            write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
        }
    }
}

/// Parses xsd:date, xsd:dateTime, xsd:gYear and xsd:gYearMonth lexical forms.
///
/// Times and timezones are dropped. A year maps to January 1, a year-month to day 1.
pub fn parse_date(literal: &Literal) -> Result<CalendarDate, DateError> {
    parse_date_str(literal.lexical())
}

pub fn parse_date_str(lexical: &str) -> Result<CalendarDate, DateError> {
    let err = |reason: &str| DateError {
        lexical: lexical.to_string(),
        reason: reason.to_string(),
    };
    let s = lexical.trim();
    let date_part = match s.find('T') {
        Some(i) => &s[..i],
        None => strip_timezone(s),
    };
    let (negative, body) = match date_part.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, date_part),
    };
    let mut parts = body.split('-');
    let year_str = parts.next().unwrap_or("");
    if year_str.len() < 4 || !year_str.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err("year must have at least four digits"));
    }
    let mut year: i64 = year_str.parse().map_err(|_| err("year out of range"))?;
    if negative {
        year = -year;
    }
    let mut field = |name: &str| -> Result<Option<u32>, DateError> {
        match parts.next() {
            None => Ok(None),
            Some(p) if p.len() == 2 && p.bytes().all(|b| b.is_ascii_digit()) => Ok(Some(p.parse().unwrap())),
            Some(_) => Err(err(&format!("malformed {name}"))),
        }
    };
    let month = field("month")?;
    let day = field("day")?;
    if parts.next().is_some() {
        return Err(err("trailing characters"));
    }
    if month.is_none() && day.is_some() {
        return Err(err("day without month"));
    }
    CalendarDate::new(year, month.unwrap_or(1), day.unwrap_or(1)).ok_or_else(|| err("no such calendar day"))
}

fn strip_timezone(s: &str) -> &str {
    if let Some(rest) = s.strip_suffix('Z') {
        return rest;
    }
    // ±hh:mm
    if s.len() > 6 {
        let (head, tz) = s.split_at(s.len() - 6);
        let b = tz.as_bytes();
        if (b[0] == b'+' || b[0] == b'-') && b[3] == b':' && tz[1..3].bytes().chain(tz[4..].bytes()).all(|c| c.is_ascii_digit())
        {
            return head;
        }
    }
    s
}

/// Seconds from the epoch to midnight UTC of `date`.
pub fn to_unix_timestamp(date: &CalendarDate) -> i64 {
    date.days_since_epoch() * 86_400
}

/// DATBIN: bin the timestamps of a date group with the numeric binning machinery.
pub fn datbin(group: &LiteralGroup, graph: &IndexedGraph, minter: &Minter, spec: &BinningSpec) -> Result<Augmentation, BinningError> {
    let statements: Vec<&LiteralStatement> = group.statements().iter().collect();
    let mut warnings = Vec::new();
    let values: Vec<Option<f64>> = statements
        .iter()
        .map(|st| match st.object.as_literal().map(parse_date) {
            Some(Ok(d)) => Some(to_unix_timestamp(&d) as f64),
            Some(Err(e)) => {
                warnings.push(format!("{}: {e}; TRANSFORM fallback", group.predicate_iri()));
                None
            }
            None => None,
        })
        .collect();
    let namer = BinNamer {
        minter,
        scope: String::new(),
    };
    let (mut aug, _) = bin_statements(group, &statements, &values, graph, &namer, spec, None)?;
    aug.warnings.extend(warnings);
    aug.details = json!({ "layouts": [aug.details.take()] });
    Ok(aug)
}

/// The five feature local names of a date: weekday, day, month, quarter, year.
pub fn datfeat(date: &CalendarDate) -> [String; 5] {
    [
        date.weekday().to_string(),
        format!("day{}", date.day),
        format!("month{}", date.month),
        format!("quarter{}", date.quarter()),
        format!("year{}", date.year),
    ]
}

/// Which calendar structure links to mint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalendarLinks {
    pub next_day: bool,
    pub next_month: bool,
    pub next_year: bool,
}

impl Default for CalendarLinks {
    fn default() -> Self {
        CalendarLinks {
            next_day: true,
            next_month: true,
            next_year: false,
        }
    }
}

/// DATFEAT subject links only (five per parseable statement), without calendar structure.
///
/// Unparseable dates fall back to TRANSFORM.
pub fn datfeat_links(group: &LiteralGroup, graph: &IndexedGraph, minter: &Minter) -> Augmentation {
    let mut aug = Augmentation {
        removed: group.len(),
        ..Augmentation::default()
    };
    let mut fallback_values = BTreeSet::new();
    for st in group.statements() {
        match st.object.as_literal().map(parse_date) {
            Some(Ok(date)) => {
                for local in datfeat(&date) {
                    aug.link(graph.entity(st.subject).clone(), group.predicate_iri(), minter.global(&local), None);
                }
            }
            other => {
                if let Some(Err(e)) = other {
                    aug.warnings.push(format!("{}: {e}; TRANSFORM fallback", group.predicate_iri()));
                }
                fallback_values.insert(st.object.clone());
                fallback_value(&mut aug, graph, group.predicate_iri(), st, minter);
            }
        }
    }
    aug.fallback_entities = fallback_values.len();
    aug.finish_entities();
    aug
}

/// DATFEAT for one group, with the calendar structure among the features it uses.
pub fn emit_datfeat_triples(group: &LiteralGroup, graph: &IndexedGraph, minter: &Minter, links: CalendarLinks) -> Augmentation {
    let mut aug = datfeat_links(group, graph, minter);
    let used: Vec<&str> = aug.minted_entities.iter().map(String::as_str).collect();
    aug.structural = calendar_structure(minter.namespace(), &used, links);
    aug.finish_entities();
    aug
}

/// Structure links among the calendar feature entities in `used` (full IRIs).
///
/// `monthM inQuarter quarterQ` always; `nextDay`, `nextMonth`, `nextYear`
/// between consecutive values when enabled and both ends are used.
pub fn calendar_structure(ns: &Namespace, used: &[&str], links: CalendarLinks) -> Vec<Triple> {
    let mut days = BTreeSet::new();
    let mut months = BTreeSet::new();
    let mut years = BTreeSet::new();
    for iri in used {
        let Some(local) = iri.strip_prefix(ns.base()) else { continue };
        if let Some(n) = numbered(local, "day") {
            days.insert(n);
        } else if let Some(n) = numbered(local, "month") {
            months.insert(n);
        } else if let Some(n) = numbered(local, "year") {
            years.insert(n);
        }
    }
    let node = |local: String| Term::Iri(ns.iri(&local));
    let pred = |local: &str| Term::Iri(ns.iri(local));
    let mut out = Vec::new();
    for &m in &months {
        out.push(Triple::new(node(format!("month{m}")), pred(IN_QUARTER), node(format!("quarter{}", (m + 2) / 3))));
    }
    let mut chain = |set: &BTreeSet<i64>, prefix: &str, predicate: &str| {
        for &v in set {
            if set.contains(&(v + 1)) {
                out.push(Triple::new(node(format!("{prefix}{v}")), pred(predicate), node(format!("{prefix}{}", v + 1))));
            }
        }
    };
    if links.next_day {
        chain(&days, "day", NEXT_DAY);
    }
    if links.next_month {
        chain(&months, "month", NEXT_MONTH);
    }
    if links.next_year {
        chain(&years, "year", NEXT_YEAR);
    }
    out
}

fn numbered(local: &str, prefix: &str) -> Option<i64> {
    let digits = local.strip_prefix(prefix)?;
    if digits.is_empty() || !digits.trim_start_matches('-').bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}
