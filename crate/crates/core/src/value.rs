//! Typed literal values.
//!
//! Attribute tails are classified into dates, numbers and strings. The
//! raw lexical form is stripped of surrounding quotes and trailing
//! datatype (`^^<...>`) or language (`@en`) tags before typing.

use alloc::string::{String, ToString};
use core::cmp::Ordering;
use core::fmt;

/// Calendar date with an optional time-of-day suffix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Date {
    pub year: i32,
    pub month: u8,
    pub day: u8,
    /// Everything after the `T` (or space) separator, verbatim.
    pub time: Option<String>,
}

impl Date {
    /// Parses `[-]YYYY-MM-DD` optionally followed by `T...` or ` ...` time.
    pub fn parse(s: &str) -> Option<Date> {
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let bytes = body.as_bytes();
        if bytes.len() < 10 || bytes[4] != b'-' || bytes[7] != b'-' {
            return None;
        }
        let digits = |range: core::ops::Range<usize>| -> Option<u32> {
            let part = &body[range];
            if !part.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            part.parse().ok()
        };
        let year = digits(0..4)? as i32;
        let month = digits(5..7)? as u8;
        let day = digits(8..10)? as u8;
        if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
            return None;
        }
        let time = match &body[10..] {
            "" => None,
            rest => {
                let t = rest.strip_prefix('T').or_else(|| rest.strip_prefix(' '))?;
                let tb = t.as_bytes();
                // hh:mm at minimum
                if tb.len() < 5
                    || !tb[0].is_ascii_digit()
                    || !tb[1].is_ascii_digit()
                    || tb[2] != b':'
                    || !tb[3].is_ascii_digit()
                    || !tb[4].is_ascii_digit()
                {
                    return None;
                }
                Some(t.to_string())
            }
        };
        Some(Date {
            year: if neg { -year } else { year },
            month,
            day,
            time,
        })
    }

    /// True when both refer to the same day, and the same time if both carry one.
    pub fn same_instant(&self, other: &Date) -> bool {
        if (self.year, self.month, self.day) != (other.year, other.month, other.day) {
            return false;
        }
        match (&self.time, &other.time) {
            (Some(a), Some(b)) => a == b,
            _ => true,
        }
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.year < 0 {
            write!(f, "-{:04}-{:02}-{:02}", -self.year, self.month, self.day)?;
        } else {
            write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)?;
        }
        if let Some(t) = &self.time {
            write!(f, "T{t}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum LiteralType {
    String,
    Date,
    Number,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LiteralValue {
    String(String),
    Date(Date),
    Number(f64),
}

impl LiteralValue {
    /// Types a raw attribute value: date, then finite number, else string.
    pub fn infer(raw: &str) -> LiteralValue {
        let text = strip_literal_syntax(raw);
        if let Some(d) = Date::parse(text) {
            return LiteralValue::Date(d);
        }
        if looks_numeric(text) {
            if let Ok(n) = text.parse::<f64>() {
                if n.is_finite() {
                    return LiteralValue::Number(n);
                }
            }
        }
        LiteralValue::String(text.to_string())
    }

    pub fn kind(&self) -> LiteralType {
        match self {
            LiteralValue::String(_) => LiteralType::String,
            LiteralValue::Date(_) => LiteralType::Date,
            LiteralValue::Number(_) => LiteralType::Number,
        }
    }

    /// Canonical lexical form used for interning and as the entity label.
    pub fn canonical(&self) -> String {
        match self {
            LiteralValue::String(s) => s.clone(),
            LiteralValue::Date(d) => d.to_string(),
            LiteralValue::Number(n) => {
                // -0 and 0 intern together
                if *n == 0.0 {
                    "0".to_string()
                } else {
                    n.to_string()
                }
            }
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            LiteralValue::String(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for LiteralValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiteralValue::String(s) => write!(f, "\"{s}\""),
            other => f.write_str(&other.canonical()),
        }
    }
}

/// Rejects things like `inf`, `NaN` and hex that `f64::from_str` would accept.
fn looks_numeric(s: &str) -> bool {
    let mut seen_digit = false;
    for b in s.bytes() {
        match b {
            b'0'..=b'9' => seen_digit = true,
            b'+' | b'-' | b'.' | b'e' | b'E' => {}
            _ => return false,
        }
    }
    seen_digit
}

/// Removes one layer of surrounding double quotes plus any trailing
/// `^^datatype` or `@lang` tag after the closing quote.
pub fn strip_literal_syntax(raw: &str) -> &str {
    let Some(rest) = raw.strip_prefix('"') else {
        return raw;
    };
    match rest.rfind('"') {
        Some(end) => {
            let tail = &rest[end + 1..];
            if tail.is_empty() || tail.starts_with("^^") || tail.starts_with('@') {
                &rest[..end]
            } else {
                raw
            }
        }
        None => raw,
    }
}

pub(crate) fn cmp_f64(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}
