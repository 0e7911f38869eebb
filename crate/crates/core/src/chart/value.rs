//! Cell values and temporal literals.

use std::cmp::Ordering;
use std::fmt;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

/// Encoding type of a column or channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldType {
    Quantitative,
    Temporal,
    Ordinal,
    Nominal,
}

impl FieldType {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "quantitative" => Some(Self::Quantitative),
            "temporal" => Some(Self::Temporal),
            "ordinal" => Some(Self::Ordinal),
            "nominal" => Some(Self::Nominal),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Quantitative => "quantitative",
            Self::Temporal => "temporal",
            Self::Ordinal => "ordinal",
            Self::Nominal => "nominal",
        }
    }
}

/// Calendar resolution, ordered coarse to fine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Year,
    Quarter,
    Month,
    Week,
    Day,
}

impl TimeUnit {
    pub const ALL: [TimeUnit; 5] = [
        TimeUnit::Year,
        TimeUnit::Quarter,
        TimeUnit::Month,
        TimeUnit::Week,
        TimeUnit::Day,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "year" => Some(Self::Year),
            "quarter" => Some(Self::Quarter),
            "month" => Some(Self::Month),
            "week" => Some(Self::Week),
            "day" | "date" | "yearmonthdate" => Some(Self::Day),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Year => "year",
            Self::Quarter => "quarter",
            Self::Month => "month",
            Self::Week => "week",
            Self::Day => "day",
        }
    }

    /// Plural noun used in spoken durations ("for 6 quarters").
    pub fn plural(self) -> &'static str {
        match self {
            Self::Year => "years",
            Self::Quarter => "quarters",
            Self::Month => "months",
            Self::Week => "weeks",
            Self::Day => "days",
        }
    }

    /// Start of the calendar bucket containing `date`. Weeks are ISO weeks (Monday start).
    pub fn bucket_start(self, date: NaiveDate) -> NaiveDate {
        match self {
            Self::Day => date,
            Self::Week => date - Duration::days(date.weekday().num_days_from_monday() as i64),
            Self::Month => NaiveDate::from_ymd_opt(date.year(), date.month(), 1).unwrap(),
            Self::Quarter => {
                let m = (date.month0() / 3) * 3 + 1;
                NaiveDate::from_ymd_opt(date.year(), m, 1).unwrap()
            }
            Self::Year => NaiveDate::from_ymd_opt(date.year(), 1, 1).unwrap(),
        }
    }
}

impl fmt::Display for TimeUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A temporal value: an epoch-ordered day number plus the label it was read from.
///
/// Quarters, months and years are anchored at their first day, so ordering by
/// `day` matches calendar order, and quarters order as (year, n).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeValue {
    /// Days since 1970-01-01.
    pub day: i64,
    pub grain: TimeUnit,
    pub label: String,
}

const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemporalError {
    #[error("invalid quarter index in {0:?}")]
    BadQuarter(String),
    #[error("not an ISO date or quarter literal: {0:?}")]
    Unrecognized(String),
}

impl TimeValue {
    pub fn from_date(date: NaiveDate, grain: TimeUnit) -> Self {
        let date = grain.bucket_start(date);
        Self {
            day: (date - epoch()).num_days(),
            grain,
            label: canonical_label(date, grain),
        }
    }

    pub fn date(&self) -> NaiveDate {
        epoch() + Duration::days(self.day)
    }

    /// Parse an ISO date (`2021-05-03`), month (`2021-05`), year (`2021`),
    /// datetime (date part kept) or quarter literal (`2020-Q2`).
    pub fn parse(raw: &str) -> Result<Self, TemporalError> {
        let s = raw.trim();
        let unrecognized = || TemporalError::Unrecognized(raw.to_string());
        if let Some((year, q)) = s.split_once("-Q").or_else(|| s.split_once("-q")) {
            let year: i32 = year.parse().map_err(|_| unrecognized())?;
            let q: u32 = q.parse().map_err(|_| unrecognized())?;
            if !(1..=4).contains(&q) {
                return Err(TemporalError::BadQuarter(raw.to_string()));
            }
            let date = NaiveDate::from_ymd_opt(year, (q - 1) * 3 + 1, 1).ok_or_else(unrecognized)?;
            return Ok(Self {
                day: (date - epoch()).num_days(),
                grain: TimeUnit::Quarter,
                label: s.to_uppercase(),
            });
        }
        let date_part = s.split(['T', ' ']).next().unwrap_or(s);
        let parts: Vec<&str> = date_part.split('-').collect();
        let num = |p: &str| -> Result<u32, TemporalError> {
            if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
                return Err(unrecognized());
            }
            p.parse().map_err(|_| unrecognized())
        };
        let (date, grain) = match parts.as_slice() {
            [y] if y.len() == 4 => (NaiveDate::from_ymd_opt(num(y)? as i32, 1, 1), TimeUnit::Year),
            [y, m] if y.len() == 4 => (NaiveDate::from_ymd_opt(num(y)? as i32, num(m)?, 1), TimeUnit::Month),
            [y, m, d] if y.len() == 4 => (NaiveDate::from_ymd_opt(num(y)? as i32, num(m)?, num(d)?), TimeUnit::Day),
            _ => (None, TimeUnit::Day),
        };
        let date = date.ok_or_else(unrecognized)?;
        Ok(Self {
            day: (date - epoch()).num_days(),
            grain,
            label: s.to_string(),
        })
    }

    /// Re-bucket at a coarser (or equal) unit. Finer units keep the native grain.
    pub fn truncate(&self, unit: TimeUnit) -> Self {
        if unit > self.grain {
            return self.clone();
        }
        Self::from_date(self.date(), unit)
    }

    /// Spoken form, e.g. "2020 Quarter 2", "May 2021", "May 3, 2021".
    pub fn spoken(&self) -> String {
        let d = self.date();
        match self.grain {
            TimeUnit::Year => format!("{}", d.year()),
            TimeUnit::Quarter => format!("{} Quarter {}", d.year(), d.month0() / 3 + 1),
            TimeUnit::Month => format!("{} {}", MONTHS[d.month0() as usize], d.year()),
            TimeUnit::Week => format!("week of {} {}, {}", MONTHS[d.month0() as usize], d.day(), d.year()),
            TimeUnit::Day => format!("{} {}, {}", MONTHS[d.month0() as usize], d.day(), d.year()),
        }
    }

    /// Compact form used in answers, e.g. "Q2 2020".
    pub fn short(&self) -> String {
        let d = self.date();
        match self.grain {
            TimeUnit::Quarter => format!("Q{} {}", d.month0() / 3 + 1, d.year()),
            TimeUnit::Month => format!("{} {}", &MONTHS[d.month0() as usize][..3], d.year()),
            TimeUnit::Week => format!("week of {} {} {}", &MONTHS[d.month0() as usize][..3], d.day(), d.year()),
            TimeUnit::Day => format!("{} {} {}", &MONTHS[d.month0() as usize][..3], d.day(), d.year()),
            TimeUnit::Year => format!("{}", d.year()),
        }
    }
}

fn canonical_label(date: NaiveDate, grain: TimeUnit) -> String {
    match grain {
        TimeUnit::Day => date.format("%Y-%m-%d").to_string(),
        TimeUnit::Week => {
            let w = date.iso_week();
            format!("{}-W{:02}", w.year(), w.week())
        }
        TimeUnit::Month => date.format("%Y-%m").to_string(),
        TimeUnit::Quarter => format!("{}-Q{}", date.year(), date.month0() / 3 + 1),
        TimeUnit::Year => format!("{}", date.year()),
    }
}

/// A single table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Null,
    Bool(bool),
    Number(f64),
    Time(TimeValue),
    Text(String),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_time(&self) -> Option<&TimeValue> {
        match self {
            Value::Time(t) => Some(t),
            _ => None,
        }
    }

    /// Total order used for grouping and sorting: nulls first, then by variant, then by content.
    pub fn total_cmp(&self, other: &Value) -> Ordering {
        fn rank(v: &Value) -> u8 {
            match v {
                Value::Null => 0,
                Value::Bool(_) => 1,
                Value::Number(_) => 2,
                Value::Time(_) => 3,
                Value::Text(_) => 4,
            }
        }
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Number(a), Value::Number(b)) => a.total_cmp(b),
            (Value::Time(a), Value::Time(b)) => a.day.cmp(&b.day).then(a.grain.cmp(&b.grain)),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            _ => rank(self).cmp(&rank(other)),
        }
    }

    /// Label without units; numbers use `decimals` places.
    pub fn label(&self, decimals: usize) -> String {
        match self {
            Value::Null => "null".into(),
            Value::Bool(b) => b.to_string(),
            Value::Number(n) => format_number(*n, decimals),
            Value::Time(t) => t.label.clone(),
            Value::Text(s) => s.clone(),
        }
    }
}

/// Fixed-point formatting with a stable representation of negative zero.
pub fn format_number(n: f64, decimals: usize) -> String {
    let s = format!("{:.*}", decimals, n);
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Number of digits after the decimal point in a numeric literal.
pub fn literal_decimals(raw: &str) -> usize {
    let mantissa = raw.split(['e', 'E']).next().unwrap_or(raw);
    mantissa.split_once('.').map_or(0, |(_, frac)| frac.len())
}

/// Round half away from zero.
pub fn round_half_away(x: f64) -> i64 {
    x.round() as i64
}
