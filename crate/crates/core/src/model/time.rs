//! Calendar time attached to events.
//!
//! Dates are stored truncated to the first day of their granularity period,
//! so `2003` at year granularity is stored as `2003-01-01`. [`TimeSpec::range`]
//! expands a spec back into the closed day range it covers.

use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeKind {
    Instant,
    Interval,
    Year,
    Unknown,
}

/// Ordered from finest to coarsest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Day,
    Month,
    Year,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeSpec {
    pub kind: TimeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<NaiveDate>,
    pub granularity: Granularity,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self::unknown()
    }
}

fn ymd(year: i32, month: u32, day: u32) -> Option<NaiveDate> {
    NaiveDate::from_ymd_opt(year, month, day)
}

fn floor(date: NaiveDate, granularity: Granularity) -> NaiveDate {
    match granularity {
        Granularity::Day => date,
        Granularity::Month => date.with_day(1).expect("day 1 exists"),
        Granularity::Year => ymd(date.year(), 1, 1).expect("january 1st exists"),
    }
}

fn period_end(date: NaiveDate, granularity: Granularity) -> NaiveDate {
    match granularity {
        Granularity::Day => date,
        Granularity::Month => {
            let (y, m) = if date.month() == 12 {
                (date.year() + 1, 1)
            } else {
                (date.year(), date.month() + 1)
            };
            ymd(y, m, 1).expect("valid month").pred_opt().expect("has predecessor")
        }
        Granularity::Year => ymd(date.year(), 12, 31).expect("december 31st exists"),
    }
}

impl TimeSpec {
    pub fn unknown() -> Self {
        Self {
            kind: TimeKind::Unknown,
            start: None,
            end: None,
            granularity: Granularity::Year,
        }
    }

    pub fn year(year: i32) -> Self {
        Self {
            kind: TimeKind::Year,
            start: ymd(year, 1, 1),
            end: None,
            granularity: Granularity::Year,
        }
    }

    /// A single month, e.g. "May 2003".
    pub fn month(year: i32, month: u32) -> Option<Self> {
        Some(Self {
            kind: TimeKind::Instant,
            start: Some(ymd(year, month, 1)?),
            end: None,
            granularity: Granularity::Month,
        })
    }

    pub fn day(date: NaiveDate) -> Self {
        Self {
            kind: TimeKind::Instant,
            start: Some(date),
            end: None,
            granularity: Granularity::Day,
        }
    }

    pub fn ymd(year: i32, month: u32, day: u32) -> Option<Self> {
        ymd(year, month, day).map(Self::day)
    }

    /// Interval between two dates, truncated to `granularity`.
    pub fn interval(start: NaiveDate, end: NaiveDate, granularity: Granularity) -> Option<Self> {
        let (start, end) = (floor(start, granularity), floor(end, granularity));
        (start <= end).then_some(Self {
            kind: TimeKind::Interval,
            start: Some(start),
            end: Some(end),
            granularity,
        })
    }

    pub fn years(first: i32, last: i32) -> Option<Self> {
        Self::interval(ymd(first, 1, 1)?, ymd(last, 1, 1)?, Granularity::Year)
    }

    pub fn is_known(&self) -> bool {
        self.kind != TimeKind::Unknown && self.start.is_some()
    }

    /// Closed day range covered by this spec; `None` for unknown times.
    pub fn range(&self) -> Option<(NaiveDate, NaiveDate)> {
        if self.kind == TimeKind::Unknown {
            return None;
        }
        let start = self.start?;
        let end = self.end.unwrap_or(start);
        Some((
            floor(start, self.granularity),
            period_end(end, self.granularity),
        ))
    }

    /// Whether `other` lies entirely within this spec. `None` when either is unknown.
    pub fn contains(&self, other: &TimeSpec) -> Option<bool> {
        let (a0, a1) = self.range()?;
        let (b0, b1) = other.range()?;
        Some(a0 <= b0 && b1 <= a1)
    }

    pub fn overlaps(&self, other: &TimeSpec) -> Option<bool> {
        let (a0, a1) = self.range()?;
        let (b0, b1) = other.range()?;
        Some(a0 <= b1 && b0 <= a1)
    }

    /// Sort key placing known times chronologically and unknown times last.
    pub fn sort_key(&self) -> (bool, Option<NaiveDate>, Option<NaiveDate>) {
        match self.range() {
            Some((s, e)) => (false, Some(s), Some(e)),
            None => (true, None, None),
        }
    }

    /// Smallest spec covering every known member. Unknown members are ignored;
    /// the hull of only unknown times is unknown. The result uses the coarsest
    /// member granularity.
    pub fn hull<'a>(specs: impl IntoIterator<Item = &'a TimeSpec>) -> TimeSpec {
        let mut bounds: Option<(NaiveDate, NaiveDate)> = None;
        let mut granularity = Granularity::Day;
        for spec in specs {
            let Some((s, e)) = spec.range() else { continue };
            granularity = granularity.max(spec.granularity);
            bounds = Some(match bounds {
                None => (s, e),
                Some((lo, hi)) => (lo.min(s), hi.max(e)),
            });
        }
        let Some((lo, hi)) = bounds else {
            return TimeSpec::unknown();
        };
        let (start, end) = (floor(lo, granularity), floor(hi, granularity));
        if start == end {
            TimeSpec {
                kind: if granularity == Granularity::Year {
                    TimeKind::Year
                } else {
                    TimeKind::Instant
                },
                start: Some(start),
                end: None,
                granularity,
            }
        } else {
            TimeSpec {
                kind: TimeKind::Interval,
                start: Some(start),
                end: Some(end),
                granularity,
            }
        }
    }

    /// Checks the structural invariants of the kind/start/end combination.
    pub fn check(&self) -> Result<(), String> {
        match self.kind {
            TimeKind::Unknown if self.start.is_some() || self.end.is_some() => {
                Err("unknown time must not carry dates".into())
            }
            TimeKind::Unknown => Ok(()),
            TimeKind::Interval => match (self.start, self.end) {
                (Some(s), Some(e)) if s <= e => Ok(()),
                (Some(_), Some(_)) => Err("interval start is after its end".into()),
                _ => Err("interval needs both start and end".into()),
            },
            TimeKind::Instant | TimeKind::Year => match (self.start, self.end) {
                (None, _) => Err(format!("{:?} time needs a start", self.kind)),
                (Some(s), Some(e)) if s != e => {
                    Err(format!("{:?} time must not span a range", self.kind))
                }
                _ => Ok(()),
            },
        }
    }

    /// Parses a free-text time expression such as `2004`, `May 2003`,
    /// `20 March 2003`, `2003-03-20` or `2003-2011`.
    pub fn parse(text: &str) -> Option<TimeSpec> {
        let text = text
            .trim()
            .trim_matches(|c: char| c == '(' || c == ')' || c == ',' || c == ':' || c == '.')
            .trim();
        if text.is_empty() {
            return None;
        }
        if let Some(spec) = parse_single(text) {
            return Some(spec);
        }
        parse_range(text)
    }
}

const MONTHS: [&str; 12] = [
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
];

fn month_number(word: &str) -> Option<u32> {
    let word = word.trim_end_matches('.').to_ascii_lowercase();
    if word.len() < 3 {
        return None;
    }
    MONTHS
        .iter()
        .position(|m| m.starts_with(&word) && (word.len() == 3 || *m == word || word == "sept"))
        .map(|i| i as u32 + 1)
}

fn parse_year(word: &str) -> Option<i32> {
    let word = word.trim_end_matches(['s', '\'']);
    (word.len() == 4 && word.chars().all(|c| c.is_ascii_digit()))
        .then(|| word.parse().ok())
        .flatten()
}

fn parse_day(word: &str) -> Option<u32> {
    let digits = word
        .trim_end_matches(',')
        .trim_end_matches(|c: char| c.is_ascii_alphabetic());
    let day: u32 = digits.parse().ok()?;
    (1..=31).contains(&day).then_some(day)
}

const VAGUE: [&str; 6] = ["early", "mid", "late", "spring", "summer", "autumn"];

fn parse_single(text: &str) -> Option<TimeSpec> {
    // ISO forms
    if let Ok(date) = NaiveDate::parse_from_str(text, "%Y-%m-%d") {
        return Some(TimeSpec::day(date));
    }
    if let Some((y, m)) = text.split_once('-') {
        if let (Some(y), Ok(m)) = (parse_year(y), m.parse::<u32>()) {
            if m.to_string().len() <= 2 && text.len() == 7 {
                return TimeSpec::month(y, m);
            }
        }
    }
    let words: Vec<&str> = text
        .split(|c: char| c.is_whitespace() || c == ',' || c == '-' && !text.contains(' '))
        .filter(|w| !w.is_empty())
        .collect();
    let words: Vec<&str> = words
        .into_iter()
        .filter(|w| {
            let lw = w.to_ascii_lowercase();
            !VAGUE.iter().any(|v| lw.trim_end_matches('-') == *v) && lw != "of" && lw != "in"
        })
        .collect();
    match words.as_slice() {
        [y] => parse_year(y).map(TimeSpec::year),
        [m, y] => {
            let y = parse_year(y)?;
            TimeSpec::month(y, month_number(m)?)
        }
        [a, b, y] => {
            let y = parse_year(y)?;
            // "March 20 2003" or "20 March 2003"
            let (m, d) = match (month_number(a), month_number(b)) {
                (Some(m), None) => (m, parse_day(b)?),
                (None, Some(m)) => (m, parse_day(a)?),
                _ => return None,
            };
            TimeSpec::ymd(y, m, d)
        }
        _ => None,
    }
}

fn parse_range(text: &str) -> Option<TimeSpec> {
    let lower = text.to_ascii_lowercase();
    let body = lower
        .strip_prefix("between ")
        .or_else(|| lower.strip_prefix("from "))
        .unwrap_or(&lower);
    for sep in [" to ", " and ", " until ", "–", "—", " - ", "-", "/"] {
        if let Some((a, b)) = body.split_once(sep) {
            let (Some(first), Some(second)) = (parse_single(a.trim()), parse_single(b.trim()))
            else {
                continue;
            };
            let granularity = first.granularity.max(second.granularity);
            let (s, _) = first.range()?;
            let (_, e) = second.range()?;
            return TimeSpec::interval(s, e, granularity);
        }
    }
    None
}

impl fmt::Display for TimeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn one(f: &mut fmt::Formatter<'_>, d: NaiveDate, g: Granularity) -> fmt::Result {
            match g {
                Granularity::Year => write!(f, "{}", d.year()),
                Granularity::Month => {
                    let name = MONTHS[d.month0() as usize];
                    let mut chars = name.chars();
                    let first = chars.next().unwrap().to_ascii_uppercase();
                    write!(f, "{first}{} {}", chars.as_str(), d.year())
                }
                Granularity::Day => write!(f, "{}", d.format("%Y-%m-%d")),
            }
        }
        match (self.kind, self.start, self.end) {
            (TimeKind::Unknown, _, _) | (_, None, _) => f.write_str("unknown time"),
            (TimeKind::Interval, Some(s), Some(e)) => {
                one(f, s, self.granularity)?;
                f.write_str(" to ")?;
                one(f, e, self.granularity)
            }
            (_, Some(s), _) => one(f, s, self.granularity),
        }
    }
}
