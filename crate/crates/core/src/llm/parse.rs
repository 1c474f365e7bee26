//! Parsing of free-text model answers.

use crate::model::TimeSpec;

use super::LlmError;

fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
}

/// Reduces an answer to yes or no. The first word decides; otherwise the
/// answer must contain exactly one of the two words.
pub fn parse_yes_no(answer: &str) -> Result<bool, LlmError> {
    let first = words(answer).next();
    match first.as_deref() {
        Some("yes") => return Ok(true),
        Some("no") => return Ok(false),
        _ => {}
    }
    let (mut yes, mut no) = (false, false);
    for w in words(answer) {
        yes |= w == "yes";
        no |= w == "no";
    }
    match (yes, no) {
        (true, false) => Ok(true),
        (false, true) => Ok(false),
        _ => Err(LlmError::UnparseableAnswer(answer.chars().take(120).collect())),
    }
}

/// Strips a list marker (`-`, `*`, `•`, `1.`, `2)`, `(3)`, `Event 4:`).
/// Returns `None` when the line has no marker.
pub fn strip_marker(line: &str) -> Option<&str> {
    let line = line.trim_start();
    for bullet in ['-', '*', '•', '·', '–'] {
        if let Some(rest) = line.strip_prefix(bullet) {
            if rest.starts_with(char::is_whitespace) {
                return Some(rest.trim());
            }
        }
    }
    let rest = line.strip_prefix('(').unwrap_or(line);
    let digits = rest.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 && digits <= 3 {
        let after = &rest[digits..];
        for sep in [".", ")", ":"] {
            if let Some(tail) = after.strip_prefix(sep) {
                if tail.is_empty() || tail.starts_with(char::is_whitespace) {
                    return Some(tail.trim());
                }
            }
        }
    }
    let lower = line.to_ascii_lowercase();
    if let Some(rest) = lower.strip_prefix("event ") {
        let digits = rest.chars().take_while(char::is_ascii_digit).count();
        if digits > 0 && rest[digits..].starts_with(':') {
            return Some(line[6 + digits + 1..].trim());
        }
    }
    None
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    for (open, close) in [('"', '"'), ('\'', '\''), ('“', '”')] {
        if let Some(inner) = s.strip_prefix(open).and_then(|r| r.strip_suffix(close)) {
            return inner.trim();
        }
    }
    s
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ListParse {
    pub items: Vec<String>,
    /// Lines that were not taken as items.
    pub dropped: Vec<String>,
}

const NEGATIVE: [&str; 6] = [
    "none",
    "n/a",
    "no events",
    "no major events",
    "there are no",
    "the article does not",
];

fn is_negative(item: &str) -> bool {
    let lower = item.to_lowercase();
    let lower = lower.trim_end_matches('.');
    NEGATIVE.iter().any(|n| lower == *n || lower.starts_with(n))
}

/// Parses a list answer line by line. When any line carries a list marker,
/// only marked lines count; otherwise every line counts except preamble lines
/// ending in a colon.
pub fn parse_list(answer: &str) -> Result<ListParse, LlmError> {
    let lines: Vec<&str> = answer.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let any_marked = lines.iter().any(|l| strip_marker(l).is_some());
    let mut out = ListParse::default();
    for line in lines {
        let item = if any_marked {
            strip_marker(line)
        } else if line.ends_with(':') {
            None
        } else {
            Some(line)
        };
        match item.map(unquote) {
            Some(i) if !i.is_empty() => out.items.push(i.to_owned()),
            _ => out.dropped.push(line.to_owned()),
        }
    }
    if out.items.is_empty() || out.items.iter().all(|i| is_negative(i)) {
        return Err(LlmError::EmptyTimeline);
    }
    Ok(out)
}

const UNKNOWN_TIME: [&str; 6] = ["unknown", "unknown time", "date unknown", "n/a", "no date", "time unknown"];

/// Splits a labelling answer into a label and its time.
///
/// A trailing `(time)` is removed from the label. A leading `time:` or a
/// trailing `, time` sets the time but leaves the label as written. Anything
/// else has unknown time.
pub fn parse_label(answer: &str) -> Result<(String, TimeSpec), LlmError> {
    let line = answer
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .ok_or_else(|| LlmError::UnparseableAnswer(answer.to_owned()))?;
    let line = match line.rfind(" -- ") {
        Some(i) => &line[i + 4..],
        None => line,
    };
    let line = unquote(strip_marker(line).unwrap_or(line));
    if line.is_empty() {
        return Err(LlmError::UnparseableAnswer(answer.to_owned()));
    }

    if let Some(open) = line.strip_suffix(')').and_then(|l| l.rfind('(')) {
        let inner = line[open + 1..line.len() - 1].trim();
        let head = unquote(line[..open].trim());
        if !head.is_empty() {
            if let Some(t) = TimeSpec::parse(inner) {
                return Ok((head.to_owned(), t));
            }
            if UNKNOWN_TIME.contains(&inner.to_lowercase().as_str()) {
                return Ok((head.to_owned(), TimeSpec::unknown()));
            }
        }
    }
    if let Some((head, _)) = line.split_once(':') {
        if let Some(t) = TimeSpec::parse(head) {
            return Ok((line.to_owned(), t));
        }
    }
    if let Some((_, tail)) = line.rsplit_once(", ") {
        if let Some(t) = TimeSpec::parse(tail) {
            return Ok((line.to_owned(), t));
        }
    }
    Ok((line.to_owned(), TimeSpec::unknown()))
}

/// Normalizes a relation answer. `Ok(None)` for "none"; an error when the
/// answer names something outside `candidates`.
pub fn parse_relation(answer: &str, candidates: &[String]) -> Result<Option<String>, LlmError> {
    let first = answer.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    let norm = unquote(first)
        .trim_end_matches('.')
        .trim()
        .to_lowercase();
    let norm = norm.split_whitespace().collect::<Vec<_>>().join(" ");
    if norm.is_empty() || norm == "none" || norm == "no relationship" {
        return Ok(None);
    }
    candidates
        .iter()
        .find(|c| c.to_lowercase() == norm)
        .map(|c| Some(c.clone()))
        .ok_or(LlmError::UnknownPredicate(norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn yes_no() {
        assert!(parse_yes_no("Yes.").unwrap());
        assert!(!parse_yes_no("no, it is about the Gulf War").unwrap());
        assert!(parse_yes_no("The answer is yes").unwrap());
        assert!(parse_yes_no("maybe").is_err());
        assert!(parse_yes_no("yes and no... hard to say").unwrap());
        assert!(parse_yes_no("I'd say yes but also no").is_err());
    }

    #[test]
    fn bullets_and_numbers() {
        let r = parse_list("Here are the events:\n1. First thing\n2) Second thing\n- Third\n* \"Fourth\"\n(5) Fifth\nEvent 6: Sixth\nClosing remark").unwrap();
        assert_eq!(r.items, vec!["First thing", "Second thing", "Third", "Fourth", "Fifth", "Sixth"]);
        assert_eq!(r.dropped, vec!["Here are the events:", "Closing remark"]);
    }

    #[test]
    fn unmarked_lines() {
        let r = parse_list("Events:\nA happened.\nB happened.").unwrap();
        assert_eq!(r.items, vec!["A happened.", "B happened."]);
        assert_eq!(r.dropped, vec!["Events:"]);
    }

    #[test]
    fn negative_answers() {
        assert_eq!(parse_list("None."), Err(LlmError::EmptyTimeline));
        assert_eq!(parse_list("  \n"), Err(LlmError::EmptyTimeline));
        assert_eq!(parse_list("There are no events related to this."), Err(LlmError::EmptyTimeline));
        assert_eq!(parse_list("Events:"), Err(LlmError::EmptyTimeline));
    }

    #[test]
    fn numbers_in_text_are_not_markers() {
        assert_eq!(strip_marker("2003 was the year"), None);
        assert_eq!(strip_marker("9/11 attacks"), None);
        assert_eq!(strip_marker("-5 degrees"), None);
    }

    #[test]
    fn labels() {
        assert_eq!(
            parse_label("Abu Ghraib Prison Abuse Scandal (2004)").unwrap(),
            ("Abu Ghraib Prison Abuse Scandal".into(), TimeSpec::year(2004))
        );
        assert_eq!(
            parse_label("The prisoners were abused. -- Abu Ghraib Prison Abuse Scandal (April 2004)").unwrap(),
            ("Abu Ghraib Prison Abuse Scandal".into(), TimeSpec::month(2004, 4).unwrap())
        );
        let (label, time) = parse_label("May 2017: High Court Rules in Favor of Prosecution").unwrap();
        assert_eq!(label, "May 2017: High Court Rules in Favor of Prosecution");
        assert_eq!(time, TimeSpec::month(2017, 5).unwrap());
        let (label, time) = parse_label("US and Iraqi Forces Launch Offensives in Fallujah, 2004").unwrap();
        assert_eq!(label, "US and Iraqi Forces Launch Offensives in Fallujah, 2004");
        assert_eq!(time, TimeSpec::year(2004));
        assert_eq!(
            parse_label("Ceasefire Agreed (unknown)").unwrap(),
            ("Ceasefire Agreed".into(), TimeSpec::unknown())
        );
        assert_eq!(
            parse_label("Operation Iraqi Freedom (OIF)").unwrap(),
            ("Operation Iraqi Freedom (OIF)".into(), TimeSpec::unknown())
        );
        assert_eq!(
            parse_label("Protests Against the War").unwrap().1,
            TimeSpec::unknown()
        );
        assert!(parse_label("   ").is_err());
    }

    #[test]
    fn relations() {
        let c = vec!["happened after".to_string()];
        assert_eq!(parse_relation("Happened after.", &c).unwrap().as_deref(), Some("happened after"));
        assert_eq!(parse_relation("\"happened  after\"", &c).unwrap().as_deref(), Some("happened after"));
        assert_eq!(parse_relation("none", &c).unwrap(), None);
        assert_eq!(parse_relation("caused by", &c), Err(LlmError::UnknownPredicate("caused by".into())));
    }
}
