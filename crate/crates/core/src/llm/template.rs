//! Prompt templates with `{name}` placeholders.
//!
//! `{{` and `}}` render as literal braces. Values are inserted verbatim and
//! never re-scanned, so a document containing braces is passed through
//! untouched.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const DETECT_EVENT: &str = "detect_event";
pub const DETECT_SUBEVENT: &str = "detect_subevent";
pub const EXTRACT_TIMELINE: &str = "extract_timeline";
pub const LABEL_EVENTS: &str = "label_events";
pub const VERIFY_TIMELINE: &str = "verify_timeline";
pub const SYNTHESIZE_LABEL: &str = "synthesize_label";
pub const INFER_RELATION: &str = "infer_relation";

/// Placeholder filled from the template's few-shot examples.
pub const EXAMPLES: &str = "examples";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShot {
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: String,
    pub skeleton: String,
    #[serde(default)]
    pub few_shot: Vec<FewShot>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template {template:?} has no value for placeholder {{{name}}}")]
    MissingPlaceholder { template: String, name: String },
    #[error("template {template:?} has an unclosed brace at byte {at}")]
    Unclosed { template: String, at: usize },
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("cannot load templates: {0}")]
    Load(String),
}

impl PromptTemplate {
    pub fn new(name: &str, skeleton: &str) -> Self {
        Self {
            name: name.to_owned(),
            skeleton: skeleton.to_owned(),
            few_shot: Vec::new(),
        }
    }

    /// Few-shot examples as `input -- output` lines.
    pub fn examples_block(&self) -> String {
        self.few_shot
            .iter()
            .map(|ex| format!("{} -- {}", ex.input, ex.output))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Names of all placeholders in the skeleton, in order of appearance.
    pub fn placeholders(&self) -> Result<Vec<String>, TemplateError> {
        let mut names = Vec::new();
        self.scan(|piece| {
            if let Piece::Var(name) = piece {
                names.push(name.to_owned());
            }
        })?;
        Ok(names)
    }

    pub fn render(&self, vars: &[(&str, &str)]) -> Result<String, TemplateError> {
        let examples = self.examples_block();
        let mut out = String::with_capacity(self.skeleton.len() + vars.iter().map(|v| v.1.len()).sum::<usize>());
        let mut missing = None;
        self.scan(|piece| match piece {
            Piece::Text(t) => out.push_str(t),
            Piece::Var(name) => match vars.iter().find(|(k, _)| *k == name) {
                Some((_, v)) => out.push_str(v),
                None if name == EXAMPLES => out.push_str(&examples),
                None => {
                    missing.get_or_insert_with(|| name.to_owned());
                }
            },
        })?;
        match missing {
            Some(name) => Err(TemplateError::MissingPlaceholder {
                template: self.name.clone(),
                name,
            }),
            None => Ok(out),
        }
    }

    fn scan<'s>(&'s self, mut emit: impl FnMut(Piece<'s>)) -> Result<(), TemplateError> {
        let s = self.skeleton.as_str();
        let bytes = s.as_bytes();
        let mut i = 0;
        let mut text_start = 0;
        while i < bytes.len() {
            match bytes[i] {
                b'{' if bytes.get(i + 1) == Some(&b'{') => {
                    emit(Piece::Text(&s[text_start..i + 1]));
                    i += 2;
                    text_start = i;
                }
                b'}' if bytes.get(i + 1) == Some(&b'}') => {
                    emit(Piece::Text(&s[text_start..i + 1]));
                    i += 2;
                    text_start = i;
                }
                b'{' => {
                    let close = s[i + 1..].find('}').ok_or(TemplateError::Unclosed {
                        template: self.name.clone(),
                        at: i,
                    })?;
                    let name = &s[i + 1..i + 1 + close];
                    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                        return Err(TemplateError::Unclosed {
                            template: self.name.clone(),
                            at: i,
                        });
                    }
                    emit(Piece::Text(&s[text_start..i]));
                    emit(Piece::Var(name));
                    i += close + 2;
                    text_start = i;
                }
                _ => i += 1,
            }
        }
        emit(Piece::Text(&s[text_start..]));
        Ok(())
    }
}

enum Piece<'a> {
    Text(&'a str),
    Var(&'a str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSet {
    templates: BTreeMap<String, PromptTemplate>,
}

fn shot(input: &str, output: &str) -> FewShot {
    FewShot {
        input: input.to_owned(),
        output: output.to_owned(),
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        let mut label = PromptTemplate::new(
            LABEL_EVENTS,
            "Write a short headline for the event described in the last line, \
             followed by the time it happened in parentheses. Write (unknown) if \
             the time is not given. Follow the examples.\n\n{examples}\n{event} --",
        );
        label.few_shot = vec![
            shot(
                "The Berlin Wall was opened on 9 November 1989 after weeks of protests.",
                "Fall of the Berlin Wall (November 1989)",
            ),
            shot(
                "Hurricane Katrina struck New Orleans in late August 2005, flooding most of the city.",
                "Hurricane Katrina Floods New Orleans (August 2005)",
            ),
            shot(
                "Negotiators eventually reached a ceasefire agreement.",
                "Ceasefire Agreement Reached (unknown)",
            ),
        ];
        let mut verify = PromptTemplate::new(
            VERIFY_TIMELINE,
            "Here is a news article: '{document}' Is the following event mentioned \
             in the article? Answer yes or no, as in the examples.\n\n{examples}\n{event} --",
        );
        verify.few_shot = vec![
            shot("Fall of the Berlin Wall (November 1989)", "yes"),
            shot("First Moon Landing (July 1969)", "no"),
        ];
        let templates = [
            PromptTemplate::new(
                DETECT_EVENT,
                "Here is a news article: '{document}' Is this article clearly about \
                 the {event} ({timespan})? Answer yes or no.",
            ),
            PromptTemplate::new(
                DETECT_SUBEVENT,
                "Here is a news article: '{document}' Is this article clearly about \
                 the {event}, as part of the {parent_event} ({timespan})? Answer yes or no.",
            ),
            PromptTemplate::new(
                EXTRACT_TIMELINE,
                "Here is a news article: '{document}' List the major events of the {event} \
                 in chronological order as reported in the article. Keep it consise and \
                 remove everything unrelated.",
            ),
            label,
            verify,
            PromptTemplate::new(
                SYNTHESIZE_LABEL,
                "These headlines describe the same event:\n{labels}\nWrite one short \
                 headline for this event, followed by the time it happened in parentheses.",
            ),
            PromptTemplate::new(
                INFER_RELATION,
                "Event A: {event_a}\nEvent B: {event_b}\nWhich relationship holds from \
                 event A to event B? Choose one of: {candidates}, none. Answer with the \
                 relationship only.",
            ),
        ];
        Self {
            templates: templates.into_iter().map(|t| (t.name.clone(), t)).collect(),
        }
    }
}

/// Partial override of one template, as read from a JSON file.
#[derive(Debug, Clone, Default, Deserialize)]
struct TemplateOverride {
    skeleton: Option<String>,
    few_shot: Option<Vec<FewShot>>,
}

impl TemplateSet {
    pub fn get(&self, name: &str) -> Result<&PromptTemplate, TemplateError> {
        self.templates
            .get(name)
            .ok_or_else(|| TemplateError::UnknownTemplate(name.to_owned()))
    }

    pub fn insert(&mut self, template: PromptTemplate) {
        self.templates.insert(template.name.clone(), template);
    }

    pub fn iter(&self) -> impl Iterator<Item = &PromptTemplate> {
        self.templates.values()
    }

    /// Applies overrides from JSON of the form
    /// `{"label_events": {"skeleton": "...", "few_shot": [{"input", "output"}]}}`.
    /// Names that are not built in add new templates.
    pub fn apply_overrides(&mut self, json: &str) -> Result<(), TemplateError> {
        let overrides: BTreeMap<String, TemplateOverride> =
            serde_json::from_str(json).map_err(|e| TemplateError::Load(e.to_string()))?;
        for (name, o) in overrides {
            let entry = self
                .templates
                .entry(name.clone())
                .or_insert_with(|| PromptTemplate::new(&name, ""));
            if let Some(s) = o.skeleton {
                entry.skeleton = s;
            }
            if let Some(f) = o.few_shot {
                entry.few_shot = f;
            }
            entry.placeholders()?;
        }
        Ok(())
    }

    pub fn load_overrides(&mut self, path: &Path) -> Result<(), TemplateError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TemplateError::Load(format!("{}: {e}", path.display())))?;
        self.apply_overrides(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timeline_skeleton_is_exact() {
        let set = TemplateSet::default();
        let out = set
            .get(EXTRACT_TIMELINE)
            .unwrap()
            .render(&[("document", "TEXT"), ("event", "Iraq War")])
            .unwrap();
        assert_eq!(
            out,
            "Here is a news article: 'TEXT' List the major events of the Iraq War in \
             chronological order as reported in the article. Keep it consise and remove \
             everything unrelated."
        );
    }

    #[test]
    fn values_are_not_rescanned() {
        let t = PromptTemplate::new("t", "a {x} b {{literal}}");
        assert_eq!(t.render(&[("x", "{y}")]).unwrap(), "a {y} b {literal}");
    }

    #[test]
    fn missing_and_malformed() {
        let t = PromptTemplate::new("t", "a {x} {y}");
        assert_eq!(
            t.render(&[("x", "1")]),
            Err(TemplateError::MissingPlaceholder { template: "t".into(), name: "y".into() })
        );
        assert!(matches!(
            PromptTemplate::new("t", "a {x").render(&[]),
            Err(TemplateError::Unclosed { .. })
        ));
        assert!(matches!(
            PromptTemplate::new("t", "a {x y}").render(&[]),
            Err(TemplateError::Unclosed { .. })
        ));
    }

    #[test]
    fn examples_fill_from_few_shot() {
        let set = TemplateSet::default();
        let out = set.get(LABEL_EVENTS).unwrap().render(&[("event", "S")]).unwrap();
        assert!(out.contains("-- Fall of the Berlin Wall (November 1989)\n"));
        assert!(out.ends_with("S --"));
    }

    #[test]
    fn overrides() {
        let mut set = TemplateSet::default();
        set.apply_overrides(r#"{"label_events": {"few_shot": [{"input": "i", "output": "o"}]}}"#)
            .unwrap();
        assert_eq!(set.get(LABEL_EVENTS).unwrap().examples_block(), "i -- o");
        assert!(set.apply_overrides(r#"{"x": {"skeleton": "{"}}"#).is_err());
    }
}
