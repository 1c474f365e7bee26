use serde::{Deserialize, Serialize};

use super::parse::{parse_label, parse_list, parse_relation, parse_yes_no};
use super::template::{
    TemplateSet, DETECT_EVENT, DETECT_SUBEVENT, EXTRACT_TIMELINE, INFER_RELATION, LABEL_EVENTS,
    SYNTHESIZE_LABEL, VERIFY_TIMELINE,
};
use super::{CompletionBackend, CompletionRequest, LlmError};
use crate::corpus::Document;
use crate::model::TimeSpec;

/// An extracted event before it gets an id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledEvent {
    pub sentence: String,
    pub label: String,
    pub time: TimeSpec,
}

impl LabeledEvent {
    /// The label with its time in parentheses, as shown to the model.
    pub fn display(&self) -> String {
        display(&self.label, &self.time)
    }
}

fn display(label: &str, time: &TimeSpec) -> String {
    if time.is_known() {
        format!("{label} ({time})")
    } else {
        label.to_owned()
    }
}

/// The prompted sub-tasks of the mining pipeline over one backend.
#[derive(Clone, Copy)]
pub struct LlmTasks<'a> {
    backend: &'a dyn CompletionBackend,
    templates: &'a TemplateSet,
}

fn check_timespan(timespan: &TimeSpec) -> Result<(), LlmError> {
    timespan.check().map_err(LlmError::InvalidTimespan)?;
    if !timespan.is_known() {
        return Err(LlmError::InvalidTimespan("timespan is unknown".into()));
    }
    Ok(())
}

impl<'a> LlmTasks<'a> {
    pub fn new(backend: &'a dyn CompletionBackend, templates: &'a TemplateSet) -> Self {
        Self { backend, templates }
    }

    pub fn backend(&self) -> &'a dyn CompletionBackend {
        self.backend
    }

    fn ask(&self, template: &str, vars: &[(&str, &str)]) -> Result<String, LlmError> {
        let prompt = self.templates.get(template)?.render(vars)?;
        self.backend.complete(&CompletionRequest {
            template: template.to_owned(),
            prompt,
        })
    }

    /// Whether the document is clearly about `event`. With a parent event the
    /// sub-event prompt is used, which names the parent for disambiguation.
    pub fn detect_event(
        &self,
        document: &Document,
        event: &str,
        timespan: &TimeSpec,
        parent: Option<&str>,
    ) -> Result<bool, LlmError> {
        if document.body.trim().is_empty() {
            return Err(LlmError::EmptyDocument);
        }
        check_timespan(timespan)?;
        let text = document.text();
        let span = timespan.to_string();
        let answer = match parent {
            None => self.ask(DETECT_EVENT, &[("document", &text), ("event", event), ("timespan", &span)])?,
            Some(p) => self.ask(
                DETECT_SUBEVENT,
                &[("document", &text), ("event", event), ("parent_event", p), ("timespan", &span)],
            )?,
        };
        parse_yes_no(&answer)
    }

    pub fn extract_timeline_raw(&self, document: &Document, event: &str) -> Result<Vec<String>, LlmError> {
        if document.body.trim().is_empty() {
            return Err(LlmError::EmptyDocument);
        }
        let answer = self.ask(EXTRACT_TIMELINE, &[("document", &document.text()), ("event", event)])?;
        let parsed = parse_list(&answer)?;
        for line in &parsed.dropped {
            tracing::warn!(document = %document.id, %line, "dropped non-list line from timeline");
        }
        Ok(parsed.items)
    }

    /// Labels each sentence with one completion per sentence.
    pub fn label_events(&self, sentences: &[String]) -> Result<Vec<LabeledEvent>, LlmError> {
        if sentences.is_empty() {
            return Err(LlmError::EmptyInput);
        }
        sentences
            .iter()
            .map(|s| {
                let answer = self.ask(LABEL_EVENTS, &[("event", s)])?;
                let (label, time) = match parse_label(&answer) {
                    Ok(lt) => lt,
                    Err(_) => {
                        tracing::warn!(sentence = %s, "empty label answer, using the sentence");
                        (s.clone(), TimeSpec::unknown())
                    }
                };
                Ok(LabeledEvent {
                    sentence: s.clone(),
                    label,
                    time,
                })
            })
            .collect()
    }

    /// Keeps events that the model confirms are in the document and whose time
    /// is not outside the timespan. Unknown times are kept. The time check runs
    /// first so out-of-span events cost no completion.
    pub fn verify_timeline(
        &self,
        events: &[LabeledEvent],
        document: &Document,
        timespan: &TimeSpec,
    ) -> Result<Vec<LabeledEvent>, LlmError> {
        check_timespan(timespan)?;
        let text = document.text();
        let mut kept = Vec::with_capacity(events.len());
        for event in events {
            if timespan.overlaps(&event.time) == Some(false) {
                tracing::debug!(label = %event.label, "event outside timespan");
                continue;
            }
            let answer = self.ask(VERIFY_TIMELINE, &[("document", &text), ("event", &event.display())])?;
            match parse_yes_no(&answer) {
                Ok(true) => kept.push(event.clone()),
                Ok(false) => tracing::debug!(label = %event.label, "event not confirmed"),
                Err(e) => tracing::warn!(label = %event.label, error = %e, "dropping event with unclear verification"),
            }
        }
        Ok(kept)
    }

    /// One label for a cluster. A single member is returned unchanged; the time
    /// is always the hull of the member times.
    pub fn synthesize_label(&self, members: &[(String, TimeSpec)]) -> Result<(String, TimeSpec), LlmError> {
        let time = TimeSpec::hull(members.iter().map(|(_, t)| t));
        match members {
            [] => Err(LlmError::EmptyInput),
            [(label, t)] => Ok((label.clone(), t.clone())),
            _ => {
                let labels = members
                    .iter()
                    .map(|(l, t)| format!("- {}", display(l, t)))
                    .collect::<Vec<_>>()
                    .join("\n");
                let answer = self.ask(SYNTHESIZE_LABEL, &[("labels", &labels)])?;
                let (label, _) = parse_label(&answer)?;
                Ok((label, time))
            }
        }
    }

    /// Asks which of `candidates` holds from `a` to `b`. Identical events never
    /// relate.
    pub fn infer_relation(
        &self,
        a: &LabeledEventRef<'_>,
        b: &LabeledEventRef<'_>,
        candidates: &[String],
    ) -> Result<Option<String>, LlmError> {
        if a == b || candidates.is_empty() {
            return Ok(None);
        }
        let answer = self.ask(
            INFER_RELATION,
            &[
                ("event_a", &display(a.label, a.time)),
                ("event_b", &display(b.label, b.time)),
                ("candidates", &candidates.join(", ")),
            ],
        )?;
        parse_relation(&answer, candidates)
    }
}

/// Borrowed label and time of an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledEventRef<'a> {
    pub label: &'a str,
    pub time: &'a TimeSpec,
}
