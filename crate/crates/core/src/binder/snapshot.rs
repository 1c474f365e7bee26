use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::score::{ScoreParams, Scorer};
use super::{BindError, KgSource};
use crate::model::{ImportedTriple, KgCandidate, TimeSpec};
use crate::semantics::EmbeddingBackend;

/// A statement about an entity, optionally attributed to a viewpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KgClaim {
    pub predicate: String,
    pub object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribution: Option<String>,
}

mod time_text {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::model::TimeSpec;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Text(String),
        Spec(TimeSpec),
    }

    pub fn serialize<S: Serializer>(t: &Option<TimeSpec>, s: S) -> Result<S::Ok, S::Error> {
        match t {
            Some(t) => s.serialize_str(&t.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<TimeSpec>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Spec(t)) => Ok(Some(t)),
            Some(Repr::Text(text)) => TimeSpec::parse(&text)
                .map(Some)
                .ok_or_else(|| D::Error::custom(format!("unparseable time {text:?}"))),
        }
    }
}

pub const PART_OF: &str = "part of";
pub const HAS_PART: &str = "has part";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KgEntity {
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
    #[serde(default)]
    pub description: String,
    /// Written as a time string ("2003-03-20 to 2011-12-18") in snapshot files.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "time_text")]
    pub time: Option<TimeSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub claims: Vec<KgClaim>,
}

impl KgEntity {
    /// Events this entity is part of.
    pub fn parents(&self) -> impl Iterator<Item = &str> {
        self.claims
            .iter()
            .filter(|c| c.predicate == PART_OF)
            .map(|c| c.object.as_str())
    }

    /// The triples imported for a bound event: label, time and part-of /
    /// has-part links.
    pub fn import(&self, id: &str) -> Vec<ImportedTriple> {
        let mut out = vec![ImportedTriple {
            subject: id.to_owned(),
            predicate: "label".to_owned(),
            object: self.label.clone(),
            attribution: None,
        }];
        if let Some(t) = &self.time {
            out.push(ImportedTriple {
                subject: id.to_owned(),
                predicate: "time".to_owned(),
                object: t.to_string(),
                attribution: None,
            });
        }
        out.extend(
            self.claims
                .iter()
                .filter(|c| c.predicate == PART_OF || c.predicate == HAS_PART)
                .map(|c| ImportedTriple {
                    subject: id.to_owned(),
                    predicate: c.predicate.clone(),
                    object: c.object.clone(),
                    attribution: c.attribution.clone(),
                }),
        );
        out
    }
}

/// Offline stand-in for the knowledge graph. Anything not in it is a miss.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KgSnapshot {
    pub entities: BTreeMap<String, KgEntity>,
}

impl KgSnapshot {
    pub fn from_json(text: &str) -> Result<Self, BindError> {
        serde_json::from_str(text).map_err(|e| BindError::Snapshot(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, BindError> {
        let text = std::fs::read_to_string(path).map_err(|e| BindError::Snapshot(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

pub struct SnapshotSource<'a> {
    snapshot: &'a KgSnapshot,
    scorer: Scorer<'a>,
}

impl<'a> SnapshotSource<'a> {
    pub fn new(snapshot: &'a KgSnapshot, embed: Option<&'a dyn EmbeddingBackend>, params: ScoreParams) -> Self {
        Self {
            snapshot,
            scorer: Scorer { embed, params },
        }
    }
}

impl KgSource for SnapshotSource<'_> {
    fn search(&self, label: &str, time: &TimeSpec) -> Result<Vec<KgCandidate>, BindError> {
        if label.trim().is_empty() {
            return Err(BindError::EmptyLabel);
        }
        Ok(self
            .scorer
            .rank(label, time, self.snapshot.entities.iter().map(|(k, v)| (k.as_str(), v))))
    }

    fn entity(&self, kg_id: &str) -> Result<Option<KgEntity>, BindError> {
        Ok(self.snapshot.entities.get(kg_id).cloned())
    }
}
