//! Narrative relation vocabulary and its category hierarchy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Temporal,
    Contingency,
    Association,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Temporal, Category::Contingency, Category::Association];

    /// Categories strictly implied by this one. A causal link is always also
    /// temporal and associative, but an association implies nothing further.
    pub fn implications(self) -> BTreeSet<Category> {
        match self {
            Category::Contingency => [Category::Temporal, Category::Association].into(),
            Category::Temporal => [Category::Association].into(),
            Category::Association => BTreeSet::new(),
        }
    }

    /// `self` equals `other` or implies it.
    pub fn entails(self, other: Category) -> bool {
        self == other || self.implications().contains(&other)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Reading direction of an edge `⟨src, p, dst⟩` along the time axis.
///
/// `Forward` means `src` precedes `dst` ("before", "lead to"), `Backward`
/// means `src` follows `dst` ("after", "caused by").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
    Unordered,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationPredicate {
    pub label: String,
    pub category: Category,
    #[serde(default = "unordered")]
    pub direction: Direction,
}

fn unordered() -> Direction {
    Direction::Unordered
}

impl RelationPredicate {
    pub fn new(label: impl Into<String>, category: Category, direction: Direction) -> Self {
        Self {
            label: label.into(),
            category,
            direction,
        }
    }
}

pub const HAPPENED_AFTER: &str = "happened after";

/// Role and property labels allowed on factual edges and participant roles.
pub const DEFAULT_FACTUAL: [&str; 7] = [
    "participant",
    "agent",
    "target",
    "location",
    "time",
    "part of",
    "has part",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RelationEntry {
    Narrative(RelationPredicate),
    Factual { label: String },
}

impl RelationEntry {
    pub fn label(&self) -> &str {
        match self {
            RelationEntry::Narrative(p) => &p.label,
            RelationEntry::Factual { label } => label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("relation label {0:?} is already registered")]
    Duplicate(String),
    #[error("relation label must not be empty")]
    EmptyLabel,
}

/// Registered narrative predicates and factual relation labels. Labels are
/// unique across both kinds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationRegistry {
    narrative: BTreeMap<String, RelationPredicate>,
    factual: BTreeSet<String>,
}

impl Default for RelationRegistry {
    fn default() -> Self {
        use Category::*;
        use Direction::*;
        let mut reg = Self::empty();
        for p in [
            RelationPredicate::new("before", Temporal, Forward),
            RelationPredicate::new("after", Temporal, Backward),
            RelationPredicate::new("during", Temporal, Unordered),
            RelationPredicate::new(HAPPENED_AFTER, Temporal, Backward),
            RelationPredicate::new("caused by", Contingency, Backward),
            RelationPredicate::new("lead to", Contingency, Forward),
            RelationPredicate::new("has effect", Contingency, Forward),
            RelationPredicate::new("associated with", Association, Unordered),
        ] {
            reg.register(p).expect("default labels are distinct");
        }
        for label in DEFAULT_FACTUAL {
            reg.register_factual(label).expect("default labels are distinct");
        }
        reg
    }
}

impl RelationRegistry {
    pub fn empty() -> Self {
        Self {
            narrative: BTreeMap::new(),
            factual: BTreeSet::new(),
        }
    }

    fn check_free(&self, label: &str) -> Result<(), RegistryError> {
        if label.trim().is_empty() {
            return Err(RegistryError::EmptyLabel);
        }
        if self.narrative.contains_key(label) || self.factual.contains(label) {
            return Err(RegistryError::Duplicate(label.to_owned()));
        }
        Ok(())
    }

    pub fn register(&mut self, predicate: RelationPredicate) -> Result<(), RegistryError> {
        self.check_free(&predicate.label)?;
        self.narrative.insert(predicate.label.clone(), predicate);
        Ok(())
    }

    pub fn register_factual(&mut self, label: impl Into<String>) -> Result<(), RegistryError> {
        let label = label.into();
        self.check_free(&label)?;
        self.factual.insert(label);
        Ok(())
    }

    /// Inserts or replaces an entry. Used when loading config, where the user
    /// may redefine a default predicate's category.
    pub fn upsert(&mut self, entry: RelationEntry) -> Result<(), RegistryError> {
        let label = entry.label().to_owned();
        self.narrative.remove(&label);
        self.factual.remove(&label);
        match entry {
            RelationEntry::Narrative(p) => self.register(p),
            RelationEntry::Factual { label } => self.register_factual(label),
        }
    }

    pub fn predicate(&self, label: &str) -> Option<&RelationPredicate> {
        self.narrative.get(label)
    }

    pub fn is_factual(&self, label: &str) -> bool {
        self.factual.contains(label)
    }

    pub fn predicates(&self) -> impl Iterator<Item = &RelationPredicate> {
        self.narrative.values()
    }

    pub fn factual_labels(&self) -> impl Iterator<Item = &str> {
        self.factual.iter().map(String::as_str)
    }

    /// All entries sorted by label.
    pub fn entries(&self) -> Vec<RelationEntry> {
        let mut out: Vec<RelationEntry> = self
            .narrative
            .values()
            .cloned()
            .map(RelationEntry::Narrative)
            .chain(self.factual.iter().map(|l| RelationEntry::Factual { label: l.clone() }))
            .collect();
        out.sort_by(|a, b| a.label().cmp(b.label()));
        out
    }

    pub fn from_entries(entries: impl IntoIterator<Item = RelationEntry>) -> Result<Self, RegistryError> {
        let mut reg = Self::empty();
        for e in entries {
            match e {
                RelationEntry::Narrative(p) => reg.register(p)?,
                RelationEntry::Factual { label } => reg.register_factual(label)?,
            }
        }
        Ok(reg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hierarchy_is_one_way() {
        use Category::*;
        assert_eq!(Contingency.implications(), [Temporal, Association].into());
        assert_eq!(Temporal.implications(), [Association].into());
        assert!(Association.implications().is_empty());
        for c in Category::ALL {
            assert!(!c.implications().contains(&Contingency));
            assert!(!c.implications().contains(&c));
        }
    }

    #[test]
    fn default_registry() {
        let reg = RelationRegistry::default();
        let after = reg.predicate(HAPPENED_AFTER).unwrap();
        assert_eq!(after.category, Category::Temporal);
        assert_eq!(after.direction, Direction::Backward);
        assert_eq!(reg.predicate("caused by").unwrap().category, Category::Contingency);
        assert!(reg.predicate("casued by").is_none());
        assert!(reg.is_factual("participant"));
        assert_eq!(reg.predicates().count(), 8);
    }

    #[test]
    fn labels_unique_across_kinds() {
        let mut reg = RelationRegistry::default();
        assert_eq!(
            reg.register_factual("before"),
            Err(RegistryError::Duplicate("before".into()))
        );
        assert_eq!(
            reg.register(RelationPredicate::new("agent", Category::Association, Direction::Unordered)),
            Err(RegistryError::Duplicate("agent".into()))
        );
        assert_eq!(reg.register_factual("  "), Err(RegistryError::EmptyLabel));
    }

    #[test]
    fn entries_round_trip() {
        let reg = RelationRegistry::default();
        let back = RelationRegistry::from_entries(reg.entries()).unwrap();
        assert_eq!(reg, back);
    }

    #[test]
    fn upsert_replaces_category() {
        let mut reg = RelationRegistry::default();
        reg.upsert(RelationEntry::Narrative(RelationPredicate::new(
            "during",
            Category::Association,
            Direction::Unordered,
        )))
        .unwrap();
        assert_eq!(reg.predicate("during").unwrap().category, Category::Association);
    }
}
