//! Viewpoints as a forest of stance-holding groups.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stance {
    Valid,
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateStance {
    Valid,
    Invalid,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub id: String,
    #[serde(default)]
    pub members: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    #[serde(default)]
    pub stances: BTreeMap<String, Stance>,
}

impl Viewpoint {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            members: BTreeSet::new(),
            parent: None,
            stances: BTreeMap::new(),
        }
    }

    pub fn with_parent(mut self, parent: impl Into<String>) -> Self {
        self.parent = Some(parent.into());
        self
    }

    pub fn with_stance(mut self, claim: impl Into<String>, stance: Stance) -> Self {
        self.stances.insert(claim.into(), stance);
        self
    }
}

/// Policy deciding how viewpoints relate. Lookups of unknown ids are resolved
/// by the caller before the policy runs.
pub trait ViewpointModel: Send + Sync {
    fn compatible(&self, viewpoints: &BTreeMap<String, Viewpoint>, a: &str, b: &str) -> bool;
    fn aggregate(&self, members: &[&Viewpoint], claim: &str) -> AggregateStance;
}

/// Group forest: two viewpoints are compatible when they share an ancestor
/// (each viewpoint counts as its own ancestor). Aggregation is a strict
/// majority vote.
#[derive(Debug, Clone, Copy, Default)]
pub struct GroupHierarchy;

/// Ancestor chain from `id` up to its root, inclusive. Stops early on a
/// dangling parent or a repeated id.
pub fn ancestors<'a>(viewpoints: &'a BTreeMap<String, Viewpoint>, id: &'a str) -> Vec<&'a str> {
    let mut chain = Vec::new();
    let mut current = Some(id);
    while let Some(cur) = current {
        if chain.contains(&cur) {
            break;
        }
        chain.push(cur);
        current = viewpoints.get(cur).and_then(|v| v.parent.as_deref());
    }
    chain
}

impl ViewpointModel for GroupHierarchy {
    fn compatible(&self, viewpoints: &BTreeMap<String, Viewpoint>, a: &str, b: &str) -> bool {
        let left = ancestors(viewpoints, a);
        ancestors(viewpoints, b).iter().any(|x| left.contains(x))
    }

    fn aggregate(&self, members: &[&Viewpoint], claim: &str) -> AggregateStance {
        let (mut valid, mut invalid) = (0usize, 0usize);
        for v in members {
            match v.stances.get(claim) {
                Some(Stance::Valid) => valid += 1,
                Some(Stance::Invalid) => invalid += 1,
                None => {}
            }
        }
        match valid.cmp(&invalid) {
            std::cmp::Ordering::Greater => AggregateStance::Valid,
            std::cmp::Ordering::Less => AggregateStance::Invalid,
            std::cmp::Ordering::Equal => AggregateStance::Undetermined,
        }
    }
}
