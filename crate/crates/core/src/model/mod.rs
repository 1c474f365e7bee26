//! Narrative-domain types: events, entities, literals, viewpoints, the
//! relation vocabulary and the store that ties them together.

pub mod binding;
pub mod json;
pub mod narrative;
pub mod relation;
pub mod store;
pub mod time;
pub mod validate;
pub mod viewpoint;

pub use binding::{
    BindingKind, BindingResult, ImportedTriple, KgCandidate, MemberLink, VirtualSubgraph, UNKNOWN_TYPE,
};
pub use json::{to_canonical_string, JsonError, StoreDocument};
pub use narrative::{
    DuplicateNode, EntityRef, EventNode, FactualEdge, Literal, Location, Narrative, NarrativeEdge,
    NodeKind, Participant, Provenance,
};
pub use relation::{
    Category, Direction, RegistryError, RelationEntry, RelationPredicate, RelationRegistry,
    DEFAULT_FACTUAL, HAPPENED_AFTER,
};
pub use store::{NarrativeStore, SharedStore, StoreError};
pub use time::{Granularity, TimeKind, TimeSpec};
pub use validate::{Severity, Violation, ViolationKind};
pub use viewpoint::{AggregateStance, GroupHierarchy, Stance, Viewpoint, ViewpointModel};

/// Implications of a relation category (see [`Category::implications`]).
pub fn category_implications(category: Category) -> std::collections::BTreeSet<Category> {
    category.implications()
}
