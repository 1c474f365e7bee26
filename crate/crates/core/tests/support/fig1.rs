//! The hand-encoded Putin narrative, its knowledge-graph snapshot and the
//! expected binding of every event.

use std::path::PathBuf;

use narrmine_core::binder::KgSnapshot;
use narrmine_core::semantics::FixtureTable;
use narrmine_core::{BindingKind, NarrativeStore};

pub fn fixture(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(path)
}

pub fn fig1() -> (NarrativeStore, KgSnapshot, FixtureTable) {
    let store = NarrativeStore::from_json(&std::fs::read_to_string(fixture("fig1/store.json")).unwrap()).unwrap();
    let snap = KgSnapshot::load(&fixture("fig1/snapshot.json")).unwrap();
    let table = FixtureTable::load(&fixture("fig1/embeddings.json")).unwrap();
    (store, snap, table)
}

pub const EXPECTED: [(&str, &str, BindingKind, Option<&str>); 8] = [
    ("putin-address", "soviet-collapse", BindingKind::None, None),
    ("putin-address", "nato-expansion", BindingKind::Direct, Some("Q112127201")),
    ("putin-address", "redivision", BindingKind::None, None),
    ("putin-redivision", "belgrade", BindingKind::Indirect, Some("Q155723")),
    ("putin-redivision", "iraq-war", BindingKind::Direct, Some("Q545449")),
    ("putin-redivision", "libya", BindingKind::None, None),
    ("putin-iraq-war", "powell", BindingKind::Direct, Some("Q1639325")),
    ("putin-iraq-war", "invasion", BindingKind::Direct, Some("Q107802")),
];

