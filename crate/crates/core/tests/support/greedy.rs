//! Mining against a model that finds every label in every document.

use narrmine_core::corpus::Document;
use narrmine_core::llm::{MockBackend, MockEntry, TemplateSet};
use narrmine_core::miner::{mine, Backends, MineConfig, MineOutput};
use narrmine_core::semantics::{FixtureTable, HdbscanParams};
use narrmine_core::{NarrativeStore, TimeSpec, Viewpoint};

/// Recursion stops only through label exclusion along the path or the
/// depth bound.
pub fn greedy_run(labels: usize, depth: usize) -> (NarrativeStore, MineOutput) {
    let sentences: Vec<String> = (1..=labels).map(|i| format!("Sentence number {i} happened.")).collect();
    let mut entries = vec![
        MockEntry {
            template: "extract_timeline".into(),
            keys: vec![],
            response: sentences.iter().map(|s| format!("- {s}")).collect::<Vec<_>>().join("\n"),
        },
    ];
    for (t, r) in [
        ("detect_event", "yes"),
        ("detect_subevent", "yes"),
        ("verify_timeline", "yes"),
        ("infer_relation", "happened after"),
    ] {
        entries.push(MockEntry {
            template: t.into(),
            keys: vec![],
            response: r.into(),
        });
    }
    for (i, s) in sentences.iter().enumerate() {
        entries.push(MockEntry {
            template: "label_events".into(),
            keys: vec![format!("\n{s} --")],
            response: format!("L{} ({})", i + 1, 2001 + i),
        });
    }
    let llm = MockBackend::from_entries(entries);
    let table = FixtureTable::new(
        (0..labels)
            .map(|i| {
                let mut v = vec![0.0; labels];
                v[i] = 1.0;
                (format!("L{}", i + 1), v)
            })
            .collect(),
    )
    .unwrap();
    let templates = TemplateSet::default();
    let body = format!("{} {}", sentences.join(" "), "Filler text. ".repeat(100));
    let docs = vec![Document::new("V", "outlet", "https://example.org/a", "A", body)];
    let mut store = NarrativeStore::default();
    store.upsert_viewpoint(Viewpoint::new("V")).unwrap();
    let mut config = MineConfig::new("Root", TimeSpec::years(2000, 2012).unwrap(), "V");
    config.max_recursion_depth = depth;
    config.hdbscan = HdbscanParams {
        min_cluster_size: labels + 1,
        min_samples: 1,
        epsilon: 0.0,
    };
    let out = mine(
        &config,
        &mut store,
        &docs,
        Backends {
            llm: &llm,
            embed: &table,
            templates: &templates,
        },
    )
    .unwrap();
    (store, out)
}

