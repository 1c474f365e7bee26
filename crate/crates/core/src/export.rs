//! JSON and Graphviz renderings of narratives and comparison reports.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::compare::{ComparisonReport, EventKey};
use crate::model::{
    to_canonical_string, BindingKind, EventNode, Narrative, NarrativeStore, StoreDocument, StoreError,
};

/// Canonical JSON of a narrative, every narrative reachable from it through
/// η, their narrators and the relation vocabulary.
pub fn narrative_json(store: &NarrativeStore, id: &str) -> Result<String, StoreError> {
    let mut narratives: Vec<Narrative> = store
        .eta_closure(id)
        .into_iter()
        .map(|n| store.narrative(n).cloned())
        .collect::<Result<_, _>>()?;
    narratives.sort_by(|a, b| a.id.cmp(&b.id));
    let mut wanted: BTreeSet<String> = narratives.iter().map(|n| n.narrator.clone()).collect();
    // keep ancestors so the viewpoint hierarchy still resolves
    let mut frontier: Vec<String> = wanted.iter().cloned().collect();
    while let Some(v) = frontier.pop() {
        if let Some(p) = store.viewpoint(&v)?.parent.clone() {
            if wanted.insert(p.clone()) {
                frontier.push(p);
            }
        }
    }
    let doc = StoreDocument {
        narratives,
        relations: store.relations().entries(),
        viewpoints: store.viewpoints().filter(|v| wanted.contains(&v.id)).cloned().collect(),
    };
    Ok(to_canonical_string(&doc).expect("store values are always serializable"))
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Border color of a viewpoint, stable for a given store.
pub fn viewpoint_color(store: &NarrativeStore, viewpoint: &str) -> &'static str {
    let i = store.viewpoints().position(|v| v.id == viewpoint).unwrap_or(0);
    PALETTE[i % PALETTE.len()]
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn node_label(e: &EventNode) -> String {
    let mut label = e.label.clone();
    if e.time.is_known() {
        label.push_str(&format!("\n({})", e.time));
    }
    match e.binding.as_ref() {
        Some(b) if b.kind == BindingKind::Direct => label.push_str(&format!("\n{}", b.kg_id.as_deref().unwrap_or(""))),
        Some(b) if b.kind == BindingKind::Indirect => {
            label.push_str(&format!("\n~{}", b.kg_id.as_deref().unwrap_or("")))
        }
        _ => {}
    }
    label
}

fn node_style(e: &EventNode) -> &'static str {
    match e.binding.as_ref().map(|b| b.kind) {
        Some(BindingKind::None) => "rounded,dashed",
        _ => "rounded",
    }
}

struct DotWriter<'a> {
    store: &'a NarrativeStore,
    out: String,
    clusters: usize,
}

impl DotWriter<'_> {
    fn line(&mut self, depth: usize, text: &str) {
        let _ = writeln!(self.out, "{}{}", "  ".repeat(depth), text);
    }

    /// Writes the events of `n` with ids prefixed by `prefix`; recursive
    /// events become clusters holding their child narrative.
    fn narrative(&mut self, n: &Narrative, prefix: &str, depth: usize, path: &mut Vec<String>) -> Result<(), StoreError> {
        let color = viewpoint_color(self.store, &n.narrator);
        for e in n.events_by_time() {
            let id = format!("{prefix}{}", e.id);
            let node = format!(
                "{} [label={}, color={}, style={}];",
                quote(&id),
                quote(&node_label(e)),
                quote(color),
                quote(node_style(e))
            );
            match n.eta.get(&e.id) {
                Some(child) if !path.contains(child) => {
                    self.clusters += 1;
                    self.line(depth, &format!("subgraph {} {{", quote(&format!("cluster_{}", self.clusters))));
                    self.line(depth + 1, &format!("label={};", quote(&e.label)));
                    self.line(depth + 1, &format!("color={};", quote(color)));
                    self.line(depth + 1, "style=\"rounded\";");
                    self.line(depth + 1, &node.replace("];", ", penwidth=2];"));
                    let child = self.store.narrative(child)?;
                    path.push(child.id.clone());
                    self.narrative(child, &format!("{id}/"), depth + 1, path)?;
                    path.pop();
                    self.line(depth, "}");
                }
                _ => self.line(depth, &node),
            }
        }
        for edge in &n.narrative_edges {
            self.line(
                depth,
                &format!(
                    "{} -> {} [label={}];",
                    quote(&format!("{prefix}{}", edge.source)),
                    quote(&format!("{prefix}{}", edge.target)),
                    quote(&edge.predicate)
                ),
            );
        }
        Ok(())
    }
}

/// Graphviz digraph of a narrative. Recursive nodes are drawn as clusters
/// containing their child narrative; border colors mark the narrator, dashed
/// borders mark unbound events and `~` marks an indirect binding.
pub fn narrative_dot(store: &NarrativeStore, id: &str) -> Result<String, StoreError> {
    let n = store.narrative(id)?;
    let mut w = DotWriter {
        store,
        out: String::new(),
        clusters: 0,
    };
    w.line(0, &format!("digraph {} {{", quote(id)));
    w.line(1, "rankdir=LR;");
    w.line(1, &format!("label={};", quote(&format!("{} ({})", n.topic.as_deref().unwrap_or(id), n.narrator))));
    w.line(1, "node [shape=box];");
    w.narrative(n, "", 1, &mut vec![n.id.clone()])?;
    w.line(0, "}");
    Ok(w.out)
}

/// Side-by-side rendering of compared narratives: one cluster per narrative
/// in its viewpoint's color, aligned events joined by dashed lines, unique
/// events drawn bold and narrative starts with a double border.
pub fn comparison_dot(store: &NarrativeStore, report: &ComparisonReport) -> Result<String, StoreError> {
    let mut w = DotWriter {
        store,
        out: String::new(),
        clusters: 0,
    };
    let key_id = |k: &EventKey| format!("{}/{}", k.narrative, k.event);
    let unique: BTreeSet<&EventKey> = report
        .pairs
        .iter()
        .flat_map(|p| p.differences.left.iter().chain(&p.differences.right))
        .map(|u| &u.event)
        .collect();
    let common: BTreeSet<&EventKey> = report.common.iter().flat_map(|g| &g.members).map(|m| &m.event).collect();
    w.line(0, "digraph comparison {");
    w.line(1, "rankdir=TB;");
    w.line(1, "node [shape=box];");
    for (i, summary) in report.narratives.iter().enumerate() {
        let color = viewpoint_color(store, &summary.viewpoint);
        w.line(1, &format!("subgraph {} {{", quote(&format!("cluster_{i}"))));
        w.line(2, &format!("label={};", quote(&format!("{} ({})", summary.narrative, summary.viewpoint))));
        w.line(2, &format!("color={};", quote(color)));
        let mut shown: Vec<&Narrative> = vec![store.narrative(&summary.narrative)?];
        if report.options.flatten {
            for child in shown[0].eta.values() {
                shown.push(store.narrative(child)?);
            }
        }
        for n in &shown {
            for e in n.events_by_time() {
                let key = EventKey {
                    narrative: n.id.clone(),
                    event: e.id.clone(),
                };
                let mut attrs = vec![
                    format!("label={}", quote(&node_label(e))),
                    format!("color={}", quote(color)),
                    format!("style={}", quote(node_style(e))),
                ];
                if unique.contains(&key) && !common.contains(&key) {
                    attrs.push("penwidth=3".into());
                }
                if summary.start.as_ref() == Some(&key) {
                    attrs.push("peripheries=2".into());
                }
                w.line(2, &format!("{} [{}];", quote(&key_id(&key)), attrs.join(", ")));
            }
            for edge in &n.narrative_edges {
                w.line(
                    2,
                    &format!(
                        "{} -> {} [label={}];",
                        quote(&format!("{}/{}", n.id, edge.source)),
                        quote(&format!("{}/{}", n.id, edge.target)),
                        quote(&edge.predicate)
                    ),
                );
            }
        }
        w.line(1, "}");
    }
    for p in &report.pairs {
        for a in &p.alignment.pairs {
            w.line(
                1,
                &format!(
                    "{} -> {} [dir=none, style=dashed, constraint=false, color=\"gray50\"];",
                    quote(&key_id(&a.left)),
                    quote(&key_id(&a.right))
                ),
            );
        }
    }
    w.line(0, "}");
    Ok(w.out)
}
