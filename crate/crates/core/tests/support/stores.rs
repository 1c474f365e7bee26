//! Seeded random stores: viewpoint forests, narratives with every node kind,
//! bindings and η links that form a DAG.

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use narrmine_core::{
    BindingKind, BindingResult, EntityRef, EventNode, Granularity, ImportedTriple, KgCandidate, Literal, Location,
    MemberLink, Narrative, NarrativeStore, Participant, Provenance, Stance, TimeSpec, VirtualSubgraph, Viewpoint,
    UNKNOWN_TYPE,
};

const PIECES: [&str; 12] = [
    "Iraq", "war", "\"quoted\"", "back\\slash", "Москва", "北京", "café", "line\nbreak", "tab\t", "😀", "e\u{301}", "",
];

fn text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(1..4);
    (0..n).map(|_| *PIECES.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

fn date(rng: &mut ChaCha8Rng) -> NaiveDate {
    NaiveDate::from_ymd_opt(rng.gen_range(1900..2030), rng.gen_range(1..=12), rng.gen_range(1..=28)).unwrap()
}

pub fn time(rng: &mut ChaCha8Rng) -> TimeSpec {
    match rng.gen_range(0..5) {
        0 => TimeSpec::unknown(),
        1 => TimeSpec::year(rng.gen_range(1900..2030)),
        2 => TimeSpec::month(rng.gen_range(1900..2030), rng.gen_range(1..=12)).unwrap(),
        3 => TimeSpec::day(date(rng)),
        _ => {
            let (a, b) = (date(rng), date(rng));
            let g = *[Granularity::Day, Granularity::Month, Granularity::Year].choose(rng).unwrap();
            TimeSpec::interval(a.min(b), a.max(b), g).unwrap()
        }
    }
}

fn binding(rng: &mut ChaCha8Rng, narrative: &str) -> BindingResult {
    let kind = *[BindingKind::Direct, BindingKind::Indirect, BindingKind::None].choose(rng).unwrap();
    let candidates: Vec<KgCandidate> = (0..rng.gen_range(0..3))
        .map(|i| KgCandidate {
            kg_id: format!("Q{}", 100 + i),
            kg_label: text(rng),
            description: text(rng),
            time: rng.gen_bool(0.5).then(|| time(rng)),
            score: rng.gen_range(0.0..1.0),
        })
        .collect();
    let (kg_id, virtual_subgraph, imported) = if kind == BindingKind::None {
        let v = VirtualSubgraph {
            label: text(rng),
            time: rng.gen_bool(0.5).then(|| time(rng)),
            inferred_type: UNKNOWN_TYPE.into(),
            participants: Vec::new(),
            members: vec![MemberLink {
                narrative: narrative.into(),
                event: "e0".into(),
                label: text(rng),
            }],
            exportable: false,
        };
        (None, Some(v), Vec::new())
    } else {
        let t = ImportedTriple {
            subject: "Q1".into(),
            predicate: "part of".into(),
            object: "Q2".into(),
            attribution: rng.gen_bool(0.3).then(|| "V0".to_owned()),
        };
        (Some(format!("Q{}", rng.gen_range(1..1_000_000))), None, vec![t])
    };
    BindingResult {
        kind,
        kg_id,
        note: rng.gen_bool(0.3).then(|| text(rng)),
        virtual_subgraph,
        confidence: rng.gen_range(0.0..=1.0),
        candidates,
        imported,
    }
}

/// Random narrative with `events` events `e0..`, a few entities and literals.
pub fn narrative(rng: &mut ChaCha8Rng, id: &str, narrator: &str, events: usize) -> Narrative {
    let mut n = Narrative::new(id, narrator);
    if rng.gen_bool(0.5) {
        n.topic = Some(text(rng));
    }
    let entities = rng.gen_range(0..3);
    for k in 0..entities {
        n.add_entity(EntityRef {
            id: format!("x{k}"),
            label: text(rng),
            kg_id: rng.gen_bool(0.5).then(|| format!("Q{k}")),
        })
        .unwrap();
    }
    if rng.gen_bool(0.5) {
        let lit = match rng.gen_range(0..3) {
            0 => Literal::Text(text(rng)),
            1 => Literal::Number(rng.gen_range(-1e9..1e9)),
            _ => Literal::Date(date(rng)),
        };
        n.add_literal("l0", lit).unwrap();
    }
    for i in 0..events {
        let mut e = EventNode::new(format!("e{i}"), text(rng), time(rng));
        if rng.gen_bool(0.3) {
            e.event_type = Some(text(rng));
        }
        if entities > 0 && rng.gen_bool(0.5) {
            e.participants.push(Participant {
                entity: format!("x{}", rng.gen_range(0..entities)),
                role: "agent".into(),
            });
        }
        if rng.gen_bool(0.3) {
            e.location = Some(if entities > 0 && rng.gen_bool(0.5) {
                Location::Entity("x0".into())
            } else {
                Location::Literal(Literal::Text(text(rng)))
            });
        }
        for d in 0..rng.gen_range(0..3) {
            let start = rng.gen_range(0..500);
            e.provenance.push(Provenance {
                document: format!("doc-{d}"),
                sentence: rng.gen_bool(0.7).then_some((start, start + rng.gen_range(1..200))),
            });
        }
        if rng.gen_bool(0.5) {
            e.binding = Some(binding(rng, id));
        }
        n.add_event(e).unwrap();
    }
    n
}

/// Random η structure over `count` narratives `n0..`: a link from `ni` may
/// only point to some `nj` with j > i, so the result is a DAG.
pub fn eta_links(rng: &mut ChaCha8Rng, count: usize, events: &[usize]) -> Vec<(usize, usize, usize)> {
    let mut links = Vec::new();
    for i in 0..count {
        for e in 0..events[i] {
            if i + 1 < count && rng.gen_bool(0.4) {
                links.push((i, e, rng.gen_range(i + 1..count)));
            }
        }
    }
    links
}

pub fn random_store(seed: u64, max_narratives: usize) -> NarrativeStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = NarrativeStore::default();
    let vps = rng.gen_range(1..5);
    for v in 0..vps {
        let mut vp = Viewpoint::new(format!("V{v}"));
        if v > 0 && rng.gen_bool(0.5) {
            vp = vp.with_parent(format!("V{}", rng.gen_range(0..v)));
        }
        vp.members.insert(text(&mut rng));
        if rng.gen_bool(0.5) {
            vp = vp.with_stance("claim", if rng.gen_bool(0.5) { Stance::Valid } else { Stance::Invalid });
        }
        store.upsert_viewpoint(vp).unwrap();
    }
    let count = rng.gen_range(1..=max_narratives);
    let events: Vec<usize> = (0..count).map(|_| rng.gen_range(1..6)).collect();
    let links = eta_links(&mut rng, count, &events);
    // children first, so every η target exists on insertion
    for i in (0..count).rev() {
        let narrator = format!("V{}", rng.gen_range(0..vps));
        let mut n = narrative(&mut rng, &format!("n{i}"), &narrator, events[i]);
        for &(_, e, j) in links.iter().filter(|l| l.0 == i) {
            n.eta.insert(format!("e{e}"), format!("n{j}"));
        }
        store.insert_narrative(n).unwrap();
        let id = format!("n{i}");
        let predicates: Vec<String> = store.relations().predicates().map(|p| p.label.clone()).collect();
        for _ in 0..rng.gen_range(0..4) {
            let (a, b) = (rng.gen_range(0..events[i]), rng.gen_range(0..events[i]));
            if a != b {
                let p = predicates.choose(&mut rng).unwrap().clone();
                store.add_narrative_edge(&id, &format!("e{a}"), &p, &format!("e{b}")).unwrap();
            }
        }
        let has_entity = store.narrative(&id).unwrap().entities.contains_key("x0");
        if has_entity {
            store.add_factual_edge(&id, "e0", "participant", "x0").unwrap();
        }
    }
    store
}
