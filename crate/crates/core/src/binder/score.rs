//! Label similarity used to rank knowledge-graph candidates.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{KgCandidate, TimeSpec};
use crate::semantics::{cosine, EmbeddingBackend};

use super::KgEntity;

const STOPWORDS: [&str; 12] = ["the", "of", "a", "an", "in", "on", "and", "to", "for", "at", "by", "s"];

/// Lowercase content tokens with a light plural strip.
pub fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .replace("'s", " ")
        .replace("’s", " ")
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty() && !STOPWORDS.contains(w))
        .map(|w| {
            if w.len() > 3 && w.ends_with('s') && !w.ends_with("ss") {
                w[..w.len() - 1].to_owned()
            } else {
                w.to_owned()
            }
        })
        .collect()
}

/// Tokens closer than this (normalized edit similarity) count as a fuzzy
/// match, e.g. "offensive" / "offensives" or spelling variants.
pub const TOKEN_MATCH: f64 = 0.8;

/// Soft Dice overlap of the token sets: tokens are paired one-to-one, best
/// pairs first, and a pair contributes its edit similarity when it reaches
/// [`TOKEN_MATCH`].
pub fn lexical(a: &str, b: &str) -> f64 {
    let sa: BTreeSet<String> = tokens(a).into_iter().collect();
    let sb: BTreeSet<String> = tokens(b).into_iter().collect();
    if sa.is_empty() || sb.is_empty() {
        return 0.0;
    }
    let mut pairs: Vec<(f64, &String, &String)> = sa
        .iter()
        .flat_map(|x| sb.iter().map(move |y| (strsim::normalized_levenshtein(x, y), x, y)))
        .filter(|(sim, _, _)| *sim >= TOKEN_MATCH)
        .collect();
    pairs.sort_by(|p, q| q.0.total_cmp(&p.0).then_with(|| (p.1, p.2).cmp(&(q.1, q.2))));
    let (mut used_a, mut used_b) = (BTreeSet::new(), BTreeSet::new());
    let mut matched = 0.0;
    for (sim, x, y) in pairs {
        if used_a.insert(x) {
            if used_b.insert(y) {
                matched += sim;
            } else {
                used_a.remove(x);
            }
        }
    }
    2.0 * matched / (sa.len() + sb.len()) as f64
}

/// Share of the label's tokens found in a description, scaled so that a
/// description alone never reaches a direct match.
pub fn description_overlap(label: &str, description: &str) -> f64 {
    let q: BTreeSet<String> = tokens(label).into_iter().collect();
    if q.is_empty() {
        return 0.0;
    }
    let d: BTreeSet<String> = tokens(description).into_iter().collect();
    DESCRIPTION_WEIGHT * q.intersection(&d).count() as f64 / q.len() as f64
}

pub const DESCRIPTION_WEIGHT: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreParams {
    /// Added when both the label and the candidate have overlapping times.
    pub time_bonus: f64,
    /// Candidates scoring below this are not returned.
    pub min_score: f64,
    pub top_k: usize,
}

impl Default for ScoreParams {
    fn default() -> Self {
        Self {
            time_bonus: 0.05,
            min_score: 0.3,
            top_k: 5,
        }
    }
}

/// Ranks entities against a label. Name similarity is embedding cosine when
/// both texts embed, otherwise [`lexical`].
pub struct Scorer<'a> {
    pub embed: Option<&'a dyn EmbeddingBackend>,
    pub params: ScoreParams,
}

impl Scorer<'_> {
    fn vector(&self, text: &str) -> Option<Vec<f64>> {
        let backend = self.embed?;
        backend.embed_batch(&[text]).ok()?.pop()
    }

    pub fn name_similarity(&self, a: &str, b: &str) -> f64 {
        if let (Some(va), Some(vb)) = (self.vector(a), self.vector(b)) {
            if let Ok(c) = cosine(&va, &vb) {
                return c.max(0.0);
            }
        }
        lexical(a, b)
    }

    pub fn score(&self, label: &str, time: &TimeSpec, entity: &KgEntity) -> f64 {
        let query = self.vector(label);
        let name = std::iter::once(&entity.label)
            .chain(&entity.aliases)
            .map(|n| match (&query, self.vector(n)) {
                (Some(q), Some(v)) => cosine(q, &v).map_or(0.0, |c| c.max(0.0)),
                _ => lexical(label, n),
            })
            .fold(0.0, f64::max);
        let base = name.max(description_overlap(label, &entity.description));
        let bonus = match &entity.time {
            Some(t) if time.overlaps(t) == Some(true) => self.params.time_bonus,
            _ => 0.0,
        };
        (base + bonus).clamp(0.0, 1.0)
    }

    /// Candidates ordered by score, then id.
    pub fn rank<'e>(
        &self,
        label: &str,
        time: &TimeSpec,
        entities: impl IntoIterator<Item = (&'e str, &'e KgEntity)>,
    ) -> Vec<KgCandidate> {
        let mut out: Vec<KgCandidate> = entities
            .into_iter()
            .map(|(id, e)| KgCandidate {
                kg_id: id.to_owned(),
                kg_label: e.label.clone(),
                description: e.description.clone(),
                time: e.time.clone(),
                score: self.score(label, time, e),
            })
            .filter(|c| c.score >= self.params.min_score)
            .collect();
        out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.kg_id.cmp(&b.kg_id)));
        out.truncate(self.params.top_k);
        out
    }
}
