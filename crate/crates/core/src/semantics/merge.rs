//! Merging of clusters whose centroids point the same way.

use serde::{Deserialize, Serialize};

use super::metric::{centroid, cosine};
use super::SemanticsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    /// Id of the surviving cluster (the lower of the two).
    pub kept: usize,
    pub absorbed: usize,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeOutcome {
    /// Surviving clusters as (id, sorted member indices), ordered by id.
    /// Ids are positions in the input list.
    pub clusters: Vec<(usize, Vec<usize>)>,
    pub log: Vec<MergeStep>,
}

impl MergeOutcome {
    pub fn member_sets(&self) -> Vec<Vec<usize>> {
        self.clusters.iter().map(|(_, m)| m.clone()).collect()
    }
}

/// Repeatedly merges the pair of clusters with the highest centroid cosine
/// similarity, as long as it is at least `threshold`. Ties go to the pair with
/// the lowest ids.
pub fn merge_clusters(
    clusters: &[Vec<usize>],
    vectors: &[Vec<f64>],
    threshold: f64,
) -> Result<MergeOutcome, SemanticsError> {
    if !(-1.0..=1.0).contains(&threshold) {
        return Err(SemanticsError::InvalidThreshold(threshold));
    }
    let mut live: Vec<(usize, Vec<usize>, Vec<f64>)> = Vec::with_capacity(clusters.len());
    for (id, members) in clusters.iter().enumerate() {
        let rows = members
            .iter()
            .map(|&m| vectors.get(m).map(Vec::as_slice).ok_or(SemanticsError::IndexOutOfRange(m)))
            .collect::<Result<Vec<_>, _>>()?;
        let c = centroid(rows).ok_or(SemanticsError::EmptyInput)?;
        let mut members = members.clone();
        members.sort_unstable();
        live.push((id, members, c));
    }

    let mut log = Vec::new();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..live.len() {
            for j in i + 1..live.len() {
                let s = cosine(&live[i].2, &live[j].2)?;
                if s < threshold {
                    continue;
                }
                // `live` is ordered by id, so (i, j) order is (id, id) order
                if best.map_or(true, |(b, _, _)| s > b) {
                    best = Some((s, i, j));
                }
            }
        }
        let Some((similarity, i, j)) = best else { break };
        let (absorbed, members, _) = live.remove(j);
        let target = &mut live[i];
        target.1.extend(members);
        target.1.sort_unstable();
        target.2 = centroid(target.1.iter().map(|&m| vectors[m].as_slice())).expect("non-empty");
        tracing::debug!(kept = target.0, absorbed, similarity, "merged clusters");
        log.push(MergeStep {
            kept: target.0,
            absorbed,
            similarity,
        });
    }
    Ok(MergeOutcome {
        clusters: live.into_iter().map(|(id, m, _)| (id, m)).collect(),
        log,
    })
}
