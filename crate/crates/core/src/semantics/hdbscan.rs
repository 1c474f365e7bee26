//! Hierarchical density-based clustering.
//!
//! Pipeline: core distances at `min_samples`, mutual-reachability graph,
//! Prim minimum spanning tree, single-linkage hierarchy, condensation by
//! `min_cluster_size`, excess-of-mass selection, then epsilon merging.
//!
//! Edges of equal weight are merged as one level of the hierarchy, so a
//! component that falls apart at distance `w` yields all of its pieces at once
//! instead of in an order fixed by tie-breaking. This makes the result
//! independent of which minimum spanning tree Prim happens to pick and of
//! the input order of the points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metric::euclidean_unchecked;
use super::SemanticsError;

pub const NOISE: i32 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HdbscanParams {
    pub min_cluster_size: usize,
    pub min_samples: usize,
    pub epsilon: f64,
}

impl Default for HdbscanParams {
    fn default() -> Self {
        Self {
            min_cluster_size: 10,
            min_samples: 2,
            epsilon: 0.1,
        }
    }
}

impl HdbscanParams {
    pub fn validate(&self) -> Result<(), SemanticsError> {
        if self.min_cluster_size < 2 {
            return Err(SemanticsError::InvalidParams("min_cluster_size must be at least 2".into()));
        }
        if self.min_samples < 1 {
            return Err(SemanticsError::InvalidParams("min_samples must be at least 1".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(SemanticsError::InvalidParams("epsilon must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterResult {
    /// Cluster index per point, [`NOISE`] for noise.
    pub labels: Vec<i32>,
    /// Member indices per cluster, ascending. Clusters are ordered by their
    /// smallest member.
    pub clusters: Vec<Vec<usize>>,
}

impl ClusterResult {
    fn all_noise(n: usize) -> Self {
        Self {
            labels: vec![NOISE; n],
            clusters: Vec::new(),
        }
    }

    fn from_clusters(n: usize, mut clusters: Vec<Vec<usize>>) -> Self {
        for c in &mut clusters {
            c.sort_unstable();
        }
        clusters.sort_by_key(|c| c[0]);
        let mut labels = vec![NOISE; n];
        for (k, members) in clusters.iter().enumerate() {
            for &p in members {
                labels[p] = k as i32;
            }
        }
        Self { labels, clusters }
    }

    pub fn noise(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == NOISE).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

fn check_points(points: &[Vec<f64>]) -> Result<usize, SemanticsError> {
    let dim = points.first().ok_or(SemanticsError::EmptyInput)?.len();
    for p in points {
        if p.len() != dim {
            return Err(SemanticsError::DimensionMismatch {
                expected: dim,
                actual: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(SemanticsError::NonFinite);
        }
    }
    Ok(dim)
}

/// Dense pairwise Euclidean distances, computed by row in parallel.
pub fn distance_matrix(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .par_iter()
        .map(|a| points.iter().map(|b| euclidean_unchecked(a, b)).collect())
        .collect()
}

/// Distance from each point to its `min_samples`-th nearest neighbour,
/// counting the point itself as the first.
pub fn core_distances(dist: &[Vec<f64>], min_samples: usize) -> Vec<f64> {
    let k = min_samples.clamp(1, dist.len()) - 1;
    dist.iter()
        .map(|row| {
            let mut sorted = row.clone();
            sorted.sort_by(f64::total_cmp);
            sorted[k]
        })
        .collect()
}

pub fn mutual_reachability(dist: &[Vec<f64>], core: &[f64]) -> Vec<Vec<f64>> {
    dist.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &d)| if i == j { 0.0 } else { d.max(core[i]).max(core[j]) })
                .collect()
        })
        .collect()
}

/// Prim's algorithm on a dense graph. Ties go to the lowest vertex index.
pub fn minimum_spanning_tree(weights: &[Vec<f64>]) -> Vec<MstEdge> {
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    in_tree[0] = true;
    best[1..n].copy_from_slice(&weights[0][1..n]);
    for _ in 1..n {
        let mut next = None;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            match next {
                None => next = Some(j),
                Some(k) if best[j] < best[k] => next = Some(j),
                _ => {}
            }
        }
        let v = next.expect("graph has unvisited vertices");
        in_tree[v] = true;
        edges.push(MstEdge {
            a: from[v].min(v),
            b: from[v].max(v),
            weight: best[v],
        });
        for j in 0..n {
            if !in_tree[j] && weights[v][j] < best[j] {
                best[j] = weights[v][j];
                from[j] = v;
            }
        }
    }
    edges
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.parent[hi] = lo;
        lo
    }
}

/// Node of the level-collapsed single-linkage tree. Ids `0..n` are points.
#[derive(Debug, Clone)]
struct LinkNode {
    weight: f64,
    children: Vec<usize>,
    size: usize,
    min_point: usize,
}

/// Builds the single-linkage tree from MST edges, merging every edge of the
/// same weight in one step. Returns the nodes (points first) and the root.
fn single_linkage(n: usize, mst: &[MstEdge]) -> (Vec<LinkNode>, usize) {
    let mut nodes: Vec<LinkNode> = (0..n)
        .map(|i| LinkNode {
            weight: 0.0,
            children: Vec::new(),
            size: 1,
            min_point: i,
        })
        .collect();
    let mut edges = mst.to_vec();
    edges.sort_by(|x, y| x.weight.total_cmp(&y.weight).then((x.a, x.b).cmp(&(y.a, y.b))));

    let mut uf = UnionFind::new(n);
    let mut comp_node: Vec<usize> = (0..n).collect();
    let mut i = 0;
    while i < edges.len() {
        let w = edges[i].weight;
        let mut j = i;
        while j < edges.len() && edges[j].weight == w {
            j += 1;
        }
        let level = &edges[i..j];
        let mut touched: Vec<usize> = Vec::new();
        for e in level {
            for p in [e.a, e.b] {
                let r = uf.find(p);
                if !touched.contains(&r) {
                    touched.push(r);
                }
            }
        }
        let olds: Vec<(usize, usize)> = touched.iter().map(|&r| (r, comp_node[r])).collect();
        for e in level {
            uf.union(e.a, e.b);
        }
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for (r, node) in olds {
            let root = uf.find(r);
            match groups.iter_mut().find(|(g, _)| *g == root) {
                Some((_, members)) => members.push(node),
                None => groups.push((root, vec![node])),
            }
        }
        for (root, mut children) in groups {
            children.sort_by_key(|&c| nodes[c].min_point);
            let id = nodes.len();
            nodes.push(LinkNode {
                weight: w,
                size: children.iter().map(|&c| nodes[c].size).sum(),
                min_point: nodes[children[0]].min_point,
                children,
            });
            comp_node[root] = id;
        }
        i = j;
    }
    let root = comp_node[uf.find(0)];
    (nodes, root)
}

fn points_under(nodes: &[LinkNode], node: usize, out: &mut Vec<usize>) {
    let mut stack = vec![node];
    while let Some(x) = stack.pop() {
        if nodes[x].children.is_empty() {
            out.push(x);
        } else {
            stack.extend(&nodes[x].children);
        }
    }
}

/// One cluster of the condensed tree.
#[derive(Debug, Clone)]
pub struct CondensedCluster {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// λ = 1 / distance at which the cluster appeared (0 for the root).
    pub birth: f64,
    /// Points leaving this cluster directly, with the λ at which they leave.
    pub fallouts: Vec<(usize, f64)>,
    /// Σ (λ_exit − birth) over every point, summed over sorted terms.
    pub stability: f64,
}

fn lambda(weight: f64) -> f64 {
    if weight > 0.0 {
        1.0 / weight
    } else {
        f64::INFINITY
    }
}

fn term(exit: f64, birth: f64, count: usize) -> f64 {
    if exit == birth {
        0.0
    } else {
        (exit - birth) * count as f64
    }
}

fn stable_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

/// Condenses the single-linkage tree. Cluster 0 is the root; children have
/// higher ids than their parents.
fn condense(nodes: &[LinkNode], root: usize, min_cluster_size: usize) -> Vec<CondensedCluster> {
    let mut clusters = vec![CondensedCluster {
        parent: None,
        children: Vec::new(),
        birth: 0.0,
        fallouts: Vec::new(),
        stability: 0.0,
    }];
    let mut terms: Vec<Vec<f64>> = vec![Vec::new()];
    let mut queue = std::collections::VecDeque::from([(root, 0usize)]);
    while let Some((node, c)) = queue.pop_front() {
        let n = &nodes[node];
        if n.children.is_empty() {
            // a lone point can only carry the root when n == 1
            clusters[c].fallouts.push((node, f64::INFINITY));
            continue;
        }
        let l = lambda(n.weight);
        let birth = clusters[c].birth;
        let big: Vec<usize> = n
            .children
            .iter()
            .copied()
            .filter(|&ch| nodes[ch].size >= min_cluster_size)
            .collect();
        let mut fall = Vec::new();
        for &ch in &n.children {
            if big.len() == 1 && big[0] == ch {
                queue.push_back((ch, c));
            } else if big.len() >= 2 && big.contains(&ch) {
                let k = clusters.len();
                clusters.push(CondensedCluster {
                    parent: Some(c),
                    children: Vec::new(),
                    birth: l,
                    fallouts: Vec::new(),
                    stability: 0.0,
                });
                terms.push(Vec::new());
                clusters[c].children.push(k);
                terms[c].push(term(l, birth, nodes[ch].size));
                queue.push_back((ch, k));
            } else {
                points_under(nodes, ch, &mut fall);
            }
        }
        fall.sort_unstable();
        for p in fall {
            clusters[c].fallouts.push((p, l));
            terms[c].push(term(l, birth, 1));
        }
    }
    for (c, t) in terms.into_iter().enumerate() {
        clusters[c].stability = stable_sum(t);
    }
    clusters
}

fn descendants(clusters: &[CondensedCluster], c: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = clusters[c].children.clone();
    while let Some(x) = stack.pop() {
        out.push(x);
        stack.extend(&clusters[x].children);
    }
    out
}

/// Whether the root is one zero-width cluster: no child clusters and every
/// point at mutual-reachability distance zero.
fn degenerate_root(clusters: &[CondensedCluster]) -> bool {
    let root = &clusters[0];
    root.children.is_empty() && root.fallouts.iter().all(|&(_, l)| l == f64::INFINITY)
}

/// Excess-of-mass selection. The root is a candidate only when it is
/// degenerate, so a set without density contrast is otherwise all noise.
fn select_eom(clusters: &[CondensedCluster]) -> Vec<bool> {
    let m = clusters.len();
    let mut selected = vec![false; m];
    let mut sub: Vec<f64> = clusters.iter().map(|c| c.stability).collect();
    let root_eligible = degenerate_root(clusters);
    for c in (0..m).rev() {
        if c == 0 && !root_eligible {
            continue;
        }
        let child_sum = stable_sum(clusters[c].children.iter().map(|&k| sub[k]).collect());
        if child_sum > sub[c] {
            sub[c] = child_sum;
        } else {
            selected[c] = true;
            for d in descendants(clusters, c) {
                selected[d] = false;
            }
        }
    }
    selected
}

/// Replaces each selected cluster born below `epsilon` by its nearest
/// ancestor born above it, never climbing to the root.
fn apply_epsilon(clusters: &[CondensedCluster], selected: &mut [bool], epsilon: f64) {
    if epsilon == 0.0 || selected[0] {
        return;
    }
    let birth_eps = |c: usize| 1.0 / clusters[c].birth;
    let mut chosen = Vec::new();
    for c in (0..clusters.len()).filter(|&c| selected[c]) {
        if birth_eps(c) >= epsilon {
            chosen.push(c);
            continue;
        }
        let mut cur = c;
        loop {
            let p = clusters[cur].parent.expect("non-root cluster has a parent");
            if p == 0 {
                chosen.push(cur);
                break;
            }
            if birth_eps(p) > epsilon {
                chosen.push(p);
                break;
            }
            cur = p;
        }
    }
    selected.iter_mut().for_each(|s| *s = false);
    for &c in &chosen {
        selected[c] = true;
    }
    for &c in &chosen {
        for d in descendants(clusters, c) {
            selected[d] = false;
        }
    }
}

fn members(clusters: &[CondensedCluster], c: usize) -> Vec<usize> {
    let mut out: Vec<usize> = clusters[c].fallouts.iter().map(|&(p, _)| p).collect();
    for d in descendants(clusters, c) {
        out.extend(clusters[d].fallouts.iter().map(|&(p, _)| p));
    }
    out
}

/// Full intermediate state, for inspection and testing.
#[derive(Debug, Clone)]
pub struct HdbscanTrace {
    pub core_distances: Vec<f64>,
    pub mst: Vec<MstEdge>,
    pub condensed: Vec<CondensedCluster>,
    pub selected: Vec<usize>,
    pub result: ClusterResult,
}

pub fn hdbscan(points: &[Vec<f64>], params: &HdbscanParams) -> Result<ClusterResult, SemanticsError> {
    hdbscan_trace(points, params).map(|t| t.result)
}

pub fn hdbscan_trace(points: &[Vec<f64>], params: &HdbscanParams) -> Result<HdbscanTrace, SemanticsError> {
    params.validate()?;
    check_points(points)?;
    let n = points.len();
    let dist = distance_matrix(points);
    let core = core_distances(&dist, params.min_samples);
    let mrd = mutual_reachability(&dist, &core);
    let mst = minimum_spanning_tree(&mrd);
    if n < params.min_cluster_size {
        return Ok(HdbscanTrace {
            core_distances: core,
            mst,
            condensed: Vec::new(),
            selected: Vec::new(),
            result: ClusterResult::all_noise(n),
        });
    }
    let (nodes, root) = single_linkage(n, &mst);
    let condensed = condense(&nodes, root, params.min_cluster_size);
    let mut selected = select_eom(&condensed);
    apply_epsilon(&condensed, &mut selected, params.epsilon);
    let chosen: Vec<usize> = (0..condensed.len()).filter(|&c| selected[c]).collect();

    let result = if chosen == [0] {
        ClusterResult::from_clusters(n, vec![(0..n).collect()])
    } else {
        ClusterResult::from_clusters(n, chosen.iter().map(|&c| members(&condensed, c)).collect())
    };
    Ok(HdbscanTrace {
        core_distances: core,
        mst,
        condensed,
        selected: chosen,
        result,
    })
}
