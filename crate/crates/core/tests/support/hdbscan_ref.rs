//! Brute-force HDBSCAN used as an oracle.
//!
//! Shares no code with the library. The hierarchy is built top-down: a
//! cluster's split distance is the bottleneck of its own point set (the
//! smallest threshold under which the full mutual-reachability graph on the
//! set is connected) and its pieces are the components left when every edge
//! at that distance is removed.

use std::collections::VecDeque;

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += (a[k] - b[k]) * (a[k] - b[k]);
    }
    s.sqrt()
}

pub fn mrd_matrix(points: &[Vec<f64>], min_samples: usize) -> Vec<Vec<f64>> {
    let n = points.len();
    let core: Vec<f64> = (0..n)
        .map(|i| {
            let mut ds: Vec<f64> = (0..n).map(|j| dist(&points[i], &points[j])).collect();
            ds.sort_by(|x, y| x.partial_cmp(y).unwrap());
            ds[min_samples.min(n) - 1]
        })
        .collect();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m[i][j] = dist(&points[i], &points[j]).max(core[i]).max(core[j]);
            }
        }
    }
    m
}

/// Components of `set` using only edges with weight strictly below `limit`.
fn components_below(set: &[usize], w: &[Vec<f64>], limit: f64) -> Vec<Vec<usize>> {
    let mut seen = vec![false; set.len()];
    let mut out = Vec::new();
    for start in 0..set.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![set[start]];
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            for b in 0..set.len() {
                if !seen[b] && w[set[a]][set[b]] < limit {
                    seen[b] = true;
                    comp.push(set[b]);
                    queue.push_back(b);
                }
            }
        }
        comp.sort();
        out.push(comp);
    }
    out
}

fn connected_at(set: &[usize], w: &[Vec<f64>], limit: f64) -> bool {
    // connected using edges <= limit
    let mut seen = vec![false; set.len()];
    seen[0] = true;
    let mut stack = vec![0];
    let mut count = 1;
    while let Some(a) = stack.pop() {
        for b in 0..set.len() {
            if !seen[b] && w[set[a]][set[b]] <= limit {
                seen[b] = true;
                count += 1;
                stack.push(b);
            }
        }
    }
    count == set.len()
}

fn bottleneck(set: &[usize], w: &[Vec<f64>]) -> f64 {
    let mut weights: Vec<f64> = Vec::new();
    for (i, &a) in set.iter().enumerate() {
        for &b in &set[i + 1..] {
            weights.push(w[a][b]);
        }
    }
    weights.sort_by(|x, y| x.partial_cmp(y).unwrap());
    weights.dedup();
    let (mut lo, mut hi) = (0, weights.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if connected_at(set, w, weights[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    weights[lo]
}

struct RefCluster {
    parent: Option<usize>,
    birth: f64,
    children: Vec<usize>,
    /// (point, λ at which it left this cluster directly)
    fell: Vec<(usize, f64)>,
    /// (λ, size) for every child cluster split off
    splits: Vec<(f64, usize)>,
}

fn lam(w: f64) -> f64 {
    if w == 0.0 {
        f64::INFINITY
    } else {
        1.0 / w
    }
}

fn grow(set: Vec<usize>, c: usize, w: &[Vec<f64>], mcs: usize, tree: &mut Vec<RefCluster>) {
    let b = bottleneck(&set, w);
    let l = lam(b);
    let pieces = components_below(&set, w, b);
    let big: Vec<&Vec<usize>> = pieces.iter().filter(|p| p.len() >= mcs).collect();
    let mut falling: Vec<usize> = Vec::new();
    if big.len() >= 2 {
        for p in &pieces {
            if p.len() >= mcs {
                let k = tree.len();
                tree.push(RefCluster {
                    parent: Some(c),
                    birth: l,
                    children: vec![],
                    fell: vec![],
                    splits: vec![],
                });
                tree[c].children.push(k);
                tree[c].splits.push((l, p.len()));
                grow(p.clone(), k, w, mcs, tree);
            } else {
                falling.extend(p);
            }
        }
    } else if big.len() == 1 {
        let keep = big[0].clone();
        for p in &pieces {
            if *p != keep {
                falling.extend(p);
            }
        }
        for p in falling.drain(..) {
            tree[c].fell.push((p, l));
        }
        grow(keep, c, w, mcs, tree);
        return;
    } else {
        falling = set;
    }
    for p in falling {
        tree[c].fell.push((p, l));
    }
}

fn sorted_sum(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    v.into_iter().sum()
}

fn stability(c: &RefCluster) -> f64 {
    let gain = |l: f64| if l == c.birth { 0.0 } else { l - c.birth };
    let mut terms: Vec<f64> = c.fell.iter().map(|&(_, l)| gain(l)).collect();
    terms.extend(c.splits.iter().map(|&(l, s)| if l == c.birth { 0.0 } else { (l - c.birth) * s as f64 }));
    sorted_sum(terms)
}

fn best(tree: &[RefCluster], c: usize) -> (f64, Vec<usize>) {
    let own = stability(&tree[c]);
    if tree[c].children.is_empty() {
        return (own, vec![c]);
    }
    let mut vals = Vec::new();
    let mut sel = Vec::new();
    for &k in &tree[c].children {
        let (v, s) = best(tree, k);
        vals.push(v);
        sel.extend(s);
    }
    let total = sorted_sum(vals);
    if total > own {
        (total, sel)
    } else {
        (own, vec![c])
    }
}

fn is_ancestor(tree: &[RefCluster], anc: usize, mut c: usize) -> bool {
    while let Some(p) = tree[c].parent {
        if p == anc {
            return true;
        }
        c = p;
    }
    false
}

fn subtree_points(tree: &[RefCluster], c: usize) -> Vec<usize> {
    let mut out: Vec<usize> = tree[c].fell.iter().map(|x| x.0).collect();
    for &k in &tree[c].children {
        out.extend(subtree_points(tree, k));
    }
    out
}

/// Clusters as sorted member lists, ordered by smallest member.
pub fn reference_clusters(points: &[Vec<f64>], mcs: usize, ms: usize, eps: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    if n < mcs {
        return vec![];
    }
    let w = mrd_matrix(points, ms);
    let mut tree = vec![RefCluster {
        parent: None,
        birth: 0.0,
        children: vec![],
        fell: vec![],
        splits: vec![],
    }];
    grow((0..n).collect(), 0, &w, mcs, &mut tree);

    let flat = tree[0].children.is_empty();
    let mut result: Vec<Vec<usize>> = if flat && tree[0].fell.iter().all(|x| x.1 == f64::INFINITY) {
        vec![(0..n).collect()]
    } else if flat {
        vec![]
    } else {
        let mut chosen: Vec<usize> = Vec::new();
        for &k in &tree[0].children {
            chosen.extend(best(&tree, k).1);
        }
        if eps > 0.0 {
            let mut lifted = Vec::new();
            for c in chosen {
                if 1.0 / tree[c].birth >= eps {
                    lifted.push(c);
                    continue;
                }
                let mut cur = c;
                loop {
                    let p = tree[cur].parent.unwrap();
                    if p == 0 {
                        lifted.push(cur);
                        break;
                    }
                    if 1.0 / tree[p].birth > eps {
                        lifted.push(p);
                        break;
                    }
                    cur = p;
                }
            }
            lifted.sort();
            lifted.dedup();
            chosen = lifted
                .iter()
                .copied()
                .filter(|&c| !lifted.iter().any(|&a| a != c && is_ancestor(&tree, a, c)))
                .collect();
        }
        chosen.iter().map(|&c| subtree_points(&tree, c)).collect()
    };
    for c in &mut result {
        c.sort();
    }
    result.sort_by_key(|c| c[0]);
    result
}

/// Minimum spanning tree weight over every labelled tree on `n` vertices,
/// enumerated through Prüfer sequences.
pub fn brute_force_mst_weight(w: &[Vec<f64>]) -> f64 {
    let n = w.len();
    if n <= 1 {
        return 0.0;
    }
    if n == 2 {
        return w[0][1];
    }
    let len = n - 2;
    let mut seq = vec![0usize; len];
    let mut best = f64::INFINITY;
    loop {
        // decode
        let mut degree = vec![1usize; n];
        for &s in &seq {
            degree[s] += 1;
        }
        let mut total = 0.0;
        for &s in &seq {
            let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
            total += w[leaf][s];
            degree[leaf] -= 1;
            degree[s] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
        total += w[rest[0]][rest[1]];
        if total < best {
            best = total;
        }
        // next sequence
        let mut i = 0;
        loop {
            if i == len {
                return best;
            }
            seq[i] += 1;
            if seq[i] < n {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
    }
}
