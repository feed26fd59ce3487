//! HDBSCAN over a precomputed distance matrix with excess-of-mass cluster selection.
//!
//! Follows the scikit-learn implementation step by step so labels agree with it: core
//! distances count the point itself, the minimum spanning tree is built with Prim's
//! algorithm starting at point 0, and cluster labels are assigned in increasing order of
//! condensed-tree node id.

use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clustering {
    /// One label per point, `-1` for noise.
    pub labels: Vec<i64>,
    /// Every pairwise distance was zero; all points were put in one cluster.
    pub degenerate: bool,
}

impl Clustering {
    pub fn cluster_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l >= 0).collect::<BTreeSet<_>>().len()
    }
}

#[derive(Clone, Copy, Debug)]
struct Edge {
    a: usize,
    b: usize,
    d: f64,
}

#[derive(Clone, Copy, Debug)]
struct Merge {
    left: usize,
    right: usize,
    d: f64,
    size: usize,
}

#[derive(Clone, Copy, Debug)]
struct Condensed {
    parent: usize,
    child: usize,
    lambda: f64,
    size: usize,
}

fn core_distances(m: &[f64], n: usize, min_samples: usize) -> Vec<f64> {
    let k = min_samples.clamp(1, n) - 1;
    (0..n)
        .map(|i| {
            let mut col: Vec<f64> = (0..n).map(|j| m[j * n + i]).collect();
            *col.select_nth_unstable_by(k, f64::total_cmp).1
        })
        .collect()
}

fn prim_mst(m: &[f64], n: usize, core: &[f64]) -> Vec<Edge> {
    let reach = |i: usize, j: usize| m[i * n + j].max(core[i]).max(core[j]);
    let mut in_tree = vec![false; n];
    let mut min_reach = vec![f64::INFINITY; n];
    let mut source = vec![0usize; n];
    let mut current = 0;
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for _ in 0..n.saturating_sub(1) {
        in_tree[current] = true;
        let mut new_reach = f64::INFINITY;
        let mut new_node = 0;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let d = reach(current, j);
            if d < min_reach[j] {
                min_reach[j] = d;
                source[j] = current;
                if d < new_reach {
                    new_reach = d;
                    new_node = j;
                }
            } else if min_reach[j] < new_reach {
                new_reach = min_reach[j];
                new_node = j;
            }
        }
        edges.push(Edge {
            a: source[new_node],
            b: new_node,
            d: new_reach,
        });
        current = new_node;
    }
    edges
}

fn single_linkage(mut edges: Vec<Edge>, n: usize) -> Vec<Merge> {
    edges.sort_by(|x, y| x.d.total_cmp(&y.d));
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    let mut size = vec![1usize; 2 * n - 1];
    let mut next = n;
    let find = |parent: &mut Vec<usize>, mut x: usize| {
        let mut root = x;
        while parent[root] != root {
            root = parent[root];
        }
        while parent[x] != root {
            let up = parent[x];
            parent[x] = root;
            x = up;
        }
        root
    };
    edges
        .iter()
        .map(|e| {
            let ra = find(&mut parent, e.a);
            let rb = find(&mut parent, e.b);
            let merged = size[ra] + size[rb];
            parent[ra] = next;
            parent[rb] = next;
            size[next] = merged;
            next += 1;
            Merge {
                left: ra,
                right: rb,
                d: e.d,
                size: merged,
            }
        })
        .collect()
}

fn bfs_hierarchy(h: &[Merge], root: usize, n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut level = vec![root];
    while !level.is_empty() {
        out.extend_from_slice(&level);
        level = level
            .iter()
            .filter(|&&x| x >= n)
            .flat_map(|&x| [h[x - n].left, h[x - n].right])
            .collect();
    }
    out
}

fn lambda_of(d: f64) -> f64 {
    1.0 / d.max(f64::MIN_POSITIVE)
}

fn condense(h: &[Merge], n: usize, min_cluster_size: usize) -> Vec<Condensed> {
    let root = 2 * h.len();
    let mut next_label = n + 1;
    let mut relabel = vec![0usize; root + 1];
    relabel[root] = n;
    let mut ignore = vec![false; root + 1];
    let mut out = Vec::new();
    let count = |x: usize| if x >= n { h[x - n].size } else { 1 };
    for node in bfs_hierarchy(h, root, n) {
        if ignore[node] || node < n {
            continue;
        }
        let m = h[node - n];
        let lambda = lambda_of(m.d);
        let (lc, rc) = (count(m.left), count(m.right));
        let parent_label = relabel[node];
        let drop_subtree = |sub: usize, out: &mut Vec<Condensed>, ignore: &mut Vec<bool>| {
            for s in bfs_hierarchy(h, sub, n) {
                if s < n {
                    out.push(Condensed {
                        parent: parent_label,
                        child: s,
                        lambda,
                        size: 1,
                    });
                }
                ignore[s] = true;
            }
        };
        if lc >= min_cluster_size && rc >= min_cluster_size {
            for (child, c) in [(m.left, lc), (m.right, rc)] {
                relabel[child] = next_label;
                next_label += 1;
                out.push(Condensed {
                    parent: relabel[node],
                    child: relabel[child],
                    lambda,
                    size: c,
                });
            }
        } else if lc < min_cluster_size && rc < min_cluster_size {
            drop_subtree(m.left, &mut out, &mut ignore);
            drop_subtree(m.right, &mut out, &mut ignore);
        } else if lc < min_cluster_size {
            relabel[m.right] = relabel[node];
            drop_subtree(m.left, &mut out, &mut ignore);
        } else {
            relabel[m.left] = relabel[node];
            drop_subtree(m.right, &mut out, &mut ignore);
        }
    }
    out
}

fn stabilities(tree: &[Condensed]) -> BTreeMap<usize, f64> {
    let smallest = tree.iter().map(|c| c.parent).min().unwrap_or(0);
    let mut births: BTreeMap<usize, f64> = tree.iter().map(|c| (c.child, c.lambda)).collect();
    births.insert(smallest, 0.0);
    let mut out: BTreeMap<usize, f64> = tree.iter().map(|c| (c.parent, 0.0)).collect();
    for c in tree {
        *out.get_mut(&c.parent).unwrap() += (c.lambda - births[&c.parent]) * c.size as f64;
    }
    out
}

fn select_clusters(tree: &[Condensed], allow_single: bool) -> BTreeSet<usize> {
    let mut stability = stabilities(tree);
    let mut nodes: Vec<usize> = stability.keys().rev().copied().collect();
    if !allow_single {
        nodes.pop();
    }
    let cluster_tree: Vec<&Condensed> = tree.iter().filter(|c| c.size > 1).collect();
    let mut is_cluster: BTreeMap<usize, bool> = nodes.iter().map(|&c| (c, true)).collect();
    for &node in &nodes {
        let subtree: f64 = cluster_tree.iter().filter(|c| c.parent == node).map(|c| stability[&c.child]).sum();
        if subtree > stability[&node] {
            is_cluster.insert(node, false);
            stability.insert(node, subtree);
        } else {
            // deselect every descendant cluster
            let mut stack: Vec<usize> = vec![node];
            while let Some(x) = stack.pop() {
                for c in cluster_tree.iter().filter(|c| c.parent == x) {
                    is_cluster.insert(c.child, false);
                    stack.push(c.child);
                }
            }
        }
    }
    is_cluster.into_iter().filter(|(_, v)| *v).map(|(k, _)| k).collect()
}

fn label_points(tree: &[Condensed], clusters: &BTreeSet<usize>, n: usize, allow_single: bool) -> Vec<i64> {
    let root = n;
    let mut up: BTreeMap<usize, usize> = BTreeMap::new();
    let mut leaf_lambda = vec![0.0; n];
    for c in tree {
        up.insert(c.child, c.parent);
        if c.child < n {
            leaf_lambda[c.child] = c.lambda;
        }
    }
    let label_of: BTreeMap<usize, i64> = clusters.iter().enumerate().map(|(i, &c)| (c, i as i64)).collect();
    let root_threshold = tree
        .iter()
        .filter(|c| c.parent == root)
        .map(|c| c.lambda)
        .fold(f64::NEG_INFINITY, f64::max);
    (0..n)
        .map(|p| {
            let mut node = up[&p];
            while node != root && !clusters.contains(&node) {
                node = up[&node];
            }
            if node != root {
                label_of[&node]
            } else if clusters.len() == 1 && allow_single && leaf_lambda[p] >= root_threshold {
                label_of.get(&root).copied().unwrap_or(-1)
            } else {
                -1
            }
        })
        .collect()
}

/// Clusters `n` points given the row-major `n x n` symmetric distance matrix `m`.
/// `min_samples` is taken equal to `min_cluster_size` and clamped to `n`.
pub fn hdbscan(m: &[f64], n: usize, min_cluster_size: usize, allow_single_cluster: bool) -> Clustering {
    assert_eq!(m.len(), n * n, "distance matrix must be n x n");
    if n == 0 {
        return Clustering {
            labels: Vec::new(),
            degenerate: false,
        };
    }
    if n == 1 {
        return Clustering {
            labels: vec![-1],
            degenerate: false,
        };
    }
    if m.iter().all(|&d| d == 0.0) {
        return Clustering {
            labels: vec![0; n],
            degenerate: true,
        };
    }
    let core = core_distances(m, n, min_cluster_size);
    let mst = prim_mst(m, n, &core);
    let hierarchy = single_linkage(mst, n);
    let tree = condense(&hierarchy, n, min_cluster_size.max(2));
    let clusters = select_clusters(&tree, allow_single_cluster);
    Clustering {
        labels: label_points(&tree, &clusters, n, allow_single_cluster),
        degenerate: false,
    }
}
