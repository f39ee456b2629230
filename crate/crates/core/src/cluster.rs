//! Balanced edge-cut graph partitioning.
//!
//! Clusters are grown one at a time from a pseudo-peripheral unassigned node,
//! always absorbing the frontier node with the most links into the cluster,
//! until they reach their target size. They are then
//! improved by greedy boundary moves that strictly reduce the edge cut while
//! respecting the size cap `ceil((1 + BALANCE_SLACK) N / C)`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{self, Purpose};

pub const BALANCE_SLACK: f64 = 0.1;
pub const MAX_REFINE_SWEEPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterAssignment {
    pub cluster: Vec<usize>,
    pub num_clusters: usize,
    pub edge_cut: usize,
    /// Edge cut before refinement and after each refinement sweep.
    pub cut_history: Vec<usize>,
}

impl ClusterAssignment {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_clusters];
        for &r in &self.cluster {
            sizes[r] += 1;
        }
        sizes
    }

    pub fn members(&self, r: usize) -> Vec<usize> {
        (0..self.cluster.len()).filter(|&v| self.cluster[v] == r).collect()
    }
}

pub fn max_cluster_size(num_nodes: usize, num_clusters: usize) -> usize {
    ((1.0 + BALANCE_SLACK) * num_nodes as f64 / num_clusters as f64).ceil() as usize
}

/// Number of undirected edges whose endpoints lie in different clusters.
pub fn edge_cut(graph: &Graph, assignment: &[usize]) -> Result<usize> {
    if assignment.len() < graph.num_nodes() {
        return Err(Error::invalid(format!(
            "assignment covers {} of {} nodes",
            assignment.len(),
            graph.num_nodes()
        )));
    }
    Ok(graph
        .edges()
        .filter(|&(u, v)| assignment[u as usize] != assignment[v as usize])
        .count())
}

const UNASSIGNED: usize = usize::MAX;

/// Farthest unassigned node (by BFS over unassigned nodes) from `start`;
/// ties go to the smallest id.
fn farthest_unassigned(graph: &Graph, cluster: &[usize], start: usize, dist: &mut [usize]) -> usize {
    let mut touched = vec![start];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut best = start;
    while let Some(v) = queue.pop_front() {
        if dist[v] > dist[best] || (dist[v] == dist[best] && v < best) {
            best = v;
        }
        for &u in graph.neighbors(v) {
            let u = u as usize;
            if cluster[u] == UNASSIGNED && dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                touched.push(u);
                queue.push_back(u);
            }
        }
    }
    for v in touched {
        dist[v] = usize::MAX;
    }
    best
}

fn grow(graph: &Graph, num_clusters: usize, seed: u64) -> Vec<usize> {
    let n = graph.num_nodes();
    let mut rng = rng::stream(seed, Purpose::Partition, 0);
    let mut cluster = vec![UNASSIGNED; n];
    let mut dist = vec![usize::MAX; n];
    let mut links = vec![0usize; n];
    let mut remaining: Vec<usize> = (0..n).collect();
    let base = n / num_clusters;
    let extra = n % num_clusters;

    for r in 0..num_clusters {
        let target = base + usize::from(r < extra);
        let mut size = 0;
        while size < target {
            remaining.retain(|&v| cluster[v] == UNASSIGNED);
            let start = remaining[rng.random_range(0..remaining.len())];
            let root = farthest_unassigned(graph, &cluster, start, &mut dist);
            cluster[root] = r;
            size += 1;
            // frontier ordered by links into the growing cluster, then by
            // discovery order
            let mut heap = BinaryHeap::new();
            let mut order = 0usize;
            let mut push_neighbors = |v: usize, cluster: &[usize], links: &mut [usize], heap: &mut BinaryHeap<_>| {
                for &u in graph.neighbors(v) {
                    let u = u as usize;
                    if cluster[u] == UNASSIGNED {
                        links[u] += 1;
                        heap.push((links[u], Reverse(order), u));
                        order += 1;
                    }
                }
            };
            push_neighbors(root, &cluster, &mut links, &mut heap);
            while size < target {
                let Some((l, _, u)) = heap.pop() else { break };
                if cluster[u] != UNASSIGNED || l != links[u] {
                    continue;
                }
                cluster[u] = r;
                size += 1;
                push_neighbors(u, &cluster, &mut links, &mut heap);
            }
            for (_, _, u) in heap.drain() {
                links[u] = 0;
            }
        }
    }
    cluster
}

/// One pass over all nodes in id order, applying every strictly improving
/// boundary move. Returns the number of moves made.
fn refine_sweep(graph: &Graph, cluster: &mut [usize], sizes: &mut [usize], cap: usize) -> usize {
    let mut moves = 0;
    let mut links = vec![0usize; sizes.len()];
    for v in 0..graph.num_nodes() {
        let from = cluster[v];
        if sizes[from] <= 1 {
            continue;
        }
        let nbrs = graph.neighbors(v);
        for &u in nbrs {
            links[cluster[u as usize]] += 1;
        }
        let internal = links[from];
        let mut best: Option<(usize, usize)> = None;
        for &u in nbrs {
            let to = cluster[u as usize];
            if to == from || sizes[to] + 1 > cap {
                continue;
            }
            let gain = links[to];
            if gain > internal && best.is_none_or(|(g, t)| gain > g || (gain == g && to < t)) {
                best = Some((gain, to));
            }
        }
        for &u in nbrs {
            links[cluster[u as usize]] = 0;
        }
        if let Some((_, to)) = best {
            cluster[v] = to;
            sizes[from] -= 1;
            sizes[to] += 1;
            moves += 1;
        }
    }
    moves
}

/// Splits the graph into `num_clusters` nonempty, balanced clusters with a
/// small edge cut. Deterministic given `seed`.
pub fn partition(graph: &Graph, num_clusters: usize, seed: u64) -> Result<ClusterAssignment> {
    let n = graph.num_nodes();
    if num_clusters < 1 || num_clusters > n {
        return Err(Error::invalid(format!("cluster count {num_clusters} outside 1..={n}")));
    }
    let mut cluster = grow(graph, num_clusters, seed);
    let mut sizes = vec![0; num_clusters];
    for &r in &cluster {
        sizes[r] += 1;
    }
    let cap = max_cluster_size(n, num_clusters);
    let mut cut = edge_cut(graph, &cluster)?;
    let mut cut_history = vec![cut];
    for _ in 0..MAX_REFINE_SWEEPS {
        if refine_sweep(graph, &mut cluster, &mut sizes, cap) == 0 {
            break;
        }
        let next = edge_cut(graph, &cluster)?;
        debug_assert!(next <= cut, "refinement increased the cut");
        cut = next;
        cut_history.push(cut);
    }
    Ok(ClusterAssignment {
        cluster,
        num_clusters,
        edge_cut: cut,
        cut_history,
    })
}
