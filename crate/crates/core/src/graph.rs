//! Undirected, unweighted graph topology in compressed adjacency form.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Immutable undirected graph. Neighbor lists are sorted, deduplicated and
/// never contain the node itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    num_edges: usize,
}

impl Graph {
    /// Builds a graph from arbitrary (possibly duplicated, one-directional)
    /// edge pairs. Self-loops are dropped.
    pub fn from_edges(num_nodes: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); num_nodes];
        for &(u, v) in edges {
            let (ui, vi) = (u as usize, v as usize);
            if ui >= num_nodes || vi >= num_nodes {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) references a node outside 0..{num_nodes}"
                )));
            }
            if u == v {
                continue;
            }
            adj[ui].push(v);
            adj[vi].push(u);
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        let num_edges = neighbors.len() / 2;
        Ok(Graph {
            offsets,
            neighbors,
            num_edges,
        })
    }

    pub fn empty(num_nodes: usize) -> Self {
        Graph {
            offsets: vec![0; num_nodes + 1],
            neighbors: Vec::new(),
            num_edges: 0,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| (v as usize) > u)
                .map(move |&v| (u as u32, v))
        })
    }

    /// Fraction of edges whose endpoints share a label.
    pub fn homophily(&self, labels: &[usize]) -> f64 {
        if self.num_edges == 0 {
            return 0.0;
        }
        let same = self
            .edges()
            .filter(|&(u, v)| labels[u as usize] == labels[v as usize])
            .count();
        same as f64 / self.num_edges as f64
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

fn parse_id(tok: &str, path: &Path, line: usize) -> Result<i64> {
    let id: i64 = tok.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("non-integer token {tok:?}"),
    })?;
    if id < 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("negative node id {id}"),
        });
    }
    Ok(id)
}

fn read_pairs(path: &Path) -> Result<Vec<(i64, i64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected two ids, found {}", toks.len()),
            });
        }
        pairs.push((parse_id(toks[0], path, i + 1)?, parse_id(toks[1], path, i + 1)?));
    }
    Ok(pairs)
}

/// Loads a whitespace-separated edge list of dense 0-based ids.
///
/// The node count is `1 + max id` unless `num_nodes` overrides it (the
/// override must cover every id seen).
pub fn load_edge_list(path: &Path, num_nodes: Option<usize>) -> Result<Graph> {
    let pairs = read_pairs(path)?;
    let max_id = pairs.iter().map(|&(u, v)| u.max(v)).max();
    let n = match (num_nodes, max_id) {
        (Some(n), Some(m)) if (m as usize) >= n => {
            return Err(Error::invalid(format!("node id {m} exceeds declared node count {n}")))
        }
        (Some(n), _) => n,
        (None, Some(m)) => m as usize + 1,
        (None, None) => 0,
    };
    let edges: Vec<(u32, u32)> = pairs.iter().map(|&(u, v)| (u as u32, v as u32)).collect();
    Graph::from_edges(n, &edges)
}

/// Mapping between external (possibly sparse) ids and dense node ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    external: Vec<i64>,
    lookup: BTreeMap<i64, u32>,
}

impl IdMap {
    pub fn len(&self) -> usize {
        self.external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external.is_empty()
    }

    pub fn dense(&self, external: i64) -> Option<u32> {
        self.lookup.get(&external).copied()
    }

    pub fn external(&self, dense: u32) -> i64 {
        self.external[dense as usize]
    }

    pub(crate) fn intern_external(&mut self, ext: i64) -> u32 {
        if let Some(&id) = self.lookup.get(&ext) {
            return id;
        }
        let id = self.external.len() as u32;
        self.external.push(ext);
        self.lookup.insert(ext, id);
        id
    }

    /// Writes `external_id,node_id` rows in dense-id order.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = String::from("external_id,node_id\n");
        for (i, ext) in self.external.iter().enumerate() {
            out.push_str(&format!("{ext},{i}\n"));
        }
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Loads an edge list with arbitrary non-negative ids, assigning dense ids in
/// ascending order of the external id.
pub fn load_edge_list_remapped(path: &Path) -> Result<(Graph, IdMap)> {
    let pairs = read_pairs(path)?;
    let mut ids: Vec<i64> = pairs.iter().flat_map(|&(u, v)| [u, v]).collect();
    ids.sort_unstable();
    ids.dedup();
    let mut map = IdMap::default();
    for id in ids {
        map.intern_external(id);
    }
    let edges: Vec<(u32, u32)> = pairs.iter().map(|&(u, v)| (map.lookup[&u], map.lookup[&v])).collect();
    Ok((Graph::from_edges(map.len(), &edges)?, map))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_path_graph() {
        let f = write_tmp("0 1\n1 2\n");
        let g = load_edge_list(f.path(), None).unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.neighbors(1), &[0, 2]);
    }

    #[test]
    fn dedups_and_drops_self_loops() {
        let f = write_tmp("0 1\n1 0\n0 0\n");
        let g = load_edge_list(f.path(), None).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
    }

    #[test]
    fn rejects_bad_tokens() {
        let f = write_tmp("0 x\n");
        assert!(matches!(load_edge_list(f.path(), None), Err(Error::Parse { .. })));
        let f = write_tmp("0 -1\n");
        assert!(matches!(load_edge_list(f.path(), None), Err(Error::Parse { .. })));
        assert!(matches!(
            load_edge_list(Path::new("/nonexistent/edges.txt"), None),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn explicit_node_count() {
        let f = write_tmp("0 1\n");
        let g = load_edge_list(f.path(), Some(5)).unwrap();
        assert_eq!(g.num_nodes(), 5);
        assert_eq!(g.degree(4), 0);
        assert!(load_edge_list(f.path(), Some(1)).is_err());
    }

    #[test]
    fn remaps_sparse_ids() {
        let f = write_tmp("100 7\n7 42\n");
        let (g, map) = load_edge_list_remapped(f.path()).unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(map.dense(7), Some(0));
        assert_eq!(map.dense(42), Some(1));
        assert_eq!(map.external(2), 100);
        assert_eq!(g.neighbors(0), &[1, 2]);
    }

    #[test]
    fn write_reload_is_identical() {
        let g = Graph::from_edges(6, &[(0, 1), (5, 2), (2, 3), (3, 0), (1, 0)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        g.write_edge_list(&p).unwrap();
        let h = load_edge_list(&p, Some(6)).unwrap();
        assert_eq!(g, h);
    }
}
