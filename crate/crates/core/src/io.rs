//! CSV/JSON file formats.
//!
//! * features: `node_id,f1,...,fd` with integer categories (1-based)
//! * labels: `node_id,class` with 0-based classes, labeled nodes only
//! * splits: `node_id,role` with role in `train|val|test`
//! * clusters: `node_id,cluster`
//!
//! Writers emit rows in node order with `\n` line endings, so identical
//! inputs give byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{CategoricalFeatures, LabelData, NodeSplit, Role};
use crate::graph::{Graph, IdMap};

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, tok: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("cannot parse {tok:?}"),
    })
}

type Rows = (Vec<String>, Vec<(usize, Vec<String>)>);

/// Reads `(node_id, fields...)` rows, checking every id is below `num_nodes`.
fn read_rows(path: &Path, num_nodes: Option<usize>) -> Result<Rows> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let id: usize = parse_field(path, line, rec.get(0).unwrap_or(""))?;
        if num_nodes.is_some_and(|n| id >= n) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("node id {id} out of range"),
            });
        }
        rows.push((id, rec.iter().skip(1).map(str::to_string).collect()));
    }
    Ok((header, rows))
}

pub fn write_features(path: &Path, features: &CategoricalFeatures) -> Result<()> {
    let mut out = String::from("node_id");
    for i in 1..=features.dim() {
        write!(out, ",f{i}").unwrap();
    }
    out.push('\n');
    for v in 0..features.num_nodes() {
        write!(out, "{v}").unwrap();
        for x in features.row(v) {
            write!(out, ",{x}").unwrap();
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// Reads a feature table. Without explicit `domains`, each column's domain is
/// its largest observed category (at least 2). Every node must appear exactly once.
pub fn read_features(path: &Path, domains: Option<&[u32]>) -> Result<CategoricalFeatures> {
    let (header, rows) = read_rows(path, None)?;
    let d = header.len().saturating_sub(1);
    let n = rows.len();
    let mut values = vec![0u32; n * d];
    let mut seen = vec![false; n];
    for (k, (id, fields)) in rows.iter().enumerate() {
        if *id >= n || seen[*id] {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: k + 2,
                msg: format!("node id {id} duplicated or not dense"),
            });
        }
        seen[*id] = true;
        if fields.len() != d {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: k + 2,
                msg: format!("expected {d} feature values"),
            });
        }
        for (i, f) in fields.iter().enumerate() {
            values[id * d + i] = parse_field(path, k + 2, f)?;
        }
    }
    let domains = match domains {
        Some(g) => g.to_vec(),
        None => (0..d)
            .map(|i| (0..n).map(|v| values[v * d + i]).max().unwrap_or(2).max(2))
            .collect(),
    };
    CategoricalFeatures::new(n, domains, values)
}

/// Real-valued feature table (binary-probability reconstruction).
pub fn write_real_features(path: &Path, num_nodes: usize, dim: usize, values: &[f64]) -> Result<()> {
    let mut out = String::from("node_id");
    for i in 1..=dim {
        write!(out, ",f{i}").unwrap();
    }
    out.push('\n');
    for v in 0..num_nodes {
        write!(out, "{v}").unwrap();
        for x in &values[v * dim..(v + 1) * dim] {
            write!(out, ",{x:?}").unwrap();
        }
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn write_labels(path: &Path, labels: &LabelData) -> Result<()> {
    let mut out = String::from("node_id,class\n");
    for v in labels.labeled_nodes() {
        writeln!(out, "{v},{}", labels.class_of(v).expect("labeled")).unwrap();
    }
    write_text(path, &out)
}

/// Reads labels for a graph of `num_nodes` nodes. Without `num_classes`, the
/// class count is one more than the largest class seen.
pub fn read_labels(path: &Path, num_nodes: usize, num_classes: Option<usize>) -> Result<LabelData> {
    let (_, rows) = read_rows(path, Some(num_nodes))?;
    let mut labels = vec![None; num_nodes];
    for (k, (id, fields)) in rows.iter().enumerate() {
        let class: u32 = parse_field(path, k + 2, fields.first().map(String::as_str).unwrap_or(""))?;
        labels[*id] = Some(class);
    }
    let c = num_classes.unwrap_or_else(|| labels.iter().flatten().max().map_or(2, |&m| m as usize + 1).max(2));
    LabelData::new(c, labels)
}

pub fn write_splits(path: &Path, split: &NodeSplit) -> Result<()> {
    let mut out = String::from("node_id,role\n");
    for (v, role) in split.roles().iter().enumerate() {
        writeln!(out, "{v},{}", role.as_str()).unwrap();
    }
    write_text(path, &out)
}

pub fn read_splits(path: &Path, num_nodes: usize) -> Result<NodeSplit> {
    let (_, rows) = read_rows(path, Some(num_nodes))?;
    let mut roles = vec![None; num_nodes];
    for (k, (id, fields)) in rows.iter().enumerate() {
        let tok = fields.first().map(String::as_str).unwrap_or("");
        roles[*id] = Some(Role::parse(tok).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: k + 2,
            msg: format!("unknown role {tok:?}"),
        })?);
    }
    let roles = roles
        .into_iter()
        .enumerate()
        .map(|(v, r)| r.ok_or_else(|| Error::invalid(format!("node {v} has no split role"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(NodeSplit::from_roles(roles))
}

pub fn write_clusters(path: &Path, cluster: &[usize]) -> Result<()> {
    let mut out = String::from("node_id,cluster\n");
    for (v, r) in cluster.iter().enumerate() {
        writeln!(out, "{v},{r}").unwrap();
    }
    write_text(path, &out)
}

pub fn read_clusters(path: &Path, num_nodes: usize) -> Result<Vec<usize>> {
    let (_, rows) = read_rows(path, Some(num_nodes))?;
    let mut cluster = vec![None; num_nodes];
    for (k, (id, fields)) in rows.iter().enumerate() {
        cluster[*id] = Some(parse_field(
            path,
            k + 2,
            fields.first().map(String::as_str).unwrap_or(""),
        )?);
    }
    cluster
        .into_iter()
        .enumerate()
        .map(|(v, r)| r.ok_or_else(|| Error::invalid(format!("node {v} has no cluster"))))
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// A citation dataset in the Planetoid raw layout: `<name>.content` rows of
/// `paper_id word_1 ... word_d class_name` and `<name>.cites` rows of
/// `cited citing` paper ids.
#[derive(Debug, Clone)]
pub struct CitationDataset {
    pub graph: Graph,
    pub features: CategoricalFeatures,
    pub labels: LabelData,
    pub class_names: Vec<String>,
    pub ids: IdMap,
}

pub fn load_citation_dataset(dir: &Path, name: &str) -> Result<CitationDataset> {
    let content_path = dir.join(format!("{name}.content"));
    let cites_path = dir.join(format!("{name}.cites"));
    let content = fs::read_to_string(&content_path).map_err(|e| Error::io(&content_path, e))?;

    let mut order: Vec<(String, Vec<u32>, String)> = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() < 3 {
            return Err(Error::Parse {
                path: content_path.clone(),
                line: i + 1,
                msg: "expected id, features and class".into(),
            });
        }
        let bits = toks[1..toks.len() - 1]
            .iter()
            .map(|t| match *t {
                "0" | "0.0" => Ok(1),
                "1" | "1.0" => Ok(2),
                _ => Err(Error::Parse {
                    path: content_path.clone(),
                    line: i + 1,
                    msg: format!("non-binary feature {t:?}"),
                }),
            })
            .collect::<Result<Vec<u32>>>()?;
        order.push((toks[0].to_string(), bits, toks[toks.len() - 1].to_string()));
    }
    let d = order.first().map_or(0, |r| r.1.len());
    let index: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, r)| (r.0.as_str(), i)).collect();
    let mut class_names: Vec<String> = order.iter().map(|r| r.2.clone()).collect();
    class_names.sort();
    class_names.dedup();

    let cites = fs::read_to_string(&cites_path).map_err(|e| Error::io(&cites_path, e))?;
    let mut edges = Vec::new();
    for line in cites.lines() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            continue;
        }
        // citations to papers without content rows are dropped
        if let (Some(&u), Some(&v)) = (index.get(toks[0]), index.get(toks[1])) {
            edges.push((u as u32, v as u32));
        }
    }
    let n = order.len();
    let graph = Graph::from_edges(n, &edges)?;
    let mut values = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut ids = IdMap::default();
    for (k, (id, bits, class)) in order.iter().enumerate() {
        if bits.len() != d {
            return Err(Error::Parse {
                path: content_path.clone(),
                line: k + 1,
                msg: "inconsistent feature count".into(),
            });
        }
        values.extend_from_slice(bits);
        labels.push(Some(class_names.binary_search(class).expect("collected") as u32));
        // non-numeric ids get their row index as the external id
        ids.intern_external(id.parse().unwrap_or(k as i64));
    }
    Ok(CitationDataset {
        graph,
        features: CategoricalFeatures::new(n, vec![2; d], values)?,
        labels: LabelData::new(class_names.len().max(2), labels)?,
        class_names,
        ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_roundtrip_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let f = CategoricalFeatures::new(3, vec![2, 3], vec![1, 3, 2, 2, 1, 1]).unwrap();
        let p = dir.path().join("f.csv");
        write_features(&p, &f).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text, "node_id,f1,f2\n0,1,3\n1,2,2\n2,1,1\n");
        assert_eq!(read_features(&p, Some(&[2, 3])).unwrap(), f);

        let l = LabelData::new(3, vec![Some(2), None, Some(0)]).unwrap();
        let p = dir.path().join("l.csv");
        write_labels(&p, &l).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "node_id,class\n0,2\n2,0\n");
        assert_eq!(read_labels(&p, 3, Some(3)).unwrap(), l);

        let s = NodeSplit::standard(7, 1);
        let p = dir.path().join("s.csv");
        write_splits(&p, &s).unwrap();
        assert_eq!(read_splits(&p, 7).unwrap(), s);

        let p = dir.path().join("c.csv");
        write_clusters(&p, &[0, 1, 1]).unwrap();
        assert_eq!(read_clusters(&p, 3).unwrap(), vec![0, 1, 1]);
    }

    #[test]
    fn rejects_malformed_tables() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "node_id,class\n0,x\n").unwrap();
        assert!(read_labels(&p, 2, None).is_err());
        fs::write(&p, "node_id,class\n5,1\n").unwrap();
        assert!(read_labels(&p, 2, None).is_err());
        fs::write(&p, "node_id,role\n0,train\n1,holdout\n").unwrap();
        assert!(read_splits(&p, 2).is_err());
        fs::write(&p, "node_id,f1\n0,1\n0,2\n").unwrap();
        assert!(read_features(&p, None).is_err());
    }

    #[test]
    fn citation_layout() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("toy.content"), "10 0 1 0 A\n20 1 1 0 B\n30 0 0 1 A\n").unwrap();
        fs::write(dir.path().join("toy.cites"), "10 20\n20 30\n30 99\n").unwrap();
        let ds = load_citation_dataset(dir.path(), "toy").unwrap();
        assert_eq!(ds.graph.num_nodes(), 3);
        assert_eq!(ds.graph.num_edges(), 2);
        assert_eq!(ds.features.row(1), &[2, 2, 1]);
        assert_eq!(ds.labels.class_of(1), Some(1));
        assert_eq!(ds.class_names, vec!["A", "B"]);
        assert_eq!(ds.ids.external(2), 30);
    }
}
