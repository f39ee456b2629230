//! Plain-text parameter checkpoints.
//!
//! ```text
//! rgnn-params v1
//! w1 <rows> <cols>
//! <row values, space separated>
//! ...
//! b1 1 <cols>
//! ...
//! ```
//! Values use Rust's shortest round-trip formatting, so a write/read cycle is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::model::ModelParams;
use crate::error::{Error, Result};

const MAGIC: &str = "rgnn-params v1";

fn push_matrix(out: &mut String, name: &str, rows: usize, cols: usize, data: impl Iterator<Item = f64>) {
    writeln!(out, "{name} {rows} {cols}").unwrap();
    let data: Vec<f64> = data.collect();
    for r in 0..rows {
        let line: Vec<String> = data[r * cols..(r + 1) * cols]
            .iter()
            .map(|x| format!("{x:?}"))
            .collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
    }
}

pub fn write_checkpoint(params: &ModelParams, path: &Path) -> Result<()> {
    let mut out = format!("{MAGIC}\n");
    push_matrix(
        &mut out,
        "w1",
        params.w1.nrows(),
        params.w1.ncols(),
        params.w1.iter().copied(),
    );
    push_matrix(&mut out, "b1", 1, params.b1.len(), params.b1.iter().copied());
    push_matrix(
        &mut out,
        "w2",
        params.w2.nrows(),
        params.w2.ncols(),
        params.w2.iter().copied(),
    );
    push_matrix(&mut out, "b2", 1, params.b2.len(), params.b2.iter().copied());
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<ModelParams> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let bad = |line: usize, msg: &str| Error::Parse {
        path: path.to_path_buf(),
        line: line + 1,
        msg: msg.to_string(),
    };
    match lines.next() {
        Some((_, MAGIC)) => {}
        _ => return Err(bad(0, "missing checkpoint header")),
    }
    let mut read = |expect: &str| -> Result<(usize, usize, Vec<f64>)> {
        let (i, header) = lines.next().ok_or_else(|| bad(0, "truncated checkpoint"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != expect {
            return Err(bad(i, &format!("expected header for {expect}")));
        }
        let rows: usize = parts[1].parse().map_err(|_| bad(i, "bad row count"))?;
        let cols: usize = parts[2].parse().map_err(|_| bad(i, "bad column count"))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (j, line) = lines.next().ok_or_else(|| bad(i, "truncated matrix"))?;
            for tok in line.split_whitespace() {
                data.push(tok.parse::<f64>().map_err(|_| bad(j, "bad number"))?);
            }
            if data.len() % cols.max(1) != 0 {
                return Err(bad(j, "ragged row"));
            }
        }
        if data.len() != rows * cols {
            return Err(bad(i, "matrix size mismatch"));
        }
        Ok((rows, cols, data))
    };
    let (r, c, w1) = read("w1")?;
    let w1 = Array2::from_shape_vec((r, c), w1).map_err(|e| Error::invalid(e.to_string()))?;
    let (_, _, b1) = read("b1")?;
    let (r, c, w2) = read("w2")?;
    let w2 = Array2::from_shape_vec((r, c), w2).map_err(|e| Error::invalid(e.to_string()))?;
    let (_, _, b2) = read("b2")?;
    let params = ModelParams {
        w1,
        b1: Array1::from(b1),
        w2,
        b2: Array1::from(b2),
    };
    if params.b1.len() != params.w1.ncols()
        || params.w2.nrows() != 2 * params.w1.ncols()
        || params.b2.len() != params.w2.ncols()
    {
        return Err(Error::invalid("checkpoint shapes are inconsistent"));
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_lossless() {
        let p = ModelParams::init(5, 3, 4, 17);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.txt");
        write_checkpoint(&p, &path).unwrap();
        assert_eq!(read_checkpoint(&path).unwrap(), p);
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.txt");
        fs::write(&path, "hello\n").unwrap();
        assert!(read_checkpoint(&path).is_err());
    }
}
