//! Grid dump/load: one node per row, columns `x1..xn,weight`, header required.

use crate::error::{Error, Result};
use crate::geometry::{BallGrid, SphereGrid};

/// A raw node table as read from CSV, before any grid validation.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn parse_grid_csv(text: &str) -> Result<NodeTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::GridCsv(e.to_string()))?.clone();
    let cols = header.len();
    if cols < 2 {
        return Err(Error::GridCsv(format!("expected at least 2 columns, found {cols}")));
    }
    let n = cols - 1;
    for (i, name) in header.iter().enumerate() {
        let want = if i == n { "weight".to_string() } else { format!("x{}", i + 1) };
        if name.trim() != want {
            return Err(Error::GridCsv(format!("column {} is {name:?}, expected {want:?}", i + 1)));
        }
    }
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::GridCsv(e.to_string()))?;
        if rec.len() != cols {
            return Err(Error::GridCsv(format!("row {} has {} fields", row + 1, rec.len())));
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::GridCsv(format!("row {} column {}: {field:?}", row + 1, c + 1)))?;
            if !v.is_finite() {
                return Err(Error::GridCsv(format!("row {} column {} is not finite", row + 1, c + 1)));
            }
            if c == n {
                weights.push(v);
            } else {
                nodes.push(v);
            }
        }
    }
    Ok(NodeTable { n, nodes, weights })
}

pub fn write_grid_csv<'a>(n: usize, nodes: impl Iterator<Item = &'a [f64]>, weights: &[f64]) -> String {
    let mut out = String::new();
    for c in 1..=n {
        out.push_str(&format!("x{c},"));
    }
    out.push_str("weight\n");
    for (p, w) in nodes.zip(weights) {
        for x in p {
            out.push_str(&format!("{x:.17e},"));
        }
        out.push_str(&format!("{w:.17e}\n"));
    }
    out
}

impl SphereGrid {
    pub fn to_csv(&self) -> String {
        write_grid_csv(self.dim(), self.nodes(), self.weights())
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let t = parse_grid_csv(text)?;
        SphereGrid::from_nodes(t.n, t.nodes, t.weights)
    }
}

impl BallGrid {
    pub fn to_csv(&self) -> String {
        write_grid_csv(self.dim(), self.nodes(), self.weights())
    }
}
