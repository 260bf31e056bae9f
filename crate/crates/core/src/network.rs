//! Pearson correlation networks over EMA items, their connectivity, and JSON
//! and Graphviz export.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{EmaItem, EmaVector};

/// Edges with `|r|` below this are left out of DOT drawings. The matrix
/// itself is never thresholded.
pub const DEFAULT_EDGE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemSubset {
    All,
    Positive,
    Negative,
}

impl ItemSubset {
    pub fn items(self) -> &'static [EmaItem] {
        match self {
            ItemSubset::All => &EmaItem::ALL,
            ItemSubset::Positive => &EmaItem::ALL[..5],
            ItemSubset::Negative => &EmaItem::ALL[5..],
        }
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(self) -> usize {
        self.items().len()
    }

    pub fn flag(self) -> &'static str {
        match self {
            ItemSubset::All => "all",
            ItemSubset::Positive => "positive",
            ItemSubset::Negative => "negative",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ItemSubset::All => "All EMAs",
            ItemSubset::Positive => "Positive EMAs",
            ItemSubset::Negative => "Negative EMAs",
        }
    }

    /// Largest possible `|connectivity|`: one unit per unordered pair.
    pub fn max_connectivity(self) -> f64 {
        let k = self.len();
        (k * (k - 1) / 2) as f64
    }
}

impl FromStr for ItemSubset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(ItemSubset::All),
            "positive" => Ok(ItemSubset::Positive),
            "negative" => Ok(ItemSubset::Negative),
            _ => Err(Error::InvalidConfig(format!("unknown item subset `{s}` (expected all|positive|negative)"))),
        }
    }
}

/// Symmetric correlation matrix with unit diagonal, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationNetwork {
    items: Vec<EmaItem>,
    matrix: Vec<f64>,
    n_samples: usize,
}

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    items: Vec<EmaItem>,
    n_samples: usize,
    matrix: Vec<Vec<f64>>,
}

impl CorrelationNetwork {
    /// Validates and wraps a full matrix.
    pub fn from_matrix(items: Vec<EmaItem>, rows: Vec<Vec<f64>>, n_samples: usize) -> Result<Self> {
        let k = items.len();
        if rows.len() != k || rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidConfig(format!("network matrix must be {k}x{k}")));
        }
        for i in 0..k {
            if rows[i][i] != 1.0 {
                return Err(Error::InvalidConfig(format!("diagonal entry ({i},{i}) is not 1")));
            }
            for j in 0..i {
                let (a, b) = (rows[i][j], rows[j][i]);
                if a != b {
                    return Err(Error::InvalidConfig(format!("matrix not symmetric at ({i},{j})")));
                }
                if !(-1.0..=1.0).contains(&a) {
                    return Err(Error::InvalidConfig(format!("entry ({i},{j}) = {a} outside [-1, 1]")));
                }
            }
        }
        Ok(CorrelationNetwork { items, matrix: rows.into_iter().flatten().collect(), n_samples })
    }

    pub fn items(&self) -> &[EmaItem] {
        &self.items
    }

    pub fn dim(&self) -> usize {
        self.items.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.dim() + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix.chunks(self.dim().max(1)).map(<[f64]>::to_vec).collect()
    }

    /// Sum of the strictly upper triangle: each unordered pair once, no diagonal.
    pub fn connectivity(&self) -> f64 {
        let k = self.dim();
        (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).map(|(i, j)| self.get(i, j)).sum()
    }

    pub fn to_json(&self) -> String {
        let doc = NetworkJson { items: self.items.clone(), n_samples: self.n_samples, matrix: self.rows() };
        serde_json::to_string_pretty(&doc).expect("network serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: NetworkJson = serde_json::from_str(s)?;
        Self::from_matrix(doc.items, doc.matrix, doc.n_samples)
    }

    /// Undirected Graphviz graph. One edge per pair with `|r| >= threshold`
    /// and `r != 0`; pen width `1 + 4|r|`, blue for positive, red for negative.
    pub fn to_dot(&self, threshold: f64) -> String {
        let mut out = String::from("graph ema_network {\n  node [shape=circle];\n");
        for item in &self.items {
            let _ = writeln!(out, "  {};", item.code());
        }
        let k = self.dim();
        for i in 0..k {
            for j in i + 1..k {
                let r = self.get(i, j);
                if r == 0.0 || r.abs() < threshold {
                    continue;
                }
                let color = if r > 0.0 { "blue" } else { "red" };
                let _ = writeln!(
                    out,
                    "  {} -- {} [color={color}, penwidth={:.3}, label=\"{r:.2}\"];",
                    self.items[i].code(),
                    self.items[j].code(),
                    1.0 + 4.0 * r.abs(),
                );
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Pearson network of the subset's items across `days`.
///
/// An item with zero variance in the sample correlates 0 with every other
/// item; the diagonal is always 1.
pub fn pearson_network(days: &[EmaVector], subset: ItemSubset) -> Result<CorrelationNetwork> {
    let n = days.len();
    if n < 2 {
        return Err(Error::InsufficientData { have: n, need: 2 });
    }
    let items = subset.items();
    let k = items.len();

    // Centered columns; scores are small integers so the means are exact to
    // within one rounding.
    let mut centered = vec![0.0f64; k * n];
    for (c, item) in items.iter().enumerate() {
        let col = &mut centered[c * n..(c + 1) * n];
        let mut sum = 0u32;
        for (slot, day) in col.iter_mut().zip(days) {
            let v = day.get(*item);
            sum += v as u32;
            *slot = v as f64;
        }
        let m = sum as f64 / n as f64;
        col.iter_mut().for_each(|v| *v -= m);
    }
    let ss: Vec<f64> = centered.chunks(n).map(|c| c.iter().map(|v| v * v).sum()).collect();

    let mut matrix = vec![0.0f64; k * k];
    for i in 0..k {
        matrix[i * k + i] = 1.0;
        for j in i + 1..k {
            let r = if ss[i] > 0.0 && ss[j] > 0.0 {
                let a = &centered[i * n..(i + 1) * n];
                let b = &centered[j * n..(j + 1) * n];
                let sxy: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (sxy / (ss[i] * ss[j]).sqrt()).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            matrix[i * k + j] = r;
            matrix[j * k + i] = r;
        }
    }
    Ok(CorrelationNetwork { items: items.to_vec(), matrix, n_samples: n })
}

/// `connectivity(a) - connectivity(b)`. By convention `a` is the isolation
/// network (or the first baseline sample) and `b` the sociability network.
pub fn connectivity_difference(a: &CorrelationNetwork, b: &CorrelationNetwork) -> Result<f64> {
    if a.items != b.items {
        return Err(Error::SubsetMismatch {
            left: a.items.iter().map(|i| i.name().to_string()).collect(),
            right: b.items.iter().map(|i| i.name().to_string()).collect(),
        });
    }
    Ok(a.connectivity() - b.connectivity())
}
