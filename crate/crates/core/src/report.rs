//! Text tables, histogram bins and run manifests.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::contexts::Context;
use crate::permtest::{Comparison, SummaryStats, P_VALUE_FLOOR};

/// Marker appended to a t-score: `*` for p < 0.001, `**` for 0.001 <= p < 0.05.
pub fn significance_marker(p: f64) -> &'static str {
    if p < 0.001 {
        "*"
    } else if p < 0.05 {
        "**"
    } else {
        ""
    }
}

/// p-value for text output. Values below 1e-300 (including an exact 0)
/// print as `< 1e-300`.
pub fn format_p(p: f64) -> String {
    if p < P_VALUE_FLOOR {
        "< 1e-300".to_string()
    } else if p < 0.001 {
        format!("{p:.2e}")
    } else {
        format!("{p:.3}")
    }
}

pub const MAX_BINS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bin {
    pub start: f64,
    pub end: f64,
    pub baseline: usize,
    pub context: usize,
}

/// Shared fixed-width bins for a baseline and a context distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub width: f64,
    pub bins: Vec<Bin>,
}

/// Type-7 quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Freedman–Diaconis width `2 * IQR * n^(-1/3)` over the pooled values.
/// Falls back to Sturges' rule when the IQR is zero, and to a single unit
/// bin when every value is equal.
pub fn histogram(baseline: &[f64], context: &[f64]) -> Histogram {
    let mut pooled: Vec<f64> = baseline.iter().chain(context).copied().collect();
    if pooled.is_empty() {
        return Histogram { width: 0.0, bins: Vec::new() };
    }
    pooled.sort_by(f64::total_cmp);
    let n = pooled.len();
    let (lo, hi) = (pooled[0], pooled[n - 1]);
    let range = hi - lo;

    let (start, width, count) = if range <= 0.0 {
        (lo - 0.5, 1.0, 1)
    } else {
        let iqr = quantile(&pooled, 0.75) - quantile(&pooled, 0.25);
        let mut width = 2.0 * iqr / (n as f64).cbrt();
        if width.is_nan() || width <= 0.0 {
            width = range / ((n as f64).log2().ceil() + 1.0);
        }
        let mut count = (range / width).ceil() as usize;
        if count > MAX_BINS {
            count = MAX_BINS;
            width = range / MAX_BINS as f64;
        }
        (lo, width, count.max(1))
    };

    let mut bins: Vec<Bin> = (0..count)
        .map(|i| Bin { start: start + i as f64 * width, end: start + (i + 1) as f64 * width, baseline: 0, context: 0 })
        .collect();
    if let Some(last) = bins.last_mut() {
        last.end = last.end.max(hi);
    }
    let index = |x: f64| (((x - start) / width).floor().max(0.0) as usize).min(count - 1);
    for &x in baseline {
        bins[index(x)].baseline += 1;
    }
    for &x in context {
        bins[index(x)].context += 1;
    }
    Histogram { width, bins }
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_start,bin_end,baseline_count,context_count\n");
        for b in &self.bins {
            let _ = writeln!(out, "{},{},{},{}", b.start, b.end, b.baseline, b.context);
        }
        out
    }
}

/// One context's cells in a results row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextCell {
    pub stats: SummaryStats,
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub label: String,
    pub baseline: SummaryStats,
    pub contexts: Vec<ContextCell>,
}

impl ResultRow {
    /// Row from comparisons that share one baseline run.
    pub fn from_comparisons(label: impl Into<String>, comparisons: &[&Comparison]) -> Self {
        ResultRow {
            label: label.into(),
            baseline: comparisons.first().map(|c| c.baseline).unwrap_or(SummaryStats { mean: f64::NAN, std: f64::NAN }),
            contexts: comparisons
                .iter()
                .map(|c| ContextCell { stats: c.context_stats, t: c.test.t, p: c.test.p_value })
                .collect(),
        }
    }
}

pub const TABLE_FOOTER: &str = "\
* p < 0.001, ** p < 0.05
t: paired t-test of baseline minus context connectivity differences, paired by iteration index.
Iterations are exchangeable, so the pairing carries no information.
Resamples overlap heavily within a finite pool of days, so the t-test's independence
assumption does not hold and p-values overstate significance.
";

struct Group {
    title: String,
    columns: Vec<&'static str>,
}

/// Renders a results table: a label column, baseline mean/sd, then
/// mean/sd/t/p for each context.
pub fn render_table(title: &str, label_header: &str, contexts: &[Context], rows: &[ResultRow]) -> String {
    let mut groups = vec![Group { title: "Baseline".into(), columns: vec!["mean", "sd"] }];
    groups.extend(contexts.iter().map(|c| Group { title: c.title().into(), columns: vec!["mean", "sd", "t", "p"] }));

    let num = |x: f64| format!("{x:.2}");
    let body: Vec<(String, Vec<Vec<String>>)> = rows
        .iter()
        .map(|r| {
            let mut cells = vec![vec![num(r.baseline.mean), num(r.baseline.std)]];
            for c in &r.contexts {
                let marker = significance_marker(c.p);
                let t = if marker.is_empty() { num(c.t) } else { format!("{} {marker}", num(c.t)) };
                cells.push(vec![num(c.stats.mean), num(c.stats.std), t, format_p(c.p)]);
            }
            (r.label.clone(), cells)
        })
        .collect();

    let label_width =
        body.iter().map(|(l, _)| l.chars().count()).chain([label_header.chars().count()]).max().unwrap_or(0);
    let mut widths: Vec<Vec<usize>> = groups
        .iter()
        .enumerate()
        .map(|(g, group)| {
            group
                .columns
                .iter()
                .enumerate()
                .map(|(c, h)| {
                    body.iter().map(|(_, cells)| cells[g][c].chars().count()).chain([h.len()]).max().unwrap_or(0)
                })
                .collect()
        })
        .collect();
    for (g, group) in groups.iter().enumerate() {
        let inner: usize = widths[g].iter().sum::<usize>() + 2 * (widths[g].len() - 1);
        let need = group.title.chars().count();
        if need > inner {
            *widths[g].last_mut().expect("group has columns") += need - inner;
        }
    }
    let group_width = |g: usize| widths[g].iter().sum::<usize>() + 2 * (widths[g].len() - 1);

    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out);
    let mut line = format!("{:label_width$}", "");
    for (g, group) in groups.iter().enumerate() {
        let _ = write!(line, " | {:^w$}", group.title, w = group_width(g));
    }
    let _ = writeln!(out, "{}", line.trim_end());
    let mut line = format!("{label_header:label_width$}");
    for (g, group) in groups.iter().enumerate() {
        line.push_str(" |");
        for (c, h) in group.columns.iter().enumerate() {
            let sep = if c == 0 { " " } else { "  " };
            let _ = write!(line, "{sep}{h:>w$}", w = widths[g][c]);
        }
    }
    let _ = writeln!(out, "{}", line.trim_end());
    let mut rule = "-".repeat(label_width);
    for g in 0..groups.len() {
        let _ = write!(rule, "-+-{}", "-".repeat(group_width(g)));
    }
    let _ = writeln!(out, "{rule}");
    for (label, cells) in &body {
        let mut line = format!("{label:label_width$}");
        for (g, group_cells) in cells.iter().enumerate() {
            line.push_str(" |");
            for (c, cell) in group_cells.iter().enumerate() {
                let sep = if c == 0 { " " } else { "  " };
                let _ = write!(line, "{sep}{cell:>w$}", w = widths[g][c]);
            }
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
    let _ = writeln!(out);
    out.push_str(TABLE_FOOTER);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of_bytes(path: impl Into<String>, bytes: &[u8]) -> Self {
        FileDigest { path: path.into(), sha256: hex::encode(Sha256::digest(bytes)) }
    }

    pub fn of_file(path: &Path) -> std::io::Result<Self> {
        Ok(Self::of_bytes(path.display().to_string(), &std::fs::read(path)?))
    }
}

/// Everything needed to rerun a command: inputs by digest, seed and config.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub master_seed: u64,
    pub inputs: Vec<FileDigest>,
    pub config: serde_json::Value,
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, master_seed: u64, config: serde_json::Value) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            master_seed,
            inputs: Vec::new(),
            config,
            outputs: Vec::new(),
        }
    }
}
