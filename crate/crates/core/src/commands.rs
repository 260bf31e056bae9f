//! The subcommands behind the `ctxnet` binary, as library functions.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::contexts::{baseline_pool, categorize, Category, CategoryPools, Context, ContextSpec, Feature};
use crate::error::{Error, Result};
use crate::ingest::{backfill_emas, eligibility, parse_participant, EligibilityReport, EmaSource, ParticipantDataset};
use crate::network::{pearson_network, CorrelationNetwork, ItemSubset, DEFAULT_EDGE_THRESHOLD};
use crate::permtest::{
    compare_to_baseline, run_baseline_permutation, run_context_permutation, Comparison, IterationSample,
    PermutationConfig, PermutationRun, RunOptions, StreamSeed, SummaryStats, DEFAULT_PERMUTATIONS, DEFAULT_SAMPLE_SIZE,
};
use crate::report::{histogram, render_table, FileDigest, ResultRow, RunManifest};
use crate::synth::{generate, SynthConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyzeOptions {
    pub subset: ItemSubset,
    pub seed: u64,
    pub permutations: usize,
    pub sample_size: usize,
    /// Include per-iteration differences in run.json and baseline.json.
    pub emit_differences: bool,
    /// Include the dates drawn in every iteration.
    pub verbose_indices: bool,
    pub edge_threshold: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            subset: ItemSubset::All,
            seed: 0,
            permutations: DEFAULT_PERMUTATIONS,
            sample_size: DEFAULT_SAMPLE_SIZE,
            emit_differences: false,
            verbose_indices: false,
            edge_threshold: DEFAULT_EDGE_THRESHOLD,
        }
    }
}

impl AnalyzeOptions {
    pub fn permutation_config(&self) -> Result<PermutationConfig> {
        PermutationConfig::new(self.permutations, self.sample_size, self.subset, self.seed)
    }

    fn run_options(&self) -> RunOptions {
        RunOptions { record_samples: self.verbose_indices, ..RunOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextAnalysis {
    pub pools: CategoryPools,
    pub run: PermutationRun,
    pub comparison: Comparison,
}

/// One participant's baseline run and the context runs compared against it.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantAnalysis {
    pub participant_id: String,
    pub baseline: PermutationRun,
    pub contexts: Vec<ContextAnalysis>,
}

impl ParticipantAnalysis {
    pub fn comparisons(&self) -> Vec<&Comparison> {
        self.contexts.iter().map(|c| &c.comparison).collect()
    }
}

/// Runs the baseline once and every feature context against it. `ds` must
/// already be backfilled. Stream seeds derive from `opts.seed` and the
/// context flag, so results do not depend on which other contexts run.
pub fn analyze_dataset(
    ds: &ParticipantDataset,
    features: &[Feature],
    opts: &AnalyzeOptions,
) -> Result<ParticipantAnalysis> {
    let cfg = opts.permutation_config()?;
    let run_opts = opts.run_options();
    let baseline = run_baseline_permutation(
        ds,
        &baseline_pool(ds),
        &cfg,
        StreamSeed::for_context(opts.seed, Context::Baseline),
        run_opts,
    )?;
    let contexts = features
        .iter()
        .map(|&feature| {
            let pools = categorize(ds, &ContextSpec::standard(feature));
            let run = run_context_permutation(
                ds,
                &pools,
                &cfg,
                StreamSeed::for_context(opts.seed, Context::Feature(feature)),
                run_opts,
            )?;
            let comparison = compare_to_baseline(&run, &baseline)?;
            Ok(ContextAnalysis { pools, run, comparison })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParticipantAnalysis { participant_id: ds.participant_id().to_string(), baseline, contexts })
}

fn load_backfilled(input: &Path) -> Result<ParticipantDataset> {
    Ok(backfill_emas(&parse_participant(input)?))
}

fn require_feature(ctx: Context) -> Result<Feature> {
    match ctx {
        Context::Feature(f) => Ok(f),
        Context::Baseline => Err(Error::InvalidConfig("baseline is always run; pass a sensor context".into())),
    }
}

/// Output directory that records a digest of every file written to it.
struct OutputDir {
    root: PathBuf,
    written: Vec<FileDigest>,
}

impl OutputDir {
    fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(OutputDir { root: root.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.written.push(FileDigest::of_bytes(name, bytes));
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn finish(mut self, mut manifest: RunManifest) -> Result<Vec<FileDigest>> {
        manifest.outputs = std::mem::take(&mut self.written);
        self.write_json("manifest.json", &manifest)?;
        Ok(self.written.into_iter().chain(manifest.outputs).collect())
    }
}

#[derive(Serialize)]
struct PoolSizes {
    isolation: usize,
    sociability: usize,
    excluded: usize,
}

#[derive(Serialize)]
struct RunFile<'a> {
    participant_id: &'a str,
    context: Context,
    config: &'a PermutationConfig,
    stream_seed: StreamSeed,
    #[serde(skip_serializing_if = "Option::is_none")]
    pool_sizes: Option<PoolSizes>,
    pool_days: usize,
    stats: SummaryStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<&'a Comparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    differences: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<&'a [IterationSample]>,
}

impl<'a> RunFile<'a> {
    fn new(id: &'a str, run: &'a PermutationRun, pool_days: usize, opts: &AnalyzeOptions) -> Self {
        RunFile {
            participant_id: id,
            context: run.context,
            config: &run.config,
            stream_seed: run.stream_seed,
            pool_sizes: None,
            pool_days,
            stats: run.stats,
            comparison: None,
            differences: opts.emit_differences.then_some(run.differences.as_slice()),
            samples: run.samples.as_deref(),
        }
    }
}

fn analysis_config(command: &str, contexts: &[Feature], opts: &AnalyzeOptions) -> serde_json::Value {
    json!({
        "command": command,
        "contexts": contexts.iter().map(|f| f.flag()).collect::<Vec<_>>(),
        "subset": opts.subset,
        "seed": opts.seed,
        "permutations": opts.permutations,
        "sample_size": opts.sample_size,
        "emit_differences": opts.emit_differences,
        "verbose_indices": opts.verbose_indices,
        "edge_threshold": opts.edge_threshold,
    })
}

fn table_title(id: &str, features: &[Feature], subset: ItemSubset) -> String {
    let names: Vec<&str> = features.iter().map(|f| f.title()).collect();
    format!("{id}: baseline versus {} ({})", names.join(" and "), subset.label())
}

/// Writes the per-context artifacts of one analysis into `out`.
fn write_context_outputs(
    out: &mut OutputDir,
    ds: &ParticipantDataset,
    analysis: &ParticipantAnalysis,
    ctx: &ContextAnalysis,
    opts: &AnalyzeOptions,
) -> Result<()> {
    let id = analysis.participant_id.as_str();
    let pools = &ctx.pools;
    let mut run_file = RunFile::new(id, &ctx.run, pools.isolation.len() + pools.sociability.len(), opts);
    run_file.pool_sizes = Some(PoolSizes {
        isolation: pools.isolation.len(),
        sociability: pools.sociability.len(),
        excluded: pools.excluded.len(),
    });
    run_file.comparison = Some(&ctx.comparison);
    out.write_json("run.json", &run_file)?;
    out.write_json("baseline.json", &RunFile::new(id, &analysis.baseline, baseline_pool(ds).len(), opts))?;
    out.write("histogram.csv", histogram(&analysis.baseline.differences, &ctx.run.differences).to_csv().as_bytes())?;
    for category in [Category::Isolation, Category::Sociability] {
        let net = pearson_network(&ds.ema_for(pools.get(category))?, opts.subset)?;
        out.write(&format!("network_{category}.json"), net.to_json().as_bytes())?;
        out.write(&format!("network_{category}.dot"), net.to_dot(opts.edge_threshold).as_bytes())?;
    }
    let row = ResultRow::from_comparisons(opts.subset.label(), &[&ctx.comparison]);
    let table =
        render_table(&table_title(id, &[pools.feature], opts.subset), "", &[Context::Feature(pools.feature)], &[row]);
    out.write("table.txt", table.as_bytes())
}

/// Analyzes one participant file for one context and writes run.json,
/// baseline.json, histogram.csv, network_{isolation,sociability}.{json,dot},
/// table.txt and manifest.json into `out`.
pub fn cmd_analyze(input: &Path, context: Context, opts: &AnalyzeOptions, out: &Path) -> Result<ParticipantAnalysis> {
    let feature = require_feature(context)?;
    let ds = load_backfilled(input)?;
    let analysis = analyze_dataset(&ds, &[feature], opts)?;
    let mut dir = OutputDir::create(out)?;
    write_context_outputs(&mut dir, &ds, &analysis, &analysis.contexts[0], opts)?;
    let mut manifest = RunManifest::new("analyze", opts.seed, analysis_config("analyze", &[feature], opts));
    manifest.inputs.push(FileDigest::of_file(input)?);
    dir.finish(manifest)?;
    Ok(analysis)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Exclusion {
    pub participant_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortRow {
    pub participant_id: String,
    pub comparisons: Vec<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortReport {
    pub contexts: Vec<Context>,
    pub subset: ItemSubset,
    pub rows: Vec<CohortRow>,
    pub excluded: Vec<Exclusion>,
    #[serde(skip)]
    pub table: String,
}

fn shortfall(report: &EligibilityReport) -> Option<String> {
    report.pools.iter().find(|p| p.have < p.need).map(|p| match report.context {
        Context::Baseline => format!("baseline pool has {} of {} days", p.have, p.need),
        ctx => format!("{} pool for {ctx} has {} of {} days", p.pool, p.have, p.need),
    })
}

fn participant_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(dir.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

enum Outcome {
    Row(CohortRow, Vec<FileDigest>),
    Excluded(Exclusion),
}

fn cohort_participant(path: &Path, features: &[Feature], opts: &AnalyzeOptions, out: &Path) -> Result<Outcome> {
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let excluded = |reason: String| Ok(Outcome::Excluded(Exclusion { participant_id: id.clone(), reason }));
    let ds = match load_backfilled(path) {
        Ok(ds) => ds,
        Err(e) => return excluded(e.to_string()),
    };
    let reasons: Vec<String> = std::iter::once(Context::Baseline)
        .chain(features.iter().map(|&f| Context::Feature(f)))
        .filter_map(|ctx| shortfall(&eligibility(&ds, ctx, opts.sample_size)))
        .collect();
    if !reasons.is_empty() {
        return excluded(reasons.join("; "));
    }

    let analysis = analyze_dataset(&ds, features, opts)?;
    let mut digests = Vec::new();
    let input = FileDigest::of_file(path)?;
    for ctx in &analysis.contexts {
        let rel = format!("{id}/{}", ctx.pools.feature.flag());
        let mut dir = OutputDir::create(&out.join(&rel))?;
        write_context_outputs(&mut dir, &ds, &analysis, ctx, opts)?;
        let mut manifest =
            RunManifest::new("analyze", opts.seed, analysis_config("analyze", &[ctx.pools.feature], opts));
        manifest.inputs.push(input.clone());
        for d in dir.finish(manifest)? {
            digests.push(FileDigest { path: format!("{rel}/{}", d.path), sha256: d.sha256 });
        }
    }
    Ok(Outcome::Row(
        CohortRow {
            participant_id: analysis.participant_id.clone(),
            comparisons: analysis.contexts.into_iter().map(|c| c.comparison).collect(),
        },
        digests,
    ))
}

/// Runs every `*.csv` participant in `dir`. A participant enters the table
/// only if its baseline pool and every requested context are eligible;
/// everyone else is listed with a reason. Per-participant artifacts go to
/// `out/<participant>/<context>/`.
pub fn cmd_cohort(dir: &Path, features: &[Feature], opts: &AnalyzeOptions, out: &Path) -> Result<CohortReport> {
    if features.is_empty() {
        return Err(Error::InvalidConfig("cohort needs at least one context".into()));
    }
    opts.permutation_config()?;
    let files = participant_files(dir)?;
    if files.is_empty() {
        return Err(Error::NoEligibleParticipants { inputs: 0 });
    }
    let outcomes =
        files.par_iter().map(|path| cohort_participant(path, features, opts, out)).collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    let mut participant_outputs = Vec::new();
    for outcome in outcomes {
        match outcome {
            Outcome::Row(row, digests) => {
                rows.push(row);
                participant_outputs.extend(digests);
            }
            Outcome::Excluded(e) => excluded.push(e),
        }
    }

    let contexts: Vec<Context> = features.iter().map(|&f| Context::Feature(f)).collect();
    let table_rows: Vec<ResultRow> = rows
        .iter()
        .map(|r| ResultRow::from_comparisons(r.participant_id.clone(), &r.comparisons.iter().collect::<Vec<_>>()))
        .collect();
    let mut table =
        render_table(&table_title("Participant results", features, opts.subset), "ID", &contexts, &table_rows);
    table.push('\n');
    if excluded.is_empty() {
        table.push_str("Excluded participants: none\n");
    } else {
        table.push_str("Excluded participants:\n");
        for e in &excluded {
            table.push_str(&format!("  {}: {}\n", e.participant_id, e.reason));
        }
    }

    let report = CohortReport { contexts, subset: opts.subset, rows, excluded, table };
    let mut dir_out = OutputDir::create(out)?;
    dir_out.write("cohort_table.txt", report.table.as_bytes())?;
    dir_out.write_json("cohort.json", &report)?;
    dir_out.written.extend(participant_outputs);
    let mut manifest = RunManifest::new("cohort", opts.seed, analysis_config("cohort", features, opts));
    for f in &files {
        manifest.inputs.push(FileDigest::of_file(f)?);
    }
    dir_out.finish(manifest)?;

    if report.rows.is_empty() {
        return Err(Error::NoEligibleParticipants { inputs: files.len() });
    }
    Ok(report)
}

/// Schema check summary plus per-context eligibility.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub participant_id: String,
    pub days: usize,
    pub reported: usize,
    pub backfilled: usize,
    pub without_ema: usize,
    pub min_days: usize,
    pub contexts: Vec<EligibilityReport>,
}

impl ValidationReport {
    pub fn ineligible(&self) -> Vec<Context> {
        self.contexts.iter().filter(|r| !r.eligible()).map(|r| r.context).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: {} days, {} reported, {} backfilled, {} without EMA",
            self.participant_id, self.days, self.reported, self.backfilled, self.without_ema
        )?;
        writeln!(f, "{:<16} {:>10} {:>12} {:>9}  eligible", "context", "isolation", "sociability", "required")?;
        for r in &self.contexts {
            let have = |i: usize| r.pools.get(i).map_or("-".to_string(), |p| p.have.to_string());
            let need = r.pools.first().map_or(0, |p| p.need);
            writeln!(
                f,
                "{:<16} {:>10} {:>12} {:>9}  {}",
                r.context.flag(),
                have(0),
                have(1),
                need,
                if r.eligible() { "yes" } else { "no" }
            )?;
        }
        Ok(())
    }
}

/// Parses and backfills `input`, then reports eligibility for the six sensor
/// contexts and the baseline.
pub fn cmd_validate(input: &Path, min_days: usize) -> Result<ValidationReport> {
    let raw = parse_participant(input)?;
    let ds = backfill_emas(&raw);
    let count =
        |src: &[EmaSource]| ds.records().iter().filter(|r| r.ema_source().is_some_and(|s| src.contains(&s))).count();
    let reported = count(&[EmaSource::Reported]);
    let backfilled = count(&[EmaSource::Backfilled1, EmaSource::Backfilled2]);
    let contexts = Context::ALL_FEATURES
        .iter()
        .chain([Context::Baseline].iter())
        .map(|&ctx| eligibility(&ds, ctx, min_days))
        .collect();
    Ok(ValidationReport {
        participant_id: ds.participant_id().to_string(),
        days: ds.len(),
        reported,
        backfilled,
        without_ema: ds.len() - reported - backfilled,
        min_days,
        contexts,
    })
}

/// Generates a participant and writes it as CSV to `out`, or returns the CSV
/// text when `out` is `None`.
pub fn cmd_synth(cfg: &SynthConfig, out: Option<&Path>) -> Result<String> {
    let ds = generate(cfg)?;
    let csv = ds.to_csv_string()?;
    if let Some(path) = out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, &csv)?;
    }
    Ok(csv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NetworkFormat {
    Json,
    #[default]
    Dot,
}

impl FromStr for NetworkFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(NetworkFormat::Json),
            "dot" => Ok(NetworkFormat::Dot),
            _ => Err(Error::InvalidConfig(format!("unknown format `{s}` (expected json|dot)"))),
        }
    }
}

/// Which days feed an exported network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DaySelection {
    /// Every EMA-bearing day.
    All,
    Category(Feature, Category),
}

/// Builds a network from a participant CSV (or reads a network JSON file)
/// and renders it.
pub fn cmd_export_network(
    input: &Path,
    days: DaySelection,
    subset: ItemSubset,
    format: NetworkFormat,
    edge_threshold: f64,
) -> Result<String> {
    let is_json = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let net = if is_json {
        let text = fs::read_to_string(input).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(input.to_path_buf()),
            _ => Error::Io(e),
        })?;
        CorrelationNetwork::from_json(&text)?
    } else {
        let ds = load_backfilled(input)?;
        let dates = match days {
            DaySelection::All => baseline_pool(&ds),
            DaySelection::Category(feature, category) => {
                categorize(&ds, &ContextSpec::standard(feature)).get(category).to_vec()
            }
        };
        pearson_network(&ds.ema_for(&dates)?, subset)?
    };
    Ok(match format {
        NetworkFormat::Json => net.to_json(),
        NetworkFormat::Dot => net.to_dot(edge_threshold),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_opts() -> AnalyzeOptions {
        AnalyzeOptions { permutations: 50, ..AnalyzeOptions::default() }
    }

    fn write_synth(dir: &Path, name: &str, cfg: &SynthConfig) -> PathBuf {
        let path = dir.join(name);
        cmd_synth(cfg, Some(&path)).unwrap();
        path
    }

    #[test]
    fn analyze_writes_every_artifact() {
        let tmp = tempfile::tempdir().unwrap();
        let input = write_synth(tmp.path(), "p01.csv", &SynthConfig::planted(200, 4));
        let out = tmp.path().join("out");
        let opts = AnalyzeOptions { emit_differences: true, ..small_opts() };
        let analysis = cmd_analyze(&input, Context::Feature(Feature::LocationsVisited), &opts, &out).unwrap();
        assert_eq!(analysis.contexts.len(), 1);
        for name in [
            "run.json",
            "baseline.json",
            "histogram.csv",
            "network_isolation.json",
            "network_isolation.dot",
            "network_sociability.json",
            "network_sociability.dot",
            "table.txt",
            "manifest.json",
        ] {
            assert!(out.join(name).is_file(), "{name}");
        }
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        let listed: Vec<&str> =
            manifest["outputs"].as_array().unwrap().iter().map(|o| o["path"].as_str().unwrap()).collect();
        assert_eq!(listed.len(), 8);
        for o in manifest["outputs"].as_array().unwrap() {
            let bytes = fs::read(out.join(o["path"].as_str().unwrap())).unwrap();
            assert_eq!(FileDigest::of_bytes("", &bytes).sha256, o["sha256"].as_str().unwrap());
        }
        let run: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
        assert_eq!(run["differences"].as_array().unwrap().len(), 50);
        assert!(run["comparison"]["test"]["p_value"].is_number());
        let hist = fs::read_to_string(out.join("histogram.csv")).unwrap();
        let (mut b, mut c) = (0, 0);
        for line in hist.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            b += f[2].parse::<usize>().unwrap();
            c += f[3].parse::<usize>().unwrap();
        }
        assert_eq!((b, c), (50, 50));
    }

    #[test]
    fn analyze_rejects_baseline_and_short_pools() {
        let tmp = tempfile::tempdir().unwrap();
        let input = write_synth(tmp.path(), "p.csv", &SynthConfig::planted(200, 4));
        let err = cmd_analyze(&input, Context::Baseline, &small_opts(), tmp.path()).unwrap_err();
        assert_eq!(err.exit_code(), 2);

        let mut cfg = SynthConfig::planted(200, 4);
        cfg.context_mix.insert(Feature::SmsSent, 1.0);
        let input = write_synth(tmp.path(), "q.csv", &cfg);
        let err =
            cmd_analyze(&input, Context::Feature(Feature::SmsSent), &small_opts(), &tmp.path().join("o")).unwrap_err();
        assert!(matches!(err, Error::InsufficientPool { have: 0, need: 25, .. }), "{err}");
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("isolation"));
    }

    #[test]
    fn validate_reports_contexts() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = SynthConfig::planted(150, 8);
        for f in &Feature::ALL[1..] {
            cfg.context_mix.insert(*f, 1.0);
        }
        let input = write_synth(tmp.path(), "sparse.csv", &cfg);
        let report = cmd_validate(&input, DEFAULT_SAMPLE_SIZE).unwrap();
        assert_eq!(report.contexts.len(), 7);
        assert_eq!(report.days, 150);
        assert_eq!(report.reported, 50);
        let ineligible = report.ineligible();
        assert_eq!(ineligible.len(), 5);
        assert!(!ineligible.contains(&Context::Feature(Feature::LocationsVisited)));
        assert!(!ineligible.contains(&Context::Baseline));
        let text = report.to_string();
        assert_eq!(text.lines().count(), 9);
        assert!(text.contains("calls_made"));
    }

    #[test]
    fn validate_schema_error_exit_code() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("bad.csv");
        let mut rows = crate::ingest::CSV_HEADER.join(",");
        rows.push_str("\n2024-01-01,7,0,0,0,0,0,0,0,0,0,1,1,1,1,1,1\n");
        fs::write(&path, rows).unwrap();
        let err = cmd_validate(&path, 25).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(msg.contains("row 1") && msg.contains("ema_calm"), "{msg}");
        assert_eq!(cmd_validate(&tmp.path().join("none.csv"), 25).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn cohort_accounts_for_every_input() {
        let tmp = tempfile::tempdir().unwrap();
        let inputs = tmp.path().join("in");
        fs::create_dir_all(&inputs).unwrap();
        write_synth(&inputs, "a.csv", &SynthConfig::planted(200, 1));
        write_synth(&inputs, "b.csv", &SynthConfig::planted(40, 2));
        fs::write(inputs.join("c.csv"), "not,a,header\n").unwrap();
        fs::write(inputs.join("notes.txt"), "ignored").unwrap();
        let report = cmd_cohort(&inputs, &[Feature::LocationsVisited], &small_opts(), &tmp.path().join("out")).unwrap();
        assert_eq!(report.rows.len() + report.excluded.len(), 3);
        assert_eq!(report.rows[0].participant_id, "a");
        assert!(report.table.contains("b: "));
        assert!(tmp.path().join("out/a/locations/run.json").is_file());
        assert!(tmp.path().join("out/cohort_table.txt").is_file());
    }

    #[test]
    fn cohort_exit_codes() {
        let tmp = tempfile::tempdir().unwrap();
        let empty = tmp.path().join("empty");
        fs::create_dir_all(&empty).unwrap();
        let err = cmd_cohort(&empty, &[Feature::CallsMade], &small_opts(), &tmp.path().join("o")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        write_synth(&empty, "short.csv", &SynthConfig::planted(10, 1));
        let err = cmd_cohort(&empty, &[Feature::CallsMade], &small_opts(), &tmp.path().join("o")).unwrap_err();
        assert!(matches!(err, Error::NoEligibleParticipants { inputs: 1 }));
        assert!(tmp.path().join("o/cohort_table.txt").is_file());
    }

    #[test]
    fn export_network_from_csv_and_json() {
        let tmp = tempfile::tempdir().unwrap();
        let input = write_synth(tmp.path(), "p.csv", &SynthConfig::planted(120, 3));
        let json = cmd_export_network(
            &input,
            DaySelection::Category(Feature::LocationsVisited, Category::Isolation),
            ItemSubset::Positive,
            NetworkFormat::Json,
            0.1,
        )
        .unwrap();
        let net = CorrelationNetwork::from_json(&json).unwrap();
        assert_eq!(net.dim(), 5);
        let path = tmp.path().join("net.json");
        fs::write(&path, &json).unwrap();
        let dot = cmd_export_network(&path, DaySelection::All, ItemSubset::All, NetworkFormat::Dot, 0.1).unwrap();
        assert_eq!(dot, net.to_dot(0.1));
        let all = cmd_export_network(&input, DaySelection::All, ItemSubset::All, NetworkFormat::Json, 0.1).unwrap();
        assert_eq!(CorrelationNetwork::from_json(&all).unwrap().n_samples(), 120);
    }
}
