use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ctxnet::commands::{
    cmd_analyze, cmd_cohort, cmd_export_network, cmd_synth, cmd_validate, AnalyzeOptions, DaySelection, NetworkFormat,
};
use ctxnet::network::DEFAULT_EDGE_THRESHOLD;
use ctxnet::permtest::{DEFAULT_PERMUTATIONS, DEFAULT_SAMPLE_SIZE};
use ctxnet::report::format_p;
use ctxnet::synth::ground_truth;
use ctxnet::{Category, Context, Error, Feature, ItemSubset, Result, SynthConfig};

#[derive(Parser)]
#[command(name = "ctxnet", version, about = "Context-filtered EMA correlation networks for single participants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a participant CSV and report per-context eligibility.
    Validate {
        /// Participant CSV.
        input: PathBuf,
        /// Days needed per category pool.
        #[arg(long, default_value_t = DEFAULT_SAMPLE_SIZE)]
        sample_size: usize,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Permutation test of one context against the baseline for one participant.
    Analyze {
        /// Participant CSV.
        input: PathBuf,
        /// locations|calls_made|calls_received|sms_sent|sms_received|conversations
        #[arg(long)]
        context: Context,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Analyze every participant CSV in a directory.
    Cohort {
        /// Directory of participant CSVs; the file stem is the participant id.
        dir: PathBuf,
        /// One or more contexts, comma-separated or repeated.
        #[arg(long, required = true, value_delimiter = ',')]
        context: Vec<Context>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Generate a synthetic participant CSV.
    Synth {
        /// TOML config file.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Built-in config: `planted` or `null`.
        #[arg(long, default_value = "planted")]
        preset: String,
        #[arg(long, default_value_t = 300)]
        days: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the simulated discretized-scale targets as JSON.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        /// Print the effective config as TOML and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Write a correlation network as JSON or DOT.
    ExportNetwork {
        /// Participant CSV, or a network JSON file to convert.
        input: PathBuf,
        /// Restrict to one category of this context.
        #[arg(long, requires = "category")]
        context: Option<Context>,
        /// isolation|sociability
        #[arg(long, requires = "context")]
        category: Option<Category>,
        /// all|positive|negative
        #[arg(long, default_value = "all")]
        subset: ItemSubset,
        /// dot|json
        #[arg(long, default_value = "dot")]
        format: NetworkFormat,
        #[arg(long, default_value_t = DEFAULT_EDGE_THRESHOLD)]
        edge_threshold: f64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// all|positive|negative
    #[arg(long, default_value = "all")]
    subset: ItemSubset,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    permutations: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_SIZE)]
    sample_size: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Include per-iteration differences in the JSON output.
    #[arg(long)]
    emit_differences: bool,
    /// Include the days drawn in every iteration.
    #[arg(long)]
    verbose_indices: bool,
    #[arg(long, default_value_t = DEFAULT_EDGE_THRESHOLD)]
    edge_threshold: f64,
}

impl RunArgs {
    fn options(&self) -> AnalyzeOptions {
        AnalyzeOptions {
            subset: self.subset,
            seed: self.seed,
            permutations: self.permutations,
            sample_size: self.sample_size,
            emit_differences: self.emit_differences,
            verbose_indices: self.verbose_indices,
            edge_threshold: self.edge_threshold,
        }
    }
}

fn feature_of(ctx: Context) -> Result<Feature> {
    match ctx {
        Context::Feature(f) => Ok(f),
        Context::Baseline => Err(Error::InvalidConfig("baseline is always run; pass a sensor context".into())),
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => Ok(fs::write(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { input, sample_size, json } => {
            let report = cmd_validate(&input, sample_size)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{report}");
            }
        }
        Command::Analyze { input, context, run } => {
            let analysis = cmd_analyze(&input, context, &run.options(), &run.out)?;
            print!("{}", fs::read_to_string(run.out.join("table.txt"))?);
            let test = &analysis.contexts[0].comparison.test;
            eprintln!("t = {:.3}, p = {}, outputs in {}", test.t, format_p(test.p_value), run.out.display());
        }
        Command::Cohort { dir, context, run } => {
            let features = context.into_iter().map(feature_of).collect::<Result<Vec<_>>>()?;
            match cmd_cohort(&dir, &features, &run.options(), &run.out) {
                Ok(report) => print!("{}", report.table),
                Err(e @ Error::NoEligibleParticipants { .. }) => {
                    let table = run.out.join("cohort_table.txt");
                    if let Ok(text) = fs::read_to_string(table) {
                        print!("{text}");
                    }
                    return Err(e);
                }
                Err(e) => return Err(e),
            }
        }
        Command::Synth { config, preset, days, seed, out, ground_truth: truth_path, print_config } => {
            let cfg = match config {
                Some(path) => SynthConfig::load(path)?,
                None => match preset.as_str() {
                    "planted" => SynthConfig::planted(days, seed),
                    "null" => SynthConfig::null(days, seed),
                    other => {
                        return Err(Error::InvalidConfig(format!("unknown preset `{other}` (expected planted|null)")))
                    }
                },
            };
            if print_config {
                print!("{}", cfg.to_toml_string());
                return Ok(());
            }
            let csv = cmd_synth(&cfg, out.as_deref())?;
            if out.is_none() {
                print!("{csv}");
            }
            if let Some(path) = truth_path {
                let truth = ground_truth(&cfg)?;
                let value = serde_json::json!({
                    "ground_truth": truth,
                    "connectivity_difference": {
                        "all": truth.connectivity_difference(ItemSubset::All),
                        "positive": truth.connectivity_difference(ItemSubset::Positive),
                        "negative": truth.connectivity_difference(ItemSubset::Negative),
                    },
                });
                fs::write(path, serde_json::to_string_pretty(&value)? + "\n")?;
            }
        }
        Command::ExportNetwork { input, context, category, subset, format, edge_threshold, out } => {
            let days = match (context, category) {
                (Some(ctx), Some(cat)) => DaySelection::Category(feature_of(ctx)?, cat),
                _ => DaySelection::All,
            };
            let text = cmd_export_network(&input, days, subset, format, edge_threshold)?;
            write_or_print(out.as_deref(), &text)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
