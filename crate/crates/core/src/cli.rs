//! Command-line interface: `fit`, `predict`, `expand`, `simulate`, `check`.
//!
//! Exit codes: 0 success, 1 usage or input errors, 2 fit did not converge
//! (the report is still written), 3 connectivity failure under `--strict`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::estimation::{self, ConnectivityReport, FitConfig};
use crate::formats::{self, DataFormat};
use crate::model::{self, Dataset, ItemId, Universe};
use crate::outcomes;
use crate::simulate::{self, Design, SimConfig};

const EXIT_OK: i32 = 0;
const EXIT_ERROR: i32 = 1;
const EXIT_NOT_CONVERGED: i32 = 2;
const EXIT_DISCONNECTED: i32 = 3;

/// Points handed out per contest in the `check` report, split evenly among
/// tied winners; 6 keeps the shares integral for ties up to order 3.
const POINTS_PER_CONTEST: f64 = 6.0;

#[derive(Debug, Parser)]
#[command(
    name = "davidson-luce",
    version,
    about = "Choice models for multi-item comparisons with ties"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    /// Wide CSV: item-label header, one NA/0/1 row per contest.
    WideCsv,
    /// JSON array of {"items", "winners"} objects (optionally wrapped).
    ContestsJson,
    /// JSON lines of {"groups", optional "items"} rankings.
    RankingsJsonl,
}

impl From<InputFormat> for DataFormat {
    fn from(format: InputFormat) -> Self {
        match format {
            InputFormat::WideCsv => DataFormat::WideCsv,
            InputFormat::ContestsJson => DataFormat::ContestsJson,
            InputFormat::RankingsJsonl => DataFormat::RankingsJsonl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    WideCsv,
    ContestsJson,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the model to contest or ranking data and write a JSON report.
    Fit {
        /// Input data file.
        #[arg(long)]
        data: PathBuf,
        /// Input format.
        #[arg(long, value_enum, default_value_t = InputFormat::WideCsv)]
        format: InputFormat,
        /// Item whose log-strength is pinned at 0 (default: last item).
        #[arg(long)]
        ref_item: Option<String>,
        /// Reject data whose observed tie order exceeds this bound.
        #[arg(long)]
        max_tie_order: Option<usize>,
        /// Convergence threshold on the score's infinity norm.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Iteration budget for Fisher scoring.
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        /// Fit the equal-strength null model (tie prevalences only).
        #[arg(long)]
        equal_strengths: bool,
        /// Fail (exit 3) when the win/tie digraph is not strongly connected.
        #[arg(long)]
        strict: bool,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Outcome probabilities for a comparison set under a fitted model.
    Predict {
        /// Parameter file: a fit report or any JSON with "strengths" and
        /// "tie_prevalence".
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated item labels to compare.
        #[arg(long, value_delimiter = ',', required = true)]
        items: Vec<String>,
    },
    /// Expand a dataset into one CSV row per candidate outcome.
    Expand {
        /// Input data file.
        #[arg(long)]
        data: PathBuf,
        /// Input format.
        #[arg(long, value_enum, default_value_t = InputFormat::WideCsv)]
        format: InputFormat,
        /// Enumerate candidate ties up to this order (default: largest
        /// observed order).
        #[arg(long)]
        max_tie_order: Option<usize>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a balanced round-robin tournament under given parameters.
    Simulate {
        /// Number of items; must match the parameter file.
        #[arg(long)]
        n: usize,
        /// Comparison-set size.
        #[arg(long)]
        r: usize,
        /// Replications of the full round robin.
        #[arg(long)]
        reps: u64,
        /// Parameter file (same shape as for predict).
        #[arg(long)]
        params: PathBuf,
        /// Generator seed; identical seeds reproduce identical files.
        #[arg(long)]
        seed: u64,
        /// Output dataset file.
        #[arg(long)]
        out: PathBuf,
        /// Output format.
        #[arg(long, value_enum, default_value_t = OutputFormat::WideCsv)]
        format: OutputFormat,
    },
    /// Report observed points and estimate-existence diagnostics.
    Check {
        /// Input data file.
        #[arg(long)]
        data: PathBuf,
        /// Input format.
        #[arg(long, value_enum, default_value_t = InputFormat::WideCsv)]
        format: InputFormat,
    },
}

/// Parses arguments from the environment and runs the selected command,
/// returning the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap renders --help/--version as "errors"; those exit 0.
            let code = if err.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_OK
            };
            let _ = err.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            EXIT_ERROR
        }
    }
}

fn execute(command: Command) -> anyhow::Result<i32> {
    match command {
        Command::Fit {
            data,
            format,
            ref_item,
            max_tie_order,
            tol,
            max_iter,
            equal_strengths,
            strict,
            out,
        } => cmd_fit(
            &data,
            format,
            ref_item.as_deref(),
            max_tie_order,
            tol,
            max_iter,
            equal_strengths,
            strict,
            out.as_deref(),
        ),
        Command::Predict { model, items } => cmd_predict(&model, &items),
        Command::Expand {
            data,
            format,
            max_tie_order,
            out,
        } => cmd_expand(&data, format, max_tie_order, out.as_deref()),
        Command::Simulate {
            n,
            r,
            reps,
            params,
            seed,
            out,
            format,
        } => cmd_simulate(n, r, reps, &params, seed, &out, format),
        Command::Check { data, format } => cmd_check(&data, format),
    }
}

fn read_dataset(path: &Path, format: InputFormat) -> anyhow::Result<Dataset> {
    formats::read_dataset_file(path, format.into())
        .with_context(|| format!("reading {}", path.display()))
}

fn enforce_tie_order_cap(data: &Dataset, cap: Option<usize>) -> anyhow::Result<()> {
    if let Some(cap) = cap {
        let observed = data.max_observed_tie_order();
        if observed > cap {
            anyhow::bail!("observed tie order {observed} exceeds --max-tie-order {cap}");
        }
    }
    Ok(())
}

fn with_output<F>(out: Option<&Path>, write: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut dyn Write) -> anyhow::Result<()>,
{
    match out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut writer = BufWriter::new(file);
            write(&mut writer)?;
            writer.flush()?;
            Ok(())
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)
        }
    }
}

fn describe_components(universe: &Universe, report: &ConnectivityReport) -> String {
    report
        .components
        .iter()
        .map(|comp| {
            let labels: Vec<&str> = comp.iter().map(|&i| universe.label(i)).collect();
            format!("{{{}}}", labels.join(", "))
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn describe_never_winning(universe: &Universe, report: &ConnectivityReport) -> String {
    if report.never_winning_items.is_empty() {
        "(none)".to_string()
    } else {
        report
            .never_winning_items
            .iter()
            .map(|&i| universe.label(i))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_fit(
    data_path: &Path,
    format: InputFormat,
    ref_item: Option<&str>,
    max_tie_order: Option<usize>,
    tol: f64,
    max_iter: usize,
    equal_strengths: bool,
    strict: bool,
    out: Option<&Path>,
) -> anyhow::Result<i32> {
    let data = read_dataset(data_path, format)?;
    enforce_tie_order_cap(&data, max_tie_order)?;
    let reference_item = ref_item
        .map(|label| data.universe().require(label))
        .transpose()?;

    if strict {
        let connectivity = estimation::check_connectivity(&data);
        if !connectivity.strongly_connected {
            let universe = data.universe();
            eprintln!("connectivity failure: the win/tie digraph is not strongly connected");
            eprintln!(
                "components: {}",
                describe_components(universe, &connectivity)
            );
            eprintln!(
                "never-winning items: {}",
                describe_never_winning(universe, &connectivity)
            );
            return Ok(EXIT_DISCONNECTED);
        }
    }

    let config = FitConfig {
        tol,
        max_iter,
        reference_item,
        fixed_strengths: equal_strengths,
        ..FitConfig::default()
    };
    let report = match estimation::fit(&data, &config) {
        Ok(report) => report,
        Err(err @ Error::SingularInformation { .. }) => {
            let connectivity = estimation::check_connectivity(&data);
            let universe = data.universe();
            eprintln!("error: {err}");
            eprintln!(
                "the estimate may not exist; components: {}; never-winning items: {}",
                describe_components(universe, &connectivity),
                describe_never_winning(universe, &connectivity)
            );
            return Ok(EXIT_ERROR);
        }
        Err(err) => return Err(err.into()),
    };

    with_output(out, |writer| {
        formats::write_fit_report(writer, data.universe(), &report)?;
        Ok(())
    })?;
    if report.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "fit did not converge within {max_iter} iterations (final score norm above {tol})"
        );
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn cmd_predict(model_path: &Path, items: &[String]) -> anyhow::Result<i32> {
    let file =
        File::open(model_path).with_context(|| format!("reading {}", model_path.display()))?;
    let (universe, params) = formats::read_params_json(file)
        .with_context(|| format!("parsing {}", model_path.display()))?;
    let mut ids = Vec::with_capacity(items.len());
    for label in items {
        ids.push(universe.require(label)?);
    }
    comparison_preconditions(&universe, &mut ids)?;
    let space = outcomes::enumerate_items(&ids, params.t_max());
    let dist = model::distribution_over(&ids, &space, &params)?;
    let value = formats::predictions_to_json(&universe, &dist);
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(EXIT_OK)
}

fn comparison_preconditions(universe: &Universe, ids: &mut [ItemId]) -> anyhow::Result<()> {
    if ids.len() < 2 {
        return Err(Error::ComparisonTooSmall(ids.len()).into());
    }
    if ids.len() > model::MAX_COMPARISON_ITEMS {
        return Err(Error::ComparisonTooLarge(ids.len()).into());
    }
    universe.sort_by_label(ids);
    for pair in ids.windows(2) {
        if pair[0] == pair[1] {
            return Err(Error::DuplicateItem(universe.label(pair[0]).to_string()).into());
        }
    }
    Ok(())
}

fn cmd_expand(
    data_path: &Path,
    format: InputFormat,
    max_tie_order: Option<usize>,
    out: Option<&Path>,
) -> anyhow::Result<i32> {
    let data = read_dataset(data_path, format)?;
    enforce_tie_order_cap(&data, max_tie_order)?;
    let t_max = max_tie_order.unwrap_or_else(|| data.max_observed_tie_order());
    with_output(out, |writer| {
        formats::write_expanded_csv(writer, &data, t_max)?;
        Ok(())
    })?;
    Ok(EXIT_OK)
}

fn cmd_simulate(
    n: usize,
    r: usize,
    reps: u64,
    params_path: &Path,
    seed: u64,
    out: &Path,
    format: OutputFormat,
) -> anyhow::Result<i32> {
    let file =
        File::open(params_path).with_context(|| format!("reading {}", params_path.display()))?;
    let (universe, params) = formats::read_params_json(file)
        .with_context(|| format!("parsing {}", params_path.display()))?;
    if universe.len() != n {
        anyhow::bail!(
            "--n {} does not match the parameter file, which defines {} items",
            n,
            universe.len()
        );
    }
    if reps == 0 {
        anyhow::bail!("--reps must be at least 1");
    }
    let config = SimConfig {
        seed,
        design: Design::RoundRobin { subset_size: r },
        replications: reps,
        params,
    };
    let data = simulate::simulate_tournament(&universe, &config)?;
    let metadata = config.metadata();
    with_output(Some(out), |writer| {
        match format {
            OutputFormat::WideCsv => formats::write_wide_csv(writer, &data, Some(&metadata))?,
            OutputFormat::ContestsJson => {
                formats::write_contests_json(writer, &data, Some(&metadata))?
            }
        }
        Ok(())
    })?;
    Ok(EXIT_OK)
}

fn cmd_check(data_path: &Path, format: InputFormat) -> anyhow::Result<i32> {
    let data = read_dataset(data_path, format)?;
    let universe = data.universe();
    let points = estimation::observed_points(&data, POINTS_PER_CONTEST);
    let connectivity = estimation::check_connectivity(&data);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(
        out,
        "observed points ({POINTS_PER_CONTEST} per contest, shared equally within ties):"
    )?;
    for item in universe.ids() {
        writeln!(out, "  {} {}", universe.label(item), points[item.0])?;
    }
    writeln!(
        out,
        "strongly connected: {}",
        if connectivity.strongly_connected {
            "yes"
        } else {
            "no"
        }
    )?;
    writeln!(
        out,
        "components: {}",
        describe_components(universe, &connectivity)
    )?;
    writeln!(
        out,
        "never-winning items: {}",
        describe_never_winning(universe, &connectivity)
    )?;
    Ok(EXIT_OK)
}
