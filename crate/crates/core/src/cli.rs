//! Command-line front end: `gen-scenario`, `gen-data`, `feasible`, `fit`,
//! `predict` and `bench`.
//!
//! Exit status is 0 on success, 1 on usage errors and 2 on runtime or
//! numerical failures. Data goes to `--out` (or standard output when absent),
//! diagnostics to standard error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::baselines::{kernel_fit, knn_fit, BaselineModel, DEFAULT_NEIGHBORS};
use crate::bench::{run_benchmark, BenchConfig, Method};
use crate::error::Error;
use crate::learner::{self, LearnerModel};
use crate::load_model::{is_feasible, NetworkScenario, RateVector, FEASIBILITY_TOL};
use crate::predictor::LoadPredictor;
use crate::scenario::{generate_dataset, generate_scenario, parse_row, ScenarioParams, TrainingSet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cellload", version, about = "Cell-load coupling simulator and monotone load learner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random deployment and write it as JSON.
    GenScenario {
        #[command(flatten)]
        params: ParamFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a noisy training set (CSV).
    GenData {
        /// Scenario JSON; generated from the parameters when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        params: ParamFlags,
        /// Number of samples.
        #[arg(long)]
        k: Option<usize>,
        /// Noise bound.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide feasibility of rate vectors and print the conditional eigenvalue.
    Feasible {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        query: QueryFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a model to a training CSV and write it as JSON.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, default_value = "minimax")]
        method: String,
        /// Neighbors averaged by the knn method.
        #[arg(long, default_value_t = DEFAULT_NEIGHBORS)]
        neighbors: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict per-BS loads for rate vectors with a fitted model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        query: QueryFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the benchmark grid and write the report CSV.
    Bench {
        #[command(flatten)]
        params: ParamFlags,
        /// Training sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        num_test: Option<usize>,
        #[arg(long)]
        num_seeds: Option<usize>,
        /// Methods, comma separated (minimax, kernel, knn).
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Write 0 in the timing columns so reports are byte-reproducible.
        #[arg(long)]
        no_timings: bool,
        /// Also write the per-(k, method) summary to this file.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Scenario parameters; values given here override the config file.
#[derive(Debug, Args)]
struct ParamFlags {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of base stations.
    #[arg(long)]
    m: Option<usize>,
    /// Number of test points.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rate_min: Option<f64>,
    #[arg(long)]
    rate_max: Option<f64>,
}

#[derive(Debug, Args)]
struct QueryFlags {
    /// CSV of rate vectors, one per row (a header row is optional).
    #[arg(long, conflicts_with = "rates")]
    input: Option<PathBuf>,
    /// A single rate vector, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    rates: Option<Vec<f64>>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Config file for `gen-scenario` / `gen-data`: scenario parameters plus
/// optional dataset settings.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct DataConfig {
    #[serde(flatten)]
    params: ScenarioParams,
    k: Option<usize>,
    eps: Option<f64>,
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read '{}': {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Runtime(Error::InvalidInput(format!("malformed JSON in '{}': {e}", path.display()))))
}

impl ParamFlags {
    fn apply(&self, params: &mut ScenarioParams) {
        if let Some(v) = self.seed {
            params.seed = v;
        }
        if let Some(v) = self.m {
            params.num_bs = v;
        }
        if let Some(v) = self.n {
            params.num_tp = v;
        }
        if let Some(v) = self.rate_min {
            params.rate_min = v;
        }
        if let Some(v) = self.rate_max {
            params.rate_max = v;
        }
    }

    fn data_config(&self) -> CliResult<DataConfig> {
        let mut cfg: DataConfig = match &self.config {
            Some(path) => read_json(path)?,
            None => DataConfig::default(),
        };
        self.apply(&mut cfg.params);
        cfg.params.validate()?;
        Ok(cfg)
    }
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Runtime(Error::InvalidInput(format!("cannot write '{}': {e}", path.display()))))?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Parses rate vectors from CSV text. A leading non-numeric row is a header;
/// if it is a dataset header (`r_1..,y_1..`) only the `r_` columns are used.
fn parse_queries(text: &str) -> CliResult<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut take: Option<usize> = None;
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(Error::from)?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if line == 0 && record.iter().next().is_some_and(|f| f.parse::<f64>().is_err()) {
            let rate_cols = record.iter().take_while(|h| h.starts_with("r_")).count();
            if rate_cols > 0 {
                take = Some(rate_cols);
            }
            continue;
        }
        let mut values = parse_row(&record, line + 1)?;
        if let Some(n) = take {
            values.truncate(n);
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Failure::Usage("no rate vectors in the query input".into()));
    }
    Ok(rows)
}

impl QueryFlags {
    fn load(&self) -> CliResult<Vec<Vec<f64>>> {
        match (&self.input, &self.rates) {
            (Some(path), _) => parse_queries(&read_text(path)?),
            (None, Some(r)) => Ok(vec![r.clone()]),
            (None, None) => Err(Failure::Usage("give rate vectors with --input FILE or --rates a,b,...".into())),
        }
    }
}

fn check_dim(expected: usize, row: &[f64], index: usize) -> CliResult<()> {
    if row.len() != expected {
        return Err(Failure::Runtime(Error::InvalidInput(format!(
            "query row {} has {} rates but the model expects {expected}",
            index + 1,
            row.len()
        ))));
    }
    Ok(())
}

fn load_predictor(path: &Path) -> CliResult<Box<dyn LoadPredictor>> {
    let text = read_text(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Runtime(Error::InvalidInput(format!("malformed model '{}': {e}", path.display()))))?;
    if value.get("type").is_some() {
        Ok(match BaselineModel::from_json(&text)? {
            BaselineModel::Kernel(m) => Box::new(m),
            BaselineModel::Knn(m) => Box::new(m),
        })
    } else {
        Ok(Box::new(LearnerModel::from_json(&text)?))
    }
}

fn csv_line(values: impl IntoIterator<Item = String>) -> String {
    let mut line = values.into_iter().collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::GenScenario { params, out } => {
            let cfg = params.data_config()?;
            let scenario = generate_scenario(&cfg.params)?;
            let mut text = scenario.to_json()?;
            text.push('\n');
            emit(out.as_deref(), stdout, &text)
        }
        Command::GenData { scenario, params, k, eps, out } => {
            let cfg = params.data_config()?;
            let scenario = match scenario {
                Some(path) => NetworkScenario::from_json(&read_text(&path)?)?,
                None => generate_scenario(&cfg.params)?,
            };
            let k = k.or(cfg.k).unwrap_or(100);
            let eps = eps.or(cfg.eps).unwrap_or(0.05);
            let data = generate_dataset(&scenario, &cfg.params, k, eps, cfg.params.seed)?;
            emit(out.as_deref(), stdout, &data.to_csv_string()?)
        }
        Command::Feasible { scenario, query, out } => {
            let scenario = NetworkScenario::from_json(&read_text(&scenario)?)?;
            let rows = query.load()?;
            let mut text = String::from("verdict,eigval\n");
            for (i, r) in rows.into_iter().enumerate() {
                check_dim(scenario.num_tp(), &r, i)?;
                let v = is_feasible(&scenario, &RateVector::new(r)?, FEASIBILITY_TOL)?;
                let verdict = if v.feasible { "feasible" } else { "infeasible" };
                text.push_str(&format!("{verdict},{}\n", v.eigval));
            }
            emit(out.as_deref(), stdout, &text)
        }
        Command::Fit { data, eps, method, neighbors, out } => {
            let method: Method = method.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
            let file = fs::File::open(&data)
                .map_err(|e| Failure::Usage(format!("cannot read '{}': {e}", data.display())))?;
            let set = TrainingSet::read_csv(file, eps)?;
            let mut text = match method {
                Method::Minimax => learner::fit(&set, eps)?.to_json()?,
                Method::Kernel => BaselineModel::Kernel(kernel_fit(&set)?).to_json()?,
                Method::Knn => BaselineModel::Knn(knn_fit(&set, neighbors)?).to_json()?,
            };
            text.push('\n');
            emit(out.as_deref(), stdout, &text)
        }
        Command::Predict { model, query, out } => {
            let model = load_predictor(&model)?;
            let rows = query.load()?;
            let mut text = csv_line((1..=model.output_dim()).map(|i| format!("y_{i}")));
            for (i, r) in rows.iter().enumerate() {
                check_dim(model.input_dim(), r, i)?;
                text.push_str(&csv_line(model.predict_vec(r).iter().map(|v| v.to_string())));
            }
            emit(out.as_deref(), stdout, &text)
        }
        Command::Bench { params, k, eps, num_test, num_seeds, methods, no_timings, summary, out } => {
            let mut cfg: BenchConfig = match &params.config {
                Some(path) => read_json(path)?,
                None => BenchConfig::default(),
            };
            params.apply(&mut cfg.scenario_params);
            if let Some(k) = k {
                cfg.k_grid = k;
            }
            if let Some(v) = eps {
                cfg.noise_eps = v;
            }
            if let Some(v) = num_test {
                cfg.num_test = v;
            }
            if let Some(v) = num_seeds {
                cfg.num_seeds = v;
            }
            if let Some(names) = methods {
                cfg.methods = names
                    .iter()
                    .map(|n| n.parse())
                    .collect::<Result<_, Error>>()
                    .map_err(|e| Failure::Usage(e.to_string()))?;
            }
            if no_timings {
                cfg.record_timings = false;
            }
            cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            eprintln!(
                "bench: {} seeds x {} sizes x {} methods",
                cfg.num_seeds,
                cfg.k_grid.len(),
                cfg.methods.len()
            );
            let report = run_benchmark(&cfg)?;
            if let Some(path) = summary {
                emit(Some(&path), stdout, &report.summary_csv())?;
            }
            emit(out.as_deref(), stdout, &report.to_csv())
        }
    }
}

/// Parses `args` (including the program name) and runs the subcommand,
/// returning the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = e.print();
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
