//! Accuracy metrics and the experiment harness comparing the minimax learner
//! with the kernel and nearest-neighbor baselines.
//!
//! For each seed a scenario is generated, a fixed set of feasible test
//! queries is labeled with exact fixed-point loads, and every method is
//! trained on the first `K` samples of one noisy training stream for each
//! `K` in the grid. The report has one row per (seed, K, method, BS).

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{kernel_fit, knn_fit, DEFAULT_NEIGHBORS};
use crate::error::{Error, Result};
use crate::learner;
use crate::predictor::LoadPredictor;
use crate::scenario::{generate_dataset, generate_scenario, sample_feasible, ScenarioParams, TrainingSet};

/// A prediction exceeding its ordered partner by more than this is a violation.
pub const MONOTONICITY_TOL: f64 = 1e-12;

pub const REPORT_HEADER: &str = "seed,k,method,bs,rmse,pearson,sup_error,mono_violations,fit_s,predict_s";
pub const SUMMARY_HEADER: &str =
    "k,method,seeds,rmse_mean,rmse_std,pearson_mean,pearson_std,sup_error_mean,mono_violations_total";

const STREAM_TEST: u64 = 3;
const STREAM_MONO: u64 = 4;

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { what: "prediction vs truth length", expected: b, got: a });
    }
    Ok(())
}

/// Root mean square error.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    if pred.is_empty() {
        return Err(Error::InvalidInput("rmse of empty sequences".into()));
    }
    let sq: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sq / pred.len() as f64).sqrt())
}

/// Pearson's sample correlation coefficient.
pub fn pearson(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    if pred.len() < 2 {
        return Err(Error::InvalidInput("correlation needs at least two samples".into()));
    }
    let n = pred.len() as f64;
    let mp = pred.iter().sum::<f64>() / n;
    let mt = truth.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, t) in pred.iter().zip(truth) {
        let (dp, dt) = (p - mp, t - mt);
        sxy += dp * dt;
        sxx += dp * dp;
        syy += dt * dt;
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedCorrelation("prediction"));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedCorrelation("truth"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Largest absolute componentwise error over all samples.
pub fn sup_error(pred: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let mut worst = 0.0f64;
    for (p, t) in pred.iter().zip(truth) {
        check_lengths(p.len(), t.len())?;
        for (a, b) in p.iter().zip(t) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Violations found by [`count_monotonicity_violations`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotonicityCounts {
    /// Pairs where at least one output decreased.
    pub pairs: usize,
    /// Per output, pairs where that output decreased.
    pub per_output: Vec<usize>,
}

/// Draws `num_pairs` ordered pairs `x <= y` in the box `[lo, hi]^N` and counts
/// those where some output of `predictor` at `x` exceeds the one at `y` by
/// more than [`MONOTONICITY_TOL`].
///
/// `y` adds a uniform step of up to 10% of the box width to every
/// component of `x`, capped at `hi`.
pub fn count_monotonicity_violations(
    predictor: &dyn LoadPredictor,
    lo: f64,
    hi: f64,
    num_pairs: usize,
    seed: u64,
) -> MonotonicityCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_MONO);
    let n = predictor.input_dim();
    let m = predictor.output_dim();
    let step = 0.1 * (hi - lo);
    let mut counts = MonotonicityCounts { pairs: 0, per_output: vec![0; m] };
    let (mut px, mut py) = (vec![0.0; m], vec![0.0; m]);
    let (mut x, mut y) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..num_pairs {
        for j in 0..n {
            x[j] = rng.random_range(lo..hi);
            y[j] = (x[j] + rng.random::<f64>() * step).min(hi);
        }
        predictor.predict_into(&x, &mut px);
        predictor.predict_into(&y, &mut py);
        let mut any = false;
        for i in 0..m {
            if px[i] > py[i] + MONOTONICITY_TOL {
                counts.per_output[i] += 1;
                any = true;
            }
        }
        if any {
            counts.pairs += 1;
        }
    }
    counts
}

/// Learning method compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Minimax,
    Kernel,
    Knn,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Minimax, Method::Kernel, Method::Knn];

    pub fn name(self) -> &'static str {
        match self {
            Method::Minimax => "minimax",
            Method::Kernel => "kernel",
            Method::Knn => "knn",
        }
    }

    /// Trains the method on `data`; `eps` is the noise bound used by the
    /// minimax learner.
    pub fn fit(self, data: &TrainingSet, eps: f64) -> Result<Box<dyn LoadPredictor>> {
        Ok(match self {
            Method::Minimax => Box::new(learner::fit(data, eps)?),
            Method::Kernel => Box::new(kernel_fit(data)?),
            Method::Knn => Box::new(knn_fit(data, DEFAULT_NEIGHBORS.min(data.len()))?),
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minimax" => Ok(Method::Minimax),
            "kernel" => Ok(Method::Kernel),
            "knn" => Ok(Method::Knn),
            other => Err(Error::InvalidInput(format!(
                "unknown method '{other}' (expected minimax, kernel or knn)"
            ))),
        }
    }
}

/// Experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    /// Scenario parameters; `seed` is the first of `num_seeds` consecutive seeds.
    pub scenario_params: ScenarioParams,
    pub k_grid: Vec<usize>,
    pub num_test: usize,
    pub noise_eps: f64,
    pub num_seeds: usize,
    pub methods: Vec<Method>,
    /// Ordered pairs drawn per cell for the monotonicity count.
    pub mono_pairs: usize,
    /// When false the timing columns are written as 0 so reports are
    /// byte-reproducible.
    pub record_timings: bool,
    /// How many alternative deployments to try for a seed whose placement
    /// cannot support the rate box (rejection sampling gives up on it).
    pub max_redraws: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            scenario_params: ScenarioParams::default(),
            k_grid: vec![25, 50, 100, 200, 400, 600],
            num_test: 10_000,
            noise_eps: 0.05,
            num_seeds: 10,
            methods: Method::ALL.to_vec(),
            mono_pairs: 1000,
            record_timings: true,
            max_redraws: 32,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario_params.validate()?;
        if self.k_grid.is_empty() || self.k_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("k_grid must be non-empty and strictly ascending".into()));
        }
        if self.k_grid[0] < 2 {
            return Err(Error::InvalidInput("every K in k_grid must be at least 2".into()));
        }
        if self.num_test == 0 || self.num_seeds == 0 {
            return Err(Error::InvalidInput("num_test and num_seeds must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidInput("at least one method is required".into()));
        }
        if !(self.noise_eps >= 0.0 && self.noise_eps.is_finite()) {
            return Err(Error::InvalidInput("noise_eps must be non-negative".into()));
        }
        Ok(())
    }
}

/// One line of the report. Metrics of a failed cell are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub seed: u64,
    pub k: usize,
    pub method: Method,
    pub bs: usize,
    pub rmse: f64,
    pub pearson: f64,
    pub sup_error: f64,
    pub mono_violations: usize,
    pub fit_s: f64,
    pub predict_s: f64,
}

/// Aggregate of one (K, method) cell over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub k: usize,
    pub method: Method,
    pub seeds: usize,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub pearson_mean: f64,
    pub pearson_std: f64,
    pub sup_error_mean: f64,
    pub mono_violations_total: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// `(seed, deployment seed)` for every seed that produced a scenario.
    pub deployments: Vec<(u64, u64)>,
}

fn nan_mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values.filter(|v| v.is_finite()) {
        sum += v;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / n;
    let var = if finite.len() > 1 {
        finite.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.seed,
                r.k,
                r.method.name(),
                r.bs,
                r.rmse,
                r.pearson,
                r.sup_error,
                r.mono_violations,
                r.fit_s,
                r.predict_s
            )
            .expect("writing to a String cannot fail");
        }
        out
    }

    pub fn seeds(&self) -> Vec<u64> {
        let mut seeds: Vec<u64> = self.rows.iter().map(|r| r.seed).collect();
        seeds.dedup();
        seeds
    }

    /// Per-seed metrics of one (K, method) cell averaged over BSs, skipping
    /// NaN entries (e.g. the correlation of a BS that serves no TP).
    /// Returns `(seed, rmse, pearson)` triples in seed order.
    pub fn seed_means(&self, k: usize, method: Method) -> Vec<(u64, f64, f64)> {
        self.seeds()
            .into_iter()
            .map(|seed| {
                let cell = || {
                    self.rows
                        .iter()
                        .filter(move |r| r.seed == seed && r.k == k && r.method == method)
                };
                (seed, nan_mean(cell().map(|r| r.rmse)), nan_mean(cell().map(|r| r.pearson)))
            })
            .collect()
    }

    /// Mean and standard deviation over seeds of the per-seed BS averages.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut keys: Vec<(usize, Method)> = self.rows.iter().map(|r| (r.k, r.method)).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|(k, method)| {
                let means = self.seed_means(k, method);
                let rmse: Vec<f64> = means.iter().map(|m| m.1).collect();
                let corr: Vec<f64> = means.iter().map(|m| m.2).collect();
                let cell = || self.rows.iter().filter(move |r| r.k == k && r.method == method);
                let (rmse_mean, rmse_std) = mean_std(&rmse);
                let (pearson_mean, pearson_std) = mean_std(&corr);
                SummaryRow {
                    k,
                    method,
                    seeds: rmse.iter().filter(|v| v.is_finite()).count(),
                    rmse_mean,
                    rmse_std,
                    pearson_mean,
                    pearson_std,
                    sup_error_mean: nan_mean(cell().map(|r| r.sup_error)),
                    mono_violations_total: cell().map(|r| r.mono_violations).sum(),
                }
            })
            .collect()
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(SUMMARY_HEADER);
        out.push('\n');
        for s in self.summary() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.k,
                s.method.name(),
                s.seeds,
                s.rmse_mean,
                s.rmse_std,
                s.pearson_mean,
                s.pearson_std,
                s.sup_error_mean,
                s.mono_violations_total
            )
            .expect("writing to a String cannot fail");
        }
        out
    }
}

struct SeedContext {
    test_inputs: Vec<Vec<f64>>,
    test_truth: Vec<Vec<f64>>,
    pool: TrainingSet,
}

/// Deployment seed used for the `attempt`-th placement of `seed`; attempt 0
/// is the seed itself.
pub fn deployment_seed(seed: u64, attempt: usize) -> u64 {
    seed.wrapping_add((attempt as u64) << 32)
}

fn prepare_seed(config: &BenchConfig, seed: u64) -> Result<(u64, SeedContext)> {
    let mut attempt = 0;
    loop {
        let params = ScenarioParams { seed: deployment_seed(seed, attempt), ..config.scenario_params.clone() };
        match prepare_deployment(config, &params) {
            Err(Error::InfeasibleRange { .. }) if attempt < config.max_redraws => attempt += 1,
            other => return other.map(|ctx| (params.seed, ctx)),
        }
    }
}

fn prepare_deployment(config: &BenchConfig, params: &ScenarioParams) -> Result<SeedContext> {
    let scenario = generate_scenario(params)?;
    let k_max = *config.k_grid.last().expect("validated non-empty");
    // training first: it is the cheaper of the two to reject a bad placement
    let pool = generate_dataset(&scenario, params, k_max, config.noise_eps, params.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(STREAM_TEST);
    let (test_inputs, test_truth) = sample_feasible(&scenario, params, config.num_test, &mut rng)?;
    Ok(SeedContext { test_inputs, test_truth, pool })
}

fn failed_rows(seed: u64, k: usize, method: Method, num_bs: usize) -> Vec<BenchRow> {
    (0..num_bs)
        .map(|bs| BenchRow {
            seed,
            k,
            method,
            bs,
            rmse: f64::NAN,
            pearson: f64::NAN,
            sup_error: f64::NAN,
            mono_violations: 0,
            fit_s: f64::NAN,
            predict_s: f64::NAN,
        })
        .collect()
}

fn run_cell(
    config: &BenchConfig,
    ctx: &SeedContext,
    seed: u64,
    k: usize,
    method: Method,
) -> Result<Vec<BenchRow>> {
    let params = &config.scenario_params;
    let data = ctx.pool.prefix(k);

    let started = Instant::now();
    let model = method.fit(&data, config.noise_eps)?;
    let fit_s = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let predictions: Vec<Vec<f64>> = ctx.test_inputs.iter().map(|x| model.predict_vec(x)).collect();
    let predict_s = started.elapsed().as_secs_f64();

    let mono = count_monotonicity_violations(
        model.as_ref(),
        params.rate_min,
        params.rate_max,
        config.mono_pairs,
        seed ^ (k as u64) << 32,
    );

    let (fit_s, predict_s) = if config.record_timings { (fit_s, predict_s) } else { (0.0, 0.0) };
    let num_bs = model.output_dim();
    let rows = (0..num_bs)
        .map(|bs| {
            let pred: Vec<f64> = predictions.iter().map(|p| p[bs]).collect();
            let truth: Vec<f64> = ctx.test_truth.iter().map(|t| t[bs]).collect();
            let sup = pred.iter().zip(&truth).map(|(p, t)| (p - t).abs()).fold(0.0, f64::max);
            BenchRow {
                seed,
                k,
                method,
                bs,
                rmse: rmse(&pred, &truth).unwrap_or(f64::NAN),
                pearson: pearson(&pred, &truth).unwrap_or(f64::NAN),
                sup_error: sup,
                mono_violations: mono.per_output[bs],
                fit_s,
                predict_s,
            }
        })
        .collect();
    Ok(rows)
}

/// Runs the full grid. Cells that fail are reported as NaN rows; the
/// remaining cells still run.
///
/// A seed whose deployment cannot support the rate box (fewer than 1% of
/// draws feasible) is re-placed up to `max_redraws` times, see
/// [`deployment_seed`]; the report keeps the original seed.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let num_bs = config.scenario_params.num_bs;
    let cells: Vec<(usize, Method)> = config
        .k_grid
        .iter()
        .flat_map(|&k| config.methods.iter().map(move |&m| (k, m)))
        .collect();

    let per_seed: Vec<(Option<(u64, u64)>, Vec<BenchRow>)> = (0..config.num_seeds as u64)
        .into_par_iter()
        .map(|offset| {
            let seed = config.scenario_params.seed.wrapping_add(offset);
            match prepare_seed(config, seed) {
                Ok((deployment, ctx)) => {
                    let rows = cells
                        .par_iter()
                        .flat_map_iter(|&(k, method)| {
                            run_cell(config, &ctx, seed, k, method)
                                .unwrap_or_else(|_| failed_rows(seed, k, method, num_bs))
                        })
                        .collect();
                    (Some((seed, deployment)), rows)
                }
                Err(_) => {
                    let rows = cells
                        .iter()
                        .flat_map(|&(k, method)| failed_rows(seed, k, method, num_bs))
                        .collect();
                    (None, rows)
                }
            }
        })
        .collect();

    let deployments = per_seed.iter().filter_map(|(d, _)| *d).collect();
    let mut rows: Vec<BenchRow> = per_seed.into_iter().flat_map(|(_, r)| r).collect();
    rows.sort_by(|a, b| (a.seed, a.k, a.method, a.bs).cmp(&(b.seed, b.k, b.method, b.bs)));
    Ok(BenchReport { rows, deployments })
}
