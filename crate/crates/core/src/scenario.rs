//! Random network deployments and noisy training data.
//!
//! Base stations and test points are dropped uniformly over a square area,
//! gains follow the urban-macro pathloss law `128.1 + 37.6 log10(d_km)` dB,
//! and every TP is served by the BS with the strongest received power.
//! Training inputs are drawn uniformly from the rate box and kept only when
//! the conditional eigenvalue test declares them feasible.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::load_model::{
    is_feasible, solve_fixed_point, NetworkScenario, RateVector, DEFAULT_MAX_ITER, DEFAULT_TOL,
    FEASIBILITY_TOL,
};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Rejection sampling gives up when fewer than 1% of this many draws are feasible.
pub const REJECTION_WINDOW: usize = 100_000;

// RNG stream ids; one per independent purpose so streams never overlap.
const STREAM_PLACEMENT: u64 = 1;
const STREAM_TRAINING: u64 = 2;

/// Deployment and demand parameters for scenario and dataset generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    pub num_bs: usize,
    pub num_tp: usize,
    /// Side of the square deployment area, meters.
    pub area_side: f64,
    /// Distances below this are clamped before evaluating pathloss, meters.
    pub min_bs_tp_distance: f64,
    /// Transmit power of every BS, watts.
    pub power_w: f64,
    /// Bandwidth resource per cell (R·B), Hz.
    pub resources_hz: f64,
    pub temperature_k: f64,
    /// Lower corner of the rate box, bits/s per TP.
    pub rate_min: f64,
    /// Upper corner of the rate box, bits/s per TP.
    pub rate_max: f64,
    pub seed: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            num_bs: 10,
            num_tp: 50,
            area_side: 1000.0,
            min_bs_tp_distance: 35.0,
            power_w: 1.0,
            resources_hz: 2e7,
            temperature_k: 300.0,
            rate_min: 1e6,
            rate_max: 1e7,
            seed: 0,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.num_bs == 0 || self.num_tp == 0 {
            return bad("num_bs and num_tp must be positive".into());
        }
        if !(self.area_side > 0.0) {
            return bad(format!("area_side must be positive, got {}", self.area_side));
        }
        if !(self.min_bs_tp_distance > 0.0) {
            return bad(format!(
                "min_bs_tp_distance must be positive, got {}",
                self.min_bs_tp_distance
            ));
        }
        if !(self.power_w > 0.0 && self.resources_hz > 0.0 && self.temperature_k > 0.0) {
            return bad("power_w, resources_hz and temperature_k must be positive".into());
        }
        if !(self.rate_min > 0.0 && self.rate_min < self.rate_max && self.rate_max.is_finite()) {
            return bad(format!(
                "need 0 < rate_min < rate_max, got [{}, {}]",
                self.rate_min, self.rate_max
            ));
        }
        Ok(())
    }

    /// Thermal noise power `k_B T (R·B)`, watts.
    pub fn noise_power(&self) -> f64 {
        BOLTZMANN * self.temperature_k * self.resources_hz
    }

    fn draw_rates(&self, num_tp: usize, rng: &mut impl Rng) -> Vec<f64> {
        (0..num_tp)
            .map(|_| rng.random_range(self.rate_min..self.rate_max))
            .collect()
    }
}

/// Urban-macro pathloss in dB; distances below `min_distance_m` are clamped.
pub fn pathloss_db(distance_m: f64, min_distance_m: f64) -> f64 {
    let d = distance_m.max(min_distance_m);
    128.1 + 37.6 * (d / 1000.0).log10()
}

/// Linear gain corresponding to a pathloss in dB.
pub fn db_to_gain(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Drops BSs and TPs, evaluates gains and assigns every TP to its strongest BS.
///
/// Deterministic in `params` (including `params.seed`).
pub fn generate_scenario(params: &ScenarioParams) -> Result<NetworkScenario> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(STREAM_PLACEMENT);

    let mut drop = |count: usize| -> Vec<(f64, f64)> {
        (0..count)
            .map(|_| {
                let x = rng.random::<f64>() * params.area_side;
                let y = rng.random::<f64>() * params.area_side;
                (x, y)
            })
            .collect()
    };
    let bs_pos = drop(params.num_bs);
    let tp_pos = drop(params.num_tp);

    let gain: Vec<Vec<f64>> = bs_pos
        .iter()
        .map(|&(bx, by)| {
            tp_pos
                .iter()
                .map(|&(tx, ty)| {
                    let d = (bx - tx).hypot(by - ty);
                    db_to_gain(pathloss_db(d, params.min_bs_tp_distance))
                })
                .collect()
        })
        .collect();

    let power = vec![params.power_w; params.num_bs];
    let assignment = (0..params.num_tp)
        .map(|j| {
            let mut best = 0;
            for i in 1..params.num_bs {
                if power[i] * gain[i][j] > power[best] * gain[best][j] {
                    best = i;
                }
            }
            best
        })
        .collect();

    NetworkScenario::new(
        power,
        gain,
        assignment,
        params.resources_hz,
        params.noise_power(),
    )
}

/// Scattered training data: `K` rate vectors with `M` load observations each.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    /// Bound on the absolute observation noise.
    pub noise_bound: f64,
    pub smoothed: bool,
    /// Per-output Lipschitz constants the outputs were smoothed against.
    pub lipschitz: Option<Vec<f64>>,
}

impl TrainingSet {
    /// Raw (unsmoothed) training data. Inputs and outputs must be finite and
    /// rectangular; inputs are not required to be positive so the learner can
    /// be used on generic scattered data.
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<Vec<f64>>, noise_bound: f64) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        if inputs.len() != outputs.len() {
            return Err(Error::DimensionMismatch {
                what: "output rows vs input rows",
                expected: inputs.len(),
                got: outputs.len(),
            });
        }
        let n = inputs[0].len();
        let m = outputs[0].len();
        if n == 0 || m == 0 {
            return Err(Error::InvalidInput("empty input or output vectors".into()));
        }
        for (x, y) in inputs.iter().zip(&outputs) {
            if x.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "input vector length",
                    expected: n,
                    got: x.len(),
                });
            }
            if y.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "output vector length",
                    expected: m,
                    got: y.len(),
                });
            }
        }
        if inputs.iter().chain(&outputs).flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("training data contains non-finite values".into()));
        }
        if !(noise_bound >= 0.0 && noise_bound.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "noise bound must be non-negative, got {noise_bound}"
            )));
        }
        Ok(Self {
            inputs,
            outputs,
            noise_bound,
            smoothed: false,
            lipschitz: None,
        })
    }

    /// Number of samples `K`.
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Input dimension `N`.
    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    /// Output dimension `M`.
    pub fn output_dim(&self) -> usize {
        self.outputs[0].len()
    }

    /// Observations of output `i` across all samples.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.outputs.iter().map(|y| y[i]).collect()
    }

    /// The first `k` samples.
    pub fn prefix(&self, k: usize) -> Self {
        let k = k.min(self.len());
        Self {
            inputs: self.inputs[..k].to_vec(),
            outputs: self.outputs[..k].to_vec(),
            ..self.clone()
        }
    }

    /// Writes `r_1,...,r_N,y_1,...,y_M` followed by one row per sample.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = (1..=self.input_dim())
            .map(|j| format!("r_{j}"))
            .chain((1..=self.output_dim()).map(|i| format!("y_{i}")))
            .collect();
        w.write_record(&header)?;
        for (x, y) in self.inputs.iter().zip(&self.outputs) {
            w.write_record(x.iter().chain(y).map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Reads the format produced by [`TrainingSet::write_csv`].
    pub fn read_csv<R: Read>(input: R, noise_bound: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header = rdr.headers()?.clone();
        let (n, m) = parse_dataset_header(&header)?;
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let values = parse_row(&record, row + 2)?;
            if values.len() != n + m {
                return Err(Error::DimensionMismatch {
                    what: "CSV row width",
                    expected: n + m,
                    got: values.len(),
                });
            }
            inputs.push(values[..n].to_vec());
            outputs.push(values[n..].to_vec());
        }
        Self::new(inputs, outputs, noise_bound)
    }
}

fn parse_dataset_header(header: &csv::StringRecord) -> Result<(usize, usize)> {
    let n = header.iter().take_while(|h| h.starts_with("r_")).count();
    let m = header.len() - n;
    let expected = (1..=n)
        .map(|j| format!("r_{j}"))
        .chain((1..=m).map(|i| format!("y_{i}")));
    if n == 0 || m == 0 || !expected.zip(header.iter()).all(|(e, h)| e == h) {
        return Err(Error::InvalidInput(format!(
            "dataset header must be r_1..r_N,y_1..y_M, got '{}'",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok((n, m))
}

pub(crate) fn parse_row(record: &csv::StringRecord, line: usize) -> Result<Vec<f64>> {
    record
        .iter()
        .map(|field| {
            field.parse::<f64>().map_err(|_| {
                Error::InvalidInput(format!("line {line}: '{field}' is not a number"))
            })
        })
        .collect()
}

/// Draws one candidate from the rate box and returns it with its exact loads
/// when it passes the eigenvalue test and the fixed-point solver converges.
fn draw_feasible(
    scenario: &NetworkScenario,
    params: &ScenarioParams,
    rng: &mut ChaCha8Rng,
) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let rates = RateVector::new(params.draw_rates(scenario.num_tp(), rng))?;
    if !is_feasible(scenario, &rates, FEASIBILITY_TOL)?.feasible {
        return Ok(None);
    }
    let fp = solve_fixed_point(scenario, &rates, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    if !fp.feasible {
        // eigen-test boundary cases where the plain iteration is too slow
        return Ok(None);
    }
    Ok(Some((rates.into_inner(), fp.load.into_inner())))
}

struct RejectionCounter {
    draws: usize,
    accepted: usize,
}

impl RejectionCounter {
    fn record(&mut self, accepted: bool) -> Result<()> {
        self.draws += 1;
        if accepted {
            self.accepted += 1;
        }
        if self.draws % REJECTION_WINDOW == 0 && self.accepted * 100 < self.draws {
            return Err(Error::InfeasibleRange {
                accepted: self.accepted,
                draws: self.draws,
            });
        }
        Ok(())
    }
}

/// Draws `count` feasible rate vectors (uniform on the rate box, rejection
/// against the eigenvalue test) together with their exact fixed-point loads.
pub fn sample_feasible(
    scenario: &NetworkScenario,
    params: &ScenarioParams,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    params.validate()?;
    let mut counter = RejectionCounter { draws: 0, accepted: 0 };
    let mut inputs = Vec::with_capacity(count);
    let mut loads = Vec::with_capacity(count);
    while inputs.len() < count {
        let hit = draw_feasible(scenario, params, rng)?;
        counter.record(hit.is_some())?;
        if let Some((r, l)) = hit {
            inputs.push(r);
            loads.push(l);
        }
    }
    Ok((inputs, loads))
}

/// Generates `k` noisy training samples.
///
/// Observations are `clip(f(r) + e, 0, 1)` where `f` is the fixed-point
/// load and `e` is Gaussian with standard deviation `noise_eps`, hard-clipped
/// to `[-noise_eps, noise_eps]` per component. Samples are drawn in sequence
/// from one stream, so a smaller `k` under the same seed yields a prefix of a
/// larger one.
pub fn generate_dataset(
    scenario: &NetworkScenario,
    params: &ScenarioParams,
    k: usize,
    noise_eps: f64,
    seed: u64,
) -> Result<TrainingSet> {
    params.validate()?;
    if k == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if !(noise_eps >= 0.0 && noise_eps.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "noise bound must be non-negative, got {noise_eps}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_TRAINING);

    let mut counter = RejectionCounter { draws: 0, accepted: 0 };
    let mut inputs = Vec::with_capacity(k);
    let mut outputs = Vec::with_capacity(k);
    while inputs.len() < k {
        let hit = draw_feasible(scenario, params, &mut rng)?;
        counter.record(hit.is_some())?;
        if let Some((r, load)) = hit {
            let y = load
                .iter()
                .map(|&l| {
                    let z: f64 = rng.sample(StandardNormal);
                    let e = (z * noise_eps).clamp(-noise_eps, noise_eps);
                    (l + e).clamp(0.0, 1.0)
                })
                .collect();
            inputs.push(r);
            outputs.push(y);
        }
    }
    TrainingSet::new(inputs, outputs, noise_eps)
}
