//! Load-coupled interference model of an OFDMA-like network.
//!
//! Each base station (BS) `i` serves a fixed set of test points (TPs). The
//! load of a cell is the fraction of its resource blocks needed to carry the
//! demand of its TPs, and the spectral efficiency of every link depends on
//! the loads of all interfering cells. The resulting nonlinear system
//! `rho = q(rho, r)` is solved by fixed-point iteration, and rate-demand
//! feasibility is decided through the associated conditional eigenvalue
//! problem `q(rho*, r) = lambda* rho*`, `||rho*||_inf = 1`.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sup-norm tolerance used by both solvers unless overridden.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Iteration cap used by both solvers unless overridden.
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// A fixed-point iterate whose sup-norm exceeds this value is declared divergent.
pub const DIVERGENCE_CEILING: f64 = 1e3;
/// Slack on the `lambda* <= 1` and `rho <= 1` feasibility tests.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Fixed network state: powers, gains, TP-to-BS assignment, bandwidth and noise.
///
/// `gain[i][j]` is the linear channel gain from BS `i` to TP `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioDoc", into = "ScenarioDoc")]
pub struct NetworkScenario {
    num_bs: usize,
    num_tp: usize,
    power: Vec<f64>,
    gain: Vec<Vec<f64>>,
    assignment: Vec<usize>,
    resources: f64,
    noise_power: f64,
    // received power p_k G_{k,j}, laid out TP-major (j * num_bs + k)
    received: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioDoc {
    num_bs: usize,
    num_tp: usize,
    power: Vec<f64>,
    gain: Vec<Vec<f64>>,
    assignment: Vec<usize>,
    resources_hz: f64,
    noise_power_w: f64,
}

impl TryFrom<ScenarioDoc> for NetworkScenario {
    type Error = Error;

    fn try_from(doc: ScenarioDoc) -> Result<Self> {
        let scenario = NetworkScenario::new(
            doc.power,
            doc.gain,
            doc.assignment,
            doc.resources_hz,
            doc.noise_power_w,
        )?;
        if scenario.num_bs != doc.num_bs || scenario.num_tp != doc.num_tp {
            return Err(Error::InvalidInput(format!(
                "declared size {}x{} does not match gain matrix {}x{}",
                doc.num_bs, doc.num_tp, scenario.num_bs, scenario.num_tp
            )));
        }
        Ok(scenario)
    }
}

impl From<NetworkScenario> for ScenarioDoc {
    fn from(s: NetworkScenario) -> Self {
        ScenarioDoc {
            num_bs: s.num_bs,
            num_tp: s.num_tp,
            power: s.power,
            gain: s.gain,
            assignment: s.assignment,
            resources_hz: s.resources,
            noise_power_w: s.noise_power,
        }
    }
}

impl NetworkScenario {
    /// Builds a scenario, checking every structural and physical invariant.
    ///
    /// `resources` is the product of the number of resource blocks and the
    /// per-block bandwidth in Hz; `noise_power` is in watts.
    pub fn new(
        power: Vec<f64>,
        gain: Vec<Vec<f64>>,
        assignment: Vec<usize>,
        resources: f64,
        noise_power: f64,
    ) -> Result<Self> {
        let num_bs = power.len();
        if num_bs == 0 {
            return Err(Error::InvalidInput("scenario needs at least one BS".into()));
        }
        if gain.len() != num_bs {
            return Err(Error::DimensionMismatch {
                what: "gain rows vs BS count",
                expected: num_bs,
                got: gain.len(),
            });
        }
        let num_tp = assignment.len();
        if num_tp == 0 {
            return Err(Error::InvalidInput("scenario needs at least one TP".into()));
        }
        for row in &gain {
            if row.len() != num_tp {
                return Err(Error::DimensionMismatch {
                    what: "gain columns vs TP count",
                    expected: num_tp,
                    got: row.len(),
                });
            }
        }
        if let Some(p) = power.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidInput(format!("power must be positive, got {p}")));
        }
        if gain.iter().flatten().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::InvalidInput(
                "gains must be finite and non-negative".into(),
            ));
        }
        for (tp, &bs) in assignment.iter().enumerate() {
            if bs >= num_bs {
                return Err(Error::InvalidInput(format!(
                    "TP {tp} assigned to BS {bs}, but there are only {num_bs} BSs"
                )));
            }
            if gain[bs][tp] <= 0.0 {
                return Err(Error::InvalidLink { bs, tp });
            }
        }
        if !(resources.is_finite() && resources > 0.0) {
            return Err(Error::InvalidInput(format!(
                "resources must be positive, got {resources}"
            )));
        }
        if !(noise_power.is_finite() && noise_power > 0.0) {
            return Err(Error::InvalidInput(format!(
                "noise power must be positive, got {noise_power}"
            )));
        }

        let mut received = vec![0.0; num_tp * num_bs];
        for j in 0..num_tp {
            for k in 0..num_bs {
                received[j * num_bs + k] = power[k] * gain[k][j];
            }
        }

        Ok(Self {
            num_bs,
            num_tp,
            power,
            gain,
            assignment,
            resources,
            noise_power,
            received,
        })
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn num_tp(&self) -> usize {
        self.num_tp
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn gain(&self) -> &[Vec<f64>] {
        &self.gain
    }

    /// Serving BS of every TP.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// TPs served by BS `bs`.
    pub fn served_by(&self, bs: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &i)| i == bs)
            .map(|(j, _)| j)
    }

    /// Total bandwidth resource per cell, R·B, in Hz.
    pub fn resources(&self) -> f64 {
        self.resources
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn check_rates(&self, rates: &[f64]) -> Result<()> {
        if rates.len() != self.num_tp {
            return Err(Error::DimensionMismatch {
                what: "rate vector length vs TP count",
                expected: self.num_tp,
                got: rates.len(),
            });
        }
        Ok(())
    }

    fn check_load(&self, load: &[f64]) -> Result<()> {
        if load.len() != self.num_bs {
            return Err(Error::DimensionMismatch {
                what: "load vector length vs BS count",
                expected: self.num_bs,
                got: load.len(),
            });
        }
        Ok(())
    }

    /// SINR of TP `tp` under its serving BS, without bounds checks.
    #[inline]
    fn serving_sinr(&self, load: &[f64], tp: usize) -> f64 {
        let serving = self.assignment[tp];
        let rx = &self.received[tp * self.num_bs..(tp + 1) * self.num_bs];
        let interference: f64 = rx
            .iter()
            .zip(load)
            .enumerate()
            .filter(|(k, _)| *k != serving)
            .map(|(_, (p, rho))| p * rho)
            .sum();
        rx[serving] / (interference + self.noise_power)
    }

    /// Writes `q(load, rates)` into `out` without validation or allocation.
    pub(crate) fn load_map_into(&self, load: &[f64], rates: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (tp, &rate) in rates.iter().enumerate() {
            let sinr = self.serving_sinr(load, tp);
            out[self.assignment[tp]] += rate / (1.0 + sinr).log2();
        }
        let scale = 1.0 / self.resources;
        out.iter_mut().for_each(|o| *o *= scale);
    }
}

/// Rate demand per TP in bits/s; strictly positive componentwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RateVector(Vec<f64>);

impl RateVector {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidInput("rate vector is empty".into()));
        }
        if let Some((j, r)) = rates
            .iter()
            .enumerate()
            .find(|(_, r)| !(r.is_finite() && **r > 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "rate of TP {j} must be positive, got {r}"
            )));
        }
        Ok(Self(rates))
    }

    /// Multiplies every demand by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|r| r * factor).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for RateVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for RateVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RateVector> for Vec<f64> {
    fn from(r: RateVector) -> Self {
        r.0
    }
}

/// Cell load per BS (dimensionless); non-negative componentwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LoadVector(Vec<f64>);

impl LoadVector {
    pub fn new(loads: Vec<f64>) -> Result<Self> {
        if let Some((i, l)) = loads
            .iter()
            .enumerate()
            .find(|(_, l)| !(l.is_finite() && **l >= 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "load of BS {i} must be non-negative, got {l}"
            )));
        }
        Ok(Self(loads))
    }

    pub fn zeros(num_bs: usize) -> Self {
        Self(vec![0.0; num_bs])
    }

    pub fn ones(num_bs: usize) -> Self {
        Self(vec![1.0; num_bs])
    }

    /// True when every component is at most `1 + slack`.
    pub fn within_unit(&self, slack: f64) -> bool {
        self.0.iter().all(|&l| l <= 1.0 + slack)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for LoadVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for LoadVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LoadVector> for Vec<f64> {
    fn from(l: LoadVector) -> Self {
        l.0
    }
}

/// Outcome of [`solve_fixed_point`].
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointResult {
    pub load: LoadVector,
    /// `||load - q(load, r)||_inf` of the returned load.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Converged and every load is at most `1 + FEASIBILITY_TOL`.
    pub feasible: bool,
}

/// Outcome of [`solve_conditional_eigen`].
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    /// Normalized eigenvector, `||eigvec||_inf = 1`.
    pub eigvec: LoadVector,
    pub eigval: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Feasibility decision plus the eigenvalue that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    pub eigval: f64,
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn sup_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// SINR of the link from BS `bs` to TP `tp` under the given cell loads.
///
/// Interference from BS `k` is `p_k G_{k,tp} load_k`; the BS's own load
/// does not enter. `bs` need not be the serving BS of `tp`.
pub fn sinr(scenario: &NetworkScenario, load: &LoadVector, bs: usize, tp: usize) -> Result<f64> {
    scenario.check_load(load)?;
    if bs >= scenario.num_bs || tp >= scenario.num_tp {
        return Err(Error::InvalidInput(format!(
            "link ({bs}, {tp}) out of range for {}x{} scenario",
            scenario.num_bs, scenario.num_tp
        )));
    }
    if scenario.gain[bs][tp] <= 0.0 {
        return Err(Error::InvalidLink { bs, tp });
    }
    let interference: f64 = (0..scenario.num_bs)
        .filter(|&k| k != bs)
        .map(|k| scenario.power[k] * scenario.gain[k][tp] * load[k])
        .sum();
    Ok(scenario.power[bs] * scenario.gain[bs][tp] / (interference + scenario.noise_power))
}

/// The load mapping `q(load, rates)`.
///
/// Component `i` is `(1 / (R·B)) * sum_{j served by i} r_j / log2(1 + sinr_ij)`.
pub fn load_map(
    scenario: &NetworkScenario,
    load: &LoadVector,
    rates: &RateVector,
) -> Result<LoadVector> {
    scenario.check_load(load)?;
    scenario.check_rates(rates)?;
    let mut out = vec![0.0; scenario.num_bs];
    scenario.load_map_into(load, rates, &mut out);
    Ok(LoadVector(out))
}

/// Solves `rho = q(rho, r)` by plain iteration from the all-zero load.
///
/// From zero the iteration is increasing, so it either converges to the unique
/// fixed point or runs past [`DIVERGENCE_CEILING`]; divergence and iteration
/// exhaustion are reported through `converged = false`, not as errors.
pub fn solve_fixed_point(
    scenario: &NetworkScenario,
    rates: &RateVector,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointResult> {
    scenario.check_rates(rates)?;
    check_solver_args(tol, max_iter)?;

    let m = scenario.num_bs;
    let mut load = vec![0.0; m];
    let mut next = vec![0.0; m];
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        scenario.load_map_into(&load, rates, &mut next);
        iterations += 1;
        residual = sup_distance(&load, &next);
        if residual <= tol {
            converged = true;
            break;
        }
        std::mem::swap(&mut load, &mut next);
        if sup_norm(&load) > DIVERGENCE_CEILING || !residual.is_finite() {
            break;
        }
    }

    let feasible = converged && load.iter().all(|&l| l <= 1.0 + FEASIBILITY_TOL);
    Ok(FixedPointResult {
        load: LoadVector(load),
        residual,
        iterations,
        converged,
        feasible,
    })
}

/// Solves the conditional eigenvalue problem `q(rho*, r) = lambda* rho*`,
/// `||rho*||_inf = 1`, by normalized iteration from the all-ones vector.
pub fn solve_conditional_eigen(
    scenario: &NetworkScenario,
    rates: &RateVector,
    tol: f64,
    max_iter: usize,
) -> Result<EigenSolution> {
    scenario.check_rates(rates)?;
    check_solver_args(tol, max_iter)?;

    let m = scenario.num_bs;
    let mut vec = vec![1.0; m];
    let mut image = vec![0.0; m];
    let mut eigval = f64::NAN;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        scenario.load_map_into(&vec, rates, &mut image);
        iterations += 1;
        eigval = sup_norm(&image);
        image.iter_mut().for_each(|x| *x /= eigval);
        let change = sup_distance(&vec, &image);
        if change <= tol {
            converged = true;
            break;
        }
        std::mem::swap(&mut vec, &mut image);
    }

    Ok(EigenSolution {
        eigvec: LoadVector(vec),
        eigval,
        iterations,
        converged,
    })
}

/// Decides feasibility of `rates` with default solver settings: feasible iff
/// `lambda* <= 1 + tol`.
///
/// Non-convergence of the eigen-iteration is returned as
/// [`Error::Indeterminate`].
pub fn is_feasible(scenario: &NetworkScenario, rates: &RateVector, tol: f64) -> Result<FeasibilityVerdict> {
    let sol = solve_conditional_eigen(scenario, rates, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    if !sol.converged {
        let mut image = vec![0.0; scenario.num_bs];
        scenario.load_map_into(&sol.eigvec, rates, &mut image);
        let last_change = image
            .iter()
            .zip(sol.eigvec.iter())
            .map(|(g, v)| (g / sol.eigval - v).abs())
            .fold(0.0, f64::max);
        return Err(Error::Indeterminate {
            iterations: sol.iterations,
            last_change,
        });
    }
    Ok(FeasibilityVerdict {
        feasible: sol.eigval <= 1.0 + tol,
        eigval: sol.eigval,
    })
}

fn check_solver_args(tol: f64, max_iter: usize) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidInput("max_iter must be at least 1".into()));
    }
    Ok(())
}
