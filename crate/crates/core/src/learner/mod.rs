//! Minimax-optimal interpolation of Lipschitz monotone load functions.
//!
//! For every BS the learner keeps the (smoothed) training loads `rho^k` at
//! anchors `r^k` and a Lipschitz constant `L`. Any monotone function with
//! constant `L` through the anchors lies between
//!
//! ```text
//! lower(x) = max_k rho^k - L ||(r^k - x)_+||
//! upper(x) = min_k rho^k + L ||(x - r^k)_+||
//! ```
//!
//! and the prediction is the midpoint of that band (after intersecting it
//! with `[0, 1]`), which minimizes the worst-case error over the class.
//! Noisy observations are first made compatible with the class by the
//! smoothing LP in [`smoothing`].

mod smoothing;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::load_model::LoadVector;
use crate::predictor::LoadPredictor;
use crate::scenario::TrainingSet;

/// Slack allowed on the compatibility constraints of a fitted model.
pub const COMPATIBILITY_TOL: f64 = 1e-9;

/// `||(x - anchor)_+||`: Euclidean norm of the positive part of `x - anchor`.
///
/// Zero exactly when `x <= anchor` componentwise.
pub fn cone_distance(x: &[f64], anchor: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), anchor.len());
    x.iter()
        .zip(anchor)
        .map(|(a, b)| {
            let d = (a - b).max(0.0);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Both cone distances at once: `(||(x - a)_+||, ||(a - x)_+||)`.
#[inline]
fn cone_pair(x: &[f64], anchor: &[f64]) -> (f64, f64) {
    let (mut up, mut down) = (0.0, 0.0);
    for (a, b) in x.iter().zip(anchor) {
        let d = a - b;
        if d > 0.0 {
            up += d * d;
        } else {
            down += d * d;
        }
    }
    (up.sqrt(), down.sqrt())
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Per-output Lipschitz estimate
/// `L_i = max_{k != j} (|y_i^k - y_i^j| - 2 eps) / ||r^k - r^j||`, floored at 0.
pub fn estimate_lipschitz(data: &TrainingSet, eps: f64) -> Result<Vec<f64>> {
    let k = data.len();
    if k < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: k });
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps must be non-negative, got {eps}")));
    }
    let m = data.output_dim();
    let mut lipschitz = vec![0.0f64; m];
    for a in 0..k {
        for b in (a + 1)..k {
            let dist = euclidean(&data.inputs[a], &data.inputs[b]);
            if dist == 0.0 {
                return Err(Error::DuplicateAnchors { first: a, second: b });
            }
            for (i, l) in lipschitz.iter_mut().enumerate() {
                let slope = ((data.outputs[a][i] - data.outputs[b][i]).abs() - 2.0 * eps) / dist;
                *l = l.max(slope);
            }
        }
    }
    Ok(lipschitz)
}

/// Matrix of cone distances `||(r^a - r^b)_+||`, row-major `K x K`.
fn cone_matrix(inputs: &[Vec<f64>]) -> Vec<f64> {
    let k = inputs.len();
    let mut dist = vec![0.0; k * k];
    for a in 0..k {
        for b in (a + 1)..k {
            let (ab, ba) = cone_pair(&inputs[a], &inputs[b]);
            dist[a * k + b] = ab;
            dist[b * k + a] = ba;
        }
    }
    dist
}

/// Minimally perturbs every output column (in the L1 sense) so that the data
/// admits a monotone interpolant with the given per-output Lipschitz
/// constants, then clamps the result to `[0, 1]`.
///
/// Columns are independent LPs and are solved in parallel.
pub fn smooth_monotone(data: &TrainingSet, lipschitz: &[f64]) -> Result<TrainingSet> {
    let m = data.output_dim();
    if lipschitz.len() != m {
        return Err(Error::DimensionMismatch {
            what: "Lipschitz constants vs outputs",
            expected: m,
            got: lipschitz.len(),
        });
    }
    if let Some(l) = lipschitz.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(Error::InvalidInput(format!(
            "Lipschitz constants must be non-negative, got {l}"
        )));
    }
    let dist = cone_matrix(&data.inputs);
    let columns: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let y = data.column(i);
            let sol = smoothing::solve(&y, &dist, lipschitz[i])?;
            Ok(y.iter().zip(&sol.q).map(|(v, q)| (v + q).clamp(0.0, 1.0)).collect())
        })
        .collect::<Result<_>>()?;

    let outputs = (0..data.len())
        .map(|k| columns.iter().map(|c| c[k]).collect())
        .collect();
    Ok(TrainingSet {
        inputs: data.inputs.clone(),
        outputs,
        noise_bound: data.noise_bound,
        smoothed: true,
        lipschitz: Some(lipschitz.to_vec()),
    })
}

/// Objective value `sum_k |q_k|` of the smoothing LP for one output column,
/// before clamping. Exposed for verification against independent solvers.
pub fn smoothing_objective(data: &TrainingSet, output: usize, lipschitz: f64) -> Result<(Vec<f64>, f64)> {
    let dist = cone_matrix(&data.inputs);
    let sol = smoothing::solve(&data.column(output), &dist, lipschitz)?;
    Ok((sol.q, sol.objective))
}

/// Pointwise bounds on every monotone Lipschitz function consistent with a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub lower: LoadVector,
    pub upper: LoadVector,
}

/// Fitted minimax learner: one Lipschitz constant per BS plus the smoothed
/// training pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerModel {
    lipschitz: Vec<f64>,
    eps: f64,
    anchors: Vec<Vec<f64>>,
    /// `values[k][i]`: load of BS `i` at anchor `k`.
    values: Vec<Vec<f64>>,
}

impl LearnerModel {
    /// Assembles a model from parts, checking shapes only. Use
    /// [`LearnerModel::compatibility_violation`] to check the data against
    /// the Lipschitz constants.
    pub fn new(
        lipschitz: Vec<f64>,
        eps: f64,
        anchors: Vec<Vec<f64>>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let model = Self { lipschitz, eps, anchors, values };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        if self.anchors.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        if self.values.len() != self.anchors.len() {
            return Err(Error::DimensionMismatch {
                what: "value rows vs anchors",
                expected: self.anchors.len(),
                got: self.values.len(),
            });
        }
        let n = self.anchors[0].len();
        let m = self.lipschitz.len();
        if n == 0 || m == 0 {
            return Err(Error::InvalidInput("model has empty dimensions".into()));
        }
        for (a, v) in self.anchors.iter().zip(&self.values) {
            if a.len() != n {
                return Err(Error::DimensionMismatch { what: "anchor length", expected: n, got: a.len() });
            }
            if v.len() != m {
                return Err(Error::DimensionMismatch { what: "value row length", expected: m, got: v.len() });
            }
        }
        if self.lipschitz.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(Error::InvalidInput("Lipschitz constants must be non-negative".into()));
        }
        if self.anchors.iter().chain(&self.values).flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("model contains non-finite values".into()));
        }
        Ok(())
    }

    pub fn lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn anchors(&self) -> &[Vec<f64>] {
        &self.anchors
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn num_bs(&self) -> usize {
        self.lipschitz.len()
    }

    /// Largest amount by which `rho_i^k - rho_i^j <= L_i ||(r^k - r^j)_+||`
    /// is violated over all BSs and anchor pairs (0 when compatible).
    pub fn compatibility_violation(&self) -> f64 {
        let k = self.anchors.len();
        let mut worst = 0.0f64;
        for a in 0..k {
            for b in 0..k {
                if a == b {
                    continue;
                }
                let d = cone_distance(&self.anchors[a], &self.anchors[b]);
                for (i, l) in self.lipschitz.iter().enumerate() {
                    let excess = self.values[a][i] - self.values[b][i] - l * d;
                    worst = worst.max(excess);
                }
            }
        }
        worst
    }

    fn check_query(&self, x: &[f64]) -> Result<()> {
        let n = self.anchors[0].len();
        if x.len() != n {
            return Err(Error::DimensionMismatch { what: "query length vs model input", expected: n, got: x.len() });
        }
        Ok(())
    }

    /// Clamped envelope bounds, written into `lower` and `upper`.
    fn envelope_into(&self, x: &[f64], lower: &mut [f64], upper: &mut [f64]) {
        lower.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
        upper.iter_mut().for_each(|v| *v = f64::INFINITY);
        for (anchor, values) in self.anchors.iter().zip(&self.values) {
            let (up, down) = cone_pair(x, anchor);
            for i in 0..values.len() {
                let l = self.lipschitz[i];
                lower[i] = lower[i].max(values[i] - l * down);
                upper[i] = upper[i].min(values[i] + l * up);
            }
        }
        lower.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        upper.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    }

    /// Lower and upper minimax bounds at `x`, intersected with `[0, 1]`.
    pub fn envelope(&self, x: &[f64]) -> Result<Envelope> {
        self.check_query(x)?;
        let m = self.num_bs();
        let (mut lower, mut upper) = (vec![0.0; m], vec![0.0; m]);
        self.envelope_into(x, &mut lower, &mut upper);
        Ok(Envelope {
            lower: LoadVector::new(lower)?,
            upper: LoadVector::new(upper)?,
        })
    }

    /// Central (midpoint) prediction at `x`. Costs `O(K (N + M))`.
    pub fn predict(&self, x: &[f64]) -> Result<LoadVector> {
        self.check_query(x)?;
        let mut out = vec![0.0; self.num_bs()];
        self.predict_into(x, &mut out);
        LoadVector::new(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }
}

impl LoadPredictor for LearnerModel {
    fn input_dim(&self) -> usize {
        self.anchors[0].len()
    }

    fn output_dim(&self) -> usize {
        self.num_bs()
    }

    fn predict_into(&self, x: &[f64], out: &mut [f64]) {
        let mut upper = vec![0.0; out.len()];
        self.envelope_into(x, out, &mut upper);
        for (o, u) in out.iter_mut().zip(&upper) {
            *o = 0.5 * (*o + u);
        }
    }
}

/// Estimates Lipschitz constants, smooths the observations and stores the
/// compatible data set.
pub fn fit(data: &TrainingSet, eps: f64) -> Result<LearnerModel> {
    let lipschitz = estimate_lipschitz(data, eps)?;
    let smoothed = smooth_monotone(data, &lipschitz)?;
    LearnerModel::new(lipschitz, eps, smoothed.inputs, smoothed.outputs)
}
