//! Reference learners: Gaussian (Nadaraya–Watson) kernel regression and
//! k-nearest-neighbor averaging. Neither is shape preserving.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::load_model::LoadVector;
use crate::predictor::LoadPredictor;
use crate::scenario::TrainingSet;

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_query(anchors: &[Vec<f64>], x: &[f64]) -> Result<()> {
    let n = anchors[0].len();
    if x.len() != n {
        return Err(Error::DimensionMismatch { what: "query length vs model input", expected: n, got: x.len() });
    }
    Ok(())
}

fn check_shapes(anchors: &[Vec<f64>], values: &[Vec<f64>]) -> Result<()> {
    if anchors.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if anchors.len() != values.len() {
        return Err(Error::DimensionMismatch {
            what: "value rows vs anchors",
            expected: anchors.len(),
            got: values.len(),
        });
    }
    let (n, m) = (anchors[0].len(), values[0].len());
    if anchors.iter().any(|a| a.len() != n) || values.iter().any(|v| v.len() != m) {
        return Err(Error::InvalidInput("ragged anchors or values".into()));
    }
    Ok(())
}

/// Nadaraya–Watson regression with an isotropic Gaussian kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub bandwidth: f64,
    pub anchors: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
}

impl KernelModel {
    pub fn new(anchors: Vec<Vec<f64>>, values: Vec<Vec<f64>>, bandwidth: f64) -> Result<Self> {
        let model = Self { bandwidth, anchors, values };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        check_shapes(&self.anchors, &self.values)?;
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "kernel bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<LoadVector> {
        check_query(&self.anchors, x)?;
        LoadVector::new(self.predict_vec(x))
    }
}

/// Stores the data with bandwidth set to the median pairwise anchor distance.
pub fn kernel_fit(data: &TrainingSet) -> Result<KernelModel> {
    let k = data.len();
    if k < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: k });
    }
    let mut dists = Vec::with_capacity(k * (k - 1) / 2);
    for a in 0..k {
        for b in (a + 1)..k {
            dists.push(squared_distance(&data.inputs[a], &data.inputs[b]).sqrt());
        }
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    };
    KernelModel::new(data.inputs.clone(), data.outputs.clone(), median)
}

impl LoadPredictor for KernelModel {
    fn input_dim(&self) -> usize {
        self.anchors[0].len()
    }

    fn output_dim(&self) -> usize {
        self.values[0].len()
    }

    fn predict_into(&self, x: &[f64], out: &mut [f64]) {
        let scale = 1.0 / (2.0 * self.bandwidth * self.bandwidth);
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut total = 0.0;
        let mut nearest = (f64::INFINITY, 0);
        for (k, (anchor, values)) in self.anchors.iter().zip(&self.values).enumerate() {
            let d2 = squared_distance(x, anchor);
            if d2 < nearest.0 {
                nearest = (d2, k);
            }
            let w = (-d2 * scale).exp();
            if w > 0.0 {
                total += w;
                for (o, v) in out.iter_mut().zip(values) {
                    *o += w * v;
                }
            }
        }
        if total > 0.0 {
            out.iter_mut().for_each(|o| *o /= total);
        } else {
            out.copy_from_slice(&self.values[nearest.1]);
        }
    }
}

/// Unweighted average over the `k_neighbors` closest anchors (Euclidean),
/// distance ties going to the lower anchor index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k_neighbors: usize,
    pub anchors: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
}

pub const DEFAULT_NEIGHBORS: usize = 2;

impl KnnModel {
    pub fn new(anchors: Vec<Vec<f64>>, values: Vec<Vec<f64>>, k_neighbors: usize) -> Result<Self> {
        let model = Self { k_neighbors, anchors, values };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        check_shapes(&self.anchors, &self.values)?;
        if self.k_neighbors == 0 || self.k_neighbors > self.anchors.len() {
            return Err(Error::InvalidInput(format!(
                "k_neighbors must be in 1..={}, got {}",
                self.anchors.len(),
                self.k_neighbors
            )));
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<LoadVector> {
        check_query(&self.anchors, x)?;
        LoadVector::new(self.predict_vec(x))
    }

    /// Indices of the selected neighbors, nearest first.
    pub fn neighbors(&self, x: &[f64]) -> Vec<usize> {
        // sorted (distance, index) list of the best k seen so far
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(self.k_neighbors + 1);
        for (k, anchor) in self.anchors.iter().enumerate() {
            let d2 = squared_distance(x, anchor);
            if best.len() == self.k_neighbors && d2 >= best[best.len() - 1].0 {
                continue;
            }
            let pos = best.partition_point(|&(d, _)| d <= d2);
            best.insert(pos, (d2, k));
            best.truncate(self.k_neighbors);
        }
        best.into_iter().map(|(_, k)| k).collect()
    }
}

/// k-NN model over a training set (`k_neighbors` defaults to 2 in callers).
pub fn knn_fit(data: &TrainingSet, k_neighbors: usize) -> Result<KnnModel> {
    KnnModel::new(data.inputs.clone(), data.outputs.clone(), k_neighbors)
}

impl LoadPredictor for KnnModel {
    fn input_dim(&self) -> usize {
        self.anchors[0].len()
    }

    fn output_dim(&self) -> usize {
        self.values[0].len()
    }

    fn predict_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let chosen = self.neighbors(x);
        for &k in &chosen {
            for (o, v) in out.iter_mut().zip(&self.values[k]) {
                *o += v;
            }
        }
        let n = chosen.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
    }
}

/// Baseline model with a `"type"` discriminator in its JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BaselineModel {
    Kernel(KernelModel),
    Knn(KnnModel),
}

impl BaselineModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        match &model {
            BaselineModel::Kernel(m) => m.validate()?,
            BaselineModel::Knn(m) => m.validate()?,
        }
        Ok(model)
    }

    pub fn as_predictor(&self) -> &dyn LoadPredictor {
        match self {
            BaselineModel::Kernel(m) => m,
            BaselineModel::Knn(m) => m,
        }
    }
}
