/// Anything that maps a rate vector to a per-BS load estimate.
///
/// `predict_into` skips dimension checks; callers are expected to pass
/// `input_dim()` inputs and an `output_dim()` buffer.
pub trait LoadPredictor: Sync {
    fn input_dim(&self) -> usize;

    fn output_dim(&self) -> usize;

    fn predict_into(&self, x: &[f64], out: &mut [f64]);

    fn predict_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_dim()];
        self.predict_into(x, &mut out);
        out
    }
}
