//! The neural classifier: `input -> 16 -> 16 -> C` with ReLU hidden layers,
//! softmax output, mean cross-entropy loss and Adam.

mod adam;
mod train;

pub use adam::{adam_update, TrainConfig};
pub use train::{
    accuracy, best_track, AccuracyTrace, LabeledData, ModelSelection, RunRecord,
};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

/// Hidden layer widths of the default architecture.
pub const HIDDEN_UNITS: [usize; 2] = [16, 16];

/// Probabilities below this are clamped before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// First/second moment estimates for every parameter, plus the step count.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    m_weights: Vec<Matrix>,
    v_weights: Vec<Matrix>,
    m_biases: Vec<Vec<f64>>,
    v_biases: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    fn zeros(weights: &[Matrix], biases: &[Vec<f64>]) -> Self {
        let zw: Vec<Matrix> = weights.iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect();
        let zb: Vec<Vec<f64>> = biases.iter().map(|b| vec![0.0; b.len()]).collect();
        Self {
            m_weights: zw.clone(),
            v_weights: zw,
            m_biases: zb.clone(),
            v_biases: zb,
            t: 0,
        }
    }

    pub fn timestep(&self) -> u64 {
        self.t
    }

    pub fn first_moments(&self) -> (&[Matrix], &[Vec<f64>]) {
        (&self.m_weights, &self.m_biases)
    }

    pub fn second_moments(&self) -> (&[Matrix], &[Vec<f64>]) {
        (&self.v_weights, &self.v_biases)
    }
}

/// Gradient of the loss with respect to every weight matrix and bias vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    /// All entries in the same order as [`MlpModel::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            weights: model
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }
}

/// Labels, confidences and full class probabilities for a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictions {
    pub labels: Vec<usize>,
    pub confidences: Vec<f64>,
    pub probabilities: Matrix,
}

impl Predictions {
    pub fn from_probabilities(probabilities: Matrix) -> Self {
        let (labels, confidences) = argmax_rows(&probabilities);
        Self {
            labels,
            confidences,
            probabilities,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Row-wise argmax; ties go to the lowest class index.
pub fn argmax_rows(m: &Matrix) -> (Vec<usize>, Vec<f64>) {
    let mut labels = Vec::with_capacity(m.rows());
    let mut conf = Vec::with_capacity(m.rows());
    for r in 0..m.rows() {
        let row = m.row(r);
        let mut best = 0;
        for (c, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = c;
            }
        }
        labels.push(best);
        conf.push(row.get(best).copied().unwrap_or(0.0));
    }
    (labels, conf)
}

/// Numerically stable in-place softmax of every row.
pub(crate) fn softmax_rows(m: &mut Matrix) {
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Intermediate values of a forward pass kept for backpropagation.
struct ForwardPass {
    /// Input to each layer: `x`, then the hidden activations.
    inputs: Vec<Matrix>,
    probs: Matrix,
}

/// A dense feed-forward classifier together with its optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    layer_dims: Vec<usize>,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
    adam: AdamState,
}

impl MlpModel {
    /// `input_dim -> 16 -> 16 -> n_classes`, Glorot-uniform weights, zero biases.
    pub fn new(input_dim: usize, n_classes: usize, rng: &mut Rng) -> Result<Self> {
        Self::with_hidden(input_dim, &HIDDEN_UNITS, n_classes, rng)
    }

    pub fn with_hidden(
        input_dim: usize,
        hidden: &[usize],
        n_classes: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Argument("input_dim must be at least 1".into()));
        }
        if n_classes < 2 {
            return Err(Error::Argument(format!(
                "a classifier needs at least 2 classes, got {n_classes}"
            )));
        }
        if hidden.contains(&0) {
            return Err(Error::Argument("hidden layers must be non-empty".into()));
        }
        let mut layer_dims = Vec::with_capacity(hidden.len() + 2);
        layer_dims.push(input_dim);
        layer_dims.extend_from_slice(hidden);
        layer_dims.push(n_classes);

        let mut weights = Vec::with_capacity(layer_dims.len() - 1);
        let mut biases = Vec::with_capacity(layer_dims.len() - 1);
        for pair in layer_dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = init_bound(fan_in, fan_out);
            let data = rng.uniform(-bound, bound, fan_in * fan_out)?;
            weights.push(Matrix::from_vec(fan_in, fan_out, data)?);
            biases.push(vec![0.0; fan_out]);
        }
        let adam = AdamState::zeros(&weights, &biases);
        Ok(Self {
            layer_dims,
            weights,
            biases,
            adam,
        })
    }

    /// Builds a model from explicit parameters with zeroed optimizer state.
    pub fn from_parameters(weights: Vec<Matrix>, biases: Vec<Vec<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::Argument(format!(
                "{} weight matrices but {} bias vectors",
                weights.len(),
                biases.len()
            )));
        }
        let mut layer_dims = vec![weights[0].rows()];
        for (i, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.rows() != *layer_dims.last().unwrap() || b.len() != w.cols() {
                return Err(Error::shape(
                    format!("layer {i} weights {}x{}", w.rows(), w.cols()),
                    format!("input width {} / bias length {}", layer_dims.last().unwrap(), b.len()),
                ));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::Argument(format!("non-finite bias in layer {i}")));
            }
            layer_dims.push(w.cols());
        }
        if *layer_dims.last().unwrap() < 2 {
            return Err(Error::Argument("output layer needs at least 2 classes".into()));
        }
        let adam = AdamState::zeros(&weights, &biases);
        Ok(Self {
            layer_dims,
            weights,
            biases,
            adam,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn n_classes(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn adam_state(&self) -> &AdamState {
        &self.adam
    }

    pub fn n_parameters(&self) -> usize {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.as_slice().len() + b.len())
            .sum()
    }

    /// Every weight and bias, layer by layer (weights row-major, then bias).
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_parameters());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }

    /// Replaces all parameters from a vector laid out like [`Self::parameters`].
    /// Optimizer state is kept.
    pub fn set_parameters(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_parameters() {
            return Err(Error::shape(
                format!("{} parameters", self.n_parameters()),
                format!("{} values", flat.len()),
            ));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("non-finite parameter".into()));
        }
        let mut pos = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let n = w.as_slice().len();
            w.as_mut_slice().copy_from_slice(&flat[pos..pos + n]);
            pos += n;
            let k = b.len();
            b.copy_from_slice(&flat[pos..pos + k]);
            pos += k;
        }
        Ok(())
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::shape(
                format!("input {}x{}", x.rows(), x.cols()),
                format!("model expecting {} features", self.input_dim()),
            ));
        }
        Ok(())
    }

    fn forward_pass(&self, x: &Matrix) -> ForwardPass {
        let last = self.weights.len() - 1;
        let mut inputs = Vec::with_capacity(self.weights.len());
        let mut current = x.clone();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = current.matmul_unchecked(w);
            for r in 0..z.rows() {
                let row = z.row_mut(r);
                for (v, bias) in row.iter_mut().zip(b) {
                    *v += bias;
                    if l < last && *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            inputs.push(current);
            current = z;
        }
        softmax_rows(&mut current);
        ForwardPass {
            inputs,
            probs: current,
        }
    }

    /// Class probabilities, one row per sample.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        Ok(self.forward_pass(x).probs)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Predictions> {
        Ok(Predictions::from_probabilities(self.forward(x)?))
    }

    /// Mean cross-entropy over the batch and its gradient.
    pub fn loss_and_grads(&self, x: &Matrix, y: &[usize]) -> Result<(f64, Gradients)> {
        self.check_input(x)?;
        if y.len() != x.rows() {
            return Err(Error::shape(
                format!("{} samples", x.rows()),
                format!("{} labels", y.len()),
            ));
        }
        if let Some(i) = y.iter().position(|&c| c >= self.n_classes()) {
            return Err(Error::Data(format!(
                "label {} of sample {i} is outside [0, {})",
                y[i],
                self.n_classes()
            )));
        }
        if x.rows() == 0 {
            return Err(Error::Argument("empty batch".into()));
        }
        Ok(self.loss_and_grads_unchecked(x, y))
    }

    pub(crate) fn loss_and_grads_unchecked(&self, x: &Matrix, y: &[usize]) -> (f64, Gradients) {
        let pass = self.forward_pass(x);
        let n = x.rows() as f64;
        let mut loss = 0.0;
        let mut delta = pass.probs;
        for (r, &label) in y.iter().enumerate() {
            loss -= delta.get(r, label).max(PROB_FLOOR).ln();
            let row = delta.row_mut(r);
            row[label] -= 1.0;
            for v in row.iter_mut() {
                *v /= n;
            }
        }
        loss /= n;

        let layers = self.weights.len();
        let mut gw = Vec::with_capacity(layers);
        let mut gb = Vec::with_capacity(layers);
        for l in (0..layers).rev() {
            let input = &pass.inputs[l];
            gw.push(input.t_matmul_unchecked(&delta));
            let mut db = vec![0.0; delta.cols()];
            for r in 0..delta.rows() {
                for (acc, v) in db.iter_mut().zip(delta.row(r)) {
                    *acc += v;
                }
            }
            gb.push(db);
            if l > 0 {
                let mut next = delta.matmul_t_unchecked(&self.weights[l]);
                // `input` is the ReLU output of layer l-1; its zeros mark inactive units.
                for (d, a) in next.as_mut_slice().iter_mut().zip(input.as_slice()) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
                delta = next;
            }
        }
        gw.reverse();
        gb.reverse();
        (
            loss,
            Gradients {
                weights: gw,
                biases: gb,
            },
        )
    }

    /// One Adam update with bias-corrected moments. The timestep is
    /// incremented before the bias correction.
    pub fn adam_step(&mut self, grads: &Gradients, cfg: &TrainConfig) -> Result<()> {
        let shapes_match = grads.weights.len() == self.weights.len()
            && grads
                .weights
                .iter()
                .zip(&self.weights)
                .all(|(g, w)| g.shape() == w.shape())
            && grads
                .biases
                .iter()
                .zip(&self.biases)
                .all(|(g, b)| g.len() == b.len());
        if !shapes_match {
            return Err(Error::shape(
                format!("model {:?}", self.layer_dims),
                "gradients of a different architecture",
            ));
        }
        self.adam_step_unchecked(grads, cfg);
        if self.weights.iter().any(|w| !w.is_finite())
            || self.biases.iter().flatten().any(|v| !v.is_finite())
        {
            return Err(Error::Argument("Adam update produced a non-finite parameter".into()));
        }
        Ok(())
    }

    pub(crate) fn adam_step_unchecked(&mut self, grads: &Gradients, cfg: &TrainConfig) {
        self.adam.t += 1;
        let t = self.adam.t;
        for l in 0..self.weights.len() {
            adam_update(
                self.weights[l].as_mut_slice(),
                grads.weights[l].as_slice(),
                self.adam.m_weights[l].as_mut_slice(),
                self.adam.v_weights[l].as_mut_slice(),
                t,
                cfg,
            );
            adam_update(
                &mut self.biases[l],
                &grads.biases[l],
                &mut self.adam.m_biases[l],
                &mut self.adam.v_biases[l],
                t,
                cfg,
            );
        }
    }
}

/// Glorot-uniform half-width `sqrt(6 / (fan_in + fan_out))`.
pub fn init_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}
