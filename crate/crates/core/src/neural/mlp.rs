//! Dense feed-forward classifier: ReLU hidden layers, softmax over I, X, Y, Z.

use ndarray::{Array1, Array2, ArrayView2, Axis, NdFloat};
use num_traits::NumCast;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mask::{MaskInput, MASK_CONVENTION};
use crate::error::{Error, Result};
use crate::lattice::Pauli;
use crate::noise::stream_rng;

pub const N_CLASSES: usize = 4;

/// Output bias of [`MlpModel::identity_stub`]; large enough that I always wins.
const STUB_BIAS: f64 = 30.0;

#[inline]
pub(crate) fn cast<T: NdFloat>(x: f64) -> T {
    <T as NumCast>::from(x).expect("finite value fits in float type")
}

#[inline]
pub(crate) fn to_f64<T: NdFloat>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MlpConfig {
    pub l_input: usize,
    pub hidden_layers: usize,
    pub hidden_nodes: usize,
}

impl MlpConfig {
    pub fn new(l_input: usize, hidden_layers: usize, hidden_nodes: usize) -> Result<Self> {
        let config = Self {
            l_input,
            hidden_layers,
            hidden_nodes,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_input == 0 || self.l_input % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "l_input must be odd and positive, got {}",
                self.l_input
            )));
        }
        if self.hidden_layers == 0 || self.hidden_nodes == 0 {
            return Err(Error::InvalidArgument(
                "network needs at least one hidden layer with at least one node".into(),
            ));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        2 * self.l_input * self.l_input
    }

    /// Layer widths from input to output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim()];
        w.extend(std::iter::repeat_n(self.hidden_nodes, self.hidden_layers));
        w.push(N_CLASSES);
        w
    }
}

/// Weights plus biases of every layer.
pub fn count_parameters(config: &MlpConfig) -> usize {
    let h = config.hidden_nodes;
    config.input_dim() * h + h + (config.hidden_layers - 1) * (h * h + h) + h * N_CLASSES + N_CLASSES
}

/// One affine layer; `weights` is `inputs x outputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: NdFloat> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }

    fn affine(&self, x: &ArrayView2<'_, T>) -> Array2<T> {
        let mut z = x.dot(&self.weights);
        z += &self.bias;
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T = f32> {
    config: MlpConfig,
    layers: Vec<Dense<T>>,
    pub init_seed: u64,
    pub train_seed: Option<u64>,
}

impl<T: NdFloat> MlpModel<T> {
    pub fn zeros(config: MlpConfig) -> Result<Self> {
        config.validate()?;
        let widths = config.widths();
        let layers = widths.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Ok(Self {
            config,
            layers,
            init_seed: 0,
            train_seed: None,
        })
    }

    /// Weights uniform in `±sqrt(3 / fan_in)`, biases zero.
    pub fn random(config: MlpConfig, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        model.init_seed = seed;
        let mut rng = stream_rng(seed, 0);
        for layer in &mut model.layers {
            let bound = (3.0 / layer.inputs() as f64).sqrt();
            layer
                .weights
                .mapv_inplace(|_| cast(rng.random_range(-bound..bound)));
        }
        Ok(model)
    }

    /// A network that always answers I with near certainty.
    pub fn identity_stub(config: MlpConfig) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        let last = model.layers.last_mut().expect("at least one layer");
        last.bias[Pauli::I.index()] = cast(STUB_BIAS);
        Ok(model)
    }

    pub fn from_layers(config: MlpConfig, layers: Vec<Dense<T>>) -> Result<Self> {
        config.validate()?;
        let widths = config.widths();
        if layers.len() != widths.len() - 1 {
            return Err(Error::ModelFormat(format!(
                "expected {} layers, found {}",
                widths.len() - 1,
                layers.len()
            )));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.inputs() != widths[i] || layer.outputs() != widths[i + 1] || layer.bias.len() != widths[i + 1] {
                return Err(Error::ModelFormat(format!(
                    "layer {i} is {}x{} (bias {}), expected {}x{}",
                    layer.inputs(),
                    layer.outputs(),
                    layer.bias.len(),
                    widths[i],
                    widths[i + 1]
                )));
            }
        }
        Ok(Self {
            config,
            layers,
            init_seed: 0,
            train_seed: None,
        })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn l_input(&self) -> usize {
        self.config.l_input
    }

    pub fn mask_convention(&self) -> &'static str {
        MASK_CONVENTION
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Class probabilities for each row of `inputs` (`batch x input_dim`).
    pub fn forward_matrix(&self, inputs: ArrayView2<'_, T>) -> Result<Array2<T>> {
        if inputs.ncols() != self.config.input_dim() {
            return Err(Error::SizeMismatch {
                what: "network input",
                expected: self.config.input_dim(),
                actual: inputs.ncols(),
            });
        }
        let (last, hidden) = self.layers.split_last().expect("at least one layer");
        let mut act = inputs.to_owned();
        for layer in hidden {
            act = layer.affine(&act.view());
            relu_inplace(&mut act);
        }
        let mut out = last.affine(&act.view());
        softmax_rows(&mut out);
        debug_assert!(out.rows().into_iter().all(|r| {
            let s = to_f64(r.sum());
            (s - 1.0).abs() < 1e-4 && r.iter().all(|&p| p >= T::zero())
        }));
        Ok(out)
    }

    pub fn forward(&self, input: &MaskInput) -> Result<[T; N_CLASSES]> {
        let out = self.forward_batch(std::slice::from_ref(input))?;
        Ok(out[0])
    }

    pub fn forward_batch(&self, inputs: &[MaskInput]) -> Result<Vec<[T; N_CLASSES]>> {
        if inputs.is_empty() {
            return Ok(Vec::new());
        }
        let x = masks_to_matrix(inputs, self.config.input_dim())?;
        let probs = self.forward_matrix(x.view())?;
        Ok(probs
            .rows()
            .into_iter()
            .map(|r| [r[0], r[1], r[2], r[3]])
            .collect())
    }

    /// Most probable class per row; ties go to the lowest index (I, X, Y, Z).
    pub fn classify_matrix(&self, inputs: ArrayView2<'_, T>) -> Result<Vec<Pauli>> {
        let probs = self.forward_matrix(inputs)?;
        Ok(probs.rows().into_iter().map(|r| argmax(r.as_slice().unwrap_or(&[r[0], r[1], r[2], r[3]]))).collect())
    }

    /// Converts every parameter to another float type.
    pub fn cast<U: NdFloat>(&self) -> MlpModel<U> {
        MlpModel {
            config: self.config,
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weights: l.weights.mapv(|w| cast(to_f64(w))),
                    bias: l.bias.mapv(|b| cast(to_f64(b))),
                })
                .collect(),
            init_seed: self.init_seed,
            train_seed: self.train_seed,
        }
    }

    /// Mean categorical cross-entropy of a labelled batch and its gradient
    /// with respect to every layer's weights and biases.
    pub fn loss_and_gradient(&self, inputs: ArrayView2<'_, T>, labels: &[u8]) -> Result<(T, Vec<Dense<T>>)> {
        if inputs.ncols() != self.config.input_dim() {
            return Err(Error::SizeMismatch {
                what: "network input",
                expected: self.config.input_dim(),
                actual: inputs.ncols(),
            });
        }
        if inputs.nrows() != labels.len() || labels.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} inputs but {} labels",
                inputs.nrows(),
                labels.len()
            )));
        }
        let batch = labels.len();
        let n = self.layers.len();

        // acts[i] is the input to layer i.
        let mut acts: Vec<Array2<T>> = Vec::with_capacity(n);
        acts.push(inputs.to_owned());
        for layer in &self.layers[..n - 1] {
            let mut z = layer.affine(&acts.last().expect("nonempty").view());
            relu_inplace(&mut z);
            acts.push(z);
        }
        let mut probs = self.layers[n - 1].affine(&acts[n - 1].view());
        let log_norm = log_softmax_normalizers(&probs);
        let mut loss = T::zero();
        for (row, (&label, &lse)) in labels.iter().zip(&log_norm).enumerate() {
            if label as usize >= N_CLASSES {
                return Err(Error::InvalidArgument(format!("label {label} out of range")));
            }
            loss += lse - probs[[row, label as usize]];
        }
        let scale = T::one() / cast::<T>(batch as f64);
        loss *= scale;

        // dL/dlogits = (softmax - onehot) / batch
        for (mut row, &lse) in probs.rows_mut().into_iter().zip(&log_norm) {
            row.mapv_inplace(|z| (z - lse).exp());
        }
        for (row, &label) in labels.iter().enumerate() {
            probs[[row, label as usize]] -= T::one();
        }
        probs *= scale;

        let mut grads: Vec<Dense<T>> = Vec::with_capacity(n);
        let mut delta = probs;
        for i in (0..n).rev() {
            let a = &acts[i];
            let gw = a.t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            grads.push(Dense { weights: gw, bias: gb });
            if i > 0 {
                let mut back = delta.dot(&self.layers[i].weights.t());
                // a > 0 exactly where the ReLU was active.
                ndarray::Zip::from(&mut back).and(a).for_each(|g, &x| {
                    if x <= T::zero() {
                        *g = T::zero();
                    }
                });
                delta = back;
            }
        }
        grads.reverse();
        Ok((loss, grads))
    }
}

pub(crate) fn masks_to_matrix<T: NdFloat>(inputs: &[MaskInput], input_dim: usize) -> Result<Array2<T>> {
    let mut x = Array2::zeros((inputs.len(), input_dim));
    for (mut row, m) in x.rows_mut().into_iter().zip(inputs) {
        if m.len() != input_dim {
            return Err(Error::SizeMismatch {
                what: "network input",
                expected: input_dim,
                actual: m.len(),
            });
        }
        for (dst, &v) in row.iter_mut().zip(m.values()) {
            *dst = cast(v as f64);
        }
    }
    Ok(x)
}

fn relu_inplace<T: NdFloat>(x: &mut Array2<T>) {
    x.mapv_inplace(|v| if v > T::zero() { v } else { T::zero() });
}

fn log_softmax_normalizers<T: NdFloat>(logits: &Array2<T>) -> Vec<T> {
    logits
        .rows()
        .into_iter()
        .map(|r| {
            let max = r.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
            max + r.iter().map(|&v| (v - max).exp()).fold(T::zero(), |a, b| a + b).ln()
        })
        .collect()
}

fn softmax_rows<T: NdFloat>(x: &mut Array2<T>) {
    for mut row in x.rows_mut() {
        let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

pub fn argmax<T: PartialOrd + Copy>(probs: &[T]) -> Pauli {
    let mut best = 0;
    for i in 1..probs.len() {
        if probs[i] > probs[best] {
            best = i;
        }
    }
    Pauli::from_index(best).expect("four classes")
}
