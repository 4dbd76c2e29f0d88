//! Supervised training on freshly generated error/syndrome pairs.

use std::sync::mpsc;
use std::thread;

use ndarray::{Array2, NdFloat};

use super::mask::{check_window, extract_mask, MaskInput};
use super::mlp::{cast, masks_to_matrix, to_f64, Dense, MlpConfig, MlpModel};
use crate::error::{Error, Result};
use crate::lattice::{compute_syndrome, Pauli, ToricLattice};
use crate::noise::{derive_seed, sample_depolarizing, NoiseSpec};
use crate::pipeline::candidate_qubits;

const BATCH_DOMAIN: u64 = 0x7472_6169_6e5f_6261; // "train_ba"
const INIT_DOMAIN: u64 = 0x696e_6974_5f77_6569; // "init_wei"

/// Instances drawn per batch before giving up on filling it.
const MAX_INSTANCES_PER_BATCH: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSpec {
    pub batch_size: usize,
    /// Number of generated batches (one optimizer step each).
    pub epochs: u64,
    pub learning_rate: f64,
    pub l_train: usize,
    pub p_train: f64,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        Self {
            batch_size: 512,
            epochs: 1_000_000,
            learning_rate: 0.001,
            l_train: 7,
            p_train: 0.15,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainSpec {
    pub fn validate(&self, config: &MlpConfig) -> Result<()> {
        config.validate()?;
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if !(self.p_train > 0.0 && self.p_train <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "training error rate must lie in (0, 1], got {}",
                self.p_train
            )));
        }
        check_window(&ToricLattice::new(self.l_train)?, config.l_input)
    }
}

/// `batch_size` (mask, true Pauli) pairs for qubits touching at least one
/// defect, drawn from fresh instances on the `l_train` lattice.
pub fn generate_training_batch(
    spec: &TrainSpec,
    lat: &ToricLattice,
    l_input: usize,
    batch_index: u64,
) -> Result<Vec<(MaskInput, Pauli)>> {
    if lat.size() != spec.l_train {
        return Err(Error::InvalidArgument(format!(
            "training lattice must have size {}, got {}",
            spec.l_train,
            lat.size()
        )));
    }
    if spec.p_train <= 0.0 {
        return Err(Error::InvalidArgument(
            "error rate 0 produces no defects, so no training pairs".into(),
        ));
    }
    check_window(lat, l_input)?;
    let noise = NoiseSpec::new(spec.p_train, derive_seed(&[spec.seed, BATCH_DOMAIN, batch_index]))?;
    let mut pairs = Vec::with_capacity(spec.batch_size);
    let mut instance = 0u64;
    while pairs.len() < spec.batch_size {
        if instance >= MAX_INSTANCES_PER_BATCH {
            return Err(Error::InvalidArgument(format!(
                "could not fill a batch of {} from {instance} instances at p = {}",
                spec.batch_size, spec.p_train
            )));
        }
        let error = sample_depolarizing(&noise, lat, instance);
        instance += 1;
        let syn = compute_syndrome(&error, lat)?;
        for q in candidate_qubits(&syn, lat) {
            pairs.push((extract_mask(&syn, lat, q, l_input)?, error.get(q)));
            if pairs.len() == spec.batch_size {
                break;
            }
        }
    }
    Ok(pairs)
}

/// Adam with bias-corrected moments.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first: Vec<Dense<T>>,
    second: Vec<Dense<T>>,
}

impl<T: NdFloat> Adam<T> {
    pub fn new(model: &MlpModel<T>, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let zeros: Vec<Dense<T>> = model
            .layers()
            .iter()
            .map(|l| Dense::zeros(l.inputs(), l.outputs()))
            .collect();
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, model: &mut MlpModel<T>, grads: &[Dense<T>]) {
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (cast::<T>(self.beta1), cast::<T>(self.beta2));
        let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
        let c1 = cast::<T>(1.0 / (1.0 - self.beta1.powi(t)));
        let c2 = cast::<T>(1.0 / (1.0 - self.beta2.powi(t)));
        let lr = cast::<T>(self.learning_rate);
        let eps = cast::<T>(self.epsilon);
        let update = |p: &mut T, m: &mut T, v: &mut T, g: T| {
            *m = b1 * *m + one_b1 * g;
            *v = b2 * *v + one_b2 * g * g;
            let m_hat = *m * c1;
            let v_hat = *v * c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for (((layer, g), m), v) in model
            .layers_mut()
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            ndarray::Zip::from(&mut layer.weights)
                .and(&mut m.weights)
                .and(&mut v.weights)
                .and(&g.weights)
                .for_each(|p, m, v, &g| update(p, m, v, g));
            ndarray::Zip::from(&mut layer.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
    }
}

/// Trained network plus the per-iteration mean cross-entropy.
#[derive(Debug, Clone)]
pub struct TrainOutcome<T = f32> {
    pub model: MlpModel<T>,
    pub losses: Vec<f64>,
}

pub fn train(spec: &TrainSpec, config: &MlpConfig) -> Result<TrainOutcome<f32>> {
    train_with(spec, config, |_, _| {})
}

/// Trains and reports `(iteration, loss)` after every step.
///
/// Batches are produced on a helper thread and handed over through a
/// two-slot queue; batch `k` is always the same regardless of timing.
pub fn train_with<T: NdFloat>(
    spec: &TrainSpec,
    config: &MlpConfig,
    mut observe: impl FnMut(u64, f64),
) -> Result<TrainOutcome<T>> {
    spec.validate(config)?;
    let lat = ToricLattice::new(spec.l_train)?;
    let mut model = MlpModel::<T>::random(*config, derive_seed(&[spec.seed, INIT_DOMAIN]))?;
    model.train_seed = Some(spec.seed);
    let mut adam = Adam::new(&model, spec.learning_rate, spec.beta1, spec.beta2, spec.epsilon);
    let mut losses = Vec::with_capacity(spec.epochs.min(10_000_000) as usize);
    let input_dim = config.input_dim();
    let l_input = config.l_input;

    thread::scope(|scope| -> Result<()> {
        let (tx, rx) = mpsc::sync_channel::<Result<(Array2<T>, Vec<u8>)>>(2);
        scope.spawn(move || {
            for batch_index in 0..spec.epochs {
                let batch = generate_training_batch(spec, &lat, l_input, batch_index).and_then(|pairs| {
                    let labels = pairs.iter().map(|(_, p)| p.index() as u8).collect();
                    let masks: Vec<MaskInput> = pairs.into_iter().map(|(m, _)| m).collect();
                    Ok((masks_to_matrix(&masks, input_dim)?, labels))
                });
                let failed = batch.is_err();
                if tx.send(batch).is_err() || failed {
                    return;
                }
            }
        });

        for iteration in 0..spec.epochs {
            let (x, labels) = rx
                .recv()
                .map_err(|_| Error::InvalidArgument("batch producer stopped early".into()))??;
            let (loss, grads) = model.loss_and_gradient(x.view(), &labels)?;
            let loss = to_f64(loss);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { iteration });
            }
            adam.step(&mut model, &grads);
            losses.push(loss);
            observe(iteration, loss);
        }
        Ok(())
    })?;

    Ok(TrainOutcome { model, losses })
}
