//! Minibatch Adam training with a step learning-rate schedule.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::features::{FeatureVector, FEATURES};
use super::lstm::{backward, forward_batch, DEFAULT_HIDDEN};
use super::{evaluate, ClassifierError, Gradients, LabeledEncounter, ModelWeights};
use crate::substream;
use crate::topology::PassingSide;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// The learning rate is multiplied by `lr_gamma` every `lr_step_epochs`.
    pub lr_step_epochs: usize,
    pub lr_gamma: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Share of the data held out for per-epoch validation.
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: DEFAULT_HIDDEN,
            epochs: 40,
            batch_size: 64,
            lr: 1e-3,
            lr_step_epochs: 20,
            lr_gamma: 0.5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            val_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub val_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub train_size: usize,
    pub val_size: usize,
}

impl TrainReport {
    pub fn final_train_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_loss)
    }
}

/// Mean cross-entropy of a batch and its gradients. `left[b]` is the label
/// of `seqs[b]`.
pub fn batch_loss_and_gradients(
    w: &ModelWeights,
    seqs: &[&[FeatureVector]],
    left: &[bool],
) -> Result<(f64, Gradients), ClassifierError> {
    check_batch(seqs, left)?;
    let (xs, lens) = w.batch_inputs(seqs);
    let trace = forward_batch(w, &xs, &lens);
    let n = seqs.len() as f64;
    let mut loss = 0.0;
    let mut dlogits = Array2::zeros((seqs.len(), 2));
    for (b, is_left) in left.iter().enumerate() {
        let k = if *is_left { 0 } else { 1 };
        let (l0, l1) = (trace.logits[[b, 0]], trace.logits[[b, 1]]);
        let m = l0.max(l1);
        let lse = m + ((l0 - m).exp() + (l1 - m).exp()).ln();
        loss += lse - trace.logits[[b, k]];
        for j in 0..2 {
            let target = if j == k { 1.0 } else { 0.0 };
            dlogits[[b, j]] = (trace.probs[[b, j]] - target) / n;
        }
    }
    Ok((loss / n, backward(w, &trace, dlogits.view())))
}

/// Mean cross-entropy without gradients.
pub(crate) fn batch_loss(w: &ModelWeights, seqs: &[&[FeatureVector]], left: &[bool]) -> f64 {
    let (xs, lens) = w.batch_inputs(seqs);
    let trace = forward_batch(w, &xs, &lens);
    let mut loss = 0.0;
    for (b, is_left) in left.iter().enumerate() {
        let k = if *is_left { 0 } else { 1 };
        let (l0, l1) = (trace.logits[[b, 0]], trace.logits[[b, 1]]);
        let m = l0.max(l1);
        loss += m + ((l0 - m).exp() + (l1 - m).exp()).ln() - trace.logits[[b, k]];
    }
    loss / seqs.len() as f64
}

fn check_batch(seqs: &[&[FeatureVector]], left: &[bool]) -> Result<(), ClassifierError> {
    if seqs.is_empty() || seqs.len() != left.len() {
        return Err(ClassifierError::DimensionMismatch(format!(
            "{} sequences, {} labels",
            seqs.len(),
            left.len()
        )));
    }
    if seqs.iter().any(|s| s.is_empty()) {
        return Err(ClassifierError::EmptyWindow);
    }
    Ok(())
}

/// Trains a fresh network. Normalization statistics come from the training
/// split; initialization, the split and the shuffle order all derive from
/// `seed`.
pub fn lstm_train(
    data: &[LabeledEncounter],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(ModelWeights, TrainReport), ClassifierError> {
    validate_data(data)?;
    let (train, val) = split(data, cfg.val_fraction, seed);
    let mut w = ModelWeights::init(cfg.hidden, substream(seed, 1));
    let (mean, std) = normalization(&train);
    w.norm_mean = mean;
    w.norm_std = std;
    fit(w, &train, &val, cfg, seed)
}

/// Continues training from existing weights, keeping their normalization.
/// `cfg.hidden` is ignored.
pub fn lstm_train_from(
    init: ModelWeights,
    data: &[LabeledEncounter],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(ModelWeights, TrainReport), ClassifierError> {
    init.validate()?;
    validate_data(data)?;
    let (train, val) = split(data, cfg.val_fraction, seed);
    fit(init, &train, &val, cfg, seed)
}

fn validate_data(data: &[LabeledEncounter]) -> Result<(), ClassifierError> {
    let left = data.iter().filter(|e| e.label == PassingSide::Left).count();
    let right = data.iter().filter(|e| e.label == PassingSide::Right).count();
    if left == 0 || right == 0 || left + right != data.len() {
        return Err(ClassifierError::DegenerateData);
    }
    if data.iter().any(|e| e.features.is_empty()) {
        return Err(ClassifierError::EmptyWindow);
    }
    Ok(())
}

fn split(data: &[LabeledEncounter], val_fraction: f64, seed: u64) -> (Vec<&LabeledEncounter>, Vec<&LabeledEncounter>) {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(substream(seed, 2)));
    let n_val = ((data.len() as f64) * val_fraction.clamp(0.0, 0.5)).round() as usize;
    let val = idx[..n_val].iter().map(|&i| &data[i]).collect();
    let train = idx[n_val..].iter().map(|&i| &data[i]).collect();
    (train, val)
}

fn normalization(train: &[&LabeledEncounter]) -> (Array1<f64>, Array1<f64>) {
    let mut sum = [0.0; FEATURES];
    let mut sq = [0.0; FEATURES];
    let mut n = 0.0;
    for e in train {
        for f in &e.features {
            for k in 0..FEATURES {
                sum[k] += f[k];
                sq[k] += f[k] * f[k];
            }
            n += 1.0;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std: Vec<f64> = (0..FEATURES)
        .map(|k| {
            let s = (sq[k] / n - mean[k] * mean[k]).max(0.0).sqrt();
            if s > 1e-9 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (Array1::from(mean), Array1::from(std))
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    fn new(w: &ModelWeights) -> Self {
        let zeros: Vec<Vec<f64>> = w.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, w: &mut ModelWeights, g: &Gradients, lr: f64, cfg: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t);
        let bc2 = 1.0 - cfg.beta2.powi(self.t);
        for (((p, g), m), v) in w
            .tensors_mut()
            .into_iter()
            .zip(g.tensors())
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                p[i] -= lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + cfg.eps);
            }
        }
    }
}

fn is_left(e: &LabeledEncounter) -> bool {
    e.label == PassingSide::Left
}

fn fit(
    mut w: ModelWeights,
    train: &[&LabeledEncounter],
    val: &[&LabeledEncounter],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(ModelWeights, TrainReport), ClassifierError> {
    let mut report = TrainReport {
        epochs: Vec::with_capacity(cfg.epochs),
        train_size: train.len(),
        val_size: val.len(),
    };
    let mut adam = Adam::new(&w);
    let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, 3));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let batch = cfg.batch_size.max(1);
    let val_owned: Vec<LabeledEncounter> = val.iter().map(|e| (*e).clone()).collect();
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr * cfg.lr_gamma.powi((epoch / cfg.lr_step_epochs.max(1)) as i32);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let seqs: Vec<&[FeatureVector]> = chunk.iter().map(|&i| train[i].features.as_slice()).collect();
            let labels: Vec<bool> = chunk.iter().map(|&i| is_left(train[i])).collect();
            let (loss, g) = batch_loss_and_gradients(&w, &seqs, &labels)?;
            if !loss.is_finite() {
                return Err(ClassifierError::DivergedLoss { epoch });
            }
            total += loss * chunk.len() as f64;
            adam.step(&mut w, &g, lr, cfg);
        }
        let train_loss = total / train.len() as f64;
        if w.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(ClassifierError::DivergedLoss { epoch });
        }
        let (val_loss, val_f1) = if val.is_empty() {
            (None, None)
        } else {
            let seqs: Vec<&[FeatureVector]> = val.iter().map(|e| e.features.as_slice()).collect();
            let labels: Vec<bool> = val.iter().map(|e| is_left(e)).collect();
            (Some(batch_loss(&w, &seqs, &labels)), Some(evaluate(&w, &val_owned).f1))
        };
        report.epochs.push(EpochStats {
            epoch,
            lr,
            train_loss,
            val_loss,
            val_f1,
        });
    }
    Ok((w, report))
}
