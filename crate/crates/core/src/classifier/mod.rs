//! Recurrent passing-intention classifier.
//!
//! A two-layer LSTM reads a short window of (noisy) obstacle fixes, expressed
//! relative to the ego vessel, and predicts whether the obstacle will pass on
//! the ego's left or right. Training data comes from a synthetic encounter
//! generator labelled by the winding-number topology.

mod dataset;
mod features;
mod io;
mod lstm;
mod metrics;
mod train;

use thiserror::Error;

use crate::topology::VesselState;

pub use dataset::{generate_synthetic_dataset, read_dataset_csv, write_dataset_csv, DatasetConfig, LabeledEncounter};
pub use features::{extract_features, feature_vector, FeatureVector, FEATURES};
pub use io::{load_weights, save_weights, weights_from_json, weights_to_json, WEIGHTS_FORMAT_VERSION};
pub use lstm::{lstm_forward, lstm_forward_batch, ForwardTrace, Gradients, LstmLayer, ModelWeights, DEFAULT_HIDDEN};
pub use metrics::{evaluate, BinaryMetrics};
pub use train::{batch_loss_and_gradients, lstm_train, lstm_train_from, EpochStats, TrainConfig, TrainReport};

/// Default observation horizon, seconds.
pub const DEFAULT_WINDOW_S: f64 = 10.0;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("observation window has no usable fixes")]
    EmptyWindow,
    #[error("invalid observation window: {0}")]
    InvalidWindow(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("training loss diverged at epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("weights file format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt weights file: {0}")]
    CorruptFile(String),
    #[error("malformed dataset: {0}")]
    MalformedDataset(String),
    #[error("infeasible dataset configuration: {0}")]
    InfeasibleConfig(String),
    #[error("training data must be nonempty and contain both classes")]
    DegenerateData,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Probability that an obstacle passes on the ego vessel's left / right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassingBelief {
    pub p_l: f64,
    pub p_r: f64,
}

impl PassingBelief {
    /// Belief from the left probability, clamped into `[0, 1]`.
    pub fn from_left(p_l: f64) -> Self {
        let p_l = p_l.clamp(0.0, 1.0);
        Self { p_l, p_r: 1.0 - p_l }
    }

    pub fn uniform() -> Self {
        Self::from_left(0.5)
    }

    /// Argmax side; an exact tie resolves to left.
    pub fn predicts_left(&self) -> bool {
        self.p_l >= self.p_r
    }
}

/// Time-aligned obstacle fixes and ego states over the recent past.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    pub obstacle_id: u32,
    fixes: Vec<VesselState>,
    ego: Vec<VesselState>,
}

impl ObservationWindow {
    /// Validates ordering and span; `horizon_s` bounds `t_last - t_first`.
    pub fn new(
        obstacle_id: u32,
        fixes: Vec<VesselState>,
        ego: Vec<VesselState>,
        horizon_s: f64,
    ) -> Result<Self, ClassifierError> {
        if fixes.is_empty() {
            return Err(ClassifierError::EmptyWindow);
        }
        if fixes.len() != ego.len() {
            return Err(ClassifierError::InvalidWindow(format!(
                "{} fixes but {} ego states",
                fixes.len(),
                ego.len()
            )));
        }
        for w in fixes.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(ClassifierError::InvalidWindow(
                    "timestamps must increase strictly".into(),
                ));
            }
        }
        let span = fixes.last().unwrap().t - fixes[0].t;
        if span > horizon_s + 1e-9 {
            return Err(ClassifierError::InvalidWindow(format!(
                "span {span} s exceeds horizon {horizon_s} s"
            )));
        }
        Ok(Self {
            obstacle_id,
            fixes,
            ego,
        })
    }

    pub fn fixes(&self) -> &[VesselState] {
        &self.fixes
    }

    pub fn ego(&self) -> &[VesselState] {
        &self.ego
    }

    pub fn len(&self) -> usize {
        self.fixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixes.is_empty()
    }
}

/// Classifier belief for one window.
pub fn predict(w: &ModelWeights, window: &ObservationWindow) -> Result<PassingBelief, ClassifierError> {
    let seq = extract_features(window)?;
    lstm_forward(w, &seq)
}
