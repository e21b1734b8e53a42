//! Files shipped with the binary.

use asvplan_core::classifier::weights_from_json;
use asvplan_core::ModelWeights;

/// Classifier weights trained on the synthetic encounter generator.
pub const WEIGHTS_JSON: &str = include_str!("../data/lstm_weights.json");

/// AIS reconstruction of the Cape Kodomari collision (vessel ids 1 and 2).
pub const KODOMARI_CSV: &str = include_str!("../data/kodomari_ais.csv");

/// Single-obstacle crossing snapshot used for gain-field plots.
pub const CROSSING_SNAPSHOT: &str = include_str!("../data/crossing.snapshot");

pub fn bundled_weights() -> ModelWeights {
    weights_from_json(WEIGHTS_JSON).expect("bundled weights are valid")
}
