use asvplan_cli::data;
use asvplan_core::classifier::{evaluate, generate_synthetic_dataset, DatasetConfig};

#[test]
fn bundled_model_agrees_with_topology_on_completed_cv_encounters() {
    // Straight tracks, exact fixes, windows ending at the clearance sample.
    let cfg = DatasetConfig {
        n: 1000,
        turning_fraction: 0.0,
        sigma_pos_max: 0.0,
        sigma_heading_max: 0.0,
        final_window: true,
        ..DatasetConfig::default()
    };
    let held_out = generate_synthetic_dataset(&cfg, 0xC0FFEE).unwrap();
    let m = evaluate(&data::bundled_weights(), &held_out);
    assert!(m.accuracy >= 0.95 && m.total() == 1000, "{m:?}");
}
