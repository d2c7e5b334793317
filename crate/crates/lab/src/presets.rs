//! Ready-made configurations for the standard studies.

use serde_json::json;

use crate::config::ExperimentConfig;

fn build(v: serde_json::Value) -> ExperimentConfig {
    serde_json::from_value(v).expect("preset is a valid config")
}

/// Unit square, `n = 2`, four plane waves, `k` from 1 to 8.
pub fn corner_scatter() -> ExperimentConfig {
    let dirs: Vec<[f64; 2]> = (0..4)
        .map(|a| {
            let t = std::f64::consts::PI * (0.5 * a as f64 + 0.125);
            [t.cos(), t.sin()]
        })
        .collect();
    build(json!({
        "kind": "corner_scatter",
        "shape": { "type": "polygon", "vertices": [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] },
        "contrast": { "type": "constant", "n": 2.0 },
        "incident": { "type": "plane", "directions": dirs },
        "k_range": { "min": 1.0, "max": 8.0, "step": 0.05 },
        "levels": [0.04, 0.02, 0.01],
    }))
}

/// Unit disk, `n = 4`, orders 0 and 1, `k` in `[0.5, 10]`.
pub fn radial_disk() -> ExperimentConfig {
    build(json!({
        "kind": "radial_nonscatter",
        "shape": { "type": "disk", "center": [0.0, 0.0], "radius": 1.0 },
        "contrast": { "type": "constant", "n": 4.0 },
        "k_range": { "min": 0.5, "max": 10.0, "step": 0.05 },
        "levels": [0.01, 0.005],
        "radial": { "max_order": 1, "root_offset": 0.2, "interior_samples": 1 },
    }))
}

/// Smooth bump against the indicator on the unit disk.
pub fn bump_source() -> ExperimentConfig {
    build(json!({
        "kind": "nonradiating_source",
        "shape": { "type": "disk", "center": [0.0, 0.0], "radius": 1.0 },
        "k_range": { "min": 1.0, "max": 8.0, "step": 1.0 },
        "levels": [0.04, 0.02, 0.01],
        "sources": [{ "type": "bump" }, { "type": "indicator" }],
    }))
}

/// Affine source `1 + x + y` on the unit square.
pub fn corner_source() -> ExperimentConfig {
    build(json!({
        "kind": "nonradiating_source",
        "shape": { "type": "polygon", "vertices": [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] },
        "k_range": { "min": 1.0, "max": 8.0, "step": 0.25 },
        "levels": [0.04, 0.02, 0.01],
        "sources": [{ "type": "affine", "c": 1.0, "gx": 1.0, "gy": 1.0 }],
    }))
}

/// Corner bisector of the unit square.
pub fn corner_probe() -> ExperimentConfig {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    build(json!({
        "kind": "jump_probe",
        "shape": { "type": "polygon", "vertices": [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] },
        "k_range": { "min": 1.0, "max": 1.0, "step": 1.0 },
        "levels": [0.02],
        "probe": {
            "points": [{ "point": [1.0, 1.0], "direction": [s, s] }],
            "offsets": [0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001],
        },
    }))
}

pub fn stationary_phase() -> ExperimentConfig {
    build(json!({
        "kind": "stationary_phase",
        "shape": { "type": "disk", "center": [0.0, 0.0], "radius": 1.0 },
        "k_range": { "min": 10.0, "max": 80.0, "step": 10.0 },
        "levels": [0.1],
        "seed": 2024,
        "stationary": { "ks": [10.0, 20.0, 40.0, 80.0], "densities": 5, "max_order": 3 },
    }))
}

pub fn by_name(name: &str) -> Option<ExperimentConfig> {
    Some(match name {
        "corner_scatter" => corner_scatter(),
        "radial_disk" => radial_disk(),
        "bump_source" => bump_source(),
        "corner_source" => corner_source(),
        "corner_probe" => corner_probe(),
        "stationary_phase" => stationary_phase(),
        _ => return None,
    })
}

pub const NAMES: [&str; 6] = [
    "corner_scatter",
    "radial_disk",
    "bump_source",
    "corner_source",
    "corner_probe",
    "stationary_phase",
];
