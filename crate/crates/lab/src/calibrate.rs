//! Scattering floor from a grid-refinement run.

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::experiment::{run_experiment, RunOutcome};
use crate::manifest::write_atomic;

pub const CALIBRATION_FILE: &str = "calibration.json";

/// Fraction of the extrapolated minimum kept as the floor.
pub const FLOOR_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub levels: Vec<f64>,
    /// Minimum of `ρ` over the sweep at each level.
    pub minima: Vec<f64>,
    /// Observed order from the three finest levels, when they converge.
    pub order: Option<f64>,
    pub extrapolated: f64,
    pub rho_min: f64,
    /// `ok` or `calibration_failed`.
    pub status: String,
    pub warning: Option<String>,
}

/// Richardson extrapolation of the three finest minima. A non-monotone or
/// non-contracting sequence falls back to the finest value.
pub fn richardson_floor(levels: &[f64], minima: &[f64]) -> LabResult<Calibration> {
    let n = minima.len();
    if n < 3 || levels.len() != n {
        return Err(LabError::Validation(
            "calibration needs at least three grid levels".into(),
        ));
    }
    let (h1, h2, h3) = (levels[n - 3], levels[n - 2], levels[n - 1]);
    let (m1, m2, m3) = (minima[n - 3], minima[n - 2], minima[n - 1]);
    let d1 = m1 - m2;
    let d2 = m2 - m3;
    let r = h1 / h2;
    let even = ((h2 / h3) / r - 1.0).abs() < 1e-2;
    let mut out = Calibration {
        levels: levels.to_vec(),
        minima: minima.to_vec(),
        order: None,
        extrapolated: m3,
        rho_min: FLOOR_FRACTION * m3,
        status: "ok".into(),
        warning: None,
    };
    if !even {
        out.status = "calibration_failed".into();
        out.warning = Some("grid levels are not in a constant ratio".into());
    } else if d2 == 0.0 {
        // already converged to rounding
    } else if d1 * d2 <= 0.0 || d2.abs() >= d1.abs() {
        out.status = "calibration_failed".into();
        out.warning = Some(format!("minima {m1}, {m2}, {m3} do not converge monotonically"));
    } else {
        let p = (d1 / d2).ln() / r.ln();
        let e = m3 - d2 / (r.powf(p) - 1.0);
        out.order = Some(p);
        out.extrapolated = e;
        out.rho_min = FLOOR_FRACTION * e;
    }
    Ok(out)
}

/// Runs the sweep and derives the floor from its per-level minima.
/// `calibration.json` lands next to the other outputs.
pub fn calibrate_floor(config: &ExperimentConfig) -> LabResult<(RunOutcome, Calibration)> {
    config.validate()?;
    config.check_calibratable()?;
    let mut out = run_experiment(config)?;
    let levels = out.sweep.as_ref().map(|s| s.levels.clone()).unwrap_or_default();
    let mut cal = if out.manifest.truncated || levels.iter().any(|l| l.min_rho.is_none()) {
        let finest = levels.iter().rev().find_map(|l| l.min_rho).unwrap_or(0.0);
        Calibration {
            levels: config.levels.clone(),
            minima: levels.iter().map(|l| l.min_rho.unwrap_or(f64::NAN)).collect(),
            order: None,
            extrapolated: finest,
            rho_min: FLOOR_FRACTION * finest,
            status: "calibration_failed".into(),
            warning: Some("some grid levels produced no solution".into()),
        }
    } else {
        let minima: Vec<f64> = levels.iter().map(|l| l.min_rho.expect("checked")).collect();
        richardson_floor(&config.levels, &minima)?
    };
    if cal.minima.iter().any(|m| m.is_nan()) {
        // NaN is not valid JSON
        cal.minima.retain(|m| !m.is_nan());
    }
    if let Some(w) = &cal.warning {
        eprintln!("warning: {w}");
    }
    write_atomic(
        &out.dir.join(CALIBRATION_FILE),
        serde_json::to_string_pretty(&cal)?.as_bytes(),
    )?;
    out.manifest.summary["calibration"] = serde_json::to_value(&cal)?;
    let dir = out.dir.clone();
    out.manifest.record_files(&dir, &[CALIBRATION_FILE.to_string()])?;
    Ok((out, cal))
}
