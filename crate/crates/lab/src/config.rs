//! Experiment configuration and validation.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use helmscat::geometry::{Contrast, Shape, DEFAULT_MAX_CELLS};
use helmscat::radial::{te_spectrum, RadialMedium};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Sweep,
    JumpProbe,
    RadialNonscatter,
    CornerScatter,
    NonradiatingSource,
    StationaryPhase,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::JumpProbe => "jump_probe",
            ExperimentKind::RadialNonscatter => "radial_nonscatter",
            ExperimentKind::CornerScatter => "corner_scatter",
            ExperimentKind::NonradiatingSource => "nonradiating_source",
            ExperimentKind::StationaryPhase => "stationary_phase",
        }
    }

    /// Kinds whose summaries compare grid levels.
    pub fn asserts_convergence(self) -> bool {
        matches!(
            self,
            ExperimentKind::Sweep
                | ExperimentKind::CornerScatter
                | ExperimentKind::RadialNonscatter
                | ExperimentKind::NonradiatingSource
        )
    }
}

/// `min, min + step, ...` up to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl KRange {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.min + self.step * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum IncidentFamily {
    /// Plane waves; directions are normalised on use.
    Plane {
        directions: Vec<Vec<f64>>,
    },
    /// Herglotz waves with densities `e^{iℓθ}`.
    Herglotz {
        orders: Vec<i64>,
    },
    PointSource {
        sources: Vec<Vec<f64>>,
    },
}

impl IncidentFamily {
    pub fn len(&self) -> usize {
        match self {
            IncidentFamily::Plane { directions } => directions.len(),
            IncidentFamily::Herglotz { orders } => orders.len(),
            IncidentFamily::PointSource { sources } => sources.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Densities for source and probe experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    /// `1` on `D`.
    Indicator,
    /// `c + gx x + gy y` on `D`.
    Affine { c: f64, gx: f64, gy: f64 },
    /// `Δv + k²v` for `v = (1 - |x - c|²/R²)⁴` on a disk, which radiates nothing.
    Bump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub gmres_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    /// Subsamples per axis when averaging `n` over cut cells.
    pub subsamples: usize,
    /// Relative change allowed between the two finest levels.
    pub convergence: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gmres_tol: 1e-8,
            gmres_restart: 150,
            gmres_max_iter: 3000,
            subsamples: 8,
            convergence: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    pub max_cells: usize,
    /// Cap on linear solves; `None` is unlimited.
    pub max_solves: Option<usize>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_cells: DEFAULT_MAX_CELLS,
            max_solves: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialParams {
    pub max_order: usize,
    /// Offset of the comparison points on either side of each root.
    pub root_offset: f64,
    /// Samples strictly between consecutive roots of one order.
    pub interior_samples: usize,
}

impl Default for RadialParams {
    fn default() -> Self {
        RadialParams {
            max_order: 1,
            root_offset: 0.2,
            interior_samples: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbePoint {
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeParams {
    pub points: Vec<ProbePoint>,
    /// Strictly decreasing offsets `η`.
    pub offsets: Vec<f64>,
    #[serde(default = "indicator")]
    pub density: DensitySpec,
}

fn indicator() -> DensitySpec {
    DensitySpec::Indicator
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationaryParams {
    pub ks: Vec<f64>,
    pub densities: usize,
    pub max_order: usize,
    /// Bound on `‖φ‖_{C¹}`.
    pub c1_bound: f64,
    pub min_modulus: f64,
    /// Base radius `|z|`; the residual is enveloped over one period above it.
    pub radius: f64,
}

impl Default for StationaryParams {
    fn default() -> Self {
        StationaryParams {
            ks: vec![10.0, 20.0, 40.0, 80.0],
            densities: 5,
            max_order: 3,
            c1_bound: 10.0,
            min_modulus: 0.5,
            radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub shape: Shape<f64>,
    #[serde(default = "unit_contrast")]
    pub contrast: Contrast<f64>,
    #[serde(default)]
    pub incident: Option<IncidentFamily>,
    pub k_range: KRange,
    /// Grid spacings, coarse to fine.
    pub levels: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub radial: Option<RadialParams>,
    #[serde(default)]
    pub probe: Option<ProbeParams>,
    #[serde(default)]
    pub sources: Option<Vec<DensitySpec>>,
    #[serde(default)]
    pub stationary: Option<StationaryParams>,
}

fn unit_contrast() -> Contrast<f64> {
    Contrast::constant(1.0)
}

fn invalid<T>(msg: impl Into<String>) -> LabResult<T> {
    Err(LabError::Validation(msg.into()))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> LabResult<Self> {
        serde_json::from_str(text).map_err(|e| LabError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &std::path::Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical JSON form without the output directory and
    /// budget, neither of which changes a computed row.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        c.budget = Budget::default();
        let text = serde_json::to_string(&c).expect("config serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// The constant index, when the contrast is constant.
    pub fn constant_index(&self) -> Option<f64> {
        match self.contrast {
            Contrast::Constant { n } => Some(n),
            _ => None,
        }
    }

    pub fn validate(&self) -> LabResult<()> {
        self.shape.validate().map_err(|e| LabError::Validation(e.to_string()))?;
        let kr = &self.k_range;
        if !(kr.min > 0.0) || !(kr.max >= kr.min) || !kr.max.is_finite() {
            return invalid(format!(
                "k range must be positive and increasing, got [{}, {}]",
                kr.min, kr.max
            ));
        }
        if !(kr.step > 0.0) || !kr.step.is_finite() {
            return invalid("k step must be positive");
        }
        if self.levels.is_empty() || self.levels.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return invalid("grid levels must be positive");
        }
        if self.levels.windows(2).any(|w| !(w[1] < w[0])) {
            return invalid("grid levels must be strictly decreasing");
        }
        if self.kind.asserts_convergence() && self.levels.len() < 2 {
            return invalid(format!("{} needs at least 2 grid levels", self.kind.name()));
        }
        let t = &self.tolerances;
        if !(t.gmres_tol > 0.0) || t.gmres_restart == 0 || t.gmres_max_iter == 0 || t.subsamples == 0 {
            return invalid("solver tolerances must be positive");
        }
        if self.shape.dimension() != 2 {
            return invalid("experiments are two-dimensional");
        }
        match self.kind {
            ExperimentKind::Sweep | ExperimentKind::CornerScatter => {
                let fam = match &self.incident {
                    Some(f) if !f.is_empty() => f,
                    _ => return invalid("a sweep needs at least one incident wave"),
                };
                if let IncidentFamily::Plane { directions } = fam {
                    if directions.iter().any(|d| d.len() != 2 || d.iter().all(|c| *c == 0.0)) {
                        return invalid("plane directions must be nonzero 2-vectors");
                    }
                }
                if self.kind == ExperimentKind::CornerScatter && !matches!(self.shape, Shape::Polygon { .. }) {
                    return invalid("corner_scatter needs a polygon");
                }
            }
            ExperimentKind::RadialNonscatter => {
                let (n, r) = self.radial_medium_parts()?;
                RadialMedium::new(2, r, n).map_err(|e| LabError::Validation(e.to_string()))?;
                let p = self.radial.clone().unwrap_or_default();
                if !(p.root_offset > 0.0) {
                    return invalid("root offset must be positive");
                }
                let m = RadialMedium::new(2, r, n).expect("checked");
                if kr.step > m.max_step() {
                    return invalid(format!("radial scan step {} exceeds {}", kr.step, m.max_step()));
                }
            }
            ExperimentKind::JumpProbe => {
                let p = match &self.probe {
                    Some(p) => p,
                    None => return invalid("jump_probe needs probe parameters"),
                };
                if p.points.is_empty() || p.offsets.is_empty() {
                    return invalid("jump_probe needs points and offsets");
                }
                if p.offsets.iter().any(|e| !(*e > 0.0)) || p.offsets.windows(2).any(|w| !(w[1] < w[0])) {
                    return invalid("probe offsets must be positive and strictly decreasing");
                }
                if matches!(p.density, DensitySpec::Bump) {
                    return invalid("the bump density belongs to source experiments");
                }
            }
            ExperimentKind::NonradiatingSource => {
                let s = match &self.sources {
                    Some(s) if !s.is_empty() => s,
                    _ => return invalid("nonradiating_source needs at least one source"),
                };
                if s.iter().any(|d| matches!(d, DensitySpec::Bump)) && !matches!(self.shape, Shape::Disk { .. }) {
                    return invalid("the bump source needs a disk");
                }
            }
            ExperimentKind::StationaryPhase => {
                let p = self.stationary.clone().unwrap_or_default();
                if p.ks.len() < 2 || p.ks.iter().any(|k| !(*k > 0.0)) || p.ks.windows(2).any(|w| !(w[1] > w[0])) {
                    return invalid("stationary ladder needs increasing positive wavenumbers");
                }
                if p.densities == 0 || !(p.min_modulus > 0.0) || !(p.c1_bound > p.min_modulus) || !(p.radius > 0.0) {
                    return invalid("stationary density bounds are inconsistent");
                }
            }
        }
        Ok(())
    }

    pub(crate) fn radial_medium_parts(&self) -> LabResult<(f64, f64)> {
        let r = match self.shape {
            Shape::Disk { center, radius } if center.iter().all(|c| *c == 0.0) => radius,
            _ => return invalid("radial experiments need a disk centred at the origin"),
        };
        match self.constant_index() {
            Some(n) => Ok((n, r)),
            None => invalid("radial experiments need a constant index"),
        }
    }

    /// Refuses sweeps that contain a transmission eigenvalue for one of the
    /// incident harmonics, which would put a genuine dip into a floor.
    pub fn check_calibratable(&self) -> LabResult<()> {
        if self.levels.len() < 3 {
            return invalid("calibration needs at least 3 grid levels");
        }
        if !matches!(
            self.kind,
            ExperimentKind::CornerScatter | ExperimentKind::Sweep | ExperimentKind::NonradiatingSource
        ) {
            return invalid(format!("cannot calibrate a {} experiment", self.kind.name()));
        }
        if let (Shape::Disk { radius, .. }, Some(n), Some(IncidentFamily::Herglotz { orders })) =
            (&self.shape, self.constant_index(), &self.incident)
        {
            let m = RadialMedium::new(2, *radius, n).map_err(|e| LabError::Validation(e.to_string()))?;
            let top = orders.iter().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0);
            let lo = self.k_range.min.max(1e-3);
            if self.k_range.max > lo {
                let s = te_spectrum(&m, top, lo, self.k_range.max, m.max_step().min(self.k_range.step))
                    .map_err(|e| LabError::Validation(e.to_string()))?;
                let hit = s
                    .roots
                    .iter()
                    .find(|r| orders.iter().any(|l| l.unsigned_abs() as usize == r.order));
                if let Some(r) = hit {
                    return invalid(format!(
                        "the sweep contains the transmission eigenvalue k = {} of order {}",
                        r.k, r.order
                    ));
                }
            }
        }
        Ok(())
    }
}
