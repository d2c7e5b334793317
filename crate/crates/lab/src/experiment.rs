//! Running experiments: task planning per kind, a resumable worker loop,
//! and the CSV/JSON outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use helmscat::geometry::{rasterize_averaged, Grid, MediumField, Shape};
use helmscat::krylov::GmresOptions;
use helmscat::lippmann::{scattering_strength, solve_source_problem, ScatteringOperator, SolverOptions};
use helmscat::radial::{eigen_incident, te_determinant, te_spectrum, RadialMedium, TransmissionSpectrum};
use helmscat::volpot::{symmetric_jump_probe, DensityField, DensityFn, ProbeOptions};
use helmscat::waves::{stationary_phase_farfield, FourierDensity, IncidentWave};
use helmscat::{Cx, Error as CoreError};

use crate::config::{DensitySpec, ExperimentConfig, ExperimentKind, IncidentFamily};
use crate::error::{LabError, LabResult};
use crate::manifest::{csv_preamble, write_atomic, Manifest, RunInfo, MANIFEST_SCHEMA_VERSION};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "HELMLAB_WORKERS";
pub const PROGRESS_FILE: &str = "progress.jsonl";

/// One incident wave (or source) evaluated on one row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    pub wave: usize,
    /// `‖u^∞‖ / ‖v‖` for scattering, `‖u^∞‖ / ‖f‖` for sources.
    pub rho: Option<f64>,
    pub farfield_norm: Option<f64>,
    pub iterations: usize,
    pub status: String,
}

/// A single wavenumber on a single grid level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub level: usize,
    pub h: f64,
    pub k: f64,
    /// `grid` for sweeps; `root`, `minus`, `plus`, `interior` for radial runs.
    pub role: String,
    pub order: i64,
    pub root: Option<usize>,
    pub measures: Vec<Measure>,
}

impl Row {
    pub fn failed(&self) -> bool {
        self.measures.iter().all(|m| m.rho.is_none())
    }

    pub fn min_rho(&self) -> Option<f64> {
        self.measures.iter().filter_map(|m| m.rho).reduce(f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    pub h: f64,
    pub min_rho: Option<f64>,
    pub argmin_k: Option<f64>,
    pub argmin_wave: Option<usize>,
    pub rows: usize,
    pub failed: usize,
}

/// Rows of a sweep with per-level minima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<Row>,
    pub levels: Vec<LevelSummary>,
    pub config_hash: String,
    pub wall_seconds: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub sweep: Option<SweepResult>,
}

impl RunOutcome {
    /// 0 success, 3 truncated, 4 every row failed.
    pub fn exit_code(&self) -> i32 {
        let r = &self.manifest.run;
        let rows = r.rows_computed + r.rows_reused;
        if rows > 0 && r.rows_failed == rows {
            4
        } else if self.manifest.truncated {
            3
        } else {
            0
        }
    }
}

enum Work {
    Scatter(Vec<IncidentWave<f64>>),
    Source(Vec<DensitySpec>),
}

struct Template {
    k: f64,
    role: &'static str,
    order: i64,
    root: Option<usize>,
    work: Work,
}

impl Template {
    fn cost(&self) -> usize {
        match &self.work {
            Work::Scatter(w) => w.len(),
            Work::Source(s) => s.len(),
        }
    }
}

fn workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

fn solver_options(config: &ExperimentConfig) -> SolverOptions<f64> {
    let t = &config.tolerances;
    SolverOptions {
        gmres: GmresOptions {
            tol: t.gmres_tol,
            restart: t.gmres_restart,
            max_iter: t.gmres_max_iter,
        },
        ..SolverOptions::default()
    }
}

fn status_of(e: &CoreError) -> String {
    match e {
        CoreError::NotConverged { .. } => "not_converged".into(),
        CoreError::UnderResolved { .. } => "under_resolved".into(),
        _ => "error".into(),
    }
}

fn failed_measure(wave: usize, status: String) -> Measure {
    Measure {
        wave,
        rho: None,
        farfield_norm: None,
        iterations: 0,
        status,
    }
}

fn bump_source(center: [f64; 2], radius: f64, k: f64) -> DensityFn<f64> {
    Arc::new(move |x: &[f64]| {
        let s = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)) / (radius * radius);
        if s >= 1.0 {
            return Cx::new(0.0, 0.0);
        }
        let t = 1.0 - s;
        let lap = (48.0 * s * t * t - 16.0 * t.powi(3)) / (radius * radius);
        Cx::new(lap + k * k * t.powi(4), 0.0)
    })
}

/// `f` for a source spec at wavenumber `k`.
pub fn source_density(spec: &DensitySpec, shape: &Shape<f64>, k: f64) -> DensityFn<f64> {
    match *spec {
        DensitySpec::Indicator => Arc::new(|_: &[f64]| Cx::new(1.0, 0.0)),
        DensitySpec::Affine { c, gx, gy } => Arc::new(move |x: &[f64]| Cx::new(c + gx * x[0] + gy * x[1], 0.0)),
        DensitySpec::Bump => match shape {
            Shape::Disk { center, radius } => bump_source(*center, *radius, k),
            _ => unreachable!("validated: bump needs a disk"),
        },
    }
}

fn evaluate(t: &Template, level: usize, h: f64, medium: &MediumField<f64>, config: &ExperimentConfig) -> Row {
    let measures = match &t.work {
        Work::Scatter(waves) => match ScatteringOperator::new(medium, t.k, solver_options(config)) {
            Err(e) => (0..waves.len()).map(|w| failed_measure(w, status_of(&e))).collect(),
            Ok(op) => waves
                .iter()
                .enumerate()
                .map(|(w, wave)| match op.solve(wave) {
                    Ok(sol) => {
                        let vn = sol.incident_norm();
                        match scattering_strength(&sol) {
                            Ok(rho) => Measure {
                                wave: w,
                                rho: Some(rho),
                                farfield_norm: Some(rho * vn),
                                iterations: sol.iterations,
                                status: "ok".into(),
                            },
                            Err(e) => failed_measure(w, status_of(&e)),
                        }
                    }
                    Err(e) => failed_measure(w, status_of(&e)),
                })
                .collect(),
        },
        Work::Source(specs) => specs
            .iter()
            .enumerate()
            .map(|(w, spec)| {
                let f = DensityField::from_fn(medium, source_density(spec, &config.shape, t.k));
                let res = f.and_then(|f| {
                    let fnorm = f.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() * h;
                    solve_source_problem(&f, t.k).map(|s| (s.far_field.l2_norm(), fnorm))
                });
                match res {
                    Ok((ff, fnorm)) if fnorm > 0.0 => Measure {
                        wave: w,
                        rho: Some(ff / fnorm),
                        farfield_norm: Some(ff),
                        iterations: 0,
                        status: "ok".into(),
                    },
                    Ok(_) => failed_measure(w, "zero_source".into()),
                    Err(e) => failed_measure(w, status_of(&e)),
                }
            })
            .collect(),
    };
    Row {
        level,
        h,
        k: t.k,
        role: t.role.to_string(),
        order: t.order,
        root: t.root,
        measures,
    }
}

fn incident_waves(family: &IncidentFamily, k: f64) -> LabResult<Vec<IncidentWave<f64>>> {
    let waves = match family {
        IncidentFamily::Plane { directions } => directions
            .iter()
            .map(|d| IncidentWave::plane(k, d.clone()))
            .collect::<Result<Vec<_>, _>>()?,
        IncidentFamily::Herglotz { orders } => orders
            .iter()
            .map(|&l| IncidentWave::herglotz(k, FourierDensity::harmonic(l)))
            .collect::<Result<Vec<_>, _>>()?,
        IncidentFamily::PointSource { sources } => sources
            .iter()
            .map(|s| IncidentWave::point_source(k, s.clone()))
            .collect::<Result<Vec<_>, _>>()?,
    };
    Ok(waves)
}

struct RadialPlan {
    medium: RadialMedium<f64>,
    spectrum: TransmissionSpectrum<f64>,
}

fn radial_plan(config: &ExperimentConfig) -> LabResult<(RadialPlan, Vec<Template>)> {
    let (n, r) = config.radial_medium_parts()?;
    let p = config.radial.clone().unwrap_or_default();
    let medium = RadialMedium::new(2, r, n)?;
    let kr = config.k_range;
    let spectrum = te_spectrum(&medium, p.max_order, kr.min, kr.max, kr.step)?;
    let mut out = Vec::new();
    let harmonic = |k: f64, l: usize| -> LabResult<Work> {
        Ok(Work::Scatter(vec![IncidentWave::herglotz(
            k,
            FourierDensity::harmonic(l as i64),
        )?]))
    };
    for l in 0..=p.max_order {
        let roots = spectrum.roots_of_order(l);
        for (i, root) in roots.iter().enumerate() {
            out.push(Template {
                k: root.k,
                role: "root",
                order: l as i64,
                root: Some(i),
                work: Work::Scatter(vec![eigen_incident(&medium, l, root.k)?]),
            });
            for (role, k) in [("minus", root.k - p.root_offset), ("plus", root.k + p.root_offset)] {
                if k > 0.0 {
                    out.push(Template {
                        k,
                        role,
                        order: l as i64,
                        root: Some(i),
                        work: harmonic(k, l)?,
                    });
                }
            }
            if let Some(next) = roots.get(i + 1) {
                let s = p.interior_samples;
                for j in 1..=s {
                    let k = root.k + (next.k - root.k) * j as f64 / (s + 1) as f64;
                    out.push(Template {
                        k,
                        role: "interior",
                        order: l as i64,
                        root: Some(i),
                        work: harmonic(k, l)?,
                    });
                }
            }
        }
    }
    Ok((RadialPlan { medium, spectrum }, out))
}

fn load_progress(path: &Path, hash: &str) -> BTreeMap<String, Row> {
    let mut done = BTreeMap::new();
    let Ok(file) = fs::File::open(path) else {
        return done;
    };
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(head))
            if serde_json::from_str::<serde_json::Value>(&head)
                .ok()
                .and_then(|v| v["config_hash"].as_str().map(String::from))
                .as_deref()
                == Some(hash) => {}
        _ => return done,
    }
    for line in lines.map_while(Result::ok) {
        // a torn final line from an interrupted write is simply recomputed
        if let Ok(v) = serde_json::from_str::<serde_json::Value>(&line) {
            if let (Some(key), Ok(row)) = (v["key"].as_str(), serde_json::from_value::<Row>(v["row"].clone())) {
                done.insert(key.to_string(), row);
            }
        }
    }
    done
}

struct Progress {
    file: fs::File,
}

impl Progress {
    fn open(path: &Path, hash: &str, resume: bool) -> LabResult<Self> {
        let file = if resume {
            fs::OpenOptions::new().append(true).open(path)?
        } else {
            let mut f = fs::File::create(path)?;
            writeln!(f, "{}", json!({ "config_hash": hash }))?;
            f
        };
        Ok(Progress { file })
    }

    fn push(&mut self, key: &str, row: &Row) -> LabResult<()> {
        writeln!(self.file, "{}", json!({ "key": key, "row": row }))?;
        self.file.flush()?;
        Ok(())
    }
}

struct GridRun {
    rows: Vec<Row>,
    truncated: Option<String>,
    computed: usize,
    reused: usize,
}

/// Evaluates every template on every level, skipping rows already in the
/// progress file and stopping at the solve budget.
fn run_grid(
    config: &ExperimentConfig,
    dir: &Path,
    templates: &[Template],
    pool: &rayon::ThreadPool,
) -> LabResult<GridRun> {
    let hash = config.hash();
    let ppath = dir.join(PROGRESS_FILE);
    let mut done = load_progress(&ppath, &hash);
    let reused_keys = done.len();
    let mut progress = Progress::open(&ppath, &hash, reused_keys > 0)?;
    let mut solves_left = config.budget.max_solves;
    let mut truncated = None;
    let mut computed = 0;
    let chunk = pool.current_num_threads().max(1) * 2;
    'levels: for (level, &h) in config.levels.iter().enumerate() {
        let pending: Vec<(String, &Template)> = templates
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("{level}/{i}"), t))
            .filter(|(key, _)| !done.contains_key(key))
            .collect();
        if pending.is_empty() {
            continue;
        }
        let grid = match Grid::covering(&config.shape, h, config.budget.max_cells) {
            Ok(g) => g,
            Err(e @ CoreError::BudgetExceeded { .. }) => {
                truncated = Some(format!("level {level} (h = {h}): {e}"));
                break;
            }
            Err(e) => return Err(e.into()),
        };
        let medium = rasterize_averaged(&config.shape, &config.contrast, &grid, config.tolerances.subsamples)?;
        for batch in pending.chunks(chunk) {
            let mut take = batch.len();
            if let Some(left) = solves_left.as_mut() {
                let mut used = 0;
                take = 0;
                for (_, t) in batch {
                    if used + t.cost() > *left {
                        break;
                    }
                    used += t.cost();
                    take += 1;
                }
                *left -= used;
            }
            let rows: Vec<Row> = pool.install(|| {
                batch[..take]
                    .par_iter()
                    .map(|(_, t)| evaluate(t, level, h, &medium, config))
                    .collect()
            });
            for ((key, _), row) in batch.iter().zip(rows) {
                progress.push(key, &row)?;
                done.insert(key.clone(), row);
                computed += 1;
            }
            if take < batch.len() {
                truncated = Some(format!(
                    "solve budget of {} exhausted",
                    config.budget.max_solves.unwrap_or(0)
                ));
                break 'levels;
            }
        }
    }
    let mut rows: Vec<Row> = done.into_values().collect();
    rows.sort_by(|a, b| {
        a.k.total_cmp(&b.k)
            .then(a.level.cmp(&b.level))
            .then(a.order.cmp(&b.order))
            .then(a.role.cmp(&b.role))
    });
    Ok(GridRun {
        rows,
        truncated,
        computed,
        reused: reused_keys,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn level_summaries(config: &ExperimentConfig, rows: &[Row]) -> Vec<LevelSummary> {
    config
        .levels
        .iter()
        .enumerate()
        .map(|(level, &h)| {
            let mine: Vec<&Row> = rows.iter().filter(|r| r.level == level).collect();
            let mut best: Option<(f64, f64, usize)> = None;
            for r in &mine {
                for m in &r.measures {
                    if let Some(rho) = m.rho {
                        if best.is_none_or(|b| rho < b.0) {
                            best = Some((rho, r.k, m.wave));
                        }
                    }
                }
            }
            LevelSummary {
                level,
                h,
                min_rho: best.map(|b| b.0),
                argmin_k: best.map(|b| b.1),
                argmin_wave: best.map(|b| b.2),
                rows: mine.len(),
                failed: mine.iter().filter(|r| r.failed()).count(),
            }
        })
        .collect()
}

/// Largest relative change of `ρ` between the two finest levels over
/// matching rows (optionally restricted to some roles).
fn finest_change(config: &ExperimentConfig, rows: &[Row], roles: Option<&[&str]>) -> Option<f64> {
    let n = config.levels.len();
    if n < 2 {
        return None;
    }
    let key = |r: &Row| (r.k.to_bits(), r.order, r.role.clone());
    let coarse: BTreeMap<_, &Row> = rows.iter().filter(|r| r.level == n - 2).map(|r| (key(r), r)).collect();
    let mut worst: Option<f64> = None;
    for r in rows.iter().filter(|r| r.level == n - 1) {
        if roles.is_some_and(|rs| !rs.contains(&r.role.as_str())) {
            continue;
        }
        if let Some(c) = coarse.get(&key(r)) {
            for (a, b) in r.measures.iter().zip(&c.measures) {
                if let (Some(x), Some(y)) = (a.rho, b.rho) {
                    let d = (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
                    worst = Some(worst.map_or(d, |w: f64| w.max(d)));
                }
            }
        }
    }
    worst
}

fn write_rows_csv(config: &ExperimentConfig, rows: &[Row], path: &Path, source: bool) -> LabResult<()> {
    let mut s = csv_preamble(config);
    if source {
        s.push_str("level,h,k,source,farfield_norm,ratio,status\n");
    } else {
        s.push_str("level,h,k,wave,rho,iterations,status\n");
    }
    for r in rows {
        for m in &r.measures {
            if source {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    r.level,
                    r.h,
                    r.k,
                    m.wave,
                    fmt_opt(m.farfield_norm),
                    fmt_opt(m.rho),
                    m.status
                );
            } else {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    r.level,
                    r.h,
                    r.k,
                    m.wave,
                    fmt_opt(m.rho),
                    m.iterations,
                    m.status
                );
            }
        }
    }
    write_atomic(path, s.as_bytes())
}

fn write_radial_outputs(
    config: &ExperimentConfig,
    dir: &Path,
    plan: &RadialPlan,
    rows: &[Row],
) -> LabResult<Vec<String>> {
    let mut spec = csv_preamble(config).into_bytes();
    plan.spectrum.write_csv(&mut spec)?;
    write_atomic(&dir.join("spectrum.csv"), &spec)?;
    write_atomic(
        &dir.join("spectrum.json"),
        serde_json::to_string_pretty(&plan.spectrum)?.as_bytes(),
    )?;

    let mut det = csv_preamble(config);
    det.push_str("order,k,determinant\n");
    let kr = config.k_range;
    let fine = kr.step / 8.0;
    let count = ((kr.max - kr.min) / fine).floor() as usize;
    for l in 0..=plan.spectrum.max_order {
        for i in 0..=count {
            let k = kr.min + fine * i as f64;
            let _ = writeln!(det, "{},{},{}", l, k, te_determinant(&plan.medium, l, k)?);
        }
    }
    write_atomic(&dir.join("determinant.csv"), det.as_bytes())?;

    let mut s = csv_preamble(config);
    s.push_str("level,h,order,root,role,k,rho,iterations,status\n");
    for r in rows {
        let m = &r.measures[0];
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.level,
            r.h,
            r.order,
            r.root.map(|x| x.to_string()).unwrap_or_default(),
            r.role,
            r.k,
            fmt_opt(m.rho),
            m.iterations,
            m.status
        );
    }
    write_atomic(&dir.join("radial.csv"), s.as_bytes())?;
    Ok(vec![
        "spectrum.csv".into(),
        "spectrum.json".into(),
        "determinant.csv".into(),
        "radial.csv".into(),
    ])
}

fn radial_summary(config: &ExperimentConfig, plan: &RadialPlan, rows: &[Row]) -> serde_json::Value {
    let mut levels = Vec::new();
    for (level, &h) in config.levels.iter().enumerate() {
        let mine: Vec<&Row> = rows.iter().filter(|r| r.level == level).collect();
        let rho = |role: &str, order: i64, root: usize| {
            mine.iter()
                .find(|r| r.role == role && r.order == order && r.root == Some(root))
                .and_then(|r| r.measures[0].rho)
        };
        let mut roots = Vec::new();
        for l in 0..=plan.spectrum.max_order {
            for (i, root) in plan.spectrum.roots_of_order(l).iter().enumerate() {
                let o = l as i64;
                let interior_min = mine
                    .iter()
                    .filter(|r| {
                        r.role == "interior" && r.order == o && (r.root == Some(i) || (i > 0 && r.root == Some(i - 1)))
                    })
                    .filter_map(|r| r.measures[0].rho)
                    .reduce(f64::min);
                roots.push(json!({
                    "order": l,
                    "index": i,
                    "k": root.k,
                    "rho_root": rho("root", o, i),
                    "rho_minus": rho("minus", o, i),
                    "rho_plus": rho("plus", o, i),
                    "rho_adjacent_interior_min": interior_min,
                }));
            }
        }
        let interior_min = mine
            .iter()
            .filter(|r| r.role == "interior")
            .filter_map(|r| r.measures[0].rho)
            .reduce(f64::min);
        levels.push(json!({ "level": level, "h": h, "roots": roots, "interior_min_rho": interior_min }));
    }
    let change = finest_change(config, rows, Some(&["minus", "plus", "interior"]));
    json!({
        "levels": levels,
        "finest_change_off_root": change,
        "converged": change.map(|c| c <= config.tolerances.convergence),
    })
}

/// `(density coefficients, direction angle)` for the stationary-phase ladder,
/// with `|φ| >= min_modulus` and `‖φ‖_{C¹} <= c1_bound` by construction.
pub fn random_densities(config: &ExperimentConfig) -> Vec<(FourierDensity<f64>, f64)> {
    let p = config.stationary.clone().unwrap_or_default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let m = p.max_order as i64;
    (0..p.densities)
        .map(|_| {
            let lead = rng.gen_range(p.min_modulus + 0.5..(p.c1_bound + p.min_modulus) / 2.0);
            let c0 = Cx::from_polar(lead, rng.gen_range(0.0..2.0 * std::f64::consts::PI));
            let mut coeffs: Vec<Cx<f64>> = (-m..=m)
                .map(|_| Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            coeffs[m as usize] = Cx::new(0.0, 0.0);
            let weight: f64 = (-m..=m)
                .zip(&coeffs)
                .map(|(j, c)| (1 + j.abs()) as f64 * c.norm())
                .sum();
            let room = (lead - p.min_modulus).min(p.c1_bound - lead) * rng.gen_range(0.3..0.9);
            let scale = if weight > 0.0 { room / weight } else { 0.0 };
            for c in coeffs.iter_mut() {
                *c *= scale;
            }
            coeffs[m as usize] = c0;
            let angle = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            (FourierDensity { min_order: -m, coeffs }, angle)
        })
        .collect()
}

/// `max |direct - approx|` over one period `2π/k` of `|z|` above `radius`.
pub fn stationary_envelope(density: &FourierDensity<f64>, k: f64, radius: f64, angle: f64) -> LabResult<f64> {
    let mut env = 0.0f64;
    for j in 0..32 {
        let r = radius + 2.0 * std::f64::consts::PI / k * j as f64 / 32.0;
        let z = [r * angle.cos(), r * angle.sin()];
        env = env.max(stationary_phase_farfield(density, k, &z)?.residual);
    }
    Ok(env)
}

fn run_stationary(config: &ExperimentConfig, dir: &Path) -> LabResult<(Vec<String>, serde_json::Value)> {
    let p = config.stationary.clone().unwrap_or_default();
    let dens = random_densities(config);
    let mut s = csv_preamble(config);
    s.push_str("density,k,residual,scaled\n");
    let mut per = Vec::new();
    for (i, (d, angle)) in dens.iter().enumerate() {
        let mut scaled = Vec::new();
        for &k in &p.ks {
            let res = stationary_envelope(d, k, p.radius, *angle)?;
            let sc = res * k.sqrt();
            let _ = writeln!(s, "{},{},{},{}", i, k, res, sc);
            scaled.push(sc);
        }
        per.push(json!({
            "density": i,
            "c1_norm": d.c1_norm(),
            "scaled": scaled,
            "strictly_decreasing": scaled.windows(2).all(|w| w[1] < w[0]),
        }));
    }
    write_atomic(&dir.join("stationary.csv"), s.as_bytes())?;
    let dj: Vec<serde_json::Value> = dens
        .iter()
        .map(|(d, a)| json!({ "min_order": d.min_order, "coeffs": d.coeffs.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(), "angle": a }))
        .collect();
    write_atomic(
        &dir.join("densities.json"),
        serde_json::to_string_pretty(&dj)?.as_bytes(),
    )?;
    let all = per.iter().all(|v| v["strictly_decreasing"] == json!(true));
    Ok((
        vec!["stationary.csv".into(), "densities.json".into()],
        json!({ "seed": config.seed, "densities": per, "all_strictly_decreasing": all }),
    ))
}

fn run_probe(config: &ExperimentConfig, dir: &Path) -> LabResult<(Vec<String>, serde_json::Value)> {
    let p = config.probe.clone().expect("validated");
    let reach = p.offsets.iter().cloned().fold(0.0, f64::max);
    let grid = Grid::covering_with_margin(&config.shape, config.levels[0], 2.0 * reach, config.budget.max_cells)?;
    let medium = rasterize_averaged(&config.shape, &config.contrast, &grid, config.tolerances.subsamples)?;
    let psi = DensityField::from_fn(&medium, source_density(&p.density, &config.shape, 1.0))?;
    let opts = ProbeOptions {
        max_cells: config.budget.max_cells,
    };
    let mut s = csv_preamble(config);
    s.push_str("point,eta,h,i,j,re,im\n");
    let mut per = Vec::new();
    for (pi, pt) in p.points.iter().enumerate() {
        let rep = symmetric_jump_probe(&psi, &pt.point, &pt.direction, &p.offsets, opts)?;
        let dn = pt.direction.iter().map(|c| c * c).sum::<f64>().sqrt();
        let e: Vec<f64> = pt.direction.iter().map(|c| c / dn).collect();
        let mut normal = Vec::new();
        for (ki, &eta) in rep.offsets.iter().enumerate() {
            let mut nn = Cx::new(0.0, 0.0);
            for i in 0..2 {
                for j in 0..2 {
                    let v = rep.jump(ki, i, j);
                    nn += v * e[i] * e[j];
                    let _ = writeln!(s, "{},{},{},{},{},{},{}", pi, eta, rep.spacings[ki], i, j, v.re, v.im);
                }
            }
            normal.push(nn.re);
        }
        per.push(json!({
            "point": pi,
            "fitted_sup": rep.fitted_sup,
            "fitted_constant": rep.fitted_constant,
            "diverging": rep.diverging,
            "directional_jump": normal,
        }));
    }
    write_atomic(&dir.join("jump_probe.csv"), s.as_bytes())?;
    let any = per.iter().any(|v| v["diverging"] == json!(true));
    Ok((
        vec!["jump_probe.csv".into()],
        json!({ "points": per, "any_diverging": any }),
    ))
}

/// Runs one experiment into `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> LabResult<RunOutcome> {
    config.validate()?;
    let dir = PathBuf::from(
        config
            .output_dir
            .clone()
            .ok_or_else(|| LabError::Validation("no output directory".into()))?,
    );
    fs::create_dir_all(&dir)?;
    let start = Instant::now();
    let nworkers = workers();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(nworkers)
        .build()
        .map_err(|e| LabError::Validation(format!("worker pool: {e}")))?;

    let mut run = RunInfo {
        workers: nworkers,
        ..RunInfo::default()
    };
    let mut truncated = None;
    let mut sweep = None;
    let (files, summary) = match config.kind {
        ExperimentKind::StationaryPhase => run_stationary(config, &dir)?,
        ExperimentKind::JumpProbe => run_probe(config, &dir)?,
        ExperimentKind::RadialNonscatter => {
            let (plan, templates) = radial_plan(config)?;
            let g = run_grid(config, &dir, &templates, &pool)?;
            let files = write_radial_outputs(config, &dir, &plan, &g.rows)?;
            run.rows_computed = g.computed;
            run.rows_reused = g.reused;
            run.rows_failed = g.rows.iter().filter(|r| r.failed()).count();
            truncated = g.truncated;
            (files, radial_summary(config, &plan, &g.rows))
        }
        ExperimentKind::Sweep | ExperimentKind::CornerScatter | ExperimentKind::NonradiatingSource => {
            let source = config.kind == ExperimentKind::NonradiatingSource;
            let templates: Vec<Template> = config
                .k_range
                .values()
                .into_iter()
                .map(|k| {
                    let work = if source {
                        Work::Source(config.sources.clone().expect("validated"))
                    } else {
                        Work::Scatter(incident_waves(config.incident.as_ref().expect("validated"), k)?)
                    };
                    Ok(Template {
                        k,
                        role: "grid",
                        order: -1,
                        root: None,
                        work,
                    })
                })
                .collect::<LabResult<_>>()?;
            let g = run_grid(config, &dir, &templates, &pool)?;
            let name = if source { "source.csv" } else { "sweep.csv" };
            write_rows_csv(config, &g.rows, &dir.join(name), source)?;
            run.rows_computed = g.computed;
            run.rows_reused = g.reused;
            run.rows_failed = g.rows.iter().filter(|r| r.failed()).count();
            truncated = g.truncated;
            let levels = level_summaries(config, &g.rows);
            let change = finest_change(config, &g.rows, None);
            let min_change = {
                let n = levels.len();
                match (
                    levels.get(n.wrapping_sub(2)).and_then(|l| l.min_rho),
                    levels.last().and_then(|l| l.min_rho),
                ) {
                    (Some(a), Some(b)) => Some((a - b).abs() / a.max(b)),
                    _ => None,
                }
            };
            let summary = json!({
                "levels": levels,
                "finest_change_max": change,
                "finest_change_min_rho": min_change,
                "converged": min_change.map(|c| c <= config.tolerances.convergence),
            });
            sweep = Some(SweepResult {
                rows: g.rows,
                levels,
                config_hash: config.hash(),
                wall_seconds: 0.0,
                truncated: truncated.is_some(),
            });
            (vec![name.to_string()], summary)
        }
    };
    if truncated.is_none() {
        let p = dir.join(PROGRESS_FILE);
        if p.exists() {
            fs::remove_file(p)?;
        }
    }
    run.wall_seconds = start.elapsed().as_secs_f64();
    if let Some(s) = sweep.as_mut() {
        s.wall_seconds = run.wall_seconds;
    }
    let mut manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        tool: "helmlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: config.kind.name().into(),
        seed: config.seed,
        config_hash: config.hash(),
        config: config.clone(),
        truncated: truncated.is_some(),
        truncation_reason: truncated,
        run,
        summary,
        files: Vec::new(),
    };
    manifest.record_files(&dir, &files)?;
    Ok(RunOutcome { dir, manifest, sweep })
}
