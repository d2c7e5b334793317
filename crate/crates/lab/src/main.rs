use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use helmscat_lab::config::{ExperimentConfig, ExperimentKind};
use helmscat_lab::{calibrate_floor, emit_plots, presets, run_experiment, LabError, LabResult, RunOutcome};

#[derive(Parser)]
#[command(
    name = "helmlab",
    version,
    about = "Run scattering experiments and collect their outputs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Wavenumber sweep: scattering, corner, source or stationary-phase runs.
    Sweep(RunArgs),
    /// Second-derivative jumps across boundary points.
    Probe(RunArgs),
    /// Transmission eigenvalues of a disk and the scattering at them.
    Radial(RunArgs),
    /// Sweep plus a scattering floor from grid refinement.
    Calibrate(RunArgs),
    /// Gnuplot scripts for a finished run.
    Plots {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Print a preset config as JSON.
    Preset { name: String },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// One of the built-in configs, see `helmlab preset --help`.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid spacings, coarse to fine, comma separated.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_cells: Option<usize>,
    #[arg(long)]
    max_solves: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> LabResult<ExperimentConfig> {
        let mut c = match (&self.config, &self.preset) {
            (Some(p), _) => ExperimentConfig::load(p)?,
            (None, Some(name)) => presets::by_name(name).ok_or_else(|| {
                LabError::Validation(format!("unknown preset {name}; known: {}", presets::NAMES.join(", ")))
            })?,
            (None, None) => unreachable!("clap requires one"),
        };
        if let Some(l) = &self.levels {
            c.levels = l.clone();
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(m) = self.max_cells {
            c.budget.max_cells = m;
        }
        if self.max_solves.is_some() {
            c.budget.max_solves = self.max_solves;
        }
        if let Some(o) = &self.out {
            c.output_dir = Some(o.display().to_string());
        }
        if c.output_dir.is_none() {
            c.output_dir = Some(format!("runs/{}-{}", c.kind.name(), &c.hash()[..12]));
        }
        c.validate()?;
        Ok(c)
    }
}

fn expect_kind(c: &ExperimentConfig, allowed: &[ExperimentKind], cmd: &str) -> LabResult<()> {
    if allowed.contains(&c.kind) {
        Ok(())
    } else {
        Err(LabError::Validation(format!(
            "`{cmd}` cannot run a {} experiment",
            c.kind.name()
        )))
    }
}

fn report(out: &RunOutcome) {
    let m = &out.manifest;
    println!("{} -> {}", m.kind, out.dir.display());
    println!(
        "rows: {} computed, {} reused, {} failed; {:.1} s on {} workers",
        m.run.rows_computed, m.run.rows_reused, m.run.rows_failed, m.run.wall_seconds, m.run.workers
    );
    if let Some(r) = &m.truncation_reason {
        println!("truncated: {r}");
    }
    println!("{}", serde_json::to_string_pretty(&m.summary).unwrap_or_default());
}

fn run(cli: Cli) -> LabResult<i32> {
    use ExperimentKind::*;
    let outcome = match cli.command {
        Command::Sweep(a) => {
            let c = a.resolve()?;
            expect_kind(
                &c,
                &[Sweep, CornerScatter, NonradiatingSource, StationaryPhase],
                "sweep",
            )?;
            run_experiment(&c)?
        }
        Command::Probe(a) => {
            let c = a.resolve()?;
            expect_kind(&c, &[JumpProbe], "probe")?;
            run_experiment(&c)?
        }
        Command::Radial(a) => {
            let c = a.resolve()?;
            expect_kind(&c, &[RadialNonscatter], "radial")?;
            run_experiment(&c)?
        }
        Command::Calibrate(a) => {
            let c = a.resolve()?;
            let (out, cal) = calibrate_floor(&c)?;
            report(&out);
            println!("floor rho_min = {} ({})", cal.rho_min, cal.status);
            return Ok(out.exit_code());
        }
        Command::Plots { dir } => {
            for f in emit_plots(&dir)? {
                println!("{}", dir.join(f).display());
            }
            return Ok(0);
        }
        Command::Preset { name } => {
            let c = presets::by_name(&name).ok_or_else(|| {
                LabError::Validation(format!("unknown preset {name}; known: {}", presets::NAMES.join(", ")))
            })?;
            println!("{}", serde_json::to_string_pretty(&c)?);
            return Ok(0);
        }
    };
    report(&outcome);
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
