//! Gnuplot scripts and data files regenerated from a finished run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{LabError, LabResult};
use crate::manifest::{write_atomic, Manifest};

pub const PLOT_DIR: &str = "plots";

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> LabResult<Self> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| LabError::Validation(format!("{} is empty", path.display())))?
            .split(',')
            .map(String::from)
            .collect();
        let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
        Ok(Table { header, rows })
    }

    fn col(&self, name: &str) -> LabResult<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LabError::Validation(format!("missing column {name}")))
    }
}

struct Out {
    files: Vec<(String, String)>,
}

impl Out {
    fn add(&mut self, name: String, body: String) {
        self.files.push((format!("{PLOT_DIR}/{name}"), body));
    }
}

/// `value` against `k`, one data block per grid level, one file per wave.
fn per_wave(out: &mut Out, t: &Table, value: &str, label: &str) -> LabResult<()> {
    let (lc, kc, wc, vc) = (
        t.col("level")?,
        t.col("k")?,
        t.col(if value == "ratio" { "source" } else { "wave" })?,
        t.col(value)?,
    );
    let mut by_wave: BTreeMap<usize, BTreeMap<usize, Vec<(String, String)>>> = BTreeMap::new();
    for r in &t.rows {
        if r[vc].is_empty() {
            continue;
        }
        let w = r[wc].parse().unwrap_or(0);
        let l = r[lc].parse().unwrap_or(0);
        by_wave
            .entry(w)
            .or_default()
            .entry(l)
            .or_default()
            .push((r[kc].clone(), r[vc].clone()));
    }
    for (w, levels) in by_wave {
        let mut dat = String::new();
        let mut plot = Vec::new();
        for (i, (l, pts)) in levels.iter().enumerate() {
            if i > 0 {
                dat.push_str("\n\n");
            }
            let _ = writeln!(dat, "# level {l}");
            for (k, v) in pts {
                let _ = writeln!(dat, "{k} {v}");
            }
            plot.push(format!("'{label}_wave{w}.dat' index {i} with lines title 'level {l}'"));
        }
        let gp = format!(
            "set xlabel 'k'\nset ylabel '{value}'\nset logscale y\nset terminal pngcairo\nset output '{label}_wave{w}.png'\nplot {}\n",
            plot.join(", \\\n     ")
        );
        out.add(format!("{label}_wave{w}.dat"), dat);
        out.add(format!("{label}_wave{w}.gp"), gp);
    }
    Ok(())
}

fn radial(out: &mut Out, dir: &Path) -> LabResult<()> {
    let det = Table::read(&dir.join("determinant.csv"))?;
    let spec = Table::read(&dir.join("spectrum.csv"))?;
    let (oc, kc, dc) = (det.col("order")?, det.col("k")?, det.col("determinant")?);
    let mut orders: BTreeMap<String, String> = BTreeMap::new();
    for r in &det.rows {
        let _ = writeln!(orders.entry(r[oc].clone()).or_default(), "{} {}", r[kc], r[dc]);
    }
    let (so, sk) = (spec.col("order")?, spec.col("k")?);
    for (o, body) in orders {
        let mut roots = String::new();
        for r in spec.rows.iter().filter(|r| r[so] == o) {
            let _ = writeln!(roots, "{} 0", r[sk]);
        }
        let gp = format!(
            "set xlabel 'k'\nset ylabel 'determinant'\nset xzeroaxis\nset terminal pngcairo\nset output 'determinant_order{o}.png'\n\
             plot 'determinant_order{o}.dat' with lines title 'order {o}', \\\n     'roots_order{o}.dat' with points pt 7 title 'roots'\n"
        );
        out.add(format!("determinant_order{o}.dat"), body);
        out.add(format!("roots_order{o}.dat"), roots);
        out.add(format!("determinant_order{o}.gp"), gp);
    }
    let rad = Table::read(&dir.join("radial.csv"))?;
    let (lc, rk, rr, ro) = (rad.col("level")?, rad.col("k")?, rad.col("rho")?, rad.col("order")?);
    let mut blocks: BTreeMap<(String, String), Vec<(f64, String)>> = BTreeMap::new();
    for r in rad.rows.iter().filter(|r| !r[rr].is_empty()) {
        blocks
            .entry((r[ro].clone(), r[lc].clone()))
            .or_default()
            .push((r[rk].parse().unwrap_or(0.0), r[rr].clone()));
    }
    let mut dat = String::new();
    let mut plot = Vec::new();
    for (i, ((o, l), mut pts)) in blocks.into_iter().enumerate() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if i > 0 {
            dat.push_str("\n\n");
        }
        let _ = writeln!(dat, "# order {o} level {l}");
        for (k, v) in pts {
            let _ = writeln!(dat, "{k} {v}");
        }
        plot.push(format!(
            "'radial_rho.dat' index {i} with linespoints title 'order {o}, level {l}'"
        ));
    }
    out.add("radial_rho.dat".into(), dat);
    out.add(
        "radial_rho.gp".into(),
        format!(
            "set xlabel 'k'\nset ylabel 'rho'\nset logscale y\nset terminal pngcairo\nset output 'radial_rho.png'\nplot {}\n",
            plot.join(", \\\n     ")
        ),
    );
    Ok(())
}

fn probe(out: &mut Out, dir: &Path) -> LabResult<()> {
    let t = Table::read(&dir.join("jump_probe.csv"))?;
    let (pc, ec, ic, jc, rc, mc) = (
        t.col("point")?,
        t.col("eta")?,
        t.col("i")?,
        t.col("j")?,
        t.col("re")?,
        t.col("im")?,
    );
    let mut by_point: BTreeMap<String, BTreeMap<String, [f64; 4]>> = BTreeMap::new();
    for r in &t.rows {
        let slot = by_point
            .entry(r[pc].clone())
            .or_default()
            .entry(r[ec].clone())
            .or_insert([0.0; 4]);
        let i: usize = r[ic].parse().unwrap_or(0);
        let j: usize = r[jc].parse().unwrap_or(0);
        let re: f64 = r[rc].parse().unwrap_or(0.0);
        let im: f64 = r[mc].parse().unwrap_or(0.0);
        slot[2 * i.min(1) + j.min(1)] = re.hypot(im);
    }
    for (p, rows) in by_point {
        let mut dat = String::from("# eta |d11| |d12| |d21| |d22|\n");
        for (eta, v) in rows {
            let _ = writeln!(dat, "{eta} {} {} {} {}", v[0], v[1], v[2], v[3]);
        }
        let gp = format!(
            "set xlabel 'eta'\nset ylabel '|jump|'\nset logscale xy\nset terminal pngcairo\nset output 'jump_point{p}.png'\n\
             plot for [c=2:5] 'jump_point{p}.dat' using 1:c with linespoints title columnheader(c)\n"
        );
        out.add(format!("jump_point{p}.dat"), dat);
        out.add(format!("jump_point{p}.gp"), gp);
    }
    Ok(())
}

fn stationary(out: &mut Out, dir: &Path) -> LabResult<()> {
    let t = Table::read(&dir.join("stationary.csv"))?;
    let (dc, kc, sc) = (t.col("density")?, t.col("k")?, t.col("scaled")?);
    let mut by: BTreeMap<usize, Vec<(String, String)>> = BTreeMap::new();
    for r in &t.rows {
        by.entry(r[dc].parse().unwrap_or(0))
            .or_default()
            .push((r[kc].clone(), r[sc].clone()));
    }
    let mut dat = String::new();
    let mut plot = Vec::new();
    for (i, (d, pts)) in by.into_iter().enumerate() {
        if i > 0 {
            dat.push_str("\n\n");
        }
        let _ = writeln!(dat, "# density {d}");
        for (k, v) in pts {
            let _ = writeln!(dat, "{k} {v}");
        }
        plot.push(format!(
            "'stationary.dat' index {i} with linespoints title 'density {d}'"
        ));
    }
    out.add("stationary.dat".into(), dat);
    out.add(
        "stationary.gp".into(),
        format!(
            "set xlabel 'k'\nset ylabel 'sqrt(k) * residual'\nset logscale xy\nset terminal pngcairo\nset output 'stationary.png'\nplot {}\n",
            plot.join(", \\\n     ")
        ),
    );
    Ok(())
}

/// Writes scripts and data under `dir/plots` and lists them in the manifest.
/// Returns the new file names.
pub fn emit_plots(dir: &Path) -> LabResult<Vec<String>> {
    let mut manifest = Manifest::load(dir)?;
    let mut out = Out { files: Vec::new() };
    match manifest.kind.as_str() {
        "sweep" | "corner_scatter" => per_wave(&mut out, &Table::read(&dir.join("sweep.csv"))?, "rho", "rho_vs_k")?,
        "nonradiating_source" => per_wave(&mut out, &Table::read(&dir.join("source.csv"))?, "ratio", "ratio_vs_k")?,
        "radial_nonscatter" => radial(&mut out, dir)?,
        "jump_probe" => probe(&mut out, dir)?,
        "stationary_phase" => stationary(&mut out, dir)?,
        other => return Err(LabError::Validation(format!("unknown experiment kind {other}"))),
    }
    fs::create_dir_all(dir.join(PLOT_DIR))?;
    let mut names = Vec::new();
    for (name, body) in out.files {
        write_atomic(&dir.join(&name), body.as_bytes())?;
        names.push(name);
    }
    manifest.record_files(dir, &names)?;
    Ok(names)
}
