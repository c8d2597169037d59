//! Text formats for histograms, fixed points, flow fields, phase grids and
//! ensemble summaries.
//!
//! Floating-point columns are written with 17 significant digits and header
//! values with the shortest round-trip representation, so every reader
//! recovers the written values exactly and reruns are byte-identical.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{DimerError, Result};
use crate::flow::{FixedPoint, FlowGrid, PhaseCell, Stability};
use crate::fokker_planck::PdfGrid;
use crate::histogram::{bin_center, Backend, Histogram2D, HistogramMeta};
use crate::jump::EnsembleAverages;
use crate::params::SimParams;

pub const HISTOGRAM_COLUMNS: &str = "i,j,theta_l_center,theta_r_center,count,density";
pub const FIXED_POINT_COLUMNS: &str = "theta_l,theta_r,eig1_re,eig1_im,eig2_re,eig2_im,class";
pub const PHASE_COLUMNS: &str = "lambda1,lambda2,n_fixed,n_stable,phase";
pub const FLOW_COLUMNS: &str = "theta_l,theta_r,velocity_l,velocity_r";

const HEADER_KEYS: [&str; 9] = [
    "backend",
    "omega_s",
    "gamma1",
    "gamma2",
    "dt",
    "t_final",
    "n_traj",
    "master_seed",
    "n_bins",
];

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_meta<W: Write>(w: &mut W, meta: &HistogramMeta, n: usize) -> Result<()> {
    let p = &meta.params;
    writeln!(w, "# backend={}", meta.backend)?;
    writeln!(w, "# omega_s={}", p.omega_s)?;
    writeln!(w, "# gamma1={}", p.gamma1)?;
    writeln!(w, "# gamma2={}", p.gamma2)?;
    writeln!(w, "# dt={}", p.dt)?;
    writeln!(w, "# t_final={}", p.t_final)?;
    writeln!(w, "# n_traj={}", p.n_traj)?;
    writeln!(w, "# master_seed={}", p.master_seed)?;
    writeln!(w, "# n_bins={n}")?;
    Ok(())
}

pub fn write_histogram<W: Write>(w: &mut W, h: &Histogram2D) -> Result<()> {
    let n = h.n();
    write_meta(w, &h.meta, n)?;
    writeln!(w, "{HISTOGRAM_COLUMNS}")?;
    let dens = h.densities();
    for i in 0..n {
        for j in 0..n {
            writeln!(
                w,
                "{i},{j},{},{},{},{}",
                num(bin_center(i, n)),
                num(bin_center(j, n)),
                h.count(i, j),
                num(dens[i * n + j])
            )?;
        }
    }
    Ok(())
}

/// Writes a solver density in the histogram layout with an empty count column.
pub fn write_density_grid<W: Write>(w: &mut W, g: &PdfGrid, meta: &HistogramMeta) -> Result<()> {
    let n = g.n;
    write_meta(w, meta, n)?;
    writeln!(w, "{HISTOGRAM_COLUMNS}")?;
    for i in 0..n {
        for j in 0..n {
            writeln!(
                w,
                "{i},{j},{},{},,{}",
                num(bin_center(i, n)),
                num(bin_center(j, n)),
                num(g.density(i, j))
            )?;
        }
    }
    Ok(())
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> DimerError {
    DimerError::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, column: usize, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(line, column, format!("invalid {what}: {s:?}")))
}

struct HistogramFile {
    meta: HistogramMeta,
    n: usize,
    counts: Vec<Option<u64>>,
    densities: Vec<f64>,
}

fn parse_histogram_file<R: Read>(r: R) -> Result<HistogramFile> {
    let mut header: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut rows = Vec::new();
    for (k, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        if let Some(rest) = line.strip_prefix('#') {
            let (key, value) = rest
                .split_once('=')
                .ok_or_else(|| parse_err(lineno, 1, format!("header line without '=': {line:?}")))?;
            header.insert(key.trim().to_string(), (lineno, value.trim().to_string()));
        } else if line.trim().is_empty() || line.trim() == HISTOGRAM_COLUMNS {
            continue;
        } else {
            rows.push((lineno, line));
        }
    }
    for key in HEADER_KEYS {
        if !header.contains_key(key) {
            return Err(parse_err(0, 0, format!("missing header key {key}")));
        }
    }
    let get = |key: &str| &header[key];
    let float = |key: &str| -> Result<f64> {
        let (line, v) = get(key);
        v.parse()
            .map_err(|_| parse_err(*line, 1, format!("invalid value for key {key}: {v:?}")))
    };
    let int = |key: &str| -> Result<u64> {
        let (line, v) = get(key);
        v.parse()
            .map_err(|_| parse_err(*line, 1, format!("invalid value for key {key}: {v:?}")))
    };
    let (bline, bval) = get("backend");
    let backend = Backend::parse(bval)
        .ok_or_else(|| parse_err(*bline, 1, format!("invalid value for key backend: {bval:?}")))?;
    let params = SimParams {
        omega_s: float("omega_s")?,
        gamma1: float("gamma1")?,
        gamma2: float("gamma2")?,
        dt: float("dt")?,
        t_final: float("t_final")?,
        n_traj: int("n_traj")?,
        master_seed: int("master_seed")?,
    };
    let n = int("n_bins")? as usize;
    if n == 0 {
        return Err(parse_err(get("n_bins").0, 1, "invalid value for key n_bins: 0"));
    }
    if rows.len() != n * n {
        return Err(parse_err(0, 0, format!("expected {} rows, found {}", n * n, rows.len())));
    }
    let mut counts = Vec::with_capacity(n * n);
    let mut densities = Vec::with_capacity(n * n);
    for (k, (lineno, line)) in rows.iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(parse_err(*lineno, fields.len().min(6), format!("expected 6 fields, found {}", fields.len())));
        }
        let i: usize = parse_field(fields[0], *lineno, 1, "row index")?;
        let j: usize = parse_field(fields[1], *lineno, 2, "column index")?;
        if (i, j) != (k / n, k % n) {
            return Err(parse_err(*lineno, 1, format!("bin ({i},{j}) out of row-major order")));
        }
        let _: f64 = parse_field(fields[2], *lineno, 3, "theta_l_center")?;
        let _: f64 = parse_field(fields[3], *lineno, 4, "theta_r_center")?;
        counts.push(if fields[4].trim().is_empty() {
            None
        } else {
            Some(parse_field(fields[4], *lineno, 5, "count")?)
        });
        densities.push(parse_field(fields[5], *lineno, 6, "density")?);
    }
    Ok(HistogramFile {
        meta: HistogramMeta { backend, params },
        n,
        counts,
        densities,
    })
}

pub fn read_histogram<R: Read>(r: R) -> Result<Histogram2D> {
    let f = parse_histogram_file(r)?;
    let counts = f
        .counts
        .iter()
        .enumerate()
        .map(|(k, c)| c.ok_or_else(|| parse_err(0, 5, format!("bin {k} has no count (density-only file?)"))))
        .collect::<Result<Vec<_>>>()?;
    Histogram2D::from_counts(f.n, counts, f.meta)
}

/// Reads the density column of any histogram-format file.
pub fn read_density_grid<R: Read>(r: R) -> Result<(PdfGrid, HistogramMeta)> {
    let f = parse_histogram_file(r)?;
    Ok((PdfGrid::from_densities(f.n, f.densities)?, f.meta))
}

pub fn write_fixed_points<W: Write>(w: &mut W, lambda1: f64, lambda2: f64, points: &[FixedPoint]) -> Result<()> {
    writeln!(w, "# lambda1={lambda1}")?;
    writeln!(w, "# lambda2={lambda2}")?;
    writeln!(w, "{FIXED_POINT_COLUMNS}")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            num(p.theta.theta_l),
            num(p.theta.theta_r),
            num(p.eig1.re),
            num(p.eig1.im),
            num(p.eig2.re),
            num(p.eig2.im),
            p.class
        )?;
    }
    Ok(())
}

pub fn read_fixed_points<R: Read>(r: R) -> Result<Vec<FixedPoint>> {
    let mut out = Vec::new();
    for (k, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        if line.starts_with('#') || line.trim().is_empty() || line.trim() == FIXED_POINT_COLUMNS {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(parse_err(lineno, f.len().min(7), format!("expected 7 fields, found {}", f.len())));
        }
        let x = |c: usize| parse_field::<f64>(f[c], lineno, c + 1, "number");
        let class = Stability::parse(f[6].trim())
            .ok_or_else(|| parse_err(lineno, 7, format!("unknown class {:?}", f[6])))?;
        out.push(FixedPoint {
            theta: crate::gutzwiller::AngleState {
                theta_l: x(0)?,
                theta_r: x(1)?,
            },
            eig1: num_complex::Complex64::new(x(2)?, x(3)?),
            eig2: num_complex::Complex64::new(x(4)?, x(5)?),
            class,
        });
    }
    Ok(out)
}

pub fn write_flow_field<W: Write>(w: &mut W, grid: &FlowGrid) -> Result<()> {
    writeln!(w, "# lambda1={}", grid.lambda1)?;
    writeln!(w, "# lambda2={}", grid.lambda2)?;
    writeln!(w, "# n={}", grid.n)?;
    writeln!(w, "{FLOW_COLUMNS}")?;
    for s in &grid.samples {
        writeln!(
            w,
            "{},{},{},{}",
            num(s.theta.theta_l),
            num(s.theta.theta_r),
            num(s.velocity_l),
            num(s.velocity_r)
        )?;
    }
    Ok(())
}

pub fn write_phase_grid<W: Write>(w: &mut W, cells: &[PhaseCell]) -> Result<()> {
    writeln!(w, "{PHASE_COLUMNS}")?;
    for c in cells {
        writeln!(
            w,
            "{},{},{},{},{}",
            c.lambda1, c.lambda2, c.n_fixed, c.n_stable, c.phase
        )?;
    }
    Ok(())
}

pub fn read_phase_grid<R: Read>(r: R) -> Result<Vec<PhaseCell>> {
    let mut out = Vec::new();
    for (k, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        if line.trim().is_empty() || line.trim() == PHASE_COLUMNS {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(parse_err(lineno, f.len().min(5), format!("expected 5 fields, found {}", f.len())));
        }
        out.push(PhaseCell {
            lambda1: parse_field(f[0], lineno, 1, "lambda1")?,
            lambda2: parse_field(f[1], lineno, 2, "lambda2")?,
            n_fixed: parse_field(f[2], lineno, 3, "n_fixed")?,
            n_stable: parse_field(f[3], lineno, 4, "n_stable")?,
            phase: crate::flow::CellPhase::parse(f[4].trim())
                .ok_or_else(|| parse_err(lineno, 5, format!("unknown phase {:?}", f[4])))?,
        });
    }
    Ok(out)
}

/// `key = value` lines; absent fidelity statistics are written as `nan`.
pub fn write_ensemble_summary<W: Write>(
    w: &mut W,
    backend: Backend,
    params: &SimParams,
    avg: &EnsembleAverages,
) -> Result<()> {
    let opt = |x: Option<f64>| x.map_or_else(|| "nan".to_string(), num);
    writeln!(w, "backend = \"{backend}\"")?;
    writeln!(w, "omega_s = {}", params.omega_s)?;
    writeln!(w, "gamma1 = {}", params.gamma1)?;
    writeln!(w, "gamma2 = {}", params.gamma2)?;
    writeln!(w, "dt = {}", params.dt)?;
    writeln!(w, "t_final = {}", params.t_final)?;
    writeln!(w, "n_traj = {}", params.n_traj)?;
    writeln!(w, "master_seed = {}", params.master_seed)?;
    writeln!(w, "n_samples = {}", avg.n_samples)?;
    writeln!(w, "n_excluded = {}", avg.n_excluded)?;
    writeln!(w, "fidelity_mean = {}", opt(avg.fidelity_mean))?;
    writeln!(w, "fidelity_se = {}", opt(avg.fidelity_se))?;
    writeln!(w, "entropy_mean = {}", num(avg.entropy_mean))?;
    writeln!(w, "entropy_se = {}", num(avg.entropy_se))?;
    let t = avg.readout_totals;
    writeln!(w, "readout_totals = [{}, {}, {}, {}]", t[0], t[1], t[2], t[3])?;
    Ok(())
}

/// Creates `path` and hands a buffered writer to `f`.
pub fn write_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let file = File::create(path).map_err(|e| DimerError::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(|e| DimerError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

pub fn open_file(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| DimerError::Io(format!("{}: {e}", path.display())))
}
