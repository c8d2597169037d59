//! Finite-volume solver for the master equation of the Gutzwiller angle PDF:
//! upwind transport along the no-click flow, click depletion, and
//! reinjection on the `θ = π` lines.
//!
//! Mass sent to `(π, π)` by joint clicks rides the invariant diagonal
//! `θ_L = θ_R` as a line measure. It is carried separately in
//! [`PdfGrid::line`] and advected along the diagonal, so the 2-D upwind
//! stencil never smears it sideways.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{DimerError, Result};
use crate::gutzwiller::{drift_rates, AngleState};
use crate::histogram::{bin_center, bin_width, DensityGrid, ProbabilityMass};
use crate::params::SimParams;

/// Smallest grid accepted by [`fp_stationary`].
pub const MIN_STATIONARY_GRID: usize = 36;

/// Cell-averaged density on the `n × n` torus, row index along `θ_L`, plus a
/// 1-D density on the diagonal cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PdfGrid {
    pub n: usize,
    pub bulk: Vec<f64>,
    /// Mass per unit `θ` concentrated on `θ_L = θ_R`, one entry per diagonal cell.
    pub line: Vec<f64>,
    pub time: f64,
}

impl PdfGrid {
    pub fn from_densities(n: usize, bulk: Vec<f64>) -> Result<Self> {
        if n == 0 || bulk.len() != n * n {
            return Err(DimerError::ShapeMismatch(format!("{} cells for an {n}x{n} grid", bulk.len())));
        }
        if bulk.iter().any(|&x| !(x >= 0.0)) {
            return Err(DimerError::InvalidParameter("densities must be nonnegative".into()));
        }
        Ok(Self {
            n,
            bulk,
            line: vec![0.0; n],
            time: 0.0,
        })
    }

    /// All mass in the cell containing `(π, π)`.
    pub fn pointer_delta(n: usize) -> Self {
        let mut line = vec![0.0; n];
        line[n - 1] = 1.0 / bin_width(n);
        Self {
            n,
            bulk: vec![0.0; n * n],
            line,
            time: 0.0,
        }
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            n,
            bulk: vec![1.0 / (4.0 * PI * PI); n * n],
            line: vec![0.0; n],
            time: 0.0,
        }
    }

    pub fn cell_width(&self) -> f64 {
        bin_width(self.n)
    }

    /// Cell average including the diagonal line.
    pub fn density(&self, i: usize, j: usize) -> f64 {
        let b = self.bulk[i * self.n + j];
        if i == j {
            b + self.line[i] / self.cell_width()
        } else {
            b
        }
    }

    /// `Σ bulk Δθ² + Σ line Δθ`.
    pub fn mass(&self) -> f64 {
        let w = self.cell_width();
        self.bulk.iter().sum::<f64>() * w * w + self.line.iter().sum::<f64>() * w
    }

    pub fn transposed(&self) -> PdfGrid {
        let n = self.n;
        PdfGrid {
            n,
            bulk: (0..n * n).map(|k| self.bulk[(k % n) * n + k / n]).collect(),
            line: self.line.clone(),
            time: self.time,
        }
    }

    /// Averages `factor × factor` blocks onto an `n / factor` grid.
    pub fn coarsen(&self, factor: usize) -> Result<PdfGrid> {
        if factor == 0 || !self.n.is_multiple_of(factor) {
            return Err(DimerError::ShapeMismatch(format!("{} is not divisible by {factor}", self.n)));
        }
        let m = self.n / factor;
        let mut bulk = vec![0.0; m * m];
        for i in 0..self.n {
            for j in 0..self.n {
                bulk[(i / factor) * m + j / factor] += self.bulk[i * self.n + j];
            }
        }
        let area = (factor * factor) as f64;
        bulk.iter_mut().for_each(|x| *x /= area);
        let mut line = vec![0.0; m];
        for (k, x) in self.line.iter().enumerate() {
            line[k / factor] += x / factor as f64;
        }
        Ok(PdfGrid {
            n: m,
            bulk,
            line,
            time: self.time,
        })
    }

    pub fn to_density_grid(&self) -> DensityGrid {
        DensityGrid {
            n: self.n,
            masses: self.masses(),
        }
    }
}

impl ProbabilityMass for PdfGrid {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn masses(&self) -> Vec<f64> {
        let n = self.n;
        let raw: Vec<f64> = (0..n * n).map(|k| self.density(k / n, k % n)).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|x| x / total).collect()
    }
}

/// Mass moved by the click substeps of one step, per channel.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClickBookkeeping {
    pub removed: [f64; 3],
    pub deposited: [f64; 3],
}

/// Face velocities and click rates for fixed parameters and grid.
#[derive(Debug, Clone)]
pub struct FpOperator {
    n: usize,
    width: f64,
    /// `-Ω_L` on the face at `θ_L = -π + iΔθ`, row center `θ_R`.
    vel_l: Vec<f64>,
    /// `-Ω_R` on the face at `θ_R = -π + jΔθ`, column center `θ_L`.
    vel_r: Vec<f64>,
    /// `-Ω_L(φ, φ)` at the diagonal face `φ = -π + kΔθ`.
    vel_line: Vec<f64>,
    rates: Vec<[f64; 3]>,
    line_rates: Vec<[f64; 3]>,
    max_speed: f64,
}

fn upwind_1d(rho: &[f64], vel: &[f64], c: f64) -> Vec<f64> {
    let n = rho.len();
    let flux: Vec<f64> = (0..n)
        .map(|k| vel[k] * if vel[k] > 0.0 { rho[(k + n - 1) % n] } else { rho[k] })
        .collect();
    (0..n).map(|k| rho[k] + c * (flux[k] - flux[(k + 1) % n])).collect()
}

impl FpOperator {
    pub fn new(params: &SimParams, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(DimerError::InvalidParameter(format!("grid needs n >= 2, got {n}")));
        }
        params.validate()?;
        let (g1, g2, om) = (params.gamma1, params.gamma2, params.omega_s);
        let width = bin_width(n);
        let face = |k: usize| -PI + k as f64 * width;
        let h = |k: usize| (bin_center(k, n) / 2.0).sin().powi(2);
        let mut vel_l = vec![0.0; n * n];
        let mut vel_r = vec![0.0; n * n];
        let mut rates = vec![[0.0; 3]; n * n];
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                vel_l[k] = -drift_rates(AngleState::new(face(i), bin_center(j, n)), g1, g2, om).omega_l;
                vel_r[k] = -drift_rates(AngleState::new(bin_center(i, n), face(j)), g1, g2, om).omega_r;
                rates[k] = [g1 * h(i), g1 * h(j), g2 * h(i) * h(j)];
            }
        }
        let vel_line: Vec<f64> = (0..n)
            .map(|k| -drift_rates(AngleState::new(face(k), face(k)), g1, g2, om).omega_l)
            .collect();
        let line_rates = (0..n).map(|k| [g1 * h(k), g1 * h(k), g2 * h(k) * h(k)]).collect();
        let max_speed = vel_l
            .iter()
            .chain(&vel_r)
            .chain(&vel_line)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self {
            n,
            width,
            vel_l,
            vel_r,
            vel_line,
            rates,
            line_rates,
            max_speed,
        })
    }

    /// Largest stable step `0.5 Δθ / max|Ω|`; infinite without drift.
    pub fn cfl_limit(&self) -> f64 {
        if self.max_speed > 0.0 {
            0.5 * self.width / self.max_speed
        } else {
            f64::INFINITY
        }
    }

    fn advect(&self, bulk: &[f64], dt: f64) -> Vec<f64> {
        let n = self.n;
        let flux = |vel: &[f64], donor: &(dyn Fn(usize, usize) -> usize + Sync)| -> Vec<f64> {
            (0..n * n)
                .into_par_iter()
                .map(|k| {
                    let v = vel[k];
                    let (i, j) = (k / n, k % n);
                    v * if v > 0.0 { bulk[donor(i, j)] } else { bulk[k] }
                })
                .collect()
        };
        let fl = flux(&self.vel_l, &|i, j| ((i + n - 1) % n) * n + j);
        let fr = flux(&self.vel_r, &|i, j| i * n + (j + n - 1) % n);
        let c = dt / self.width;
        let mut out = vec![0.0; n * n];
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let up = ((i + 1) % n) * n;
            for (j, cell) in row.iter_mut().enumerate() {
                let k = i * n + j;
                let jn = i * n + (j + 1) % n;
                *cell = bulk[k] + c * ((fl[k] - fl[up + j]) + (fr[k] - fr[jn]));
            }
        });
        out
    }

    /// Exact exponential loss followed by reinjection on the pointer lines.
    /// Joint clicks land on the diagonal line at `(π, π)`.
    fn click(&self, bulk: &mut [f64], line: &mut [f64], dt: f64) -> ClickBookkeeping {
        let n = self.n;
        let w = self.width;
        let area = w * w;
        let split = |rho: &mut f64, r: [f64; 3]| -> Option<[f64; 3]> {
            let total = r[0] + r[1] + r[2];
            if total <= 0.0 || *rho == 0.0 {
                return None;
            }
            let lost = *rho * -(-total * dt).exp_m1();
            *rho -= lost;
            Some([lost * r[0] / total, lost * r[1] / total, lost * r[2] / total])
        };
        // Masses, not densities, from here on.
        let mut to_row = vec![0.0; n];
        let mut to_col = vec![0.0; n];
        let mut to_corner = 0.0;
        let mut removed = [0.0; 3];
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                if let Some(parts) = split(&mut bulk[k], self.rates[k]) {
                    (0..3).for_each(|c| removed[c] += parts[c] * area);
                    to_row[j] += parts[0] * area;
                    to_col[i] += parts[1] * area;
                    to_corner += parts[2] * area;
                }
            }
        }
        for k in 0..n {
            if let Some(parts) = split(&mut line[k], self.line_rates[k]) {
                (0..3).for_each(|c| removed[c] += parts[c] * w);
                to_row[k] += parts[0] * w;
                to_col[k] += parts[1] * w;
                to_corner += parts[2] * w;
            }
        }
        for k in 0..n {
            bulk[(n - 1) * n + k] += to_row[k] / area;
            bulk[k * n + n - 1] += to_col[k] / area;
        }
        line[n - 1] += to_corner / w;
        ClickBookkeeping {
            removed,
            deposited: [to_row.iter().sum(), to_col.iter().sum(), to_corner],
        }
    }

    /// Advect, decay, deposit; returns the new grid and the click bookkeeping.
    pub fn step(&self, p: &PdfGrid, dt: f64) -> Result<(PdfGrid, ClickBookkeeping)> {
        if p.n != self.n || p.line.len() != self.n {
            return Err(DimerError::ShapeMismatch(format!("grid {} vs operator {}", p.n, self.n)));
        }
        let limit = self.cfl_limit();
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(DimerError::Cfl { dt, limit });
        }
        let mut bulk = self.advect(&p.bulk, dt);
        let mut line = upwind_1d(&p.line, &self.vel_line, dt / self.width);
        let book = self.click(&mut bulk, &mut line, dt);
        Ok((
            PdfGrid {
                n: self.n,
                bulk,
                line,
                time: p.time + dt,
            },
            book,
        ))
    }
}

/// One split step of size `dt_fp`.
pub fn fp_step(p: &PdfGrid, params: &SimParams, dt_fp: f64) -> Result<PdfGrid> {
    FpOperator::new(params, p.n)?.step(p, dt_fp).map(|(g, _)| g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopCriterion {
    /// Max cell-wise change per unit time fell below the tolerance.
    Converged,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpStationary {
    pub grid: PdfGrid,
    pub criterion: StopCriterion,
    pub steps: u64,
    pub dt_fp: f64,
    /// Last measured max cell-wise `|Δρ| / dt`.
    pub residual: f64,
    /// Largest `|mass - 1|` seen during the integration.
    pub max_mass_error: f64,
}

/// Largest cell-wise change of the cell-averaged density.
fn max_change(a: &PdfGrid, b: &PdfGrid) -> f64 {
    let n = a.n;
    (0..n * n).fold(0.0f64, |m, k| m.max((a.density(k / n, k % n) - b.density(k / n, k % n)).abs()))
}

/// Evolves the pointer delta at the CFL step until the max cell-wise change
/// per unit time is below `tol` or `t_max` is reached.
pub fn fp_stationary(params: &SimParams, n: usize, t_max: f64, tol: f64) -> Result<FpStationary> {
    fp_evolve(params, PdfGrid::pointer_delta(n), t_max, tol)
}

/// As [`fp_stationary`] but from an arbitrary initial grid.
pub fn fp_evolve(params: &SimParams, init: PdfGrid, t_max: f64, tol: f64) -> Result<FpStationary> {
    if init.n < MIN_STATIONARY_GRID {
        return Err(DimerError::InvalidParameter(format!(
            "stationary solve needs n >= {MIN_STATIONARY_GRID}, got {}",
            init.n
        )));
    }
    if !(t_max > 0.0) || !(tol > 0.0) {
        return Err(DimerError::InvalidParameter("t_max and tol must be positive".into()));
    }
    let op = FpOperator::new(params, init.n)?;
    let dt_fp = op.cfl_limit().min(t_max);
    let mut grid = init;
    let mut steps = 0;
    let mut residual = f64::INFINITY;
    let mut max_mass_error = (grid.mass() - 1.0).abs();
    while grid.time < t_max * (1.0 - 1e-12) {
        let dt = dt_fp.min(t_max - grid.time);
        let (next, _) = op.step(&grid, dt)?;
        residual = max_change(&next, &grid) / dt;
        grid = next;
        steps += 1;
        max_mass_error = max_mass_error.max((grid.mass() - 1.0).abs());
        if residual < tol {
            return Ok(FpStationary {
                grid,
                criterion: StopCriterion::Converged,
                steps,
                dt_fp,
                residual,
                max_mass_error,
            });
        }
    }
    Ok(FpStationary {
        grid,
        criterion: StopCriterion::TimeLimit,
        steps,
        dt_fp,
        residual,
        max_mass_error,
    })
}
