//! Binned estimates of the angle PDF on the torus `(-π, π]²`.
//!
//! Bins are half-open `[left, right)` with `θ = π` assigned to the last bin,
//! so bin `k` covers `[-π + kΔθ, -π + (k+1)Δθ)` and the pointer state lands
//! in bin `n - 1`.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;

use crate::error::{DimerError, Result};
use crate::gutzwiller::AngleState;
use crate::params::SimParams;
use crate::quantum::{wrap_angle, Site};

/// Default number of bins per axis.
pub const DEFAULT_BINS: usize = 72;

/// Which solver produced a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Exact,
    Gutzwiller,
    Sse,
    FokkerPlanck,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Gutzwiller => "gutzwiller",
            Backend::Sse => "sse",
            Backend::FokkerPlanck => "fokker-planck",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(Backend::Exact),
            "gutzwiller" => Some(Backend::Gutzwiller),
            "sse" => Some(Backend::Sse),
            "fokker-planck" => Some(Backend::FokkerPlanck),
            _ => None,
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Provenance recorded alongside every distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramMeta {
    pub backend: Backend,
    pub params: SimParams,
}

pub fn bin_width(n: usize) -> f64 {
    2.0 * PI / n as f64
}

/// Bin of a canonical angle: `⌊(θ + π) / Δθ⌋`, with `θ = π` in the last bin.
pub fn bin_index(theta: f64, n: usize) -> usize {
    let t = wrap_angle(theta);
    let k = ((t + PI) / bin_width(n)).floor();
    if k < 0.0 {
        0
    } else {
        (k as usize).min(n - 1)
    }
}

pub fn bin_center(k: usize, n: usize) -> f64 {
    -PI + (k as f64 + 0.5) * bin_width(n)
}

/// Something that assigns a probability mass to each cell of a fixed grid.
pub trait ProbabilityMass {
    /// Grid shape, `(rows, cols)`; one-dimensional grids use `cols = 1`.
    fn shape(&self) -> (usize, usize);
    /// Cell masses summing to one.
    fn masses(&self) -> Vec<f64>;
}

/// Joint counts over the angle torus.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2D {
    n: usize,
    counts: Vec<u64>,
    total: u64,
    pub meta: HistogramMeta,
}

impl Histogram2D {
    pub fn new(n: usize, meta: HistogramMeta) -> Result<Self> {
        if n == 0 {
            return Err(DimerError::InvalidParameter("histogram needs at least one bin".into()));
        }
        Ok(Self {
            n,
            counts: vec![0; n * n],
            total: 0,
            meta,
        })
    }

    /// Rebuilds a histogram from stored counts; `total` is their sum.
    pub fn from_counts(n: usize, counts: Vec<u64>, meta: HistogramMeta) -> Result<Self> {
        if n == 0 || counts.len() != n * n {
            return Err(DimerError::ShapeMismatch(format!(
                "{} counts for a {n}x{n} histogram",
                counts.len()
            )));
        }
        let total = counts.iter().sum();
        Ok(Self { n, counts, total, meta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Count in bin `(i, j)`, `i` along `θ_L`.
    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.n + j]
    }

    pub fn add(&mut self, theta: AngleState) {
        let i = bin_index(theta.theta_l, self.n);
        let j = bin_index(theta.theta_r, self.n);
        self.counts[i * self.n + j] += 1;
        self.total += 1;
    }

    /// Adds the counts of `other`; associative and commutative.
    pub fn merge(&mut self, other: &Histogram2D) -> Result<()> {
        if other.n != self.n {
            return Err(DimerError::ShapeMismatch(format!(
                "cannot merge {}x{} into {}x{}",
                other.n, other.n, self.n, self.n
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        Ok(())
    }

    /// Normalized density `count / (total Δθ²)`, zero for an empty histogram.
    pub fn density(&self, i: usize, j: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let w = bin_width(self.n);
        self.count(i, j) as f64 / (self.total as f64 * w * w)
    }

    pub fn densities(&self) -> Vec<f64> {
        (0..self.n * self.n).map(|k| self.density(k / self.n, k % self.n)).collect()
    }

    /// Histogram with `θ_L` and `θ_R` exchanged.
    pub fn transposed(&self) -> Histogram2D {
        let n = self.n;
        let counts = (0..n * n).map(|k| self.counts[(k % n) * n + k / n]).collect();
        Histogram2D {
            n,
            counts,
            total: self.total,
            meta: self.meta,
        }
    }
}

impl ProbabilityMass for Histogram2D {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn masses(&self) -> Vec<f64> {
        let t = self.total.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }
}

/// Probability masses on an `n × n` grid, e.g. a product of marginals or a
/// coarse-grained solver output.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub n: usize,
    pub masses: Vec<f64>,
}

impl DensityGrid {
    pub fn densities(&self) -> Vec<f64> {
        let w = bin_width(self.n);
        self.masses.iter().map(|m| m / (w * w)).collect()
    }
}

impl ProbabilityMass for DensityGrid {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn masses(&self) -> Vec<f64> {
        self.masses.clone()
    }
}

/// One-dimensional density over `(-π, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal1D {
    pub n: usize,
    pub densities: Vec<f64>,
}

impl Marginal1D {
    fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(DimerError::Empty("slice has no counts".into()));
        }
        let n = weights.len();
        let w = bin_width(n);
        Ok(Self {
            n,
            densities: weights.into_iter().map(|x| x / (total * w)).collect(),
        })
    }

    pub fn integral(&self) -> f64 {
        self.densities.iter().sum::<f64>() * bin_width(self.n)
    }

    /// Length of the longest run of consecutive zero bins, counted cyclically.
    pub fn longest_empty_run(&self) -> usize {
        if self.densities.iter().all(|&d| d == 0.0) {
            return self.n;
        }
        let mut best = 0;
        let mut run = 0;
        for k in 0..2 * self.n {
            if self.densities[k % self.n] == 0.0 {
                run += 1;
                best = best.max(run);
            } else {
                run = 0;
            }
        }
        best.min(self.n)
    }
}

impl ProbabilityMass for Marginal1D {
    fn shape(&self) -> (usize, usize) {
        (self.n, 1)
    }

    fn masses(&self) -> Vec<f64> {
        let w = bin_width(self.n);
        self.densities.iter().map(|d| d * w).collect()
    }
}

pub fn bin_angles(samples: &[AngleState], n: usize, meta: HistogramMeta) -> Result<Histogram2D> {
    let mut h = Histogram2D::new(n, meta)?;
    samples.iter().for_each(|&s| h.add(s));
    Ok(h)
}

/// Marginal density of one site: row sums for `Left`, column sums for `Right`.
pub fn marginal(h: &Histogram2D, site: Site) -> Result<Marginal1D> {
    if h.total == 0 {
        return Err(DimerError::Empty("histogram has no counts".into()));
    }
    let n = h.n;
    let weights = (0..n)
        .map(|k| {
            (0..n)
                .map(|o| match site {
                    Site::Left => h.count(k, o),
                    Site::Right => h.count(o, k),
                } as f64)
                .sum()
        })
        .collect();
    Marginal1D::from_weights(weights)
}

/// Normalized slices through the joint histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalCuts {
    /// Along `θ_L` in the bin row containing `θ_R = π`.
    pub at_right_pointer: Result<Marginal1D>,
    /// Along `θ_R` in the bin column containing `θ_L = π`.
    pub at_left_pointer: Result<Marginal1D>,
    /// Cells with `bin_L = bin_R`.
    pub equal_angles: Result<Marginal1D>,
}

pub fn conditional_cuts(h: &Histogram2D) -> Result<ConditionalCuts> {
    if h.total == 0 {
        return Err(DimerError::Empty("histogram has no counts".into()));
    }
    let n = h.n;
    let last = n - 1;
    let slice = |f: &dyn Fn(usize) -> u64| Marginal1D::from_weights((0..n).map(|k| f(k) as f64).collect());
    Ok(ConditionalCuts {
        at_right_pointer: slice(&|k| h.count(k, last)),
        at_left_pointer: slice(&|k| h.count(last, k)),
        equal_angles: slice(&|k| h.count(k, k)),
    })
}

/// Half the L1 distance between two normalized distributions on the same grid.
pub fn tv_distance<A: ProbabilityMass + ?Sized, B: ProbabilityMass + ?Sized>(a: &A, b: &B) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(DimerError::ShapeMismatch(format!(
            "{:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (ma, mb) = (a.masses(), b.masses());
    Ok((0.5 * ma.iter().zip(&mb).map(|(x, y)| (x - y).abs()).sum::<f64>()).min(1.0))
}

/// `P(θ_L) P(θ_R)` on the histogram grid.
pub fn product_of_marginals(h: &Histogram2D) -> Result<DensityGrid> {
    let ml = marginal(h, Site::Left)?.masses();
    let mr = marginal(h, Site::Right)?.masses();
    let n = h.n;
    Ok(DensityGrid {
        n,
        masses: (0..n * n).map(|k| ml[k / n] * mr[k % n]).collect(),
    })
}

/// Fraction of bins (restricted to `mask` when given) with a nonzero count.
pub fn occupied_fraction(h: &Histogram2D, mask: Option<&[bool]>) -> f64 {
    let (hit, considered) = h
        .counts
        .iter()
        .enumerate()
        .filter(|(k, _)| mask.is_none_or(|m| m[*k]))
        .fold((0usize, 0usize), |(hit, all), (_, &c)| (hit + (c > 0) as usize, all + 1));
    if considered == 0 {
        0.0
    } else {
        hit as f64 / considered as f64
    }
}

/// Connected components (4-neighbour, periodic) of empty bins, as lists of
/// flat bin indices in discovery order.
pub fn empty_regions(h: &Histogram2D) -> Vec<Vec<usize>> {
    let n = h.n;
    let mut seen = vec![false; n * n];
    let mut regions = Vec::new();
    for start in 0..n * n {
        if seen[start] || h.counts[start] != 0 {
            continue;
        }
        let mut region = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(k) = queue.pop_front() {
            region.push(k);
            let (i, j) = (k / n, k % n);
            let neighbours = [
                ((i + n - 1) % n) * n + j,
                ((i + 1) % n) * n + j,
                i * n + (j + n - 1) % n,
                i * n + (j + 1) % n,
            ];
            for nb in neighbours {
                if !seen[nb] && h.counts[nb] == 0 {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
        regions.push(region);
    }
    regions
}
