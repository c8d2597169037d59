//! Fixed-size linear algebra on the two-qubit Hilbert space.
//!
//! Basis order is `|00>, |01>, |10>, |11>` with the left qubit as the most
//! significant bit, so the amplitude of `|l r>` lives at index `2 l + r`.
//! Single-qubit angle states follow `cos(θ/2)|0> + i sin(θ/2)|1>`, which keeps
//! the Bloch vector in the y-z plane with `θ = atan2(y, z)`.

use std::f64::consts::PI;
use std::ops::{Index, Mul};

use num_complex::Complex64;

use crate::error::{DimerError, Result};

pub type Amplitudes = [Complex64; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Tolerance on `| |psi|^2 - 1 |` accepted by operations that require a
/// normalized input.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Minimum `y^2 + z^2` for the reduced Bloch angle to be defined.
pub const ANGLE_DEGENERACY: f64 = 1e-14;

/// Maps an angle onto the canonical interval `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

/// Shortest distance between two angles on the circle.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Which qubit of the dimer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Site {
    Left,
    Right,
}

/// Normalized pure state of the dimer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState4 {
    amps: Amplitudes,
}

impl PureState4 {
    /// Normalizes `amps`; fails if the vector is (numerically) zero.
    pub fn new(amps: Amplitudes) -> Result<Self> {
        let norm_sq = norm_sqr(&amps);
        if !(norm_sq > 1e-300) || !norm_sq.is_finite() {
            return Err(DimerError::Numerical(format!(
                "cannot normalize vector with |v|^2 = {norm_sq:e}"
            )));
        }
        let inv = 1.0 / norm_sq.sqrt();
        Ok(Self {
            amps: amps.map(|a| a * inv),
        })
    }

    /// Wraps amplitudes that the caller guarantees are normalized.
    pub(crate) fn from_normalized(amps: Amplitudes) -> Self {
        Self { amps }
    }

    /// Computational basis state `|k>`, `k` in `0..4`.
    pub fn basis(k: usize) -> Self {
        assert!(k < 4, "basis index {k} out of range");
        let mut amps = [ZERO; 4];
        amps[k] = ONE;
        Self { amps }
    }

    /// `|θ_L> ⊗ |θ_R>` with `|θ> = cos(θ/2)|0> + i sin(θ/2)|1>`.
    pub fn product(theta_l: f64, theta_r: f64) -> Self {
        let l = single_qubit(theta_l);
        let r = single_qubit(theta_r);
        Self {
            amps: [l[0] * r[0], l[0] * r[1], l[1] * r[0], l[1] * r[1]],
        }
    }

    /// `(|00> + |11>)/√2`.
    pub fn bell() -> Self {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            amps: [s, ZERO, ZERO, s],
        }
    }

    pub fn amplitudes(&self) -> &Amplitudes {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState4) -> Complex64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Exchanges the roles of the two qubits.
    pub fn swap_sites(&self) -> Self {
        let a = self.amps;
        Self {
            amps: [a[0], a[2], a[1], a[3]],
        }
    }

    pub(crate) fn check_normalized(&self) -> Result<()> {
        let norm_sq = self.norm_sqr();
        if (norm_sq - 1.0).abs() > NORM_TOLERANCE {
            return Err(DimerError::Unnormalized { norm_sq });
        }
        Ok(())
    }
}

fn single_qubit(theta: f64) -> [Complex64; 2] {
    let (s, c) = (0.5 * theta).sin_cos();
    [Complex64::new(c, 0.0), Complex64::new(0.0, s)]
}

pub(crate) fn norm_sqr(v: &Amplitudes) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// Dense 4×4 complex operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator4 {
    entries: [[Complex64; 4]; 4],
}

impl Operator4 {
    pub fn from_entries(entries: [[Complex64; 4]; 4]) -> Self {
        Self { entries }
    }

    pub fn zero() -> Self {
        Self {
            entries: [[ZERO; 4]; 4],
        }
    }

    pub fn identity() -> Self {
        Self::diagonal([1.0; 4])
    }

    pub fn diagonal(d: [f64; 4]) -> Self {
        let mut m = Self::zero();
        for (k, v) in d.into_iter().enumerate() {
            m.entries[k][k] = Complex64::new(v, 0.0);
        }
        m
    }

    /// `a ⊗ b` for single-qubit operators, `a` acting on the left qubit.
    pub fn kron(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.entries[i][j] = a[i >> 1][j >> 1] * b[i & 1][j & 1];
            }
        }
        m
    }

    /// Projector on the `|1>` state of `site`.
    pub fn number(site: Site) -> Self {
        match site {
            Site::Left => Self::diagonal([0.0, 0.0, 1.0, 1.0]),
            Site::Right => Self::diagonal([0.0, 1.0, 0.0, 1.0]),
        }
    }

    pub fn sigma_x(site: Site) -> Self {
        let id = [[ONE, ZERO], [ZERO, ONE]];
        let sx = [[ZERO, ONE], [ONE, ZERO]];
        match site {
            Site::Left => Self::kron(&sx, &id),
            Site::Right => Self::kron(&id, &sx),
        }
    }

    /// `H_S = ω_S (σˣ_L + σˣ_R)`.
    pub fn system_hamiltonian(omega_s: f64) -> Self {
        (Self::sigma_x(Site::Left) + Self::sigma_x(Site::Right)).scale(omega_s)
    }

    pub fn entries(&self) -> &[[Complex64; 4]; 4] {
        &self.entries
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            entries: self.entries.map(|row| row.map(|z| z * s)),
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.entries[i][j] = self.entries[j][i].conj();
            }
        }
        m
    }

    pub fn apply(&self, v: &Amplitudes) -> Amplitudes {
        let mut out = [ZERO; 4];
        for (o, row) in out.iter_mut().zip(self.entries.iter()) {
            *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
        out
    }

    /// `<psi| A |psi>`.
    pub fn expectation(&self, state: &PureState4) -> Complex64 {
        let av = self.apply(state.amplitudes());
        state
            .amplitudes()
            .iter()
            .zip(av.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator4) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.entries[i][j] - other.entries[i][j]).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    pub fn is_diagonal(&self) -> bool {
        (0..4).all(|i| (0..4).all(|j| i == j || self.entries[i][j] == ZERO))
    }
}

impl Index<(usize, usize)> for Operator4 {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i][j]
    }
}

impl Mul for Operator4 {
    type Output = Operator4;
    fn mul(self, rhs: Operator4) -> Operator4 {
        let mut m = Operator4::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.entries[i][j] = (0..4).map(|k| self.entries[i][k] * rhs.entries[k][j]).sum();
            }
        }
        m
    }
}

impl std::ops::Add for Operator4 {
    type Output = Operator4;
    fn add(self, rhs: Operator4) -> Operator4 {
        let mut m = self;
        for i in 0..4 {
            for j in 0..4 {
                m.entries[i][j] += rhs.entries[i][j];
            }
        }
        m
    }
}

impl std::ops::Sub for Operator4 {
    type Output = Operator4;
    fn sub(self, rhs: Operator4) -> Operator4 {
        self + rhs.scale(-1.0)
    }
}

/// The four back-action operators of one measurement interval.
///
/// All four are real diagonal in the computational basis; `diagonals` caches
/// them for the trajectory inner loops.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    ops: [Operator4; 4],
    diagonals: [[f64; 4]; 4],
    pub gamma1: f64,
    pub gamma2: f64,
    pub dt: f64,
}

impl KrausSet {
    /// `M_r` for readout `r` in `0..4`.
    pub fn op(&self, r: usize) -> &Operator4 {
        &self.ops[r]
    }

    pub fn ops(&self) -> &[Operator4; 4] {
        &self.ops
    }

    pub(crate) fn diagonal(&self, r: usize) -> &[f64; 4] {
        &self.diagonals[r]
    }

    /// `Σ_r M_r† M_r`.
    pub fn completeness(&self) -> Operator4 {
        self.ops
            .iter()
            .fold(Operator4::zero(), |acc, m| acc + m.adjoint() * *m)
    }

    /// Born probabilities on unnormalized amplitudes, divided by `norm_sq`.
    pub(crate) fn probabilities_raw(&self, v: &Amplitudes) -> [f64; 4] {
        let w = v.map(|a| a.norm_sqr());
        let mut p = [0.0; 4];
        for (r, pr) in p.iter_mut().enumerate() {
            let d = &self.diagonals[r];
            *pr = d[0] * d[0] * w[0] + d[1] * d[1] * w[1] + d[2] * d[2] * w[2] + d[3] * d[3] * w[3];
        }
        p
    }
}

/// Builds `M_0..M_3` with `p_1 = γ₁ dt`, `p_2 = γ₂ dt`:
/// `M_1 = √p_1 n_L`, `M_2 = √p_1 n_R`, `M_3 = √p_2 n_L n_R` and
/// `M_0 = √(I - p_1 n_L - p_1 n_R - p_2 n_L n_R)` taken on the diagonal.
pub fn build_kraus(gamma1: f64, gamma2: f64, dt: f64) -> Result<KrausSet> {
    if !(gamma1 >= 0.0 && gamma2 >= 0.0) {
        return Err(DimerError::InvalidParameter(format!(
            "rates must be nonnegative (gamma1 = {gamma1}, gamma2 = {gamma2})"
        )));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(DimerError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let p1 = gamma1 * dt;
    let p2 = gamma2 * dt;
    if 2.0 * p1 + p2 > 1.0 {
        return Err(DimerError::InvalidParameter(format!(
            "(2 gamma1 + gamma2) dt = {} exceeds 1; reduce dt",
            2.0 * p1 + p2
        )));
    }
    let d0 = [1.0, (1.0 - p1).sqrt(), (1.0 - p1).sqrt(), (1.0 - 2.0 * p1 - p2).sqrt()];
    let (s1, s2) = (p1.sqrt(), p2.sqrt());
    let diagonals = [
        d0,
        [0.0, 0.0, s1, s1],
        [0.0, s1, 0.0, s1],
        [0.0, 0.0, 0.0, s2],
    ];
    Ok(KrausSet {
        ops: diagonals.map(Operator4::diagonal),
        diagonals,
        gamma1,
        gamma2,
        dt,
    })
}

/// Back-actions of the three-ancilla detector model, without small-`dt`
/// truncation. Outcome `(i, j, k)` refers to the left, right and bond
/// detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorKraus {
    ops: [Operator4; 8],
}

impl DetectorKraus {
    pub fn get(&self, i: usize, j: usize, k: usize) -> &Operator4 {
        assert!(i < 2 && j < 2 && k < 2, "detector outcomes are binary");
        &self.ops[4 * i + 2 * j + k]
    }

    pub fn ops(&self) -> &[Operator4; 8] {
        &self.ops
    }

    pub fn completeness(&self) -> Operator4 {
        self.ops
            .iter()
            .fold(Operator4::zero(), |acc, m| acc + m.adjoint() * *m)
    }

    /// Outcome probabilities `<psi| M† M |psi>` in `(i, j, k)` index order.
    pub fn probabilities(&self, state: &PureState4) -> [f64; 8] {
        self.ops
            .map(|m| norm_sqr(&m.apply(state.amplitudes())))
    }
}

/// Coupling `J = √(γ / dt)` of the continuous-monitoring limit.
pub fn coupling_for_rate(gamma: f64, dt: f64) -> f64 {
    (gamma / dt).sqrt()
}

/// `M_(i,j,k) = M_dL,i · M_dR,j · M_dB,k` with single-detector factors
/// `diag(.., cos(J dt), ..)` for no click and `diag(.., sin(J dt), ..)` for a
/// click on the monitored subspace.
pub fn detector_kraus(j1: f64, j2: f64, dt: f64) -> DetectorKraus {
    let (s1, c1) = (j1 * dt).sin_cos();
    let (s2, c2) = (j2 * dt).sin_cos();
    let left = [[1.0, 1.0, c1, c1], [0.0, 0.0, s1, s1]];
    let right = [[1.0, c1, 1.0, c1], [0.0, s1, 0.0, s1]];
    let bond = [[1.0, 1.0, 1.0, c2], [0.0, 0.0, 0.0, s2]];
    let mut ops = [Operator4::zero(); 8];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let d = [0, 1, 2, 3].map(|n| left[i][n] * right[j][n] * bond[k][n]);
                ops[4 * i + 2 * j + k] = Operator4::diagonal(d);
            }
        }
    }
    DetectorKraus { ops }
}

/// Exact `e^{-i H_S dt}` as the tensor square of `cos(ω dt) I - i sin(ω dt) σˣ`.
pub fn propagator(omega_s: f64, dt: f64) -> Operator4 {
    let (s, c) = (omega_s * dt).sin_cos();
    let u = [
        [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
        [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
    ];
    Operator4::kron(&u, &u)
}

/// `p_r = <psi| M_r† M_r |psi>` for `r = 0..4`.
pub fn born_probabilities(state: &PureState4, kraus: &KrausSet) -> Result<[f64; 4]> {
    state.check_normalized()?;
    Ok(kraus
        .ops
        .map(|m| norm_sqr(&m.apply(state.amplitudes())).clamp(0.0, 1.0)))
}

/// Bloch vector and purity of a single-qubit reduced density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedBloch {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub purity: f64,
}

impl ReducedBloch {
    pub fn length(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Reduced 2×2 density matrix of `site` as `[[ρ00, ρ01], [ρ10, ρ11]]`.
pub fn reduced_density(state: &PureState4, site: Site) -> [[Complex64; 2]; 2] {
    let a = state.amplitudes();
    // (kept index, traced index) -> amplitude index
    let idx = |keep: usize, other: usize| match site {
        Site::Left => 2 * keep + other,
        Site::Right => 2 * other + keep,
    };
    let mut rho = [[ZERO; 2]; 2];
    for (i, row) in rho.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = (0..2).map(|o| a[idx(i, o)] * a[idx(j, o)].conj()).sum();
        }
    }
    rho
}

pub fn reduced_bloch(state: &PureState4, site: Site) -> ReducedBloch {
    let rho = reduced_density(state, site);
    let x = 2.0 * rho[0][1].re;
    let y = -2.0 * rho[0][1].im;
    let z = rho[0][0].re - rho[1][1].re;
    ReducedBloch {
        x,
        y,
        z,
        purity: 0.5 * (1.0 + x * x + y * y + z * z),
    }
}

/// `θ = atan2(y, z)` in `(-π, π]`; `-π` is reported as `+π`.
pub fn bloch_angle(b: &ReducedBloch) -> Result<f64> {
    let yz_sq = b.y * b.y + b.z * b.z;
    if !(yz_sq > ANGLE_DEGENERACY) {
        return Err(DimerError::UndefinedAngle { yz_sq });
    }
    Ok(canonical_atan2(b.y, b.z))
}

pub(crate) fn canonical_atan2(y: f64, z: f64) -> f64 {
    let t = y.atan2(z);
    if t <= -PI {
        PI
    } else {
        t
    }
}

/// Von Neumann entropy of the left reduced state, in bits.
pub fn entanglement_entropy(state: &PureState4) -> f64 {
    let r = reduced_bloch(state, Site::Left).length().min(1.0);
    let h = |p: f64| {
        let p = if (-1e-12..0.0).contains(&p) { 0.0 } else { p.clamp(0.0, 1.0) };
        if p == 0.0 {
            0.0
        } else {
            -p * p.log2()
        }
    };
    (h(0.5 * (1.0 + r)) + h(0.5 * (1.0 - r))).clamp(0.0, 1.0)
}
