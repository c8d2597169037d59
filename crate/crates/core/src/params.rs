use crate::error::{DimerError, Result};

/// Largest admissible `ω_S dt`.
pub const MAX_OMEGA_DT: f64 = 1e-2;

/// Physical and numerical parameters of a monitored-dimer run.
///
/// Times are in units of `1/ω_S` when `omega_s = 1`. The measurement
/// strengths enter the Gutzwiller flow only through `λ = γ / (4 ω_S)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub omega_s: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub dt: f64,
    pub t_final: f64,
    pub n_traj: u64,
    pub master_seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            omega_s: 1.0,
            gamma1: 0.0,
            gamma2: 0.0,
            dt: 1e-3,
            t_final: 20.0,
            n_traj: 1000,
            master_seed: 0,
        }
    }
}

impl SimParams {
    /// Default parameters at `ω_S = 1` with `γ = 4 λ`.
    pub fn from_lambdas(lambda1: f64, lambda2: f64) -> Self {
        Self::default().with_lambdas(lambda1, lambda2)
    }

    pub fn with_lambdas(mut self, lambda1: f64, lambda2: f64) -> Self {
        self.gamma1 = 4.0 * self.omega_s * lambda1;
        self.gamma2 = 4.0 * self.omega_s * lambda2;
        self
    }

    pub fn with_rates(mut self, gamma1: f64, gamma2: f64) -> Self {
        self.gamma1 = gamma1;
        self.gamma2 = gamma2;
        self
    }

    pub fn with_time(mut self, dt: f64, t_final: f64) -> Self {
        self.dt = dt;
        self.t_final = t_final;
        self
    }

    pub fn with_trajectories(mut self, n_traj: u64, master_seed: u64) -> Self {
        self.n_traj = n_traj;
        self.master_seed = master_seed;
        self
    }

    pub fn lambda1(&self) -> f64 {
        self.gamma1 / (4.0 * self.omega_s)
    }

    pub fn lambda2(&self) -> f64 {
        self.gamma2 / (4.0 * self.omega_s)
    }

    /// Number of steps `⌈t_final / dt⌉`.
    pub fn n_steps(&self) -> u64 {
        if self.t_final <= 0.0 {
            return 0;
        }
        // guard against t_final/dt landing a hair above an integer
        let ratio = self.t_final / self.dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() <= 1e-9 * rounded.max(1.0) {
            rounded as u64
        } else {
            ratio.ceil() as u64
        }
    }

    /// Step actually taken by trajectory runners: `t_final / n_steps`, so that
    /// the last step lands on `t_final`.
    pub fn step_dt(&self) -> f64 {
        match self.n_steps() {
            0 => self.dt,
            n => self.t_final / n as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(DimerError::InvalidParameter(msg));
        if !(self.omega_s >= 0.0) || !self.omega_s.is_finite() {
            return bad(format!("omega_s must be finite and nonnegative, got {}", self.omega_s));
        }
        if !(self.gamma1 >= 0.0 && self.gamma2 >= 0.0) || !(self.gamma1 + self.gamma2).is_finite() {
            return bad(format!(
                "rates must be finite and nonnegative (gamma1 = {}, gamma2 = {})",
                self.gamma1, self.gamma2
            ));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.omega_s * self.dt > MAX_OMEGA_DT * (1.0 + 1e-12) {
            return bad(format!(
                "dt = {} is not small against 1/omega_s: omega_s*dt = {} exceeds {MAX_OMEGA_DT}",
                self.dt,
                self.omega_s * self.dt
            ));
        }
        let load = (2.0 * self.gamma1 + self.gamma2) * self.dt;
        if load > 1.0 {
            return bad(format!(
                "(2*gamma1 + gamma2)*dt = {load} exceeds 1; reduce dt or the rates"
            ));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return bad(format!("t_final must be finite and nonnegative, got {}", self.t_final));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambdas_round_trip() {
        let p = SimParams::from_lambdas(0.25, 1.75);
        assert_eq!(p.gamma1, 1.0);
        assert_eq!(p.gamma2, 7.0);
        assert_eq!(p.lambda1(), 0.25);
        assert_eq!(p.lambda2(), 1.75);
    }

    #[test]
    fn step_count_lands_on_final_time() {
        let p = SimParams::default();
        assert_eq!(p.n_steps(), 20_000);
        assert_eq!(p.step_dt(), 1e-3);
        let p = p.with_time(1e-3, std::f64::consts::PI);
        assert_eq!(p.n_steps(), 3142);
        assert!((p.step_dt() * 3142.0 - std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn validation() {
        assert!(SimParams::from_lambdas(1.25, 0.25).validate().is_ok());
        assert!(SimParams::default().with_time(1.0, 20.0).validate().is_err());
        assert!(SimParams::default().with_time(1e-2, 20.0).validate().is_ok());
        assert!(SimParams::default().with_rates(300.0, 500.0).validate().is_err());
        assert!(SimParams::default().with_rates(-1.0, 0.0).validate().is_err());
    }
}
