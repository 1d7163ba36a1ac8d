//! Scenario configuration and the plain-text `key = value` config format.

use std::fmt;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: cannot parse `{text}`")]
    Parse { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// All scenario parameters for one simulation campaign.
///
/// Powers are normalized by the noise power and kept linear throughout; the
/// defaults correspond to 1 W downlink / 0.25 W pilot over a -108 dBm noise
/// floor. Distances are in km, shadowing in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of APs.
    pub m: usize,
    /// Antennas per AP.
    pub n: usize,
    /// Number of downlink users.
    pub k_d: usize,
    /// Side of the square deployment area (km).
    pub d_km: f64,
    /// Coherence interval (symbols).
    pub tau: usize,
    /// Uplink training length (symbols); must be >= `k_d`.
    pub tau_t: usize,
    /// Normalized maximum downlink power (linear).
    pub rho: f64,
    /// Normalized pilot power (linear).
    pub rho_t: f64,
    /// Shadow-fading standard deviation (dB).
    pub sigma_sh_db: f64,
    /// Inner path-loss breakpoint (km).
    pub d0_km: f64,
    /// Outer path-loss breakpoint (km).
    pub d1_km: f64,
    /// Path-loss constant (dB), carrier/height dependent.
    pub l_db: f64,
    /// MASR target (linear).
    pub kappa: f64,
    /// Antenna spacing over carrier wavelength.
    pub antenna_spacing_over_lambda: f64,
    /// Target position: planar (km, km) plus height (m).
    pub target_x_km: f64,
    pub target_y_km: f64,
    pub target_height_m: f64,
    pub ap_height_m: f64,
    pub user_height_m: f64,
    /// Base seed for all stochastic operations.
    pub seed: u64,
    /// Relative bisection accuracy for Algorithms 2-style line searches.
    pub epsilon_bisection: f64,
    /// Minimum min-SINR improvement for the greedy selection to commit a move.
    pub e_min_greedy: f64,
    /// Relative stopping tolerance of the alternating power-control loop.
    pub ao_tolerance: f64,
    /// Cap on alternating-optimization outer iterations.
    pub max_ao_iterations: usize,
    /// Iteration cap of the projection-based feasibility solver.
    pub max_solver_iterations: usize,
    /// Residual tolerance of the feasibility solver.
    pub solver_tolerance: f64,
    /// Spatially correlated shadowing (two-component model) vs. i.i.d.
    pub correlated_shadowing: bool,
    /// AP/user mixing weight of the two-component shadowing model.
    pub shadowing_delta: f64,
    /// Shadowing decorrelation distance (km).
    pub decorrelation_km: f64,
    /// Evaluate greedy candidates with optimized power instead of NPC.
    pub greedy_uses_opc: bool,
    /// Use the per-AP power-splitting constraint exactly as printed
    /// (no estimate-quality weighting) in the feasibility program.
    pub literal_constraint_21d: bool,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            m: 20,
            n: 3,
            k_d: 3,
            d_km: 0.5,
            tau: 200,
            tau_t: 3,
            rho: 10f64.powf(13.8),
            rho_t: 10f64.powf(13.2),
            sigma_sh_db: 8.0,
            d0_km: 0.01,
            d1_km: 0.05,
            l_db: 140.72,
            kappa: 10.0,
            antenna_spacing_over_lambda: 0.5,
            target_x_km: 0.25,
            target_y_km: 0.25,
            target_height_m: 10.0,
            ap_height_m: 15.0,
            user_height_m: 1.65,
            seed: 1,
            epsilon_bisection: 1e-3,
            e_min_greedy: 1e-9,
            ao_tolerance: 1e-4,
            max_ao_iterations: 20,
            max_solver_iterations: 100_000,
            solver_tolerance: 1e-8,
            correlated_shadowing: true,
            shadowing_delta: 0.5,
            decorrelation_km: 0.1,
            greedy_uses_opc: false,
            literal_constraint_21d: false,
        }
    }
}

impl SystemConfig {
    /// The training-overhead prefactor `1 - tau_t/tau` of the SE formula.
    pub fn se_prefactor(&self) -> f64 {
        1.0 - self.tau_t as f64 / self.tau as f64
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if self.m == 0 || self.n == 0 || self.k_d == 0 {
            return fail("m, n and k_d must be positive".into());
        }
        if self.tau_t < self.k_d {
            return fail(format!(
                "tau_t = {} violates pilot orthogonality (needs tau_t >= k_d = {})",
                self.tau_t, self.k_d
            ));
        }
        if self.tau_t >= self.tau {
            return fail("tau_t must be smaller than tau".into());
        }
        if !(self.d0_km > 0.0 && self.d0_km < self.d1_km && self.d1_km < self.d_km) {
            return fail("breakpoints must satisfy 0 < d0 < d1 < D".into());
        }
        if !(self.rho > 0.0 && self.rho_t > 0.0) {
            return fail("rho and rho_t must be positive".into());
        }
        if self.kappa < 0.0 {
            return fail("kappa must be non-negative".into());
        }
        for (name, v) in [
            ("epsilon_bisection", self.epsilon_bisection),
            ("e_min_greedy", self.e_min_greedy),
            ("ao_tolerance", self.ao_tolerance),
            ("solver_tolerance", self.solver_tolerance),
        ] {
            if !(v > 0.0) {
                return fail(format!("{name} must be positive"));
            }
        }
        if !(self.shadowing_delta >= 0.0 && self.shadowing_delta <= 1.0) {
            return fail("shadowing_delta must lie in [0, 1]".into());
        }
        if !(self.antenna_spacing_over_lambda > 0.0) {
            return fail("antenna_spacing_over_lambda must be positive".into());
        }
        Ok(())
    }

    /// Parses the plain-text config format: one `key = value` per line,
    /// `#` starts a comment, unknown keys are rejected. Keys not present
    /// keep their default; `tau_t` defaults to `k_d`.
    pub fn from_str(text: &str) -> Result<SystemConfig, ConfigError> {
        let mut cfg = SystemConfig::default();
        let mut tau_t_set = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                text: raw.to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();
            let parse_err = || ConfigError::Parse {
                line,
                text: raw.to_string(),
            };
            macro_rules! set {
                ($field:ident, $ty:ty) => {
                    cfg.$field = value.parse::<$ty>().map_err(|_| parse_err())?
                };
            }
            match key {
                "m" => set!(m, usize),
                "n" => set!(n, usize),
                "k_d" => set!(k_d, usize),
                "d_km" => set!(d_km, f64),
                "tau" => set!(tau, usize),
                "tau_t" => {
                    set!(tau_t, usize);
                    tau_t_set = true;
                }
                "rho" => set!(rho, f64),
                "rho_t" => set!(rho_t, f64),
                "sigma_sh_db" => set!(sigma_sh_db, f64),
                "d0_km" => set!(d0_km, f64),
                "d1_km" => set!(d1_km, f64),
                "l_db" => set!(l_db, f64),
                "kappa" => set!(kappa, f64),
                "antenna_spacing_over_lambda" => set!(antenna_spacing_over_lambda, f64),
                "target_x_km" => set!(target_x_km, f64),
                "target_y_km" => set!(target_y_km, f64),
                "target_height_m" => set!(target_height_m, f64),
                "ap_height_m" => set!(ap_height_m, f64),
                "user_height_m" => set!(user_height_m, f64),
                "seed" => set!(seed, u64),
                "epsilon_bisection" => set!(epsilon_bisection, f64),
                "e_min_greedy" => set!(e_min_greedy, f64),
                "ao_tolerance" => set!(ao_tolerance, f64),
                "max_ao_iterations" => set!(max_ao_iterations, usize),
                "max_solver_iterations" => set!(max_solver_iterations, usize),
                "solver_tolerance" => set!(solver_tolerance, f64),
                "correlated_shadowing" => set!(correlated_shadowing, bool),
                "shadowing_delta" => set!(shadowing_delta, f64),
                "decorrelation_km" => set!(decorrelation_km, f64),
                "greedy_uses_opc" => set!(greedy_uses_opc, bool),
                "literal_constraint_21d" => set!(literal_constraint_21d, bool),
                other => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: other.to_string(),
                    })
                }
            }
        }
        if !tau_t_set {
            cfg.tau_t = cfg.k_d;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<SystemConfig, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        SystemConfig::from_str(&text)
    }
}

impl fmt::Display for SystemConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "m = {}", self.m)?;
        writeln!(f, "n = {}", self.n)?;
        writeln!(f, "k_d = {}", self.k_d)?;
        writeln!(f, "d_km = {}", self.d_km)?;
        writeln!(f, "tau = {}", self.tau)?;
        writeln!(f, "tau_t = {}", self.tau_t)?;
        writeln!(f, "rho = {}", self.rho)?;
        writeln!(f, "rho_t = {}", self.rho_t)?;
        writeln!(f, "sigma_sh_db = {}", self.sigma_sh_db)?;
        writeln!(f, "d0_km = {}", self.d0_km)?;
        writeln!(f, "d1_km = {}", self.d1_km)?;
        writeln!(f, "l_db = {}", self.l_db)?;
        writeln!(f, "kappa = {}", self.kappa)?;
        writeln!(
            f,
            "antenna_spacing_over_lambda = {}",
            self.antenna_spacing_over_lambda
        )?;
        writeln!(f, "target_x_km = {}", self.target_x_km)?;
        writeln!(f, "target_y_km = {}", self.target_y_km)?;
        writeln!(f, "target_height_m = {}", self.target_height_m)?;
        writeln!(f, "ap_height_m = {}", self.ap_height_m)?;
        writeln!(f, "user_height_m = {}", self.user_height_m)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "epsilon_bisection = {}", self.epsilon_bisection)?;
        writeln!(f, "e_min_greedy = {}", self.e_min_greedy)?;
        writeln!(f, "ao_tolerance = {}", self.ao_tolerance)?;
        writeln!(f, "max_ao_iterations = {}", self.max_ao_iterations)?;
        writeln!(f, "max_solver_iterations = {}", self.max_solver_iterations)?;
        writeln!(f, "solver_tolerance = {}", self.solver_tolerance)?;
        writeln!(f, "correlated_shadowing = {}", self.correlated_shadowing)?;
        writeln!(f, "shadowing_delta = {}", self.shadowing_delta)?;
        writeln!(f, "decorrelation_km = {}", self.decorrelation_km)?;
        writeln!(f, "greedy_uses_opc = {}", self.greedy_uses_opc)?;
        writeln!(f, "literal_constraint_21d = {}", self.literal_constraint_21d)
    }
}
