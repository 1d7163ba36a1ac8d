//! Power control: the full-power NPC baseline, max-min bisection for the
//! communication coefficients, the sensing-power line search, and the
//! alternating loop combining the two subproblems.

pub mod feasibility;

use std::io::Write;

use thiserror::Error;

use crate::config::SystemConfig;
use crate::metrics::{self, ModeAssignment, PowerAllocation};
use crate::topology::NetworkRealization;
use feasibility::{
    Block, ConvexSet, FeasibilityProblem, SolveStatus, SolverOptions, WarmStart,
};

#[derive(Debug, Error)]
pub enum PowerError {
    #[error("assignment has no communication AP")]
    NoComAps,
    #[error("C-AP {0} has zero aggregate estimate quality")]
    DegenerateChannel(usize),
    #[error("invalid input: {0}")]
    BadInput(String),
}

/// Outcome of the max-min bisection over communication powers.
#[derive(Debug, Clone)]
pub struct BisectionResult {
    /// Achieved max-min SINR, recomputed from the closed form.
    pub t_star: f64,
    pub allocation: PowerAllocation,
    /// Number of feasibility solves performed.
    pub iterations: usize,
    pub feasible: bool,
}

/// Outcome of the sensing-power line search.
#[derive(Debug, Clone)]
pub struct SenPowerResult {
    pub eta_sen: Vec<f64>,
    /// Achieved min SINR, recomputed from the closed form.
    pub rho_star: f64,
    pub feasible: bool,
}

/// Outcome of the alternating power-control loop.
#[derive(Debug, Clone)]
pub struct AoOutcome {
    pub allocation: PowerAllocation,
    /// Min-SINR after initialization and after each outer iteration.
    pub trace: Vec<f64>,
    pub feasible: bool,
}

/// Full-power baseline: every C-AP spends its whole budget with equal
/// coefficients across users, every S-AP probes at full power.
pub fn npc_allocation(
    net: &NetworkRealization,
    a: &ModeAssignment,
    config: &SystemConfig,
) -> Result<PowerAllocation, PowerError> {
    let mut p = PowerAllocation::zeros(config.m, config.k_d);
    for m in 0..config.m {
        if a.is_com(m) {
            let sum_gamma: f64 = net.gamma[m].iter().sum();
            if sum_gamma <= 0.0 {
                return Err(PowerError::DegenerateChannel(m));
            }
            let eta = 1.0 / (config.n as f64 * sum_gamma);
            p.eta_com[m].iter_mut().for_each(|v| *v = eta);
        } else {
            p.eta_sen[m] = 1.0;
        }
    }
    Ok(p)
}

/// Min over users of the closed-form SINR.
pub fn min_sinr(
    net: &NetworkRealization,
    a: &ModeAssignment,
    p: &PowerAllocation,
    config: &SystemConfig,
) -> f64 {
    (0..config.k_d)
        .map(|k| metrics::sinr_closed_form(net, a, p, k, config))
        .fold(f64::INFINITY, f64::min)
}

/// Relative slack used when auditing solver output against the original
/// constraints. Kept well below every acceptance tolerance.
const AUDIT_RTOL: f64 = 1e-9;

/// The communication-power feasibility subproblem at a given SINR level.
///
/// Variables are per-C-AP: `sigma_jk = sqrt(eta_jk * gamma_jk)` (so the
/// per-AP budget reads `||sigma_j|| <= upsilon_j`) followed by the per-AP
/// power slack `upsilon_j`. All constraint rows are rescaled to O(1).
struct ComSubproblem<'a> {
    net: &'a NetworkRealization,
    a: &'a ModeAssignment,
    config: &'a SystemConfig,
    com: Vec<usize>,
    /// Fixed sensing budget `sum (1-a_m) eta_m`.
    sen_budget: f64,
    /// Noise-plus-sensing floor per user, in the normalized units where the
    /// per-user constraint is a second-order cone.
    phi: Vec<f64>,
    /// Per-user row scale.
    scale: Vec<f64>,
    eta_sen: Vec<f64>,
}

impl<'a> ComSubproblem<'a> {
    fn new(
        net: &'a NetworkRealization,
        a: &'a ModeAssignment,
        eta_sen: &[f64],
        config: &'a SystemConfig,
    ) -> Result<Self, PowerError> {
        let com = a.com_indices();
        if com.is_empty() {
            return Err(PowerError::NoComAps);
        }
        if eta_sen.len() != config.m {
            return Err(PowerError::BadInput("eta_sen has wrong length".into()));
        }
        for m in 0..config.m {
            let cap = if a.is_com(m) { 0.0 } else { 1.0 };
            if eta_sen[m] < -AUDIT_RTOL || eta_sen[m] > cap + AUDIT_RTOL {
                return Err(PowerError::BadInput(format!(
                    "eta_sen[{m}] = {} violates the per-AP cap",
                    eta_sen[m]
                )));
            }
        }
        let nf = config.n as f64;
        let sen_budget: f64 = a.sen_indices().iter().map(|&m| eta_sen[m]).sum();
        let mut phi = Vec::with_capacity(config.k_d);
        let mut scale = Vec::with_capacity(config.k_d);
        for k in 0..config.k_d {
            let sensing: f64 = a
                .sen_indices()
                .iter()
                .map(|&m| eta_sen[m] * net.beta[m][k])
                .sum();
            let p = sensing / (nf * nf) + 1.0 / (config.rho * nf * nf);
            phi.push(p);
            // upsilon is capped at 1/sqrt(N), so the interference entries are
            // bounded by beta/N^2 each
            let interference_cap: f64 = com.iter().map(|&m| net.beta[m][k] / (nf * nf)).sum();
            scale.push((p + interference_cap).sqrt());
        }
        Ok(ComSubproblem {
            net,
            a,
            config,
            com,
            sen_budget,
            phi,
            scale,
            eta_sen: eta_sen.to_vec(),
        })
    }

    fn num_vars(&self) -> usize {
        self.com.len() * (self.config.k_d + 1)
    }

    fn sigma_index(&self, j: usize, k: usize) -> usize {
        j * self.config.k_d + k
    }

    fn upsilon_index(&self, j: usize) -> usize {
        self.com.len() * self.config.k_d + j
    }

    /// Assembles the constraint blocks for SINR level `t` (`t <= 0` drops the
    /// per-user cones, leaving the trivially satisfiable remainder).
    fn problem(&self, t: f64) -> FeasibilityProblem {
        let cfg = self.config;
        let nf = cfg.n as f64;
        let mc = self.com.len();
        let n = self.num_vars();
        let literal = cfg.literal_constraint_21d;
        let mut blocks = Vec::new();

        if t > 0.0 {
            for k in 0..cfg.k_d {
                let mut rows = vec![vec![0.0; n]; mc + 2];
                let mut offset = vec![0.0; mc + 2];
                for (j, &m) in self.com.iter().enumerate() {
                    let coeff = if literal {
                        // variables are theta directly
                        self.net.gamma[m][k]
                    } else {
                        self.net.gamma[m][k].sqrt()
                    };
                    rows[0][self.sigma_index(j, k)] = coeff / (t.sqrt() * self.scale[k]);
                    rows[1 + j][self.upsilon_index(j)] =
                        (self.net.beta[m][k] / nf).sqrt() / self.scale[k];
                }
                offset[mc + 1] = self.phi[k].sqrt() / self.scale[k];
                blocks.push(Block {
                    set: ConvexSet::Soc,
                    rows,
                    offset,
                });
            }
        }

        if cfg.kappa > 0.0 {
            let mut rows = vec![vec![0.0; n]; mc];
            for j in 0..mc {
                rows[j][self.upsilon_index(j)] = 1.0;
            }
            blocks.push(Block {
                set: ConvexSet::Ball {
                    radius: (self.sen_budget / cfg.kappa).sqrt(),
                },
                rows,
                offset: vec![0.0; mc],
            });
        }

        for (j, &m) in self.com.iter().enumerate() {
            let mut rows = vec![vec![0.0; n]; cfg.k_d + 1];
            rows[0][self.upsilon_index(j)] = 1.0;
            for k in 0..cfg.k_d {
                let _ = m;
                rows[1 + k][self.sigma_index(j, k)] = 1.0;
            }
            blocks.push(Block {
                set: ConvexSet::Soc,
                rows,
                offset: vec![0.0; cfg.k_d + 1],
            });
        }

        // non-negativity and the upsilon cap
        let mut lo = vec![0.0; n];
        let mut hi = vec![f64::INFINITY; n];
        let mut rows = vec![vec![0.0; n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for j in 0..mc {
            hi[self.upsilon_index(j)] = 1.0 / nf.sqrt();
            let _ = &mut lo;
        }
        blocks.push(Block {
            set: ConvexSet::Box { lo, hi },
            rows,
            offset: vec![0.0; n],
        });

        FeasibilityProblem { n, blocks }
    }

    /// Maps a solver point back to a full allocation (with the fixed sensing
    /// powers attached).
    fn allocation_from(&self, x: &[f64]) -> PowerAllocation {
        let cfg = self.config;
        let mut p = PowerAllocation::zeros(cfg.m, cfg.k_d);
        p.eta_sen.copy_from_slice(&self.eta_sen);
        for (j, &m) in self.com.iter().enumerate() {
            for k in 0..cfg.k_d {
                let v = x[self.sigma_index(j, k)].max(0.0);
                p.eta_com[m][k] = if cfg.literal_constraint_21d {
                    v * v
                } else if self.net.gamma[m][k] > 0.0 {
                    v * v / self.net.gamma[m][k]
                } else {
                    0.0
                };
            }
        }
        p
    }

    /// Allocation from a solver point, repaired so the power-cap and MASR
    /// families hold exactly: per-AP powers are scaled onto the cap and the
    /// whole communication allocation onto the MASR budget. Near the optimum
    /// the iterate hovers within solver tolerance of these boundaries, and
    /// the tiny rescaling only perturbs the achieved SINR level.
    fn repaired_allocation(&self, x: &[f64]) -> PowerAllocation {
        let cfg = self.config;
        let nf = cfg.n as f64;
        let mut p = self.allocation_from(x);
        if cfg.literal_constraint_21d {
            return p;
        }
        for &m in &self.com {
            let used: f64 = (0..cfg.k_d)
                .map(|k| p.eta_com[m][k] * self.net.gamma[m][k])
                .sum();
            if used > 1.0 / nf {
                let scale = 1.0 / (nf * used);
                p.eta_com[m].iter_mut().for_each(|v| *v *= scale);
            }
        }
        if cfg.kappa > 0.0 {
            let com_term: f64 = self
                .com
                .iter()
                .map(|&m| {
                    (0..cfg.k_d)
                        .map(|k| p.eta_com[m][k] * self.net.gamma[m][k])
                        .sum::<f64>()
                })
                .sum();
            if cfg.kappa * com_term > self.sen_budget {
                let scale = self.sen_budget / (cfg.kappa * com_term);
                for &m in &self.com {
                    p.eta_com[m].iter_mut().for_each(|v| *v *= scale);
                }
            }
        }
        p
    }

    /// Independent feasibility audit of a candidate point: repairs the hard
    /// constraint families exactly, then checks the closed-form SINR level.
    /// The level tolerance is absorbed downstream because the achieved
    /// max-min value is always recomputed from the accepted point.
    fn point_is_feasible(&self, x: &[f64], t: f64) -> bool {
        let cfg = self.config;
        if cfg.literal_constraint_21d {
            return self.literal_point_is_feasible(x, t);
        }
        if t <= 0.0 {
            return true;
        }
        let p = self.repaired_allocation(x);
        (0..cfg.k_d)
            .all(|k| metrics::sinr_closed_form(self.net, self.a, &p, k, cfg) >= t * (1.0 - 1e-6))
    }

    /// Audit for the as-printed constraint set (no estimate-quality weighting
    /// in the per-AP split), evaluated directly on `(theta, upsilon)`.
    fn literal_point_is_feasible(&self, x: &[f64], t: f64) -> bool {
        let cfg = self.config;
        let nf = cfg.n as f64;
        let mc = self.com.len();
        let tol = AUDIT_RTOL;
        for j in 0..mc {
            let upsilon = x[self.upsilon_index(j)];
            if !(-tol..=1.0 / nf.sqrt() + tol).contains(&upsilon) {
                return false;
            }
            let theta_sq: f64 = (0..cfg.k_d)
                .map(|k| x[self.sigma_index(j, k)].max(0.0).powi(2))
                .sum();
            if theta_sq > upsilon * upsilon * (1.0 + tol) + f64::MIN_POSITIVE {
                return false;
            }
        }
        if cfg.kappa > 0.0 {
            let upsilon_sq: f64 = (0..mc).map(|j| x[self.upsilon_index(j)].powi(2)).sum();
            if cfg.kappa * upsilon_sq > self.sen_budget * (1.0 + tol) + f64::MIN_POSITIVE {
                return false;
            }
        }
        if t > 0.0 {
            for k in 0..cfg.k_d {
                let gain: f64 = self
                    .com
                    .iter()
                    .enumerate()
                    .map(|(j, &m)| x[self.sigma_index(j, k)].max(0.0) * self.net.gamma[m][k])
                    .sum();
                let interference: f64 = self
                    .com
                    .iter()
                    .enumerate()
                    .map(|(j, &m)| {
                        self.net.beta[m][k] / nf * x[self.upsilon_index(j)].powi(2)
                    })
                    .sum();
                if gain * gain < t * (interference + self.phi[k]) * (1.0 - tol) {
                    return false;
                }
            }
        }
        true
    }
}

/// Writes the communication feasibility program at level `t` in the
/// plain-text dump format, for cross-checking with external solvers.
pub fn dump_com_feasibility<W: Write>(
    net: &NetworkRealization,
    a: &ModeAssignment,
    eta_sen: &[f64],
    t: f64,
    config: &SystemConfig,
    w: &mut W,
) -> Result<(), PowerError> {
    let sub = ComSubproblem::new(net, a, eta_sen, config)?;
    sub.problem(t)
        .dump(w)
        .map_err(|e| PowerError::BadInput(e.to_string()))
}

fn solver_options(config: &SystemConfig) -> SolverOptions {
    SolverOptions {
        tol: config.solver_tolerance,
        max_iterations: config.max_solver_iterations,
        ..SolverOptions::default()
    }
}

/// Interference-free upper bound on the achievable min SINR: each user served
/// at the full per-AP budget with no interference and unit noise.
fn sinr_upper_bound(net: &NetworkRealization, a: &ModeAssignment, config: &SystemConfig) -> f64 {
    let nf = config.n as f64;
    (0..config.k_d)
        .map(|k| {
            let gain: f64 = a
                .com_indices()
                .iter()
                .map(|&m| (net.gamma[m][k] / nf).sqrt())
                .sum();
            config.rho * nf * nf * gain * gain
        })
        .fold(f64::INFINITY, f64::min)
}

/// Max-min SINR over the communication powers with the sensing powers fixed:
/// bisection on the SINR level, solving one convex feasibility program per
/// probe. An optional `start` supplies a known-feasible allocation so the
/// search can begin at its value instead of zero.
pub fn bisect_com_powers(
    net: &NetworkRealization,
    a: &ModeAssignment,
    eta_sen: &[f64],
    config: &SystemConfig,
    start: Option<&PowerAllocation>,
) -> Result<BisectionResult, PowerError> {
    let sub = ComSubproblem::new(net, a, eta_sen, config)?;
    let opts = solver_options(config);

    let mut best_allocation = match start {
        Some(p) => {
            let mut p = p.clone();
            p.eta_sen.copy_from_slice(eta_sen);
            p
        }
        None => {
            let mut p = PowerAllocation::zeros(config.m, config.k_d);
            p.eta_sen.copy_from_slice(eta_sen);
            p
        }
    };
    let mut t_lo = min_sinr(net, a, &best_allocation, config);
    let t_hi = sinr_upper_bound(net, a, config);
    if !(t_hi > t_lo) {
        return Ok(BisectionResult {
            t_star: t_lo,
            allocation: best_allocation,
            iterations: 0,
            feasible: true,
        });
    }

    // relative termination: the interference-free start bracket can sit
    // orders of magnitude above the optimum, so an absolute epsilon taken
    // from the initial range would leave a large relative error
    let mut t_hi = t_hi;
    let mut iterations = 0;
    let mut warm = WarmStart::default();
    while t_hi - t_lo > config.epsilon_bisection * t_hi {
        let t = (t_lo + t_hi) / 2.0;
        let problem = sub.problem(t);
        let was_warm = !warm.is_fresh();
        let mut outcome = feasibility::solve(&problem, &opts, Some(&mut warm), |x| {
            sub.point_is_feasible(x, t)
        });
        if was_warm && matches!(outcome.status, SolveStatus::Infeasible { .. }) {
            // stale warm-start state can strand the iteration; retry cold
            // before trusting an infeasibility verdict
            warm.clear();
            outcome = feasibility::solve(&problem, &opts, Some(&mut warm), |x| {
                sub.point_is_feasible(x, t)
            });
        }
        iterations += 1;
        match outcome.status {
            SolveStatus::Feasible => {
                best_allocation = sub.repaired_allocation(&outcome.point);
                t_lo = t;
            }
            SolveStatus::Infeasible { .. } => t_hi = t,
        }
    }

    Ok(BisectionResult {
        t_star: min_sinr(net, a, &best_allocation, config),
        allocation: best_allocation,
        iterations,
        feasible: true,
    })
}

/// Sensing-power subproblem for fixed communication powers: line search on
/// the achieved min SINR; each probe is a linear feasibility program in the
/// sensing coefficients, solved by the same projection machinery.
pub fn optimize_sen_powers(
    net: &NetworkRealization,
    a: &ModeAssignment,
    eta_com: &Vec<Vec<f64>>,
    config: &SystemConfig,
) -> Result<SenPowerResult, PowerError> {
    if eta_com.len() != config.m || eta_com.iter().any(|r| r.len() != config.k_d) {
        return Err(PowerError::BadInput("eta_com has wrong dimensions".into()));
    }
    let sen = a.sen_indices();
    let ms = sen.len();
    let com_term: f64 = a
        .com_indices()
        .iter()
        .map(|&m| {
            (0..config.k_d)
                .map(|k| eta_com[m][k] * net.gamma[m][k])
                .sum::<f64>()
        })
        .sum();
    let s_min = config.kappa * com_term;

    let eval = |eta_sen: &[f64]| {
        let p = PowerAllocation {
            eta_com: eta_com.clone(),
            eta_sen: eta_sen.to_vec(),
        };
        min_sinr(net, a, &p, config)
    };

    if s_min <= 0.0 {
        // sensing power only adds interference; zero is exactly optimal
        let eta_sen = vec![0.0; config.m];
        let rho_star = eval(&eta_sen);
        return Ok(SenPowerResult {
            eta_sen,
            rho_star,
            feasible: true,
        });
    }
    if s_min > ms as f64 * (1.0 + AUDIT_RTOL) {
        // even full power at every S-AP cannot reach the MASR target
        return Ok(SenPowerResult {
            eta_sen: vec![0.0; config.m],
            rho_star: 0.0,
            feasible: false,
        });
    }

    // uniform split meets the MASR bound with equality; always feasible here
    let uniform = s_min / ms as f64;
    let mut best = vec![0.0; config.m];
    for &m in &sen {
        best[m] = uniform.min(1.0);
    }
    let mut best_value = eval(&best);

    // per-user data for the probe constraints, in raw SINR units:
    // rho * sum_sen eta_m beta_mk <= num_k / rho_level - den0_k
    let nf = config.n as f64;
    let mut num = Vec::with_capacity(config.k_d);
    let mut den0 = Vec::with_capacity(config.k_d);
    for k in 0..config.k_d {
        let gain: f64 = a
            .com_indices()
            .iter()
            .map(|&m| eta_com[m][k].max(0.0).sqrt() * net.gamma[m][k])
            .sum();
        num.push(config.rho * nf * nf * gain * gain);
        let interference: f64 = a
            .com_indices()
            .iter()
            .map(|&m| {
                (0..config.k_d)
                    .map(|kp| eta_com[m][kp] * net.gamma[m][kp] * net.beta[m][k])
                    .sum::<f64>()
            })
            .sum();
        den0.push(config.rho * nf * interference + 1.0);
    }
    let rho_cap = (0..config.k_d)
        .map(|k| num[k] / den0[k])
        .fold(f64::INFINITY, f64::min);
    if !(rho_cap > best_value) {
        return Ok(SenPowerResult {
            eta_sen: best,
            rho_star: best_value,
            feasible: true,
        });
    }

    let opts = solver_options(config);
    let mut lo = best_value;
    let mut hi = rho_cap;
    let mut warm = WarmStart::default();
    while hi - lo > config.epsilon_bisection * hi {
        let level = (lo + hi) / 2.0;
        // slack available for sensing interference at each user
        let slack: Vec<f64> = (0..config.k_d).map(|k| num[k] / level - den0[k]).collect();
        if slack.iter().any(|&s| s < 0.0) {
            hi = level;
            continue;
        }
        let row_scale: Vec<f64> = (0..config.k_d)
            .map(|k| {
                let w = sen
                    .iter()
                    .map(|&m| net.beta[m][k])
                    .fold(0.0f64, f64::max);
                config.rho * w.max(f64::MIN_POSITIVE)
            })
            .collect();

        let n = ms;
        let mut blocks = Vec::new();
        // box 0 <= eta <= 1
        let mut rows = vec![vec![0.0; n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        blocks.push(Block {
            set: ConvexSet::Box {
                lo: vec![0.0; n],
                hi: vec![1.0; n],
            },
            rows,
            offset: vec![0.0; n],
        });
        // MASR lower bound: sum eta >= s_min
        blocks.push(Block {
            set: ConvexSet::Box {
                lo: vec![s_min / ms as f64],
                hi: vec![f64::INFINITY],
            },
            rows: vec![vec![1.0 / ms as f64; n]],
            offset: vec![0.0],
        });
        // per-user interference caps
        for k in 0..config.k_d {
            let row: Vec<f64> = sen
                .iter()
                .map(|&m| config.rho * net.beta[m][k] / row_scale[k])
                .collect();
            blocks.push(Block {
                set: ConvexSet::Box {
                    lo: vec![f64::NEG_INFINITY],
                    hi: vec![slack[k] / row_scale[k]],
                },
                rows: vec![row],
                offset: vec![0.0],
            });
        }
        let problem = FeasibilityProblem { n, blocks };

        let check = |x: &[f64]| {
            if x.iter().any(|&v| v < -AUDIT_RTOL || v > 1.0 + AUDIT_RTOL) {
                return false;
            }
            let total: f64 = x.iter().sum();
            if total < s_min * (1.0 - AUDIT_RTOL) {
                return false;
            }
            for k in 0..config.k_d {
                let load: f64 = sen
                    .iter()
                    .zip(x)
                    .map(|(&m, &v)| config.rho * net.beta[m][k] * v.max(0.0))
                    .sum();
                if load > slack[k] * (1.0 + AUDIT_RTOL) + f64::MIN_POSITIVE {
                    return false;
                }
            }
            true
        };

        let was_warm = !warm.is_fresh();
        let mut outcome = feasibility::solve(&problem, &opts, Some(&mut warm), check);
        if was_warm && matches!(outcome.status, SolveStatus::Infeasible { .. }) {
            warm.clear();
            outcome = feasibility::solve(&problem, &opts, Some(&mut warm), check);
        }
        match outcome.status {
            SolveStatus::Feasible => {
                let mut eta_sen = vec![0.0; config.m];
                for (i, &m) in sen.iter().enumerate() {
                    eta_sen[m] = outcome.point[i].clamp(0.0, 1.0);
                }
                let value = eval(&eta_sen);
                if value > best_value {
                    best = eta_sen;
                    best_value = value;
                }
                lo = level;
            }
            SolveStatus::Infeasible { .. } => hi = level,
        }
    }

    Ok(SenPowerResult {
        eta_sen: best,
        rho_star: best_value,
        feasible: true,
    })
}

/// Alternating optimization of communication and sensing powers, initialized
/// from NPC. Each subproblem keeps the previous iterate when it cannot
/// improve on it, so the min-SINR trace is non-decreasing by construction.
pub fn alternating_optimization(
    net: &NetworkRealization,
    a: &ModeAssignment,
    config: &SystemConfig,
) -> Result<AoOutcome, PowerError> {
    let npc = npc_allocation(net, a, config)?;
    if a.num_com() == 0 || !metrics::masr_met(net, a, &npc, config.kappa) {
        return Ok(AoOutcome {
            allocation: npc,
            trace: Vec::new(),
            feasible: false,
        });
    }

    let mut allocation = npc;
    let mut objective = min_sinr(net, a, &allocation, config);
    let mut trace = vec![objective];

    for _ in 0..config.max_ao_iterations {
        // communication step
        let com_result =
            bisect_com_powers(net, a, &allocation.eta_sen, config, Some(&allocation))?;
        if com_result.t_star > objective {
            allocation = com_result.allocation;
            objective = com_result.t_star;
        }

        // sensing step
        let sen_result = optimize_sen_powers(net, a, &allocation.eta_com, config)?;
        if sen_result.feasible && sen_result.rho_star > objective {
            allocation.eta_sen = sen_result.eta_sen;
            objective = sen_result.rho_star;
        }

        let previous = *trace.last().expect("trace is non-empty");
        trace.push(objective);
        if objective - previous <= config.ao_tolerance * previous.max(1.0) {
            break;
        }
    }

    Ok(AoOutcome {
        allocation,
        trace,
        feasible: true,
    })
}
