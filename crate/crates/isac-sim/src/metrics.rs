//! Closed-form performance metrics: per-user SINR and SE under conjugate
//! precoding, the average spatial power pattern split into its communication
//! and sensing components, and the MASR sensing proxy.

use crate::config::SystemConfig;
use crate::topology::NetworkRealization;

/// Per-AP operation mode: `true` = communication (C-AP), `false` = sensing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeAssignment {
    com: Vec<bool>,
}

impl ModeAssignment {
    pub fn all_sensing(m: usize) -> Self {
        ModeAssignment { com: vec![false; m] }
    }

    pub fn from_flags(com: Vec<bool>) -> Self {
        ModeAssignment { com }
    }

    pub fn len(&self) -> usize {
        self.com.len()
    }

    pub fn is_empty(&self) -> bool {
        self.com.is_empty()
    }

    pub fn is_com(&self, m: usize) -> bool {
        self.com[m]
    }

    pub fn set_com(&mut self, m: usize) {
        self.com[m] = true;
    }

    /// Indicator `a_m` as a float, for the closed forms.
    pub fn a(&self, m: usize) -> f64 {
        if self.com[m] {
            1.0
        } else {
            0.0
        }
    }

    pub fn com_indices(&self) -> Vec<usize> {
        (0..self.com.len()).filter(|&m| self.com[m]).collect()
    }

    pub fn sen_indices(&self) -> Vec<usize> {
        (0..self.com.len()).filter(|&m| !self.com[m]).collect()
    }

    pub fn num_com(&self) -> usize {
        self.com.iter().filter(|&&c| c).count()
    }
}

/// Power control coefficients: `eta_com[m][k]` for communication and
/// `eta_sen[m]` for sensing. Feasibility is audited, never forced.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub eta_com: Vec<Vec<f64>>,
    pub eta_sen: Vec<f64>,
}

impl PowerAllocation {
    pub fn zeros(m: usize, k_d: usize) -> Self {
        PowerAllocation {
            eta_com: vec![vec![0.0; k_d]; m],
            eta_sen: vec![0.0; m],
        }
    }

    pub fn dims_match(&self, m: usize, k_d: usize) -> bool {
        self.eta_sen.len() == m
            && self.eta_com.len() == m
            && self.eta_com.iter().all(|row| row.len() == k_d)
    }
}

/// Everything one (assignment, allocation) pair produces.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub sinr: Vec<f64>,
    pub se: Vec<f64>,
    pub min_se: f64,
    pub masr: f64,
    pub p_com: f64,
    pub p_sen: f64,
    /// Per-AP slack of the power constraints: C-APs report
    /// `1/N - sum_k eta_mk gamma_mk`, S-APs report `1 - eta_m`.
    pub constraint_slacks: Vec<f64>,
}

/// Per-user SINR of the closed-form expression: coherent gain over
/// beamforming uncertainty, inter-user interference, sensing leakage and noise.
pub fn sinr_closed_form(
    net: &NetworkRealization,
    a: &ModeAssignment,
    p: &PowerAllocation,
    k: usize,
    config: &SystemConfig,
) -> f64 {
    let rho = config.rho;
    let n = config.n as f64;
    let mut signal = 0.0;
    let mut interference = 0.0;
    let mut sensing_leakage = 0.0;
    for m in 0..a.len() {
        if a.is_com(m) {
            signal += p.eta_com[m][k].max(0.0).sqrt() * net.gamma[m][k];
            for k_prime in 0..p.eta_com[m].len() {
                interference += p.eta_com[m][k_prime] * net.gamma[m][k_prime] * net.beta[m][k];
            }
        } else {
            sensing_leakage += p.eta_sen[m] * net.beta[m][k];
        }
    }
    let num = rho * n * n * signal * signal;
    let den = rho * n * interference + rho * sensing_leakage + 1.0;
    num / den
}

/// SE in bits/s/Hz including the training-overhead prefactor.
pub fn spectral_efficiency(sinr: f64, config: &SystemConfig) -> f64 {
    config.se_prefactor() * (1.0 + sinr).log2()
}

/// The two components of the average spatial power pattern. Both are
/// independent of the target angles.
pub fn power_pattern(
    net: &NetworkRealization,
    a: &ModeAssignment,
    p: &PowerAllocation,
    config: &SystemConfig,
) -> (f64, f64) {
    let (com_raw, sen_raw) = pattern_terms(net, a, p);
    (config.rho * com_raw, config.rho * sen_raw)
}

/// Un-normalized pattern terms `(sum a eta gamma, sum (1-a) eta)`.
fn pattern_terms(net: &NetworkRealization, a: &ModeAssignment, p: &PowerAllocation) -> (f64, f64) {
    let mut com = 0.0;
    let mut sen = 0.0;
    for m in 0..a.len() {
        if a.is_com(m) {
            for k in 0..p.eta_com[m].len() {
                com += p.eta_com[m][k] * net.gamma[m][k];
            }
        } else {
            sen += p.eta_sen[m];
        }
    }
    (com, sen)
}

/// Sensing-to-communication pattern ratio. `0/0` is defined as 0: with no
/// probing power the sensing requirement is never met for positive targets.
pub fn masr(net: &NetworkRealization, a: &ModeAssignment, p: &PowerAllocation) -> f64 {
    let (com, sen) = pattern_terms(net, a, p);
    if com > 0.0 {
        sen / com
    } else if sen > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Linear form of the MASR constraint:
/// `sum (1-a) eta - kappa * sum a eta gamma >= 0  <=>  masr >= kappa`.
pub fn masr_linear_slack(
    net: &NetworkRealization,
    a: &ModeAssignment,
    p: &PowerAllocation,
    kappa: f64,
) -> f64 {
    let (com, sen) = pattern_terms(net, a, p);
    sen - kappa * com
}

/// Whether the allocation meets the MASR target, using the ratio definition
/// (so an all-sensing assignment is vacuously feasible).
pub fn masr_met(net: &NetworkRealization, a: &ModeAssignment, p: &PowerAllocation, kappa: f64) -> bool {
    masr(net, a, p) >= kappa
}

/// Per-AP slack of the transmit power constraints.
pub fn constraint_slacks(
    net: &NetworkRealization,
    a: &ModeAssignment,
    p: &PowerAllocation,
    config: &SystemConfig,
) -> Vec<f64> {
    let n = config.n as f64;
    (0..a.len())
        .map(|m| {
            if a.is_com(m) {
                let used: f64 = (0..p.eta_com[m].len())
                    .map(|k| p.eta_com[m][k] * net.gamma[m][k])
                    .sum();
                1.0 / n - used
            } else {
                1.0 - p.eta_sen[m]
            }
        })
        .collect()
}

/// Full metrics report for one (assignment, allocation) pair.
pub fn evaluate(
    net: &NetworkRealization,
    a: &ModeAssignment,
    p: &PowerAllocation,
    config: &SystemConfig,
) -> MetricsReport {
    let sinr: Vec<f64> = (0..config.k_d)
        .map(|k| sinr_closed_form(net, a, p, k, config))
        .collect();
    let se: Vec<f64> = sinr.iter().map(|&s| spectral_efficiency(s, config)).collect();
    let min_se = se.iter().cloned().fold(f64::INFINITY, f64::min);
    let (p_com, p_sen) = power_pattern(net, a, p, config);
    MetricsReport {
        masr: masr(net, a, p),
        p_com,
        p_sen,
        constraint_slacks: constraint_slacks(net, a, p, config),
        min_se,
        sinr,
        se,
    }
}
