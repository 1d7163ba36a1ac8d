//! Signal-level Monte Carlo verification of the closed-form expressions:
//! empirical DS/BU/IUI/IR moments behind the SINR bound and the empirical
//! spatial power pattern.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{self, array_response};
use crate::config::SystemConfig;
use crate::metrics::{ModeAssignment, PowerAllocation};
use crate::rng::{stream, Stream};
use crate::topology::NetworkRealization;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Compensated (Kahan) accumulator so the parallel reduction is insensitive
/// to chunk boundaries beyond rounding noise.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum
    }
}

/// Trials per worker chunk; fixed so the chunk decomposition (and therefore
/// the RNG stream assignment) never depends on the thread count.
const CHUNK: usize = 2048;

/// Empirical statistics of the received-signal decomposition.
#[derive(Debug, Clone)]
pub struct OracleEstimate {
    /// Per-user empirical mean of the desired-signal coefficient.
    pub ds: Vec<Complex64>,
    pub ds_se: Vec<f64>,
    /// Per-user empirical beamforming-uncertainty power `E|BU_k|^2`.
    pub bu_var: Vec<f64>,
    pub bu_se: Vec<f64>,
    /// Per-pair interference power `E|IUI_kk'|^2`; the diagonal is zero.
    pub iui_var: Vec<Vec<f64>>,
    pub iui_se: Vec<Vec<f64>>,
    /// Per-user sensing-interference power `E|IR_k|^2`.
    pub ir_var: Vec<f64>,
    pub ir_se: Vec<f64>,
    /// Empirical SINR assembled from the moments above with unit noise.
    pub sinr_mc: Vec<f64>,
    pub trials: usize,
}

/// Empirical spatial power pattern at the target, split into the
/// communication-induced and sensing components.
#[derive(Debug, Clone, Copy)]
pub struct PatternEstimate {
    pub p_com: f64,
    pub p_com_se: f64,
    pub p_sen: f64,
    pub p_sen_se: f64,
    pub trials: usize,
}

#[derive(Clone)]
struct SinrAccum {
    ds_re: Vec<Kahan>,
    ds_im: Vec<Kahan>,
    ds_sq: Vec<Kahan>,
    bu: Vec<Kahan>,
    bu_sq: Vec<Kahan>,
    iui: Vec<Vec<Kahan>>,
    iui_sq: Vec<Vec<Kahan>>,
    ir: Vec<Kahan>,
    ir_sq: Vec<Kahan>,
}

impl SinrAccum {
    fn new(k_d: usize) -> Self {
        SinrAccum {
            ds_re: vec![Kahan::default(); k_d],
            ds_im: vec![Kahan::default(); k_d],
            ds_sq: vec![Kahan::default(); k_d],
            bu: vec![Kahan::default(); k_d],
            bu_sq: vec![Kahan::default(); k_d],
            iui: vec![vec![Kahan::default(); k_d]; k_d],
            iui_sq: vec![vec![Kahan::default(); k_d]; k_d],
            ir: vec![Kahan::default(); k_d],
            ir_sq: vec![Kahan::default(); k_d],
        }
    }

    fn merge(&mut self, other: &SinrAccum) {
        let k_d = self.bu.len();
        for k in 0..k_d {
            self.ds_re[k].add(other.ds_re[k].total());
            self.ds_im[k].add(other.ds_im[k].total());
            self.ds_sq[k].add(other.ds_sq[k].total());
            self.bu[k].add(other.bu[k].total());
            self.bu_sq[k].add(other.bu_sq[k].total());
            self.ir[k].add(other.ir[k].total());
            self.ir_sq[k].add(other.ir_sq[k].total());
            for kp in 0..k_d {
                self.iui[k][kp].add(other.iui[k][kp].total());
                self.iui_sq[k][kp].add(other.iui_sq[k][kp].total());
            }
        }
    }
}

fn mean_and_se(sum: f64, sum_sq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Estimates the moments of the received-signal decomposition by drawing
/// `trials` full channel realizations. The desired-signal coefficient is
/// centered on its analytic expectation, matching the bound's construction.
pub fn estimate_sinr_terms(
    net: &NetworkRealization,
    a: &ModeAssignment,
    p: &PowerAllocation,
    config: &SystemConfig,
    trials: usize,
    rng: &mut Stream,
) -> OracleEstimate {
    assert!(trials >= 1_000, "at least 1000 trials required");
    let k_d = config.k_d;
    let sqrt_rho = config.rho.sqrt();
    let nf = config.n as f64;

    // analytic DS used for centering the beamforming-uncertainty term
    let ds_center: Vec<f64> = (0..k_d)
        .map(|k| {
            sqrt_rho
                * nf
                * (0..config.m)
                    .map(|m| a.a(m) * p.eta_com[m][k].max(0.0).sqrt() * net.gamma[m][k])
                    .sum::<f64>()
        })
        .collect();

    let base: u64 = rng.gen();
    let chunks: Vec<(u64, usize)> = (0..trials.div_ceil(CHUNK))
        .map(|c| (c as u64, CHUNK.min(trials - c * CHUNK)))
        .collect();

    let partials: Vec<SinrAccum> = chunks
        .par_iter()
        .map(|&(chunk_id, count)| {
            let mut acc = SinrAccum::new(k_d);
            let mut rng = stream(base, chunk_id);
            for _ in 0..count {
                let ch = channel::draw_channels(net, config, &mut rng);
                let bf = channel::build_beamformers(&ch, net, config);
                for k in 0..k_d {
                    // desired signal and its fluctuation around the mean
                    let mut ds = Complex64::new(0.0, 0.0);
                    for m in 0..config.m {
                        if a.is_com(m) {
                            let w = sqrt_rho * p.eta_com[m][k].max(0.0).sqrt();
                            ds += w * channel::inner_product(&ch.g[m][k], &bf.t_com[m][k]);
                        }
                    }
                    acc.ds_re[k].add(ds.re);
                    acc.ds_im[k].add(ds.im);
                    acc.ds_sq[k].add(ds.norm_sqr());
                    let bu = ds - Complex64::new(ds_center[k], 0.0);
                    let bu_p = bu.norm_sqr();
                    acc.bu[k].add(bu_p);
                    acc.bu_sq[k].add(bu_p * bu_p);

                    // inter-user interference, one coefficient per other user
                    for kp in 0..k_d {
                        if kp == k {
                            continue;
                        }
                        let mut iui = Complex64::new(0.0, 0.0);
                        for m in 0..config.m {
                            if a.is_com(m) {
                                let w = sqrt_rho * p.eta_com[m][kp].max(0.0).sqrt();
                                iui += w * channel::inner_product(&ch.g[m][k], &bf.t_com[m][kp]);
                            }
                        }
                        let iui_p = iui.norm_sqr();
                        acc.iui[k][kp].add(iui_p);
                        acc.iui_sq[k][kp].add(iui_p * iui_p);
                    }

                    // sensing interference
                    let mut ir = Complex64::new(0.0, 0.0);
                    for m in 0..config.m {
                        if !a.is_com(m) {
                            let w = sqrt_rho * p.eta_sen[m].max(0.0).sqrt();
                            ir += w * channel::inner_product(&ch.g[m][k], &bf.t_sen[m]);
                        }
                    }
                    let ir_p = ir.norm_sqr();
                    acc.ir[k].add(ir_p);
                    acc.ir_sq[k].add(ir_p * ir_p);
                }
            }
            acc
        })
        .collect();

    // deterministic fold in chunk order
    let mut acc = SinrAccum::new(k_d);
    for part in &partials {
        acc.merge(part);
    }

    let tf = trials as f64;
    let mut out = OracleEstimate {
        ds: Vec::with_capacity(k_d),
        ds_se: Vec::with_capacity(k_d),
        bu_var: Vec::with_capacity(k_d),
        bu_se: Vec::with_capacity(k_d),
        iui_var: vec![vec![0.0; k_d]; k_d],
        iui_se: vec![vec![0.0; k_d]; k_d],
        ir_var: Vec::with_capacity(k_d),
        ir_se: Vec::with_capacity(k_d),
        sinr_mc: Vec::with_capacity(k_d),
        trials,
    };
    for k in 0..k_d {
        let ds_mean = Complex64::new(acc.ds_re[k].total() / tf, acc.ds_im[k].total() / tf);
        let ds_var = (acc.ds_sq[k].total() / tf - ds_mean.norm_sqr()).max(0.0);
        out.ds.push(ds_mean);
        out.ds_se.push((ds_var / tf).sqrt());
        let (bu, bu_se) = mean_and_se(acc.bu[k].total(), acc.bu_sq[k].total(), trials);
        out.bu_var.push(bu);
        out.bu_se.push(bu_se);
        let (ir, ir_se) = mean_and_se(acc.ir[k].total(), acc.ir_sq[k].total(), trials);
        out.ir_var.push(ir);
        out.ir_se.push(ir_se);
        for kp in 0..k_d {
            if kp == k {
                continue;
            }
            let (v, se) = mean_and_se(acc.iui[k][kp].total(), acc.iui_sq[k][kp].total(), trials);
            out.iui_var[k][kp] = v;
            out.iui_se[k][kp] = se;
        }
        let interference: f64 =
            out.bu_var[k] + out.iui_var[k].iter().sum::<f64>() + out.ir_var[k];
        out.sinr_mc.push(ds_mean.norm_sqr() / (interference + 1.0));
    }
    out
}

/// Estimates the spatial power pattern at the target by transmitting random
/// unit-power Gaussian data/probing symbols and measuring each AP's
/// contribution along the steering vector towards the target.
pub fn estimate_power_pattern(
    net: &NetworkRealization,
    a: &ModeAssignment,
    p: &PowerAllocation,
    config: &SystemConfig,
    trials: usize,
    rng: &mut Stream,
) -> PatternEstimate {
    assert!(trials >= 1_000, "at least 1000 trials required");
    let sqrt_rho = config.rho.sqrt();
    let base: u64 = rng.gen();
    let chunks: Vec<(u64, usize)> = (0..trials.div_ceil(CHUNK))
        .map(|c| (c as u64, CHUNK.min(trials - c * CHUNK)))
        .collect();

    let steers: Vec<Vec<Complex64>> = net
        .target_angles
        .iter()
        .map(|ang| {
            array_response(
                ang.azimuth,
                ang.elevation,
                config.n,
                config.antenna_spacing_over_lambda,
            )
        })
        .collect();

    let partials: Vec<[Kahan; 4]> = chunks
        .par_iter()
        .map(|&(chunk_id, count)| {
            let mut acc = [Kahan::default(); 4];
            let mut rng = stream(base, chunk_id);
            let symbol = |rng: &mut Stream| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re, im) / 2f64.sqrt()
            };
            for _ in 0..count {
                let ch = channel::draw_channels(net, config, &mut rng);
                let bf = channel::build_beamformers(&ch, net, config);
                let data: Vec<Complex64> = (0..config.k_d).map(|_| symbol(&mut rng)).collect();
                let probe = symbol(&mut rng);
                let mut com = 0.0;
                let mut sen = 0.0;
                for m in 0..config.m {
                    // received component of AP m's transmit vector along the
                    // steering vector towards the target
                    if a.is_com(m) {
                        let mut rx = Complex64::new(0.0, 0.0);
                        for k in 0..config.k_d {
                            let gain: Complex64 = steers[m]
                                .iter()
                                .zip(&bf.t_com[m][k])
                                .map(|(s, t)| s.conj() * t)
                                .sum();
                            rx += sqrt_rho * p.eta_com[m][k].max(0.0).sqrt() * gain * data[k];
                        }
                        com += rx.norm_sqr();
                    } else {
                        let gain: Complex64 = steers[m]
                            .iter()
                            .zip(&bf.t_sen[m])
                            .map(|(s, t)| s.conj() * t)
                            .sum();
                        let rx = sqrt_rho * p.eta_sen[m].max(0.0).sqrt() * gain * probe;
                        sen += rx.norm_sqr();
                    }
                }
                acc[0].add(com);
                acc[1].add(com * com);
                acc[2].add(sen);
                acc[3].add(sen * sen);
            }
            acc
        })
        .collect();

    let mut total = [Kahan::default(); 4];
    for part in &partials {
        for i in 0..4 {
            total[i].add(part[i].total());
        }
    }
    let (p_com, p_com_se) = mean_and_se(total[0].total(), total[1].total(), trials);
    let (p_sen, p_sen_se) = mean_and_se(total[2].total(), total[3].total(), trials);
    PatternEstimate {
        p_com,
        p_com_se,
        p_sen,
        p_sen_se,
        trials,
    }
}
