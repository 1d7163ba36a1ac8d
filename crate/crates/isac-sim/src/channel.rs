//! Small-scale channel realizations, estimate/error decomposition and the
//! beamforming vectors. Only the Monte Carlo oracle needs any of this; the
//! closed-form metrics work from `beta`/`gamma` alone.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::SystemConfig;
use crate::topology::NetworkRealization;

/// True channels and their MMSE estimate/error split, `g = g_hat + g_tilde`.
///
/// Estimates are drawn straight from their posterior distribution
/// (`CN(0, gamma I)`) with an independent error of variance `beta - gamma`,
/// which is distributionally identical to running the pilot-based estimator
/// under orthogonal pilots.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub g: Vec<Vec<Vec<Complex64>>>,
    pub g_hat: Vec<Vec<Vec<Complex64>>>,
    pub g_tilde: Vec<Vec<Vec<Complex64>>>,
}

/// Precoders actually transmitted: conjugate precoding towards each user and
/// a unit-norm steer towards the target for sensing APs.
#[derive(Debug, Clone)]
pub struct Beamformers {
    pub t_com: Vec<Vec<Vec<Complex64>>>,
    pub t_sen: Vec<Vec<Complex64>>,
}

/// Uniform-linear-array response; the q-th entry is
/// `exp(j 2 pi (d/lambda) (q-1) sin(el) sin(az)) / sqrt(N)`.
pub fn array_response(azimuth: f64, elevation: f64, n: usize, spacing_ratio: f64) -> Vec<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    let step = 2.0 * std::f64::consts::PI * spacing_ratio * elevation.sin() * azimuth.sin();
    (0..n)
        .map(|q| Complex64::from_polar(scale, step * q as f64))
        .collect()
}

/// One complex Gaussian entry of the given variance: two independent real
/// normals scaled by `sqrt(variance/2)`.
fn complex_normal<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Complex64 {
    let s = (variance / 2.0).max(0.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Draws one small-scale realization for every AP-user pair.
pub fn draw_channels<R: Rng + ?Sized>(
    net: &NetworkRealization,
    config: &SystemConfig,
    rng: &mut R,
) -> ChannelRealization {
    let m_count = net.beta.len();
    let k_count = net.beta.first().map_or(0, |row| row.len());
    let n = config.n;
    let mut g = vec![vec![Vec::new(); k_count]; m_count];
    let mut g_hat = vec![vec![Vec::new(); k_count]; m_count];
    let mut g_tilde = vec![vec![Vec::new(); k_count]; m_count];
    for m in 0..m_count {
        for k in 0..k_count {
            let gamma = net.gamma[m][k];
            let err_var = (net.beta[m][k] - gamma).max(0.0);
            let hat: Vec<Complex64> = (0..n).map(|_| complex_normal(gamma, rng)).collect();
            let tilde: Vec<Complex64> = (0..n).map(|_| complex_normal(err_var, rng)).collect();
            g[m][k] = hat.iter().zip(&tilde).map(|(a, b)| a + b).collect();
            g_hat[m][k] = hat;
            g_tilde[m][k] = tilde;
        }
    }
    ChannelRealization { g, g_hat, g_tilde }
}

/// Conjugate precoders from the estimates plus the sensing steers from the
/// per-AP target angles.
pub fn build_beamformers(
    ch: &ChannelRealization,
    net: &NetworkRealization,
    config: &SystemConfig,
) -> Beamformers {
    let t_com = ch
        .g_hat
        .iter()
        .map(|row| row.iter().map(|v| v.iter().map(Complex64::conj).collect()).collect())
        .collect();
    let t_sen = net
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
    Beamformers { t_com, t_sen }
}

pub fn inner_product(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::topology::place_network;

    #[test]
    fn array_response_single_antenna() {
        let v = array_response(1.2, 0.7, 1, 0.5);
        assert_eq!(v, vec![Complex64::new(1.0, 0.0)]);
    }

    #[test]
    fn array_response_zero_elevation_collapses_phases() {
        let v = array_response(0.9, 0.0, 4, 0.5);
        for entry in v {
            assert!((entry - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn array_response_broadside_two_element() {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let v = array_response(half_pi, half_pi, 2, 0.5);
        let r = 1.0 / 2f64.sqrt();
        assert!((v[0] - Complex64::new(r, 0.0)).norm() < 1e-12);
        assert!((v[1] - Complex64::new(-r, 0.0)).norm() < 1e-12);
    }

    fn small_net() -> (crate::config::SystemConfig, NetworkRealization) {
        let mut cfg = crate::config::SystemConfig::default();
        cfg.m = 2;
        cfg.n = 3;
        cfg.k_d = 2;
        cfg.tau_t = 2;
        let net = place_network(&cfg, &mut stream(9, 0));
        (cfg, net)
    }

    #[test]
    fn decomposition_identity_holds_exactly() {
        let (cfg, net) = small_net();
        let ch = draw_channels(&net, &cfg, &mut stream(9, 1));
        for m in 0..cfg.m {
            for k in 0..cfg.k_d {
                for q in 0..cfg.n {
                    let sum = ch.g_hat[m][k][q] + ch.g_tilde[m][k][q];
                    assert_eq!(ch.g[m][k][q], sum);
                }
            }
        }
    }

    #[test]
    fn perfect_estimation_leaves_no_error() {
        let (cfg, mut net) = small_net();
        for m in 0..cfg.m {
            for k in 0..cfg.k_d {
                net.gamma[m][k] = net.beta[m][k];
            }
        }
        let ch = draw_channels(&net, &cfg, &mut stream(9, 2));
        for row in &ch.g_tilde {
            for v in row {
                assert!(v.iter().all(|c| c.norm() == 0.0));
            }
        }
    }

    #[test]
    fn sensing_beamformers_have_unit_norm_and_full_self_gain() {
        let (cfg, net) = small_net();
        let ch = draw_channels(&net, &cfg, &mut stream(9, 3));
        let bf = build_beamformers(&ch, &net, &cfg);
        for t in &bf.t_sen {
            let norm: f64 = t.iter().map(|c| c.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            let self_gain: Complex64 = t.iter().map(|c| c.conj() * c).sum();
            assert!((self_gain.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_moments_match_statistics() {
        // E||g_hat||^2 = N*gamma, E||g||^2 = N*beta, E{g^T conj(g_hat)} = N*gamma
        let (cfg, net) = small_net();
        let mut rng = stream(9, 4);
        let trials = 100_000;
        let (m, k) = (0, 1);
        let mut hat_energy = 0.0;
        let mut g_energy = 0.0;
        let mut ds = Complex64::new(0.0, 0.0);
        for _ in 0..trials {
            let ch = draw_channels(&net, &cfg, &mut rng);
            hat_energy += ch.g_hat[m][k].iter().map(|c| c.norm_sqr()).sum::<f64>();
            g_energy += ch.g[m][k].iter().map(|c| c.norm_sqr()).sum::<f64>();
            let conj: Vec<Complex64> = ch.g_hat[m][k].iter().map(Complex64::conj).collect();
            ds += inner_product(&ch.g[m][k], &conj);
        }
        let nf = cfg.n as f64;
        let hat_mean = hat_energy / trials as f64;
        let g_mean = g_energy / trials as f64;
        let ds_mean = ds / trials as f64;
        assert!((hat_mean - nf * net.gamma[m][k]).abs() / (nf * net.gamma[m][k]) < 0.02);
        assert!((g_mean - nf * net.beta[m][k]).abs() / (nf * net.beta[m][k]) < 0.02);
        assert!((ds_mean.re - nf * net.gamma[m][k]).abs() / (nf * net.gamma[m][k]) < 0.02);
    }

    #[test]
    fn fourth_moments_match_statistics() {
        // E|g_tilde^T g_hat*|^2 = N*gamma*(beta-gamma), E||g_hat||^4 = N(N+1)gamma^2
        let (cfg, net) = small_net();
        let mut rng = stream(9, 5);
        let trials = 100_000;
        let (m, k) = (1, 0);
        let mut cross = 0.0;
        let mut quartic = 0.0;
        for _ in 0..trials {
            let ch = draw_channels(&net, &cfg, &mut rng);
            let conj: Vec<Complex64> = ch.g_hat[m][k].iter().map(Complex64::conj).collect();
            cross += inner_product(&ch.g_tilde[m][k], &conj).norm_sqr();
            let e: f64 = ch.g_hat[m][k].iter().map(|c| c.norm_sqr()).sum();
            quartic += e * e;
        }
        let nf = cfg.n as f64;
        let gamma = net.gamma[m][k];
        let cross_expect = nf * gamma * (net.beta[m][k] - gamma);
        let quartic_expect = nf * (nf + 1.0) * gamma * gamma;
        assert!((cross / trials as f64 - cross_expect).abs() / cross_expect < 0.03);
        assert!((quartic / trials as f64 - quartic_expect).abs() / quartic_expect < 0.03);
    }
}
