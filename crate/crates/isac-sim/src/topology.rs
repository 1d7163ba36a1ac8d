//! Network geometry and large-scale fading for one random drop.
//!
//! APs and users land uniformly on a `D x D` square whose edges wrap around,
//! so every pairwise distance is the minimum over the nine torus images.
//! Large-scale coefficients combine a three-slope path loss with log-normal
//! shadowing; shadowing is spatially correlated through a two-component model
//! (one AP-side and one user-side field) and only applies beyond the outer
//! breakpoint, where the slope model stops absorbing it.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::SystemConfig;
use crate::linalg;

/// Planar position in km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x_km: f64,
    pub y_km: f64,
}

impl Point {
    /// Signed minimum-image displacement from `self` to `other` on the torus.
    pub fn wrap_displacement(&self, other: &Point, d_km: f64) -> (f64, f64) {
        let wrap = |mut delta: f64| {
            if delta > d_km / 2.0 {
                delta -= d_km;
            } else if delta < -d_km / 2.0 {
                delta += d_km;
            }
            delta
        };
        (wrap(other.x_km - self.x_km), wrap(other.y_km - self.y_km))
    }

    /// Torus (wrap-around) distance in km.
    pub fn torus_distance(&self, other: &Point, d_km: f64) -> f64 {
        let (dx, dy) = self.wrap_displacement(other, d_km);
        (dx * dx + dy * dy).sqrt()
    }
}

/// Azimuth/elevation of departure towards the target, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetAngles {
    pub azimuth: f64,
    pub elevation: f64,
}

/// One random drop: geometry plus the large-scale statistics every closed
/// form needs. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub ap_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    /// `beta[m][k]`: large-scale coefficient AP m -> user k (linear).
    pub beta: Vec<Vec<f64>>,
    /// `gamma[m][k]`: variance of the MMSE channel estimate (linear).
    pub gamma: Vec<Vec<f64>>,
    pub target_angles: Vec<TargetAngles>,
}

/// Three-slope path loss in dB, exactly as the slope model prints it:
/// flat below `d0`, 20 dB/decade between the breakpoints, 35 dB/decade beyond.
pub fn path_loss_db(d_km: f64, config: &SystemConfig) -> f64 {
    let l = config.l_db;
    let d0 = config.d0_km;
    let d1 = config.d1_km;
    if d_km > d1 {
        -l - 35.0 * d_km.log10()
    } else if d_km > d0 {
        -l - 15.0 * d1.log10() - 20.0 * d_km.log10()
    } else {
        -l - 15.0 * d1.log10() - 20.0 * d0.log10()
    }
}

/// Combines path loss with a shadowing draw: `beta = 10^((PL + sigma*z)/10)`.
pub fn large_scale(pl_db: f64, shadow_z: f64, config: &SystemConfig) -> f64 {
    10f64.powf((pl_db + config.sigma_sh_db * shadow_z) / 10.0)
}

/// Variance of the MMSE channel estimate given the channel variance `beta`.
pub fn estimation_variance(beta: f64, config: &SystemConfig) -> f64 {
    let p = config.tau_t as f64 * config.rho_t;
    if beta <= 0.0 {
        return 0.0;
    }
    p * beta * beta / (p * beta + 1.0)
}

/// Correlated unit-variance field over a set of positions: covariance decays
/// as `2^(-d/d_decorr)` in the torus distance.
fn correlated_field<R: Rng + ?Sized>(
    positions: &[Point],
    d_km: f64,
    decorr_km: f64,
    rng: &mut R,
) -> Vec<f64> {
    let n = positions.len();
    let mut cov = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = positions[i].torus_distance(&positions[j], d_km);
            cov[i * n + j] = 2f64.powf(-d / decorr_km);
        }
    }
    let w: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    match linalg::cholesky(&cov, n) {
        Some(l) => linalg::lower_mul(&l, n, &w),
        // kernel not factorizable even with jitter; fall back to i.i.d.
        None => w,
    }
}

/// Places one random drop and fills in all large-scale statistics.
pub fn place_network<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> NetworkRealization {
    let d = config.d_km;
    let uniform = |rng: &mut R| Point {
        x_km: rng.gen::<f64>() * d,
        y_km: rng.gen::<f64>() * d,
    };
    let ap_positions: Vec<Point> = (0..config.m).map(|_| uniform(rng)).collect();
    let user_positions: Vec<Point> = (0..config.k_d).map(|_| uniform(rng)).collect();

    // shadowing fields: z_mk = sqrt(delta)*a_m + sqrt(1-delta)*b_k
    let (a_field, b_field) = if config.correlated_shadowing {
        (
            correlated_field(&ap_positions, d, config.decorrelation_km, rng),
            correlated_field(&user_positions, d, config.decorrelation_km, rng),
        )
    } else {
        (
            (0..config.m).map(|_| StandardNormal.sample(rng)).collect(),
            (0..config.k_d).map(|_| StandardNormal.sample(rng)).collect(),
        )
    };
    let delta = config.shadowing_delta;

    let mut beta = vec![vec![0.0; config.k_d]; config.m];
    let mut gamma = vec![vec![0.0; config.k_d]; config.m];
    for m in 0..config.m {
        for k in 0..config.k_d {
            let dist = ap_positions[m].torus_distance(&user_positions[k], d);
            let pl = path_loss_db(dist, config);
            // shadowing only beyond the outer breakpoint
            let z = if dist > config.d1_km {
                delta.sqrt() * a_field[m] + (1.0 - delta).sqrt() * b_field[k]
            } else {
                0.0
            };
            beta[m][k] = large_scale(pl, z, config);
            gamma[m][k] = estimation_variance(beta[m][k], config);
        }
    }

    let target = Point {
        x_km: config.target_x_km,
        y_km: config.target_y_km,
    };
    let target_angles = ap_positions
        .iter()
        .map(|ap| {
            let (dx, dy) = ap.wrap_displacement(&target, d);
            let horizontal_km = (dx * dx + dy * dy).sqrt();
            let dh_km = (config.target_height_m - config.ap_height_m) / 1000.0;
            TargetAngles {
                azimuth: dy.atan2(dx),
                elevation: dh_km.atan2(horizontal_km),
            }
        })
        .collect();

    NetworkRealization {
        ap_positions,
        user_positions,
        beta,
        gamma,
        target_angles,
    }
}
