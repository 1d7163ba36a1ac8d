//! End-to-end acceptance suite. Each test prints one PASS line for its
//! criterion; failures panic with the offending numbers.

use std::sync::OnceLock;

use rand::Rng;

use isac_sim::config::SystemConfig;
use isac_sim::harness::{self, Scheme};
use isac_sim::metrics::{self, ModeAssignment, PowerAllocation};
use isac_sim::oracle::{self, OracleEstimate};
use isac_sim::power;
use isac_sim::rng::stream;
use isac_sim::selection;
use isac_sim::topology::{place_network, NetworkRealization};

fn config(m: usize, n: usize, k_d: usize) -> SystemConfig {
    let mut cfg = SystemConfig::default();
    cfg.m = m;
    cfg.n = n;
    cfg.k_d = k_d;
    cfg.tau_t = k_d;
    cfg
}

/// Random mixed-mode assignment with at least one AP in each mode.
fn mixed_assignment(m: usize, rng: &mut isac_sim::rng::Stream) -> ModeAssignment {
    loop {
        let flags: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.5)).collect();
        let com = flags.iter().filter(|&&c| c).count();
        if com > 0 && com < m {
            return ModeAssignment::from_flags(flags);
        }
    }
}

struct OracleCase {
    cfg: SystemConfig,
    net: NetworkRealization,
    a: ModeAssignment,
    p: PowerAllocation,
    est: OracleEstimate,
}

/// The 20 random instances shared by criteria 1 and 2, evaluated once.
fn oracle_cases() -> &'static Vec<OracleCase> {
    static CASES: OnceLock<Vec<OracleCase>> = OnceLock::new();
    CASES.get_or_init(|| {
        (0..20u64)
            .map(|i| {
                let cfg = config(10, 3, 3);
                let net = place_network(&cfg, &mut stream(1000 + i, 0));
                let a = mixed_assignment(cfg.m, &mut stream(1000 + i, 1));
                let p = power::npc_allocation(&net, &a, &cfg).unwrap();
                let est =
                    oracle::estimate_sinr_terms(&net, &a, &p, &cfg, 100_000, &mut stream(1000 + i, 2));
                OracleCase { cfg, net, a, p, est }
            })
            .collect()
    })
}

#[test]
fn criterion_1_closed_form_sinr_matches_oracle() {
    for (i, case) in oracle_cases().iter().enumerate() {
        for k in 0..case.cfg.k_d {
            let closed = metrics::sinr_closed_form(&case.net, &case.a, &case.p, k, &case.cfg);
            let rel = (case.est.sinr_mc[k] - closed).abs() / closed;
            assert!(
                rel < 0.03,
                "instance {i} user {k}: monte-carlo {} vs closed {closed} (rel {rel})",
                case.est.sinr_mc[k]
            );
        }
    }
    println!("criterion 1: PASS — closed-form SINR within 3% of the oracle on 20 instances");
}

#[test]
fn criterion_2_moment_decomposition_matches_oracle() {
    for (i, case) in oracle_cases().iter().enumerate() {
        let (cfg, net, a, p) = (&case.cfg, &case.net, &case.a, &case.p);
        let nf = cfg.n as f64;
        for k in 0..cfg.k_d {
            let ds_closed: f64 = cfg.rho.sqrt()
                * nf
                * (0..cfg.m)
                    .map(|m| a.a(m) * p.eta_com[m][k].sqrt() * net.gamma[m][k])
                    .sum::<f64>();
            let ds_rel = (case.est.ds[k].re - ds_closed).abs() / ds_closed;
            assert!(ds_rel < 0.03, "instance {i} user {k}: DS rel {ds_rel}");

            let bu_closed: f64 = (0..cfg.m)
                .map(|m| a.a(m) * cfg.rho * nf * p.eta_com[m][k] * net.gamma[m][k] * net.beta[m][k])
                .sum();
            let bu_rel = (case.est.bu_var[k] - bu_closed).abs() / bu_closed;
            assert!(bu_rel < 0.03, "instance {i} user {k}: BU rel {bu_rel}");

            for kp in 0..cfg.k_d {
                if kp == k {
                    continue;
                }
                let iui_closed: f64 = (0..cfg.m)
                    .map(|m| {
                        a.a(m) * cfg.rho * nf * p.eta_com[m][kp] * net.gamma[m][kp] * net.beta[m][k]
                    })
                    .sum();
                let rel = (case.est.iui_var[k][kp] - iui_closed).abs() / iui_closed;
                assert!(rel < 0.03, "instance {i} pair ({k},{kp}): IUI rel {rel}");
            }

            let ir_closed: f64 = (0..cfg.m)
                .map(|m| (1.0 - a.a(m)) * cfg.rho * p.eta_sen[m] * net.beta[m][k])
                .sum();
            let rel = (case.est.ir_var[k] - ir_closed).abs() / ir_closed;
            assert!(rel < 0.03, "instance {i} user {k}: IR rel {rel}");
        }
    }
    println!("criterion 2: PASS — DS/BU/IUI/IR moments within 3% of the oracle on 20 instances");
}

#[test]
fn criterion_3_power_pattern_matches_and_is_angle_free() {
    let mut cfg = config(3, 2, 2);
    let net = place_network(&cfg, &mut stream(2000, 0));
    let a = ModeAssignment::from_flags(vec![true, false, false]);
    let p = power::npc_allocation(&net, &a, &cfg).unwrap();
    let est = oracle::estimate_power_pattern(&net, &a, &p, &cfg, 100_000, &mut stream(2000, 1));
    let (p_com, p_sen) = metrics::power_pattern(&net, &a, &p, &cfg);
    let com_rel = (est.p_com - p_com).abs() / p_com;
    let sen_rel = (est.p_sen - p_sen).abs() / p_sen;
    assert!(com_rel < 0.03, "p_com rel {com_rel}");
    assert!(sen_rel < 0.03, "p_sen rel {sen_rel}");

    // moving the target must not move the sensing pattern estimate
    cfg.target_x_km = 0.4;
    cfg.target_y_km = 0.1;
    let mut moved = place_network(&cfg, &mut stream(2000, 0));
    moved.beta = net.beta.clone();
    moved.gamma = net.gamma.clone();
    let est2 = oracle::estimate_power_pattern(&moved, &a, &p, &cfg, 100_000, &mut stream(2000, 2));
    let gap = (est.p_sen - est2.p_sen).abs();
    let budget = 3.0 * (est.p_sen_se + est2.p_sen_se);
    assert!(gap <= budget, "pattern moved by {gap} (budget {budget})");
    println!("criterion 3: PASS — pattern within 3% of closed form and target-position free");
}

/// Dense grid search over per-C-AP (power usage, user split) followed by one
/// local refinement pass around the best cell.
fn grid_search_max_min(
    net: &NetworkRealization,
    a: &ModeAssignment,
    eta_sen: &[f64],
    cfg: &SystemConfig,
) -> f64 {
    let com = a.com_indices();
    assert_eq!(com.len(), 2, "grid search written for two C-APs");
    let nf = cfg.n as f64;
    let eval = |u0: f64, f0: f64, u1: f64, f1: f64| -> f64 {
        let mut p = PowerAllocation::zeros(cfg.m, cfg.k_d);
        p.eta_sen.copy_from_slice(eta_sen);
        for (j, (&m, (u, f))) in com.iter().zip([(u0, f0), (u1, f1)]).enumerate() {
            let _ = j;
            let splits = [f, 1.0 - f];
            for k in 0..cfg.k_d {
                if net.gamma[m][k] > 0.0 {
                    p.eta_com[m][k] = u * splits[k] / (nf * net.gamma[m][k]);
                }
            }
        }
        if !metrics::masr_met(net, a, &p, cfg.kappa) {
            return f64::NEG_INFINITY;
        }
        (0..cfg.k_d)
            .map(|k| metrics::sinr_closed_form(net, a, &p, k, cfg))
            .fold(f64::INFINITY, f64::min)
    };

    let axis = |lo: f64, hi: f64, steps: usize| -> Vec<f64> {
        (0..=steps)
            .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
            .collect()
    };
    let mut best = (f64::NEG_INFINITY, [0.0; 4]);
    let coarse = axis(0.0, 1.0, 20);
    for &u0 in &coarse {
        for &f0 in &coarse {
            for &u1 in &coarse {
                for &f1 in &coarse {
                    let v = eval(u0, f0, u1, f1);
                    if v > best.0 {
                        best = (v, [u0, f0, u1, f1]);
                    }
                }
            }
        }
    }
    // refine one coarse cell around the winner
    let around = |c: f64| axis((c - 0.05).max(0.0), (c + 0.05).min(1.0), 10);
    let (g0, g1, g2, g3) = (
        around(best.1[0]),
        around(best.1[1]),
        around(best.1[2]),
        around(best.1[3]),
    );
    for &u0 in &g0 {
        for &f0 in &g1 {
            for &u1 in &g2 {
                for &f1 in &g3 {
                    let v = eval(u0, f0, u1, f1);
                    if v > best.0 {
                        best = (v, [u0, f0, u1, f1]);
                    }
                }
            }
        }
    }
    best.0
}

#[test]
fn criterion_4_bisection_matches_grid_search() {
    for i in 0..30u64 {
        let mut cfg = config(3, 2, 2);
        cfg.kappa = 0.5;
        let net = place_network(&cfg, &mut stream(3000 + i, 0));
        let a = ModeAssignment::from_flags(vec![true, true, false]);
        let mut eta_sen = vec![0.0; cfg.m];
        eta_sen[2] = 1.0;
        let result = power::bisect_com_powers(&net, &a, &eta_sen, &cfg, None).unwrap();
        let grid = grid_search_max_min(&net, &a, &eta_sen, &cfg);
        let rel = (result.t_star - grid).abs() / grid.abs().max(f64::MIN_POSITIVE);
        assert!(
            rel < 0.05,
            "instance {i}: bisection {} vs grid {grid} (rel {rel})",
            result.t_star
        );
    }
    println!("criterion 4: PASS — bisection within 5% of dense grid search on 30 instances");
}

#[test]
fn criterion_5_ao_monotone_and_feasible() {
    for i in 0..100u64 {
        let mut cfg = config(10, 2, 3);
        cfg.kappa = 5.0;
        let net = place_network(&cfg, &mut stream(4000 + i, 0));
        // two C-APs keep the full-power MASR (N*M_sen/M_com = 8) above kappa
        let mut rng = stream(4000 + i, 1);
        let mut a = ModeAssignment::all_sensing(cfg.m);
        while a.num_com() < 2 {
            a.set_com(rng.gen_range(0..cfg.m));
        }
        let ao = power::alternating_optimization(&net, &a, &cfg).unwrap();
        assert!(ao.feasible, "instance {i} flagged infeasible");
        for w in ao.trace.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-6,
                "instance {i}: trace decreased {} -> {}",
                w[0],
                w[1]
            );
        }
        let p = &ao.allocation;
        let masr = metrics::masr(&net, &a, p);
        assert!(masr >= cfg.kappa - 1e-6, "instance {i}: MASR {masr}");
        for m in 0..cfg.m {
            if a.is_com(m) {
                let used: f64 = (0..cfg.k_d)
                    .map(|k| p.eta_com[m][k] * net.gamma[m][k])
                    .sum();
                assert!(
                    used <= 1.0 / cfg.n as f64 + 1e-6,
                    "instance {i} AP {m}: cap violated ({used})"
                );
                assert!(p.eta_sen[m] == 0.0, "instance {i} AP {m}: C-AP sensing power");
            } else {
                assert!(p.eta_sen[m] <= 1.0 + 1e-9, "instance {i} AP {m}: eta_sen > 1");
            }
        }
    }
    println!("criterion 5: PASS — AO trace monotone and final allocations feasible on 100 instances");
}

#[test]
fn criterion_6_greedy_moves_are_step_optimal() {
    for i in 0..10u64 {
        let mut cfg = config(6, 2, 2);
        cfg.kappa = 2.0;
        let net = place_network(&cfg, &mut stream(5000 + i, 0));
        let scheme = |net: &NetworkRealization, a: &ModeAssignment| {
            power::npc_allocation(net, a, &cfg)
                .map_err(|e| selection::SelectionError::PowerScheme(e.to_string()))
        };
        let out = selection::greedy_select(&net, &cfg, scheme).unwrap();

        // replay the trace, exhaustively scoring every candidate per step
        let mut current = ModeAssignment::all_sensing(cfg.m);
        for (step_idx, step) in out.trace.iter().enumerate() {
            let mut best: Option<(usize, f64)> = None;
            for m in current.sen_indices() {
                let mut cand = current.clone();
                cand.set_com(m);
                let p = power::npc_allocation(&net, &cand, &cfg).unwrap();
                let score = if metrics::masr_met(&net, &cand, &p, cfg.kappa) {
                    (0..cfg.k_d)
                        .map(|k| metrics::sinr_closed_form(&net, &cand, &p, k, &cfg))
                        .fold(f64::INFINITY, f64::min)
                } else {
                    0.0
                };
                if best.map_or(true, |(_, s)| score > s) {
                    best = Some((m, score));
                }
            }
            let (m_best, s_best) = best.unwrap();
            assert_eq!(
                step.moved_ap, m_best,
                "instance {i} step {step_idx}: moved {} but best is {m_best}",
                step.moved_ap
            );
            assert_eq!(step.score, s_best, "instance {i} step {step_idx}");
            current.set_com(step.moved_ap);
        }
        assert_eq!(current, out.assignment);

        if out.assignment.num_com() > 0 {
            let p = power::npc_allocation(&net, &out.assignment, &cfg).unwrap();
            assert!(metrics::masr_met(&net, &out.assignment, &p, cfg.kappa));
        }
    }
    println!("criterion 6: PASS — every committed greedy move is exhaustively step-optimal");
}

#[test]
fn criterion_7_scheme_ordering() {
    let cfg = config(20, 3, 3); // kappa = 10 by default
    let drops = 100;
    let seed = 7000;
    let opc = harness::run_experiment(&cfg, Scheme::GapOpc, drops, seed);
    let npc = harness::run_experiment(&cfg, Scheme::GapNpc, drops, seed);
    let rap = harness::run_experiment(&cfg, Scheme::RapNpc, drops, seed);

    let dominated = (0..drops)
        .filter(|&d| opc.samples[d] >= npc.samples[d] - 1e-9)
        .count();
    assert!(
        dominated * 100 >= 95 * drops,
        "OPC dominates NPC in only {dominated}/{drops} drops"
    );
    let (p_opc, p_npc, p_rap) = (opc.p95_likely_se(), npc.p95_likely_se(), rap.p95_likely_se());
    assert!(p_opc >= p_npc - 1e-9, "95%-likely: OPC {p_opc} < NPC {p_npc}");
    assert!(p_npc >= p_rap - 1e-9, "95%-likely: NPC {p_npc} < RAP {p_rap}");
    println!(
        "criterion 7: PASS — per-drop dominance {dominated}/{drops}, 95%-likely {p_opc:.3} >= {p_npc:.3} >= {p_rap:.3}"
    );
}

/// Full-scale directional reproduction; long-running, so opt in with
/// `cargo test -- --ignored criterion_7_full_scale`.
#[test]
#[ignore = "full-scale geometry (M=80), runs for a long time"]
fn criterion_7_full_scale_improvement() {
    let mut cfg = config(80, 3, 5);
    cfg.kappa = 15.0;
    let drops = 100;
    let seed = 7500;
    let opc = harness::run_experiment(&cfg, Scheme::GapOpc, drops, seed);
    let npc = harness::run_experiment(&cfg, Scheme::GapNpc, drops, seed);
    let (p_opc, p_npc) = (opc.p95_likely_se(), npc.p95_likely_se());
    assert!(
        p_opc >= 1.2 * p_npc,
        "95%-likely improvement below 20%: OPC {p_opc} vs NPC {p_npc}"
    );
    println!("criterion 7 (full scale): PASS — 95%-likely SE {p_opc:.3} vs {p_npc:.3}");
}

#[test]
fn criterion_8_masr_sweep_and_antenna_trend() {
    // mean min-SE non-increasing in kappa for both optimized and full power
    let kappas = [5.0, 10.0, 15.0, 20.0];
    let drops = 30;
    for scheme in [Scheme::GapOpc, Scheme::GapNpc] {
        let mut previous = f64::INFINITY;
        for &kappa in &kappas {
            let mut cfg = config(20, 3, 3);
            cfg.kappa = kappa;
            let mean = harness::run_experiment(&cfg, scheme, drops, 8000).mean_min_se();
            assert!(
                mean <= previous + 1e-6,
                "{scheme}: mean rose from {previous} to {mean} at kappa {kappa}"
            );
            previous = mean;
        }
    }

    // more antennas per AP at fixed MN=60 should not hurt in most drops
    let drops = 25;
    let mut few = config(30, 2, 3);
    few.kappa = 10.0;
    let mut many = config(10, 6, 3);
    many.kappa = 10.0;
    let se_few = harness::run_experiment(&few, Scheme::GapOpc, drops, 8100);
    let se_many = harness::run_experiment(&many, Scheme::GapOpc, drops, 8100);
    let not_worse = (0..drops)
        .filter(|&d| se_many.samples[d] >= se_few.samples[d] - 1e-9)
        .count();
    assert!(
        not_worse * 100 >= 80 * drops,
        "N=6 at least as good as N=2 in only {not_worse}/{drops} drops"
    );
    println!(
        "criterion 8: PASS — mean min-SE non-increasing in kappa; N=6 >= N=2 in {not_worse}/{drops} drops"
    );
}

#[test]
fn criterion_9_byte_identical_csv_output() {
    let cfg = config(8, 2, 2);
    let drops = 10;
    let read_dir = |dir: &std::path::Path| {
        let cdf = std::fs::read(dir.join("cdf_rap-npc.csv")).unwrap();
        let summary = std::fs::read(dir.join("summary.csv")).unwrap();
        (cdf, summary)
    };

    let dir_a = tempfile::tempdir().unwrap();
    let result = harness::run_experiment(&cfg, Scheme::RapNpc, drops, 9000);
    harness::emit_csv(&result, &cfg, dir_a.path()).unwrap();

    let dir_b = tempfile::tempdir().unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
    let result = pool.install(|| harness::run_experiment(&cfg, Scheme::RapNpc, drops, 9000));
    harness::emit_csv(&result, &cfg, dir_b.path()).unwrap();

    assert_eq!(read_dir(dir_a.path()), read_dir(dir_b.path()));
    println!("criterion 9: PASS — CSV output byte-identical across thread counts");
}
