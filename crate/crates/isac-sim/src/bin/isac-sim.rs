//! Command-line front end: experiment runs, Monte Carlo verification of the
//! closed forms, and MASR-level sweeps.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use isac_sim::config::SystemConfig;
use isac_sim::harness::{self, Scheme};
use isac_sim::metrics::{self, ModeAssignment};
use isac_sim::oracle;
use isac_sim::power;
use isac_sim::rng::stream;
use isac_sim::topology::place_network;

#[derive(Parser)]
#[command(name = "isac-sim", version, about = "Cell-free ISAC network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Key=value configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the full-scale geometry (M=80, N=3, K_d=5).
    #[arg(long)]
    full_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheme over Monte Carlo drops and write CSV artifacts.
    Run {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        scheme: Scheme,
        #[arg(long, default_value_t = 50)]
        drops: usize,
        /// Overrides the seed from the configuration.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Verify the closed-form SINR and power pattern against the
    /// signal-level Monte Carlo estimates.
    Verify {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
    /// Sweep the MASR target over a list of values, all schemes.
    SweepKappa {
        #[command(flatten)]
        common: CommonOpts,
        /// Comma-separated MASR targets, e.g. 5,10,15,20.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        drops: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn load_config(common: &CommonOpts) -> Result<SystemConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => SystemConfig::from_file(path).map_err(|e| e.to_string())?,
        None => SystemConfig::default(),
    };
    if common.full_scale {
        cfg.m = 80;
        cfg.n = 3;
        cfg.k_d = 5;
        cfg.tau_t = cfg.tau_t.max(cfg.k_d);
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn init_threads() {
    if let Ok(v) = std::env::var("ISAC_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn cmd_run(cfg: &SystemConfig, scheme: Scheme, drops: usize, seed: u64, out: &PathBuf) -> ExitCode {
    let result = harness::run_experiment(cfg, scheme, drops, seed);
    if let Err(e) = harness::emit_csv(&result, cfg, out) {
        return fail(e);
    }
    println!(
        "{}: drops={} mean_min_se={:.4} p95_likely_se={:.4} infeasible={} solver_failures={} ({:.1?})",
        scheme,
        drops,
        result.mean_min_se(),
        result.p95_likely_se(),
        result.infeasible_drops,
        result.solver_failures,
        result.wall_time
    );
    if result.solver_failures as f64 > 0.10 * drops as f64 {
        eprintln!("error: solver failure rate exceeds 10%");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}

fn cmd_verify(cfg: &SystemConfig, trials: usize) -> ExitCode {
    if trials < 1_000 {
        return fail("--trials must be at least 1000");
    }
    let mut cfg = cfg.clone();
    // small mixed-mode instance: half the APs sense
    if cfg.m > 10 {
        cfg.m = 10;
    }
    let net = place_network(&cfg, &mut stream(cfg.seed, 0));
    let flags: Vec<bool> = (0..cfg.m).map(|m| m % 2 == 0).collect();
    let a = ModeAssignment::from_flags(flags);
    let p = match power::npc_allocation(&net, &a, &cfg) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };

    let mut ok = true;
    let est = oracle::estimate_sinr_terms(&net, &a, &p, &cfg, trials, &mut stream(cfg.seed, 1));
    for k in 0..cfg.k_d {
        let closed = metrics::sinr_closed_form(&net, &a, &p, k, &cfg);
        let rel = (est.sinr_mc[k] - closed).abs() / closed;
        let pass = rel < 0.03;
        ok &= pass;
        println!(
            "sinr user {k}: closed {closed:.4} monte-carlo {:.4} rel {:.4} [{}]",
            est.sinr_mc[k],
            rel,
            if pass { "pass" } else { "FAIL" }
        );
    }
    let pat = oracle::estimate_power_pattern(&net, &a, &p, &cfg, trials, &mut stream(cfg.seed, 2));
    let (p_com, p_sen) = metrics::power_pattern(&net, &a, &p, &cfg);
    for (name, mc, closed) in [("p_com", pat.p_com, p_com), ("p_sen", pat.p_sen, p_sen)] {
        let rel = (mc - closed).abs() / closed.max(f64::MIN_POSITIVE);
        let pass = rel < 0.03;
        ok &= pass;
        println!("pattern {name}: closed {closed:.4} monte-carlo {mc:.4} rel {rel:.4} [{}]",
            if pass { "pass" } else { "FAIL" });
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_sweep(
    cfg: &SystemConfig,
    values: &[f64],
    drops: usize,
    seed: u64,
    out: &PathBuf,
) -> ExitCode {
    let mut failures = 0usize;
    let mut total = 0usize;
    for &kappa in values {
        let mut cfg = cfg.clone();
        cfg.kappa = kappa;
        for scheme in Scheme::ALL {
            let result = harness::run_experiment(&cfg, scheme, drops, seed);
            failures += result.solver_failures;
            total += drops;
            println!(
                "kappa={kappa} {scheme}: mean_min_se={:.4} p95_likely_se={:.4}",
                result.mean_min_se(),
                result.p95_likely_se()
            );
            if let Err(e) = harness::emit_csv(&result, &cfg, out) {
                return fail(e);
            }
        }
    }
    if failures as f64 > 0.10 * total as f64 {
        eprintln!("error: solver failure rate exceeds 10%");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    init_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not errors
            if e.use_stderr() {
                let _ = e.print();
                return ExitCode::from(1);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };

    match cli.command {
        Command::Run {
            common,
            scheme,
            drops,
            seed,
            out,
        } => match load_config(&common) {
            Ok(cfg) => cmd_run(&cfg, scheme, drops, seed.unwrap_or(cfg.seed), &out),
            Err(e) => fail(e),
        },
        Command::Verify { common, trials } => match load_config(&common) {
            Ok(cfg) => cmd_verify(&cfg, trials),
            Err(e) => fail(e),
        },
        Command::SweepKappa {
            common,
            values,
            drops,
            seed,
            out,
        } => match load_config(&common) {
            Ok(cfg) => cmd_sweep(&cfg, &values, drops, seed.unwrap_or(cfg.seed), &out),
            Err(e) => fail(e),
        },
    }
}
