//! Command-line front end. Every subcommand reads one [`RunConfig`], writes
//! its tables under the output directory together with
//! `resolved_config.toml`, and maps failures to exit codes.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::cocycle::lyapunov_sweep_checkpoints;
use crate::config::{RunConfig, Solver};
use crate::dynamics::{transport_probe, TransportOptions};
use crate::error::{Error, Result};
use crate::example6::{lil_envelope_check, norm_bound_check, norm_constants, rxi_identity_check, xi_bits};
use crate::io;
use crate::model::{admissible_family, sample_realization_stream, support_of_potential_vector};
use crate::projective::{certificate_radius, exceptional_energy_scan, verify_no_common_point};
use crate::spectrum::{build_operator, default_beta_floor, diagonalize_with, diagonalize_window, sule_report};

/// Exit status of a successful run.
pub const EXIT_OK: i32 = 0;
/// Usage or configuration error.
pub const EXIT_USAGE: i32 = 1;
/// Numerical failure such as eigensolver non-convergence.
pub const EXIT_NUMERICAL: i32 = 2;
/// A checked property was violated.
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cocycle-lab", version, about = "Transfer-matrix cocycles of block-code random Schrödinger operators")]
struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed; overrides the config value.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Output directory; overrides the config value.
    #[arg(long, global = true, value_name = "DIR", env = "COCYCLE_LAB_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Sample realizations to `sample_<r>.csv` (n, xi, v).
    Sample,
    /// Lyapunov sweep to `lyapunov.csv`.
    Lyapunov,
    /// Certificate radius and no-common-point verdicts to `certificate.toml`.
    Certify,
    /// Exceptional-energy scan to `scan.csv`.
    Scan,
    /// Diagonalize boxes and report eigenfunction decay (`eigen_<r>.csv`, `decay_<r>.csv`, `sule.toml`).
    Eigen,
    /// Transported mass against the exponential bound to `transport.csv`.
    Transport,
    /// Exact checks of the difference model at E = 0 (`example6.csv`, `example6.toml`).
    Example6,
}

/// Outcome of a subcommand that completed without error.
enum Outcome {
    Ok,
    Violation(String),
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::Violation(msg)) => {
            eprintln!("property violation: {msg}");
            EXIT_VIOLATION
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoConvergence(_) => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    cfg.resolve()?;
    let workers = cfg.workers.unwrap_or(1);
    if workers == 0 {
        return Err(Error::Config("workers must be >= 1".into()));
    }
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Sample => cmd_sample(&cfg, &out),
        Command::Lyapunov => cmd_lyapunov(&cfg, &out),
        Command::Certify => cmd_certify(&mut cfg, &out),
        Command::Scan => cmd_scan(&cfg, &out),
        Command::Eigen => cmd_eigen(&mut cfg, &out),
        Command::Transport => cmd_transport(&cfg, &out),
        Command::Example6 => cmd_example6(&cfg, &out),
    })
}

fn write_resolved(cfg: &RunConfig, out: &Path) -> Result<()> {
    fs::write(out.join("resolved_config.toml"), cfg.to_toml()?)?;
    Ok(())
}

fn cmd_sample(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    write_resolved(cfg, out)?;
    let model = cfg.model()?;
    let s = &cfg.sample;
    for r in 0..s.realizations as u64 {
        let real = sample_realization_stream(&model, cfg.seed, r, s.lo, s.hi)?;
        io::sample_table(&real).write_csv(out.join(format!("sample_{r}.csv")))?;
    }
    Ok(Outcome::Ok)
}

fn cmd_lyapunov(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    write_resolved(cfg, out)?;
    let model = cfg.model()?;
    let l = &cfg.lyapunov;
    let energies = l.energies.clone().unwrap_or_default();
    let checkpoints = l.checkpoints.clone().unwrap_or_else(|| vec![l.n]);
    let rows = lyapunov_sweep_checkpoints(&model, &energies, &checkpoints, l.realizations, cfg.seed)?;
    io::lyapunov_table(&rows).write_csv(out.join("lyapunov.csv"))?;
    Ok(Outcome::Ok)
}

fn cmd_certify(cfg: &mut RunConfig, out: &Path) -> Result<Outcome> {
    let model = cfg.model()?;
    let c = &cfg.certify;
    let (d, i0) = (c.d.unwrap_or(8 * model.k()), c.i0.unwrap_or(5 * model.k()));
    let support = support_of_potential_vector(&model, d)?;
    let family = admissible_family(&support, i0, c.max_vectors).map_err(Error::Precondition)?;
    let cert = certificate_radius(&family, i0)?;
    let energies = c
        .energies
        .clone()
        .unwrap_or_else(|| [1.25, 1.5, 1.75, 2.0].iter().map(|f| f * cert.radius).collect());
    cfg.certify.energies = Some(energies.clone());
    write_resolved(cfg, out)?;
    let mut verdicts = Vec::with_capacity(energies.len());
    for &e in &energies {
        verdicts.push((e, verify_no_common_point(&family, e)?));
    }
    fs::write(out.join("certificate.toml"), io::certificate_report(&cert, &verdicts)?)?;
    let bad: Vec<f64> = verdicts
        .iter()
        .filter(|(e, v)| e.abs() > cert.radius && !v.no_common_structure())
        .map(|(e, _)| *e)
        .collect();
    Ok(if bad.is_empty() {
        Outcome::Ok
    } else {
        Outcome::Violation(format!("common structure beyond the certificate radius at E = {bad:?}"))
    })
}

fn cmd_scan(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    write_resolved(cfg, out)?;
    let model = cfg.model()?;
    let report = exceptional_energy_scan(&model, &cfg.scan.energies(), &cfg.scan.options())?;
    if report.degenerate {
        eprintln!("warning: support condition fails for some frozen configuration; every energy is flagged");
    }
    io::scan_table(&report).write_csv(out.join("scan.csv"))?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct SuleSummary {
    realization: u64,
    eigenpairs: usize,
    beta_floor: f64,
    fraction_above_floor: f64,
    fraction_localized: f64,
    c_eps: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct SuleDoc {
    summary: Vec<SuleSummary>,
}

fn cmd_eigen(cfg: &mut RunConfig, out: &Path) -> Result<Outcome> {
    let model = cfg.model()?;
    let e = cfg.eigen.clone();
    let j = (e.j[0], e.j[1]);
    let beta_floor = match e.beta_floor {
        Some(b) => b,
        None => default_beta_floor(&model, j, cfg.seed)?,
    };
    cfg.eigen.beta_floor = Some(beta_floor);
    write_resolved(cfg, out)?;
    let mut summary = Vec::new();
    for r in 0..e.realizations as u64 {
        let real = sample_realization_stream(&model, cfg.seed, r, e.lo, e.hi)?;
        let op = build_operator(&real, e.lo, e.hi)?;
        let es = match e.solver {
            Solver::Full => diagonalize_with(&op, e.max_iter)?,
            Solver::Window => diagonalize_window(&op, j.0, j.1)?,
        };
        let report = sule_report(&es, j, beta_floor, &e.eps_grid, e.floor);
        io::eigen_table(&report).write_csv(out.join(format!("eigen_{r}.csv")))?;
        let picks: Vec<usize> = report.entries.iter().take(e.decay_profiles).map(|x| x.index).collect();
        io::decay_table(&es, &picks).write_csv(out.join(format!("decay_{r}.csv")))?;
        if e.dump_vectors {
            io::write_eigenvectors(out.join(format!("eigenvectors_{r}.bin")), &es)?;
        }
        let n = report.entries.len();
        let localized =
            report.entries.iter().filter(|x| x.fit.as_ref().is_some_and(|f| f.beta > 0.0 && f.r2 > 0.9)).count();
        summary.push(SuleSummary {
            realization: r,
            eigenpairs: n,
            beta_floor,
            fraction_above_floor: report.fraction_above_floor,
            fraction_localized: if n == 0 { 0.0 } else { localized as f64 / n as f64 },
            c_eps: report.c_eps.iter().map(|&(a, b)| [a, b]).collect(),
        });
    }
    let doc = toml::to_string(&SuleDoc { summary }).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(out.join("sule.toml"), doc)?;
    Ok(Outcome::Ok)
}

fn cmd_transport(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    write_resolved(cfg, out)?;
    let model = cfg.model()?;
    let t = &cfg.transport;
    let opts = TransportOptions {
        beta: t.beta,
        exponent: t.exponent,
        box_radius: t.box_radius,
        realizations: t.realizations,
    };
    let rows = transport_probe(&model, &t.t_list, cfg.seed, &opts)?;
    for r in rows.iter().filter(|r| r.clamped) {
        eprintln!("warning: (log T)^a < 1 at T = {}; N(T) clamped to 1", r.t_scale);
    }
    io::transport_table(&rows).write_csv(out.join("transport.csv"))?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct Example6Doc {
    c_p: f64,
    c_r: f64,
    identity_sequences: usize,
    identity_n: usize,
    identity_failures: usize,
    bound_paths: usize,
    bound_n: usize,
    bound_violations: usize,
    lil_c: f64,
    lil_exceedance: Vec<[f64; 2]>,
}

fn cmd_example6(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    use rayon::prelude::*;
    write_resolved(cfg, out)?;
    let x = &cfg.example6;
    let (c_p, c_r) = norm_constants();
    let identity_failures = (0..x.identity_sequences as u64)
        .into_par_iter()
        .map(|s| {
            let xi = xi_bits(cfg.seed, s, x.identity_n + 2);
            rxi_identity_check(&xi).map(|c| usize::from(!c.equal))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let bound_violations = (0..x.bound_paths as u64)
        .into_par_iter()
        .map(|s| {
            let xi = xi_bits(cfg.seed, s, x.bound_n + 1);
            norm_bound_check(&xi).map(|b| usize::from(!b.holds))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let seeds: Vec<u64> = (0..x.lil_seeds as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let lil = lil_envelope_check(&seeds, x.lil_n_max, x.c)?;
    io::lil_table(&lil.rows).write_csv(out.join("example6.csv"))?;
    let doc = Example6Doc {
        c_p,
        c_r,
        identity_sequences: x.identity_sequences,
        identity_n: x.identity_n,
        identity_failures,
        bound_paths: x.bound_paths,
        bound_n: x.bound_n,
        bound_violations,
        lil_c: x.c,
        lil_exceedance: lil.exceedance.iter().map(|&(n, r)| [n as f64, r]).collect(),
    };
    fs::write(out.join("example6.toml"), toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))?)?;
    let lil_bound_failures = lil.rows.iter().filter(|r| r.log_norm > r.bound).count();
    Ok(if identity_failures + bound_violations + lil_bound_failures == 0 {
        Outcome::Ok
    } else {
        Outcome::Violation(format!(
            "{identity_failures} identity failures, {} norm-bound violations",
            bound_violations + lil_bound_failures
        ))
    })
}
