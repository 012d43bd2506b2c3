use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use qrewind::analytics::{first_passage_dist_exact, Timing};
use qrewind::engine::{identity_suite, monte_carlo, success_curve, Mode, ProtocolConfig, Source};
use qrewind::io::{self, fmt_f64};
use qrewind::walk::{dp_first_passage, mc_first_passage, DP_MAX_HORIZON};
use qrewind::Probability;

#[derive(Parser)]
#[command(name = "qrewind", version, about = "Rewinding qubits with a commutator gate: identities, hitting times, simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Theorem,
    Dp,
    Mc,
}

#[derive(Subcommand)]
enum Command {
    /// Check the commutator identities and branch-probability invariance on random pairs.
    Verify {
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        tol: f64,
        #[arg(long, default_value_t = 8)]
        smax: u32,
        #[arg(long, default_value_t = 8)]
        nmax: u32,
        /// Random states per Haar pair in the invariance check.
        #[arg(long, default_value_t = 100)]
        states: u64,
    },
    /// First-passage distribution up to step `tmax`.
    Dist {
        /// Vertical-port probability, decimal or `num/den`.
        #[arg(long)]
        p: Probability,
        #[arg(long)]
        tmax: usize,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long, default_value_t = 1_000_000)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Write exact `num/den` probabilities as JSON instead of CSV.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cumulative success curves for gate budgets 1..=mmax.
    Curve {
        #[arg(long, conflicts_with = "matrices", required_unless_present = "matrices")]
        p: Option<f64>,
        #[arg(long)]
        matrices: Option<PathBuf>,
        #[arg(long)]
        mmax: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Amplitude-level Monte Carlo of the trimmed protocol.
    Simulate {
        #[arg(long)]
        matrices: PathBuf,
        #[arg(long)]
        s: u64,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        runs: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Allow non-unitary contractions; adds an abort outcome.
        #[arg(long)]
        contraction: bool,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Smallest gate budget reaching rewind probability `q` for every p ≥ pmin.
    RequiredM {
        #[arg(long)]
        pmin: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, requires_all = ["tau", "s"])]
        dt: Option<f64>,
        #[arg(long, requires_all = ["dt", "s"])]
        tau: Option<f64>,
        #[arg(long, requires_all = ["dt", "tau"])]
        s: Option<u64>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Verify { trials, seed, tol, smax, nmax, states } => {
            if tol.is_nan() || tol <= 0.0 {
                bail!("--tol must be positive");
            }
            let report = identity_suite(trials, states, seed, tol, smax, nmax);
            for f in &report.families {
                println!(
                    "{:<20} trials={} failures={} worst_relative_residual={}",
                    f.family.name(),
                    f.trials,
                    f.failures,
                    fmt_f64(f.worst_relative_residual)
                );
            }
            let inv = &report.invariance;
            println!(
                "{:<20} pairs={} states={} worst_spread={} worst_mismatch={}",
                "branch-probability",
                inv.pairs,
                inv.states_per_pair,
                fmt_f64(inv.worst_spread),
                fmt_f64(inv.worst_mismatch)
            );
            if report.passed() {
                println!("all checks passed");
            } else {
                println!("FAILED");
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Dist { p, tmax, method, runs, seed, workers, exact, out } => {
            let contents = if exact {
                let d = match method {
                    Method::Theorem => first_passage_dist_exact(&p.to_rational(), tmax as u64),
                    Method::Dp => dp_first_passage(&p.to_rational(), tmax)?,
                    Method::Mc => bail!("--exact is not available for --method mc"),
                };
                io::exact_dist_json(&p, &d)
            } else {
                let d = match method {
                    // exact evaluation, rounded once per entry
                    Method::Theorem => first_passage_dist_exact(&p.to_rational(), tmax as u64).to_f64(),
                    Method::Dp if tmax <= DP_MAX_HORIZON => dp_first_passage(&p.to_rational(), tmax)?.to_f64(),
                    Method::Dp => dp_first_passage(&p.to_f64(), tmax)?,
                    Method::Mc => {
                        if workers == 0 || runs == 0 {
                            bail!("--runs and --workers must be positive");
                        }
                        mc_first_passage(p.to_f64(), tmax, runs, seed, workers).to_dist()
                    }
                };
                io::dist_csv(&d)
            };
            io::write_file(&out, &contents)?;
        }
        Command::Curve { p, matrices, mmax, out, svg } => {
            let (source, title) = match (p, matrices) {
                (Some(p), _) => (Source::Probability(p), format!("Rewind success, p = {p}")),
                (None, Some(path)) => {
                    let m = io::read_matrices(&path)?;
                    (Source::Matrices { v: m.v, w: m.w }, format!("Rewind success, {}", path.display()))
                }
                (None, None) => bail!("one of --p or --matrices is required"),
            };
            let curve = success_curve(&source, mmax)?;
            io::write_file(&out, &io::curve_csv(&curve))?;
            if let Some(svg) = svg {
                io::write_file(&svg, &io::curve_svg(&curve, &title))?;
            }
        }
        Command::Simulate { matrices, s, m, runs, seed, workers, contraction, dt, tau, out } => {
            let mats = io::read_matrices(&matrices)?;
            let mut cfg = ProtocolConfig::new(Source::Matrices { v: mats.v, w: mats.w });
            cfg.s = s;
            cfg.m = m;
            cfg.runs = runs;
            cfg.seed = seed;
            cfg.workers = workers;
            cfg.dt = dt;
            cfg.tau = tau;
            cfg.mode = if contraction { Mode::Contraction } else { Mode::Unitary };
            let stats = monte_carlo(&cfg).context("simulation failed")?;
            io::write_file(&out, &io::statistics_json(&stats))?;
        }
        Command::RequiredM { pmin, q, dt, tau, s } => {
            let timing = match (dt, tau, s) {
                (Some(dt), Some(tau), Some(s)) => {
                    if !(dt > 0.0 && tau > 0.0) {
                        bail!("--dt and --tau must be positive");
                    }
                    Some(Timing { dt, tau, s })
                }
                _ => None,
            };
            let r = qrewind::analytics::required_m(pmin, q, timing)?;
            println!("m = {}", r.m);
            println!("worst_p = {}", fmt_f64(r.worst_p));
            if let Some(t) = r.time_bound {
                println!("time_bound = {}", fmt_f64(t));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
