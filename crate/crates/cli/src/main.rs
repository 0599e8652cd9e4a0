//! `reservoir-sense`: figure scenarios and parameter sweeps.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 sweep with
//! failed points.

mod config;
mod output;
mod scenario;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Parser, Subcommand};

use config::{echo, usage, Config, ConfigLayers, UsageError};
use output::{write_tables, Manifest};
use scenario::{RunOutput, Scenario};
use sweep::{run_sweep, SweepPlan};

#[derive(Parser, Debug)]
#[command(
    name = "reservoir-sense",
    version,
    about = "Reservoir parameter sensing with a harmonic probe"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario: fig2..fig7 or custom. Any config key may follow as `--key value`.
    Run {
        scenario: String,
        /// compare the analytic moments against the finite-bath oracle
        #[arg(long)]
        verify: bool,
        /// output directory (default: results/<scenario>)
        #[arg(long)]
        out: Option<PathBuf>,
        /// TOML file layered under the command-line overrides
        #[arg(long)]
        config: Option<PathBuf>,
        /// also write gnuplot scripts for curve data
        #[arg(long)]
        plot: bool,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, hide = true)]
        overrides: Vec<String>,
    },
    /// Evaluate a grid of points described by the `[sweep]` section of a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// output directory (default: results/sweep)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, hide = true)]
        overrides: Vec<String>,
    },
}

/// Flags that may also appear among the trailing `--key value` pairs.
#[derive(Debug, Default)]
struct Flags {
    verify: bool,
    plot: bool,
    out: Option<PathBuf>,
    config: Option<PathBuf>,
    pairs: Vec<(String, String)>,
}

fn split_overrides(raw: &[String], mut flags: Flags) -> anyhow::Result<Flags> {
    let mut it = raw.iter();
    while let Some(tok) = it.next() {
        let Some(key) = tok.strip_prefix("--") else {
            return Err(usage(format!(
                "unexpected argument `{tok}`; overrides take the form --key value"
            )));
        };
        let (key, inline) = match key.split_once('=') {
            Some((k, v)) => (k, Some(v.to_owned())),
            None => (key, None),
        };
        match key {
            "verify" => flags.verify = true,
            "plot" => flags.plot = true,
            _ => {
                let value = match inline {
                    Some(v) => v,
                    None => it
                        .next()
                        .cloned()
                        .ok_or_else(|| usage(format!("missing value for --{key}")))?,
                };
                match key {
                    "out" => flags.out = Some(value.into()),
                    "config" => flags.config = Some(value.into()),
                    _ => flags.pairs.push((key.to_owned(), value)),
                }
            }
        }
    }
    Ok(flags)
}

fn build_layers(scenario: Scenario, flags: &Flags) -> anyhow::Result<ConfigLayers> {
    let mut layers = ConfigLayers::new(scenario);
    if let Some(path) = &flags.config {
        layers.merge_file(path)?;
    }
    for (k, v) in &flags.pairs {
        layers.set_text(k, v)?;
    }
    Ok(layers)
}

fn configure_workers() -> anyhow::Result<usize> {
    if let Ok(raw) = std::env::var("RS_WORKERS") {
        let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            usage(format!(
                "RS_WORKERS must be a positive integer, got `{raw}`"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot start worker pool")?;
    }
    Ok(rayon::current_num_threads())
}

fn base_manifest(command: &str, scenario: &str, cfg: &Config, workers: usize) -> Manifest {
    let mut m = Manifest::default();
    m.set("tool", "reservoir-sense");
    m.set("code_version", env!("CARGO_PKG_VERSION"));
    m.set("core_version", reservoir_sense::VERSION);
    m.set("command", command);
    m.set("scenario", scenario);
    m.set("status", "running");
    m.set("workers", workers);
    m.set(
        "started_unix",
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    );
    m.extend(echo(cfg));
    m.set("tolerance.stencil_delta_rel", cfg.qfi.delta_rel);
    m.set(
        "tolerance.matsubara_rule",
        "nu_N >= max(40/t, 30*max(|z|, cutoff, 1)), N <= 100000",
    );
    m.set("tolerance.matsubara_tail_order", 4);
    m.set("tolerance.steady_state_check", 1e-6);
    m.set("tolerance.golden_section_rel", 1e-6);
    m.set("tolerance.pure_state_derivative", 1e-6);
    m
}

fn classify(err: &anyhow::Error) -> (&'static str, u8) {
    if err.downcast_ref::<UsageError>().is_some() {
        ("usage", 1)
    } else if let Some(e) = err.downcast_ref::<reservoir_sense::Error>() {
        (error_kind(e), 2)
    } else {
        ("io", 2)
    }
}

fn error_kind(e: &reservoir_sense::Error) -> &'static str {
    use reservoir_sense::Error as E;
    match e {
        E::Domain(_) => "domain",
        E::InvalidParameter { .. } => "invalid_parameter",
        E::LerchPole(_) => "lerch_pole",
        E::MatsubaraResonance { .. } => "matsubara_resonance",
        E::Unstable { .. } => "unstable",
        E::Unsupported(_) => "unsupported",
        E::Tolerance { .. } => "tolerance",
        E::IllConditioned { .. } => "ill_conditioned",
        E::Unphysical { .. } => "unphysical",
        E::NotStationary { .. } => "not_stationary",
        E::Recurrence { .. } => "recurrence",
        E::Symplectic(_) => "symplectic",
    }
}

fn report(manifest: &mut Manifest, kind: &str, message: &str) {
    manifest.set("status", "failed");
    manifest.set("error_kind", kind);
    manifest.set("error_message", message);
    eprintln!("error: kind={kind} message={message}");
}

fn finish(
    manifest: &mut Manifest,
    dir: &Path,
    written: &[PathBuf],
    started: Instant,
) -> anyhow::Result<()> {
    let names: Vec<String> = written
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    manifest.set("outputs", names.join(" "));
    manifest.set(
        "wall_time_s",
        format!("{:.3}", started.elapsed().as_secs_f64()),
    );
    manifest.write(dir)?;
    Ok(())
}

fn cmd_run(scenario: &str, flags: Flags) -> anyhow::Result<u8> {
    let started = Instant::now();
    let scenario: Scenario = scenario.parse().map_err(usage)?;
    let layers = build_layers(scenario, &flags)?;
    let cfg = layers.resolve()?;
    scenario::validate(scenario, &cfg).map_err(|e| usage(e.to_string()))?;
    let workers = configure_workers()?;
    let dir = flags
        .out
        .clone()
        .unwrap_or_else(|| Path::new("results").join(scenario.name()));
    let mut manifest = base_manifest("run", scenario.name(), &cfg, workers);
    manifest.set("verify", flags.verify);
    log::info!("running {scenario} into {}", dir.display());

    let mut out = RunOutput::default();
    let mut failure = scenario::run(scenario, &cfg, &mut out)
        .err()
        .map(|e| (error_kind(&e), e.to_string()));
    manifest.extend(out.notes.drain(..));

    if flags.verify && failure.is_none() {
        manifest.set("oracle.tolerance_sigma_rel", cfg.oracle.tolerance);
        manifest.set("oracle.tolerance_d_abs", cfg.oracle.tolerance);
        match scenario::verify(&cfg) {
            Ok(dev) => {
                manifest.set("oracle.max_sigma_rel", output::format_number(dev.sigma_rel));
                manifest.set("oracle.max_d_abs", output::format_number(dev.d_abs));
                let pass = dev.sigma_rel < cfg.oracle.tolerance && dev.d_abs < cfg.oracle.tolerance;
                manifest.set("oracle.pass", pass);
                if !pass {
                    failure = Some((
                        "oracle_mismatch",
                        format!(
                            "oracle deviation sigma_rel={:e} d_abs={:e} exceeds {:e}",
                            dev.sigma_rel, dev.d_abs, cfg.oracle.tolerance
                        ),
                    ));
                }
            }
            Err(e) => failure = Some((error_kind(&e), e.to_string())),
        }
    }

    let written = write_tables(&dir, &out.tables, failure.is_some(), flags.plot)?;
    let code = match &failure {
        None => {
            manifest.set("status", "ok");
            0
        }
        Some((kind, msg)) => {
            report(&mut manifest, kind, msg);
            2
        }
    };
    finish(&mut manifest, &dir, &written, started)?;
    Ok(code)
}

fn cmd_sweep(flags: Flags) -> anyhow::Result<u8> {
    let started = Instant::now();
    let layers = build_layers(Scenario::Custom, &flags)?;
    let cfg = layers.resolve()?;
    let plan = SweepPlan::new(&layers, &cfg)?;
    let workers = configure_workers()?;
    let dir = flags
        .out
        .clone()
        .unwrap_or_else(|| Path::new("results").join("sweep"));
    let mut manifest = base_manifest("sweep", "custom", &cfg, workers);
    manifest.set("sweep.points", plan.len());
    log::info!("sweeping {} points into {}", plan.len(), dir.display());

    let (table, failures) = run_sweep(&layers, &plan);
    let written = write_tables(&dir, std::slice::from_ref(&table), false, false)?;
    manifest.set("sweep.failed_points", failures);
    let code = if failures == 0 {
        manifest.set("status", "ok");
        0
    } else {
        manifest.set("status", "partial");
        eprintln!(
            "error: kind=partial_sweep message={failures} of {} points failed",
            plan.len()
        );
        3
    };
    finish(&mut manifest, &dir, &written, started)?;
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RS_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run {
            scenario,
            verify,
            out,
            config,
            plot,
            overrides,
        } => split_overrides(
            &overrides,
            Flags {
                verify,
                plot,
                out,
                config,
                pairs: Vec::new(),
            },
        )
        .and_then(|flags| cmd_run(&scenario, flags)),
        Command::Sweep {
            config,
            out,
            overrides,
        } => split_overrides(
            &overrides,
            Flags {
                config: Some(config),
                out,
                ..Flags::default()
            },
        )
        .and_then(cmd_sweep),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            let (kind, code) = classify(&err);
            eprintln!("error: kind={kind} message={err:#}");
            ExitCode::from(code)
        }
    }
}
