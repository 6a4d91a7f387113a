//! `lora-tbma` command-line front end.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or
//! configuration errors.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use lora_tbma::channel::{dbm_to_watts, PresetOptions, ScenarioKind, ScenarioPreset};
use lora_tbma::harness::write_records_csv;
use lora_tbma::{
    analytic_tone, instantaneous_frequency, spread, Experiment, ExperimentConfig, Measurement,
    ModulationConfig, Point, Scheme,
};

#[derive(Debug, Parser)]
#[command(
    name = "lora-tbma",
    version,
    about = "LoRa type-based multiple access simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the link budget of the satellite scenarios.
    LinkBudget(LinkBudgetArgs),
    /// Run a Monte Carlo sweep and write per-trial CSV records.
    Sweep(SweepArgs),
    /// Run a single trial and print its CSV record.
    Trial(TrialArgs),
    /// Dump one transmitted symbol as CSV of n, I, Q, inst_freq.
    Waveform(WaveformArgs),
}

#[derive(Debug, Args)]
struct LinkBudgetArgs {
    /// ul, dl, isl-leo, isl-geo or all.
    #[arg(long, default_value = "all")]
    scenario: String,
    #[arg(long, default_value_t = 14.0, allow_negative_numbers = true)]
    ptx_dbm: f64,
    /// Alphabet size used for the per-symbol SNR column.
    #[arg(long, default_value_t = 256)]
    n_levels: usize,
    /// Also write the table as CSV.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// TOML experiment configuration; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--override trials=10`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed.
    #[arg(long, env = "LORA_TBMA_SEED")]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    workers: Option<usize>,
    /// Records CSV path; stdout when absent. A `.meta` sidecar is written next to it.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Aggregate summary JSON path.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrialArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long, default_value = "tbma")]
    scheme: Scheme,
    #[arg(long, default_value_t = 100)]
    users: usize,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long, default_value_t = 0)]
    trial: usize,
}

#[derive(Debug, Args)]
struct WaveformArgs {
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 256)]
    n_levels: usize,
    #[arg(long, default_value_t = 0.0)]
    f_mod: f64,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    /// CSV path; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn usage(e: impl ToString) -> Self {
        CliError::Usage(e.to_string())
    }

    fn runtime(e: impl ToString) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::LinkBudget(a) => cmd_link_budget(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Trial(a) => cmd_trial(a),
        Command::Waveform(a) => cmd_waveform(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Opens `path` for writing, or stdout.
fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::runtime(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_link_budget(a: LinkBudgetArgs) -> CliResult<()> {
    let kinds: Vec<ScenarioKind> = if a.scenario.eq_ignore_ascii_case("all") {
        ScenarioKind::ALL.to_vec()
    } else {
        vec![a.scenario.parse().map_err(|_| {
            CliError::Usage(format!(
                "unknown scenario `{}` (expected one of: ul, dl, isl-leo, isl-geo, all)",
                a.scenario
            ))
        })?]
    };
    if !a.ptx_dbm.is_finite() {
        return Err(CliError::usage("--ptx-dbm must be finite"));
    }
    if a.n_levels < 2 {
        return Err(CliError::usage("--n-levels must be >= 2"));
    }
    let opts = PresetOptions {
        tx_power_w: dbm_to_watts(a.ptx_dbm),
        ..PresetOptions::default()
    };
    let mut rows = Vec::new();
    for kind in kinds {
        let preset = ScenarioPreset::new(kind, &opts);
        let b = &preset.budget;
        rows.push((
            kind,
            b.distance_m / 1e3,
            b.path_loss_db().map_err(CliError::runtime)?,
            b.total_loss_db().map_err(CliError::runtime)?,
            preset.link_snr_db().map_err(CliError::runtime)?,
            preset
                .symbol_snr_db(a.n_levels)
                .map_err(CliError::runtime)?,
        ));
    }

    println!("P_tx {:.2} dBm, N = {}", a.ptx_dbm, a.n_levels);
    println!(
        "{:<9} {:>12} {:>9} {:>14} {:>12} {:>14}",
        "scenario", "distance_km", "fspl_db", "total_loss_db", "link_snr_db", "symbol_snr_db"
    );
    for (k, d, fspl, loss, snr, sym) in &rows {
        println!(
            "{:<9} {d:>12.1} {fspl:>9.2} {loss:>14.2} {snr:>12.2} {sym:>14.2}",
            k.name()
        );
    }

    if let Some(path) = &a.output {
        let mut out = sink(Some(path))?;
        let mut write = || -> io::Result<()> {
            writeln!(
                out,
                "scenario,distance_km,fspl_db,total_loss_db,link_snr_db,symbol_snr_db"
            )?;
            for (k, d, fspl, loss, snr, sym) in &rows {
                writeln!(out, "{},{d},{fspl},{loss},{snr},{sym}", k.name())?;
            }
            out.flush()
        };
        write().map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// Config file, then `--override` pairs, then `--seed`.
fn load_config(a: &ExperimentArgs) -> CliResult<ExperimentConfig> {
    let text = match &a.config {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    let overrides = a
        .overrides
        .iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| CliError::Usage(format!("override `{kv}` is not KEY=VALUE")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut cfg =
        ExperimentConfig::from_toml_with_overrides(&text, &overrides).map_err(CliError::usage)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(CliError::usage)?;
    Ok(cfg)
}

fn unix_time() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn cmd_sweep(a: SweepArgs) -> CliResult<()> {
    let cfg = load_config(&a.experiment)?;
    if a.workers == Some(0) {
        return Err(CliError::usage("--workers must be >= 1"));
    }
    let exp = Experiment::new(cfg).map_err(CliError::usage)?;
    let out = exp.sweep(a.workers).map_err(CliError::runtime)?;

    let target = a.output.as_deref();
    let label = target.map_or("stdout".into(), |p| p.display().to_string());
    let mut w = sink(target)?;
    out.write_csv(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::runtime(format!("{label}: {e}")))?;

    if let Some(path) = target {
        let mut meta = path.as_os_str().to_owned();
        meta.push(".meta");
        let meta = PathBuf::from(meta);
        let body = format!(
            "# generated_unix_time = {}\n{}",
            unix_time(),
            exp.config().to_toml_string()
        );
        fs::write(&meta, body)
            .map_err(|e| CliError::runtime(format!("{}: {e}", meta.display())))?;
    }

    let summary = exp.summary(&out).map_err(CliError::runtime)?;
    if let Some(path) = &a.summary {
        let json = serde_json::to_string_pretty(&summary).map_err(CliError::runtime)?;
        fs::write(path, json + "\n")
            .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    }

    let mut err = io::stderr().lock();
    let _ = writeln!(
        err,
        "{:<6} {:>5} {:>8} {:>9} {:>9}",
        "scheme", "L", "snr_db", "nmse_db", "mean_kl"
    );
    for g in &summary.aggregates {
        let _ = writeln!(
            err,
            "{:<6} {:>5} {:>8.2} {:>9.2} {:>9.4}",
            g.scheme.name(),
            g.users,
            g.snr_db,
            g.nmse_db,
            g.mean_kl
        );
    }
    for m in &summary.markers {
        let _ = writeln!(
            err,
            "marker {} symbol_snr_db {:.2}",
            m.scenario.name(),
            m.symbol_snr_db
        );
    }
    Ok(())
}

fn cmd_trial(a: TrialArgs) -> CliResult<()> {
    let mut cfg = load_config(&a.experiment)?;
    cfg.schemes = vec![a.scheme];
    cfg.users = vec![a.users];
    cfg.snr_db = vec![a.snr_db];
    cfg.scenarios.clear();
    cfg.validate().map_err(CliError::usage)?;
    let exp = Experiment::new(cfg).map_err(CliError::usage)?;
    let point = Point {
        scheme: a.scheme,
        users: a.users,
        snr_db: a.snr_db,
    };
    let record = exp.run_trial(&point, a.trial).map_err(CliError::runtime)?;
    let mut w = sink(None)?;
    write_records_csv(&[record], &mut w)
        .and_then(|_| w.flush())
        .map_err(CliError::runtime)
}

fn cmd_waveform(a: WaveformArgs) -> CliResult<()> {
    let cfg = ModulationConfig::with_levels(a.n_levels)
        .and_then(|c| c.with_amplitude(a.amplitude))
        .and_then(|c| c.with_spreading_rate(a.f_mod))
        .map_err(CliError::usage)?;
    let m = Measurement::new(a.m, a.n_levels).map_err(CliError::usage)?;
    let params = cfg.chirp_params();
    let z = analytic_tone(m, &cfg)
        .and_then(|t| spread(&t, &params))
        .map_err(CliError::runtime)?;

    let mut w = sink(a.output.as_deref())?;
    let mut write = || -> io::Result<()> {
        writeln!(w, "n,I,Q,inst_freq")?;
        for (n, s) in z.samples.iter().enumerate() {
            let f = instantaneous_frequency(n, m, &params)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
            writeln!(w, "{n},{},{},{f}", s.re, s.im)?;
        }
        w.flush()
    };
    write().map_err(CliError::runtime)
}
