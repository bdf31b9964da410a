//! `reviewnet`: runs simulations and experiment sweeps and writes their
//! CSV outputs, event logs and manifests.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 runtime error
//! (including a corrupt event log).

mod output;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use reviewnet_core::protocol::{replay, verify_reader, EventSink, LogReader};
use reviewnet_core::Slope;
use reviewnet_sim::experiments::{
    run_convergence_modes, run_min_qea_sweep, run_strategy_tournament, RunRow, SelfishMix,
    SettingSummary, SweepReport, HONEST_FRACTIONS, QEA_GRID,
};
use reviewnet_sim::io::{
    read_runs, summarize, write_aggregate, write_population, write_runs, write_series,
    write_strategy_bars,
};
use reviewnet_sim::{run_simulation_logged, SimConfig, SimError, SimulationResult, Strategy};

use output::{hex, OutDir, MANIFEST_TABLE};

#[derive(Parser)]
#[command(name = "reviewnet", version, about = "Review marketplace simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One simulation with its event log.
    Run(Common),
    /// Sweep the minimum QEA of the initial experts.
    SweepQea {
        #[command(flatten)]
        common: Common,
        /// Comma-separated grid; defaults to 0.1, 0.2, ..., 0.9.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Honest experts against selfish endorsement strategies.
    Tournament {
        #[command(flatten)]
        common: Common,
        /// Comma-separated honest fractions; defaults to 0.1, 0.2, ..., 0.9.
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
        /// Relative shares of the selfish remainder, e.g.
        /// `lazy=1,endorse-poor=2`; defaults to an even split.
        #[arg(long, value_delimiter = ',')]
        selfish: Option<Vec<String>>,
    },
    /// Endorsement-only, prediction-only and combined runs from one seed.
    Modes(Common),
    /// Checks the hash chain of an event log.
    VerifyLog {
        path: PathBuf,
        /// Also replay the log and print the resulting ledger fingerprint.
        #[arg(long)]
        replay: bool,
    },
    /// Prints the aggregate table of a sweep or tournament directory.
    Report {
        /// Directory containing runs.csv.
        dir: PathBuf,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration; a manifest.toml from an earlier run also works.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Repetitions per grid setting.
    #[arg(long, default_value_t = 10)]
    repetitions: usize,
    /// Real slope <= 0 or `neg-inf`.
    #[arg(long, allow_hyphen_values = true)]
    slope: Option<String>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

/// Bad input from the user, as opposed to a failure while running.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct ConfigError(String);

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn is_config_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<ConfigError>().is_some()
            || c.downcast_ref::<SimError>().is_some_and(SimError::is_config)
    })
}

/// Loads a config file, ignoring a manifest table, and applies overrides.
fn resolve_config(c: &Common) -> Result<SimConfig> {
    let mut cfg = match &c.config {
        None => SimConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            let mut table: toml::Table = toml::from_str(&text)
                .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            table.remove(MANIFEST_TABLE);
            table
                .try_into::<SimConfig>()
                .map_err(|e| config_error(format!("{}: {e}", path.display())))?
        }
    };
    if let Some(seed) = c.seed {
        cfg.simulation.seed = seed;
    }
    if let Some(rounds) = c.rounds {
        cfg.simulation.n_rounds = rounds;
    }
    if let Some(s) = &c.slope {
        cfg.incentives.slope =
            s.parse::<Slope<f64>>().map_err(|e| config_error(format!("--slope: {e}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn progress(quiet: bool) -> impl Fn(usize, usize) + Sync {
    move |done, total| {
        if !quiet {
            eprint!("\r{done}/{total} runs");
            if done == total {
                eprintln!();
            }
        }
    }
}

fn parse_selfish(items: &[String]) -> Result<BTreeMap<Strategy, f64>> {
    items
        .iter()
        .map(|item| {
            let (name, share) = item
                .split_once('=')
                .ok_or_else(|| config_error(format!("--selfish: expected strategy=share, got {item:?}")))?;
            let s: Strategy = name.trim().parse().map_err(|e| config_error(format!("--selfish: {e}")))?;
            let v: f64 =
                share.trim().parse().map_err(|e| config_error(format!("--selfish: {name}: {e}")))?;
            Ok((s, v))
        })
        .collect()
}

fn write_sweep(out: &mut OutDir, report: &SweepReport) -> Result<()> {
    write_runs(report, out.file("runs.csv")?)?;
    write_aggregate(&report.settings, out.file("aggregate.csv")?)?;
    write_strategy_bars(&report.settings, out.file("strategy.csv")?)?;
    Ok(())
}

fn print_run(label: &str, r: &SimulationResult) -> Result<()> {
    let row = RunRow::from_result(0.0, 0, r)?;
    println!(
        "{label}: initial {:.4}  final {:.4}  ideal {:.4}  population {}  log head {}",
        row.initial_score,
        row.actual_score,
        row.ideal_score,
        r.population.len(),
        hex(&r.log_head)
    );
    Ok(())
}

fn cmd_run(c: &Common) -> Result<()> {
    let cfg = resolve_config(c)?;
    let mut out = OutDir::create(&c.out)?;
    out.write("config.toml", cfg.to_toml_string().as_bytes())?;
    let log = out.file("events.jsonl")?;
    let r = run_simulation_logged(&cfg, EventSink::writer(log))?;
    write_population(&r, out.file("population.csv")?)?;
    write_series(&r, out.file("series.csv")?)?;
    out.finish("run", &cfg)?;
    print_run("run", &r)
}

fn cmd_modes(c: &Common) -> Result<()> {
    let cfg = resolve_config(c)?;
    let mut out = OutDir::create(&c.out)?;
    out.write("config.toml", cfg.to_toml_string().as_bytes())?;
    for (name, r) in run_convergence_modes(&cfg)? {
        write_population(&r, out.file(&format!("population_{name}.csv"))?)?;
        write_series(&r, out.file(&format!("series_{name}.csv"))?)?;
        if !c.quiet {
            print_run(name, &r)?;
        }
    }
    out.finish("modes", &cfg)
}

fn cmd_sweep(c: &Common, grid: Option<&[f64]>) -> Result<()> {
    let cfg = resolve_config(c)?;
    let grid = grid.unwrap_or(&QEA_GRID);
    let mut out = OutDir::create(&c.out)?;
    out.write("config.toml", cfg.to_toml_string().as_bytes())?;
    let report = run_min_qea_sweep(&cfg, grid, c.repetitions, &progress(c.quiet))?;
    write_sweep(&mut out, &report)?;
    out.finish("sweep-qea", &cfg)?;
    print_table(&report.settings);
    Ok(())
}

fn cmd_tournament(c: &Common, fractions: Option<&[f64]>, selfish: Option<&[String]>) -> Result<()> {
    let cfg = resolve_config(c)?;
    let fractions = fractions.unwrap_or(&HONEST_FRACTIONS);
    let mix: SelfishMix = selfish.map(parse_selfish).transpose()?;
    let mut out = OutDir::create(&c.out)?;
    out.write("config.toml", cfg.to_toml_string().as_bytes())?;
    let report = run_strategy_tournament(&cfg, fractions, &mix, c.repetitions, &progress(c.quiet))?;
    write_sweep(&mut out, &report)?;
    out.finish("tournament", &cfg)?;
    print_table(&report.settings);
    Ok(())
}

fn cmd_verify(path: &Path, also_replay: bool) -> Result<()> {
    let open = || -> Result<BufReader<File>> {
        Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
    };
    let n = verify_reader::<f64>(open()?).with_context(|| format!("{} is corrupt", path.display()))?;
    println!("ok: {n} events");
    if also_replay {
        let engine = replay(LogReader::<f64, _>::new(open()?))?;
        println!("ledger fingerprint {}", hex(&engine.ledger().fingerprint()));
        println!("log head {}", hex(&engine.log().head()));
    }
    Ok(())
}

fn cmd_report(dir: &Path) -> Result<()> {
    let path = dir.join("runs.csv");
    if !path.is_file() {
        bail!(config_error(format!("{} not found", path.display())));
    }
    let rows = read_runs(File::open(&path)?).with_context(|| format!("reading {}", path.display()))?;
    if rows.is_empty() {
        bail!(config_error(format!("{} has no rows", path.display())));
    }
    print_table(&summarize(&rows));
    Ok(())
}

/// Initial/ideal/actual means with one column per setting, then mean final
/// expertise of each strategy group where present.
fn print_table(settings: &[SettingSummary]) {
    print!("{:<16}", "setting");
    for s in settings {
        print!("{:>10}", s.setting);
    }
    println!();
    let rows: [(&str, fn(&SettingSummary) -> f64); 3] =
        [("initial", |s| s.initial.mean), ("ideal", |s| s.ideal.mean), ("actual", |s| s.actual.mean)];
    for (name, f) in rows {
        print!("{name:<16}");
        for s in settings {
            print!("{:>10.4}", f(s));
        }
        println!();
    }
    let present: Vec<Strategy> = Strategy::ALL
        .into_iter()
        .filter(|st| settings.iter().any(|s| s.strategy_expertise.contains_key(st)))
        .collect();
    if present.len() > 1 {
        println!("\nmean final expertise of initial experts");
        for st in present {
            print!("{:<16}", st.name());
            for s in settings {
                match s.strategy_expertise.get(&st) {
                    Some(v) => print!("{:>10.0}", v.mean),
                    None => print!("{:>10}", "-"),
                }
            }
            println!();
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(c) => cmd_run(&c),
        Command::SweepQea { common, grid } => cmd_sweep(&common, grid.as_deref()),
        Command::Tournament { common, fractions, selfish } => {
            cmd_tournament(&common, fractions.as_deref(), selfish.as_deref())
        }
        Command::Modes(c) => cmd_modes(&c),
        Command::VerifyLog { path, replay } => cmd_verify(&path, replay),
        Command::Report { dir } => cmd_report(&dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_config_error(&e) { 1 } else { 2 })
        }
    }
}
