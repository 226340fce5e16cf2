use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ppmlr::config::RunConfig;
use ppmlr::decomp::{exchanged_bytes, tde_units, total_ranks, REFERENCE_CONFIGS, BYTES_PER_CELL};
use ppmlr::exchange::TransportKind;
use ppmlr::perfmodel::{aggregate, write_report, ReportRow, StepTiming};
use ppmlr::verify::{run_suite, Suite};
use ppmlr::Result;

/// PPMLR magnetosphere solver and partitioned-run harness.
#[derive(Parser)]
#[command(name = "ppmlr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured simulation.
    Run {
        /// TOML run config; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the step count (clears any end time).
        #[arg(long)]
        steps: Option<u64>,
        /// Halo transport: staged or direct.
        #[arg(long)]
        transport: Option<TransportKind>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite and print a pass/fail table.
    Verify {
        /// sod, convergence, conservation, partition, brio_wu or all.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Rank counts and exchange volumes of the reference partitions.
    Partition {
        /// Grid taken from this config; the default magnetosphere grid otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the CSV here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Modeled speedup for the reference partitions, with measured
    /// timings from a previous run directory when available.
    Report {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run directory to read timings from; the report is written there.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Config for commands that only need the grid and model settings.
fn load(config: Option<&Path>) -> Result<RunConfig> {
    RunConfig::load_with(config, |c| {
        if c.steps.is_none() && c.end_time.is_none() {
            c.steps = Some(1);
        }
    })
}

fn run(config: Option<PathBuf>, steps: Option<u64>, transport: Option<TransportKind>, out: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = RunConfig::load_with(config.as_deref(), |cfg| {
        if let Some(n) = steps {
            cfg.steps = Some(n);
            cfg.end_time = None;
        }
        if let Some(t) = transport {
            cfg.transport = t;
        }
        if let Some(o) = out {
            cfg.out = o;
        }
    })?;
    let s = ppmlr::run::run(&cfg)?;
    let totals = s.totals();
    println!(
        "steps {} time {:.6e} snapshots {} messages {} bytes {} copy_events {}",
        s.steps,
        s.time,
        s.snapshots.len(),
        totals.messages,
        totals.bytes,
        totals.copy_events
    );
    println!("output {}", s.out.display());
    Ok(ExitCode::SUCCESS)
}

fn verify(suite: &str) -> Result<ExitCode> {
    let suite: Suite = suite.parse()?;
    let checks = run_suite(suite)?;
    let mut ok = true;
    for c in &checks {
        println!("{c}");
        ok &= c.passed();
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    println!("{} checks, {failed} failed", checks.len());
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn partition(config: Option<PathBuf>, out: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = load(config.as_deref())?;
    let grid = cfg.grid.build()?;
    let mut text = String::from("config,ranks,tde_units,exchanged_bytes\n");
    for c in REFERENCE_CONFIGS {
        text += &format!(
            "{}x{}x{},{},{},{}\n",
            c.nx,
            c.ny,
            c.nz,
            total_ranks(&c),
            tde_units(&c),
            exchanged_bytes(&c, &grid, cfg.ghost, BYTES_PER_CELL)
        );
    }
    print!("{text}");
    if let Some(p) = out {
        std::fs::write(p, &text)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn read_timings(path: &Path) -> Result<Vec<StepTiming>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<StepTiming>, _>>()?;
    Ok(rows)
}

fn report(config: Option<PathBuf>, out: Option<PathBuf>) -> Result<ExitCode> {
    let run_cfg = match (&config, &out) {
        (None, Some(dir)) if dir.join("config.toml").exists() => Some(RunConfig::load(&dir.join("config.toml"))?),
        _ => None,
    };
    let cfg = match run_cfg {
        Some(c) => c,
        None => load(config.as_deref())?,
    };
    let grid = cfg.grid.build()?;
    let measured = match &out {
        Some(dir) if dir.join("timings.csv").exists() => Some(aggregate(&read_timings(&dir.join("timings.csv"))?)?),
        _ => None,
    };
    let mut rows = Vec::new();
    let mut configs = REFERENCE_CONFIGS.to_vec();
    if !configs.contains(&cfg.partition) {
        configs.insert(0, cfg.partition);
    }
    for c in configs {
        let summary = if c == cfg.partition { measured.as_ref() } else { None };
        rows.push(ReportRow::new(&c, &grid, cfg.ghost, summary, &cfg.bandwidth, cfg.efficiency));
    }
    let mut buf = Vec::new();
    write_report(&rows, &mut buf)?;
    std::io::stdout().write_all(&buf)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("scaling_report.csv"), &buf)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn fail(kind: &str, message: &str) -> ExitCode {
    let message = message.strip_prefix(&format!("{kind}: ")).unwrap_or(message);
    eprintln!("error[{kind}]: {}", message.replace('\n', " "));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("bad arguments").trim_start_matches("error: ");
            return fail("usage", first);
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            steps,
            transport,
            out,
        } => run(config, steps, transport, out),
        Command::Verify { suite } => verify(&suite),
        Command::Partition { config, out } => partition(config, out),
        Command::Report { config, out } => report(config, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}

