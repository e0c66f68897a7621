//! `fwdeq`: solve, sweep and cross-check commodity forward market scenarios.

mod check;
mod scenario;
mod svg;
mod sweep;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use forward_equilibrium::{equilibrium, ModelKind};
use serde_json::{Map, Value};

use scenario::Scenario;

#[derive(Parser)]
#[command(name = "fwdeq", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the scenario's base point and print every equilibrium field.
    Solve { scenario: PathBuf },
    /// Solve every grid point of the sweep and write the table to a directory.
    Sweep {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write an SVG chart of the scenario's outputs.
        #[arg(long)]
        svg: bool,
    },
    /// Compare the analytic solution at the base point with grid search and
    /// Monte Carlo.
    OracleCheck {
        scenario: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

fn print_json(v: &Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn solve(s: &Scenario, format: Format) -> Result<()> {
    let (market, model) = s.build(&[]);
    let (market, model) = (market?, model?);
    let eq = equilibrium::solve(&market, &model, ModelKind::of(&model))?;
    let nf = if s.include_no_forward {
        Some(equilibrium::solve_no_forward(&market, &model)?)
    } else {
        None
    };
    let fields = sweep::detail(&eq, nf.as_ref());
    match format {
        Format::Json => {
            let map: Map<String, Value> = fields
                .iter()
                .map(|(k, v)| (k.to_string(), Value::from(*v)))
                .collect();
            print_json(&Value::Object(map))
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(io::stdout().lock());
            w.write_record(fields.iter().map(|f| f.0))?;
            w.write_record(fields.iter().map(|f| f.1.to_string()))?;
            w.flush()?;
            Ok(())
        }
    }
}

fn sweep(s: &Scenario, file: &Path, out: &Path, format: Format, with_svg: bool) -> Result<()> {
    let rows = sweep::run(s);
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let stem = file
        .file_stem()
        .map(|x| x.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".into());
    let table = match format {
        Format::Csv => {
            let path = out.join(format!("{stem}.csv"));
            let f = fs::File::create(&path)
                .with_context(|| format!("cannot write {}", path.display()))?;
            sweep::write_csv(&rows, io::BufWriter::new(f))?;
            path
        }
        Format::Json => {
            let path = out.join(format!("{stem}.json"));
            let text = serde_json::to_string_pretty(&sweep::to_json(&rows))? + "\n";
            fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
            path
        }
    };
    eprintln!("{} rows -> {}", rows.len(), table.display());
    if with_svg {
        let Some(chart) = svg::render(s, &rows) else {
            bail!("--svg needs at least one sweep axis");
        };
        let path = out.join(format!("{stem}.svg"));
        fs::write(&path, chart).with_context(|| format!("cannot write {}", path.display()))?;
        eprintln!("chart -> {}", path.display());
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} grid points failed; see the error column");
    }
    Ok(())
}

fn oracle_check(s: &Scenario, samples: usize, seed: u64, format: Format) -> Result<bool> {
    let (market, model) = s.build(&[]);
    let checks = check::run(&market?, &model?, samples, seed)?;
    match format {
        Format::Json => print_json(&check::to_json(&checks))?,
        Format::Csv => check::write_csv(&checks, io::stdout().lock())?,
    }
    Ok(checks.iter().all(|c| c.status() != check::Status::Fail))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { scenario } => {
            solve(&Scenario::load(&scenario)?, cli.format)?;
            Ok(true)
        }
        Command::Sweep { scenario, out, svg } => {
            sweep(
                &Scenario::load(&scenario)?,
                &scenario,
                &out,
                cli.format,
                svg,
            )?;
            Ok(true)
        }
        Command::OracleCheck {
            scenario,
            samples,
            seed,
        } => oracle_check(&Scenario::load(&scenario)?, samples, seed, cli.format),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
