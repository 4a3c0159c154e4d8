use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use uav_marl::experiment::{self, Algorithm, SweepParam};
use uav_marl::scenario::load_scenario;
use uav_marl::Error;

/// Run UAV resource-allocation experiments from a scenario file.
#[derive(Debug, Parser)]
#[command(name = "uav-marl", version)]
struct Cli {
    /// Scenario document (TOML).
    #[arg(long)]
    scenario: PathBuf,

    /// Algorithm: marl, match, random, a comma list, or `all`.
    #[arg(long, default_value = "marl")]
    algo: String,

    /// Seeds as `a..b` (end exclusive) or `1,2,3`. Defaults to the scenario's seeds.
    #[arg(long)]
    seeds: Option<String>,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Parameter sweep, e.g. `epsilon=0,0.2,0.5,0.9` or `speed=20,40,60`.
    #[arg(long)]
    sweep: Option<String>,

    /// Write a matplotlib script next to the CSVs.
    #[arg(long)]
    emit_plot_script: bool,
}

fn parse_algorithms(text: &str) -> Result<Vec<Algorithm>, Error> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(Algorithm::ALL.to_vec());
    }
    text.split(',').map(str::parse).collect()
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, Error> {
    let bad = |what: &str| Error::InvalidArgument(format!("bad seed list `{text}`: {what}"));
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad("range start"))?;
        let b: u64 = b.trim().parse().map_err(|_| bad("range end"))?;
        return Ok((a..b).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad(s)))
        .collect()
}

fn parse_sweep(text: &str) -> Result<(SweepParam, Vec<f64>), Error> {
    let (name, values) = text.split_once('=').ok_or_else(|| {
        Error::InvalidArgument(format!("sweep `{text}` should look like param=v1,v2"))
    })?;
    let values = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad sweep value `{v}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((name.parse()?, values))
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) | Error::Config { .. } | Error::Unsupported(_) => 1,
        Error::Infeasible(_) | Error::Io { .. } | Error::Csv { .. } => 2,
    }
}

fn execute(cli: &Cli) -> Result<(), Error> {
    // An unreadable scenario path is a usage problem, not a failed run.
    let scenario = load_scenario(&cli.scenario).map_err(|e| match e {
        Error::Io { path, source } => {
            Error::InvalidArgument(format!("cannot read {}: {source}", path.display()))
        }
        other => other,
    })?;
    let algorithms = parse_algorithms(&cli.algo)?;
    let seeds = match &cli.seeds {
        Some(text) => parse_seeds(text)?,
        None => scenario.seeds.clone(),
    };
    match &cli.sweep {
        Some(spec) => {
            let (param, values) = parse_sweep(spec)?;
            let rows = experiment::sweep(
                &scenario,
                param,
                &values,
                &algorithms,
                &seeds,
                &cli.out,
                cli.emit_plot_script,
            )?;
            println!("{} runs written to {}", rows.len(), cli.out.display());
        }
        None => {
            let summaries = experiment::run(
                &scenario,
                &algorithms,
                &seeds,
                &cli.out,
                cli.emit_plot_script,
            )?;
            for s in &summaries {
                println!(
                    "{:<7} seeds={:<3} final v_avg = {:.6} ± {:.6}",
                    s.algorithm,
                    s.runs.len(),
                    s.mean(),
                    s.std()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
