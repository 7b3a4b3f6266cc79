use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;
use wedesign::calibrate::{calibrate_constraint, calibrate_priors, ConstraintGrid, ConstraintKind, PriorGrid};
use wedesign::core::{evaluate_scenario, Scenario, TrialConfig};
use wedesign::fixtures;
use wedesign::report::{write_constraint_surface_csv, write_oc_csv, write_prior_surface_csv};
use wedesign::runner::{run_replications, Lanes};
use wedesign::session::TrialSession;
use wedesign::store::{write_session_file, FileStore, STORE_ENV};

#[derive(Parser)]
#[command(name = "wedesign", version, about = "Weighted-entropy regimen-finding design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate replicated trials and write operating characteristics as CSV.
    Simulate {
        /// Shipped config name or path to a config JSON file.
        #[arg(long)]
        config: String,
        /// Scenario number 1-14, `illustration`, or path to a scenario JSON file.
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        /// Base seed; defaults to the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; all cores if omitted.
        #[arg(long)]
        lanes: Option<usize>,
    },
    /// Grid search over priors, or surfaces over a safety or futility constraint.
    Calibrate {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Grid JSON: `{start_t, w_t, start_e, w_e}` for priors,
        /// `{thresholds, rates}` for constraints.
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value = "single-agent")]
        config: String,
        /// Comma-separated scenarios. Defaults to all fourteen, or to those with
        /// an optimal regimen for priors.
        #[arg(long, value_delimiter = ',')]
        scenarios: Vec<String>,
        #[arg(long, default_value_t = 1_000)]
        reps: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// Surface CSV; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        lanes: Option<usize>,
    },
    /// Run a trial interactively from a session file.
    Conduct {
        /// Session JSON file.
        #[arg(long)]
        session: PathBuf,
        /// Start a new session file from this config.
        #[arg(long)]
        new: Option<String>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Session directory; defaults to $WEDESIGN_STORE or ./trials.
        #[arg(long)]
        store: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Priors,
    Safety,
    Futility,
}

#[derive(Deserialize)]
struct AxisFile {
    thresholds: Vec<f64>,
    rates: Vec<f64>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_config(arg: &str) -> Result<TrialConfig> {
    match fixtures::config(arg) {
        Some(c) => Ok(c),
        None => read_json(Path::new(arg)),
    }
}

fn load_scenario(arg: &str) -> Result<Scenario> {
    if arg == "illustration" {
        return Ok(fixtures::illustration_scenario());
    }
    if let Ok(n) = arg.parse::<usize>() {
        if !(1..=14).contains(&n) {
            bail!("scenario number {n} is not between 1 and 14");
        }
        return Ok(fixtures::scenario(n));
    }
    read_json(Path::new(arg))
}

fn output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn lanes(n: Option<usize>) -> Lanes {
    n.map(Lanes::fixed).unwrap_or_default()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, scenario, reps, seed, out, lanes: l } => {
            let config = load_config(&config)?;
            let scenario = load_scenario(&scenario)?;
            let seed = seed.unwrap_or(config.rng_seed);
            let oc = run_replications(&config, &scenario, reps, seed, lanes(l))?;
            write_oc_csv(output(out.as_deref())?, &oc, &evaluate_scenario(&scenario), seed)?;
        }
        Command::Calibrate { kind, grid, config, scenarios, reps, seed, out, lanes: l } => {
            let template = load_config(&config)?;
            let scenarios: Vec<Scenario> = if scenarios.is_empty() {
                // the prior objective needs an optimal regimen in every scenario
                fixtures::scenarios()
                    .into_iter()
                    .filter(|s| !matches!(kind, Kind::Priors) || evaluate_scenario(s).optimal.is_some())
                    .collect()
            } else {
                scenarios.iter().map(|s| load_scenario(s)).collect::<Result<_>>()?
            };
            let seed = seed.unwrap_or(template.rng_seed);
            match kind {
                Kind::Priors => {
                    let grid: PriorGrid = read_json(&grid)?;
                    let cal = calibrate_priors(&grid, &scenarios, &template, reps, seed, lanes(l))?;
                    let names: Vec<String> = scenarios.iter().map(|s| s.name.clone()).collect();
                    write_prior_surface_csv(output(out.as_deref())?, &cal.surface, &names)?;
                    if out.is_some() {
                        println!("{}", json!({ "best": cal.best, "objective": cal.best_objective }));
                    }
                }
                Kind::Safety | Kind::Futility => {
                    let axes: AxisFile = read_json(&grid)?;
                    let kind = match kind {
                        Kind::Safety => ConstraintKind::Safety,
                        _ => ConstraintKind::Futility,
                    };
                    let grid = ConstraintGrid { kind, thresholds: axes.thresholds, rates: axes.rates };
                    let cells = calibrate_constraint(&grid, &scenarios, &template, reps, seed, lanes(l))?;
                    write_constraint_surface_csv(output(out.as_deref())?, &cells)?;
                }
            }
        }
        Command::Conduct { session, new } => {
            if let Some(config) = new {
                if session.exists() {
                    bail!("{} already exists", session.display());
                }
                let mut s = TrialSession::create(load_config(&config)?)?;
                s.fix_draw();
                write_session_file(&session, &s)?;
            }
            let stdin = io::stdin();
            wedesign::conduct::run(&session, stdin.lock(), io::stdout().lock())?;
        }
        Command::Serve { addr, store } => {
            let dir = store.unwrap_or_else(FileStore::default_dir);
            let store = FileStore::open(&dir).with_context(|| format!("opening store {}", dir.display()))?;
            eprintln!("serving on {addr}, sessions in {} (override with --store or {STORE_ENV})", dir.display());
            tokio::runtime::Runtime::new()?.block_on(wedesign::api::serve(&addr, store))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let causes: Vec<String> = e.chain().skip(1).map(|c| c.to_string()).collect();
            eprintln!("{}", json!({ "code": "error", "message": e.to_string(), "details": causes }));
            ExitCode::FAILURE
        }
    }
}
