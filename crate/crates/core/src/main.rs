use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use bdperiod::chain::{ChainDocument, ChainSpec};
use bdperiod::qpoly::{self, Route};
use bdperiod::report::{self, FleetRequest, Simulation, VERSION};
use bdperiod::series::{ProbePolicy, DEFAULT_HORIZON};
use bdperiod::sim::{self, SimConfig};
use bdperiod::BdError;

const EXIT_INPUT: u8 = 1;
const EXIT_UNDECIDED: u8 = 2;
const EXIT_CONTRADICTION: u8 = 3;

#[derive(Parser)]
#[command(name = "bdperiod", version, about = "Asymptotic period of birth-death chains")]
struct Cli {
    /// Indent the JSON output.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Period, recurrence class and cross-checks as one JSON document.
    Analyze {
        chain: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Also simulate this many trajectories and compare.
        #[arg(long)]
        seeds: Option<usize>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Seeded trajectories with streaming period detectors.
    Simulate {
        chain: PathBuf,
        /// Fleet size; member seeds are derived from --seed.
        #[arg(long, default_value_t = 1)]
        seeds: usize,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// `Qbar_n = (-1)^n Q_n(-1)` (or `Q_n(x)`) as JSON lines.
    Qpoly {
        chain: PathBuf,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value = "sum2")]
        route: Route,
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        x: f64,
    },
    /// Check a chain document and report the normalizations applied.
    Validate { chain: PathBuf },
}

#[derive(Args)]
struct PolicyArgs {
    #[arg(long, env = "BDPERIOD_DEFAULT_HORIZON", default_value_t = DEFAULT_HORIZON)]
    horizon: usize,
    #[arg(long = "div-threshold", default_value_t = ProbePolicy::default().divergence_threshold)]
    div_threshold: f64,
}

impl PolicyArgs {
    fn policy(&self) -> ProbePolicy {
        ProbePolicy {
            horizon: self.horizon,
            divergence_threshold: self.div_threshold,
            ..ProbePolicy::default()
        }
    }
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,
    /// Defaults to max(10^4, steps/100).
    #[arg(long = "burn-in")]
    burn_in: Option<u64>,
    /// Residue moduli; repeat or separate with commas.
    #[arg(long = "m", value_delimiter = ',')]
    m: Vec<u64>,
    #[arg(long, default_value_t = 0)]
    x0: u64,
}

impl SimArgs {
    fn config(&self) -> SimConfig {
        SimConfig {
            x0: self.x0,
            burn_in: self.burn_in.unwrap_or_else(|| sim::default_burn_in(self.steps)),
            moduli: self.m.clone(),
            ..SimConfig::new(self.steps)
        }
    }
}

#[derive(Serialize)]
struct SimulationDocument<'a> {
    version: &'static str,
    chain: &'a ChainDocument,
    simulation: &'a Simulation,
}

#[derive(Serialize)]
struct ValidationDocument<'a> {
    version: &'static str,
    valid: bool,
    n0: usize,
    adjustments: &'a [String],
    chain: &'a ChainDocument,
}

#[derive(Serialize)]
struct QLine {
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    qbar_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_n: Option<f64>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    saturated: bool,
}

fn to_json<T: Serialize>(value: &T, pretty: bool) -> Result<String, BdError> {
    Ok(if pretty {
        serde_json::to_string_pretty(value)?
    } else {
        serde_json::to_string(value)?
    })
}

fn run(cli: Cli) -> Result<u8, BdError> {
    let mut out = io::stdout().lock();
    match cli.command {
        Command::Analyze { chain, policy, seeds, sim } => {
            let chain = ChainSpec::from_path(&chain)?;
            let fleet = seeds.map(|seeds| FleetRequest {
                base_seed: sim.seed,
                seeds,
                config: sim.config(),
            });
            let bundle = report::analyze(&chain, &policy.policy(), fleet.as_ref())?;
            writeln!(out, "{}", bundle.to_json(cli.pretty)?)?;
            Ok(if bundle.is_decided() { 0 } else { EXIT_UNDECIDED })
        }
        Command::Simulate { chain, seeds, sim, policy } => {
            let chain = ChainSpec::from_path(&chain)?;
            if seeds == 0 {
                return Err(BdError::InvalidArgument("--seeds must be at least 1".into()));
            }
            let probe = bdperiod::series::probe(&chain, &policy.policy());
            let simulation = report::simulate_fleet(&chain, Some(&probe), sim.seed, seeds, &sim.config())?;
            let doc = SimulationDocument {
                version: VERSION,
                chain: chain.document(),
                simulation: &simulation,
            };
            writeln!(out, "{}", to_json(&doc, cli.pretty)?)?;
            Ok(0)
        }
        Command::Qpoly { chain, n, route, x } => {
            let chain = ChainSpec::from_path(&chain)?;
            let minus_one = x == -1.0;
            if !minus_one && route != Route::Direct {
                return Err(BdError::InvalidArgument(
                    "the sum routes are only defined at x = -1".into(),
                ));
            }
            let seq = if minus_one {
                qpoly::qbar_minus_one(&chain, n, route)
            } else {
                qpoly::q_eval(&chain, x, n)
            };
            for (i, &v) in seq.values.iter().enumerate() {
                let line = QLine {
                    n: i,
                    qbar_n: minus_one.then_some(v),
                    q_n: (!minus_one).then_some(v),
                    saturated: false,
                };
                writeln!(out, "{}", serde_json::to_string(&line)?)?;
            }
            if let Some(i) = seq.saturated_at {
                let line = QLine {
                    n: i,
                    qbar_n: None,
                    q_n: None,
                    saturated: true,
                };
                writeln!(out, "{}", serde_json::to_string(&line)?)?;
            }
            Ok(0)
        }
        Command::Validate { chain } => {
            let chain = ChainSpec::from_path(&chain)?;
            let doc = ValidationDocument {
                version: VERSION,
                valid: true,
                n0: chain.n0(),
                adjustments: chain.adjustments(),
                chain: chain.document(),
            };
            writeln!(out, "{}", to_json(&doc, cli.pretty)?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}: {e}", e.kind());
            ExitCode::from(match e {
                BdError::ContradictionDetected(_) => EXIT_CONTRADICTION,
                _ => EXIT_INPUT,
            })
        }
    }
}
