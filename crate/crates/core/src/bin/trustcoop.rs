use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use trustcoop::channel::{sample, ChannelConfig};
use trustcoop::experiments::{self, SweepResult, DEFAULT_SEED, DEFAULT_TRIALS};
use trustcoop::miso::{self, MisoDerived};
use trustcoop::oracle;
use trustcoop::rate::SystemParams;
use trustcoop::simo::Tu2Design;
use trustcoop::siso::SisoGains;
use trustcoop::solve::{solve, Scheme, SolverOptions};
use trustcoop::strategy::{check_constraints, Configuration};
use trustcoop::{Error, Result};

/// Trust-degree based user cooperation: solvers and figure reproduction.
#[derive(Parser)]
#[command(name = "trustcoop", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweeps in a JSON config (one object or an array) and write CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun the curves of one simulation figure (fig2 .. fig9).
    Reproduce {
        figure: String,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        /// Shorthand for --trials 100.
        #[arg(long, conflicts_with = "trials")]
        smoke: bool,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one random instance and print the strategy and rates as JSON.
    Solve(Instance),
    /// Solve one random instance and compare against a brute-force search.
    Oracle(Instance),
}

#[derive(Args)]
struct Instance {
    #[arg(long, default_value_t = 1)]
    n1: usize,
    #[arg(long, default_value_t = 1)]
    n2: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    trial: u64,
    #[arg(long = "rho1-db", default_value_t = 40.0)]
    rho1_db: f64,
    #[arg(long = "rho2-db", default_value_t = 40.0)]
    rho2_db: f64,
    #[arg(long, default_value = "proposed")]
    scheme: Scheme,
}

impl Instance {
    fn setup(&self) -> Result<(trustcoop::channel::ChannelSet, SystemParams)> {
        let cfg = ChannelConfig::standard(self.n1, self.n2, self.rho1_db, self.rho2_db);
        cfg.validate()?;
        let ch = sample(&cfg, self.seed, self.trial)?;
        let params = SystemParams::from_config(&cfg, self.alpha, self.q)?;
        Ok((ch, params))
    }
}

fn write_result(result: &SweepResult, out: Option<&PathBuf>) -> Result<()> {
    if result.resampled > 0 {
        eprintln!("resampled {} channel draws with unreachable QoS", result.resampled);
    }
    match out {
        Some(path) => experiments::emit_csv(result, path),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            experiments::write_csv(result, &mut lock)
                .and_then(|_| lock.flush())
                .map_err(|e| Error::Io { path: "<stdout>".into(), message: e.to_string() })
        }
    }
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Numerical(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn cmd_solve(inst: &Instance) -> Result<()> {
    let (ch, params) = inst.setup()?;
    let (strategy, report) = solve(&ch, &params, inst.scheme, &SolverOptions::default())?;
    let slack = check_constraints(&ch, &params, &strategy);
    print_json(&json!({
        "params": params,
        "q_max": ch.q_max(params.p2),
        "strategy": strategy,
        "report": report,
        "slack": slack,
    }))
}

fn cmd_oracle(inst: &Instance) -> Result<()> {
    let (ch, params) = inst.setup()?;
    let opts = SolverOptions::default();
    let (strategy, report) = solve(&ch, &params, Scheme::Proposed, &opts)?;
    let solver_rate = report.expected_ru1;
    let out = match strategy.configuration {
        Configuration::Siso => {
            let g = SisoGains::from_channels(&ch, &params)?;
            let best = oracle::siso_beta_grid(&g, &params, 1e-5);
            json!({ "oracle": "beta grid, step 1e-5", "solver_rate": solver_rate, "oracle_rate": best, "gap": best - solver_rate })
        }
        Configuration::Miso => {
            let d = MisoDerived::new(&ch, &params)?;
            let eta = strategy.eta.unwrap_or(1.0);
            let proxy = miso::approx_rate(&d, params.alpha, strategy.beta, eta);
            let proxy_best = oracle::miso_eta_grid(&d, params.alpha, strategy.beta, 1e-5);
            let best = oracle::miso_exact_grid(&d, &params, 1000, 1000);
            json!({
                "oracle": "eta grid (step 1e-5) at the chosen beta; exact rate over a 1001x1001 (beta, eta) grid",
                "solver_proxy": proxy,
                "oracle_proxy": proxy_best,
                "proxy_gap": proxy_best - proxy,
                "solver_rate": solver_rate,
                "oracle_rate": best,
                "gap": best - solver_rate,
            })
        }
        Configuration::Simo | Configuration::Mimo => {
            if ch.n2() != 2 {
                return Err(Error::InvalidInput("the relay-design oracle needs N2 = 2".into()));
            }
            let d = Tu2Design::new(&ch, &params)?;
            let mut rows = Vec::new();
            for sic in [false, true] {
                let solver_s = d.optimize(sic, opts.eps, opts.max_iter).state.s;
                let best = oracle::simo_ratio_oracle(&ch.h21, &ch.h2, ch.noise_power, params.p2, d.target(), sic)?;
                rows.push(json!({ "sic": sic, "solver_ratio": solver_s, "oracle_ratio": best, "gap": best - solver_s }));
            }
            json!({ "oracle": "relay SINR over a refined grid of Tu2 beamformer directions", "solver_rate": solver_rate, "relay_design": rows })
        }
    };
    print_json(&out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfgs = experiments::load_configs(&config)?;
            write_result(&experiments::run_all(&cfgs)?, out.as_ref())
        }
        Command::Reproduce { figure, trials, smoke, seed, out } => {
            let trials = if smoke { 100 } else { trials };
            if trials == 0 {
                return Err(Error::Config { path: "--trials".into(), message: "must be at least 1".into() });
            }
            let cfgs: Vec<_> = experiments::preset(&figure)?
                .into_iter()
                .map(|mut c| {
                    c.trials = trials;
                    c.seed = seed;
                    c
                })
                .collect();
            write_result(&experiments::run_all(&cfgs)?, out.as_ref())
        }
        Command::Solve(inst) => cmd_solve(&inst),
        Command::Oracle(inst) => cmd_oracle(&inst),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
