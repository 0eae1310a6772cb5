//! Monte Carlo sweeps over trust degree, QoS or relay-channel gain.
//!
//! Each trial draws one unit-variance channel realization from its own
//! `(seed, trial)` stream and reuses it for every sweep value, so curves are
//! compared on common random numbers. A draw is rejected and redrawn when the
//! largest QoS target in the sweep exceeds what Ru2 can reach on it.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, TrialStream};
use crate::error::{Error, Result};
use crate::rate::SystemParams;
use crate::solve::{solve, Scheme, SolverOptions};

/// Redraws allowed per trial before the configuration is declared unusable.
pub const MAX_RESAMPLES: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "Q")]
    Q,
    /// Average element gain of h21 in dB.
    #[serde(rename = "g21_dB")]
    G21Db,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::Alpha => "alpha",
            SweepVariable::Q => "Q",
            SweepVariable::G21Db => "g21_dB",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [SweepVariable::Alpha, SweepVariable::Q, SweepVariable::G21Db]
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown sweep variable `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

/// Trust degree and QoS target; powers follow from the channel SNRs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentParams {
    pub alpha: f64,
    #[serde(rename = "Q")]
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub channel: ChannelConfig,
    pub params: ExperimentParams,
    pub sweep: Sweep,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverOptions,
    pub scheme: Scheme,
}

fn cfg_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

fn check_alpha(path: String, a: f64) -> Result<()> {
    if (0.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(cfg_err(path, format!("must lie in [0,1], got {a}")))
    }
}

fn check_q(path: String, q: f64) -> Result<()> {
    if q >= 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(cfg_err(path, format!("must be finite and >= 0, got {q}")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        check_alpha("params.alpha".into(), self.params.alpha)?;
        check_q("params.Q".into(), self.params.q)?;
        if self.trials == 0 {
            return Err(cfg_err("trials", "must be at least 1"));
        }
        for (i, &v) in self.sweep.values.iter().enumerate() {
            let path = format!("sweep.values[{i}]");
            match self.sweep.variable {
                SweepVariable::Alpha => check_alpha(path, v)?,
                SweepVariable::Q => check_q(path, v)?,
                SweepVariable::G21Db if !v.is_finite() => return Err(cfg_err(path, "must be finite")),
                SweepVariable::G21Db => {}
            }
        }
        self.solver.validate()
    }

    /// Channel statistics and rate parameters at one sweep value.
    pub fn point(&self, value: f64) -> Result<(ChannelConfig, SystemParams)> {
        let mut channel = self.channel.clone();
        let (mut alpha, mut q) = (self.params.alpha, self.params.q);
        match self.sweep.variable {
            SweepVariable::Alpha => alpha = value,
            SweepVariable::Q => q = value,
            SweepVariable::G21Db => channel.var_h21 = value,
        }
        let params = SystemParams::from_config(&channel, alpha, q)?;
        Ok((channel, params))
    }

    /// Largest QoS target any sweep point asks for.
    fn max_q(&self) -> f64 {
        match self.sweep.variable {
            SweepVariable::Q => self.sweep.values.iter().copied().fold(self.params.q.min(0.0), f64::max),
            _ => self.params.q,
        }
    }
}

/// Parse one configuration object or an array of them.
pub fn parse_configs(text: &str) -> Result<Vec<ExperimentConfig>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| cfg_err("<document>", e.to_string()))?;
    let one = |v: serde_json::Value, prefix: String| -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(v).map_err(|e| {
            let inner = e.path().to_string();
            let path = match (prefix.is_empty(), inner.as_str()) {
                (true, _) => inner.clone(),
                (false, ".") => prefix.clone(),
                (false, _) => format!("{prefix}.{inner}"),
            };
            cfg_err(path, e.into_inner().to_string())
        })?;
        cfg.validate().map_err(|e| match e {
            Error::Config { path, message } if !prefix.is_empty() => cfg_err(format!("{prefix}.{path}"), message),
            other => other,
        })?;
        Ok(cfg)
    };
    match value {
        serde_json::Value::Array(items) => {
            items.into_iter().enumerate().map(|(i, v)| one(v, format!("[{i}]"))).collect()
        }
        v => Ok(vec![one(v, String::new())?]),
    }
}

pub fn load_configs(path: &Path) -> Result<Vec<ExperimentConfig>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_configs(&text)
}

/// Compensated (Neumaier) running sum.
#[derive(Clone, Copy, Debug, Default)]
struct Sum {
    total: f64,
    comp: f64,
    count: usize,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.total + x;
        if self.total.abs() >= x.abs() {
            self.comp += (self.total - t) + x;
        } else {
            self.comp += (x - t) + self.total;
        }
        self.total = t;
        self.count += 1;
    }

    fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            (self.total + self.comp) / self.count as f64
        }
    }
}

/// One CSV row: averages over trials at one sweep value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_var: SweepVariable,
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub n1: usize,
    pub n2: usize,
    #[serde(rename = "rho1_dB")]
    pub rho1_db: f64,
    #[serde(rename = "rho2_dB")]
    pub rho2_db: f64,
    pub alpha: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub trials: usize,
    pub mean_rate_ru1: f64,
    pub mean_rate_ru2: f64,
    pub mean_beta: f64,
    /// NaN when the scheme has no η (anything but MISO).
    pub mean_eta: f64,
    /// NaN when the scheme has no λ (anything but MIMO).
    pub mean_lambda: f64,
    /// Share of all draws, rejected ones included, on which this point's QoS
    /// target was reachable.
    pub feasible_frac: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Draws rejected because the largest QoS target was out of reach.
    pub resampled: u64,
}

impl SweepResult {
    pub fn extend(&mut self, other: SweepResult) {
        self.rows.extend(other.rows);
        self.resampled += other.resampled;
    }
}

/// Per-trial outcome at each sweep value.
#[derive(Clone, Debug)]
struct TrialOutcome {
    points: Vec<PointOutcome>,
    draws: u64,
    /// Per sweep value, draws on which its QoS target was reachable.
    reachable: Vec<u64>,
}

#[derive(Clone, Copy, Debug)]
struct PointOutcome {
    ru1: f64,
    ru2: f64,
    beta: f64,
    eta: Option<f64>,
    lambda: Option<f64>,
}

fn run_trial(cfg: &ExperimentConfig, points: &[(ChannelConfig, SystemParams)], trial: u64) -> Result<TrialOutcome> {
    let mut stream = TrialStream::new(cfg.seed, trial);
    let q_need = cfg.max_q();
    let mut reachable = vec![0u64; points.len()];
    let mut draws = 0u64;
    loop {
        let draw = stream.draw_standard(cfg.channel.n1, cfg.channel.n2);
        draws += 1;
        let channels: Vec<_> = points.iter().map(|(c, _)| draw.scaled(c)).collect();
        let mut ok_all = true;
        for (i, ((_, p), ch)) in points.iter().zip(&channels).enumerate() {
            let q_max = ch.q_max(p.p2);
            if p.q <= q_max {
                reachable[i] += 1;
            }
            if q_need > q_max {
                ok_all = false;
            }
        }
        if ok_all {
            let mut out = Vec::with_capacity(points.len());
            for ((_, p), ch) in points.iter().zip(&channels) {
                let (s, r) = solve(ch, p, cfg.scheme, &cfg.solver)?;
                out.push(PointOutcome { ru1: r.expected_ru1, ru2: r.ru2, beta: s.beta, eta: s.eta, lambda: s.lambda });
            }
            return Ok(TrialOutcome { points: out, draws, reachable });
        }
        if draws > MAX_RESAMPLES {
            return Err(Error::Infeasible("QoS target unreachable on practically every channel draw"));
        }
    }
}

/// Worker pool size from TRUSTCOOP_THREADS, or rayon's default when unset.
pub fn thread_count() -> Result<Option<usize>> {
    match std::env::var("TRUSTCOOP_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(cfg_err("TRUSTCOOP_THREADS", format!("must be a positive integer, got `{v}`"))),
        },
    }
}

/// Run every trial of `cfg` and average per sweep value.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep_with_threads(cfg, thread_count()?)
}

pub fn run_sweep_with_threads(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<SweepResult> {
    cfg.validate()?;
    let points: Vec<(ChannelConfig, SystemParams)> =
        cfg.sweep.values.iter().map(|&v| cfg.point(v)).collect::<Result<_>>()?;
    if points.is_empty() {
        return Ok(SweepResult::default());
    }
    let work = || -> Result<Vec<TrialOutcome>> {
        (0..cfg.trials as u64).into_par_iter().map(|t| run_trial(cfg, &points, t)).collect()
    };
    let outcomes = match threads {
        None => work()?,
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?
            .install(work)?,
    };

    let total_draws: u64 = outcomes.iter().map(|o| o.draws).sum();
    let mut rows = Vec::with_capacity(points.len());
    for (i, (&value, (channel, params))) in cfg.sweep.values.iter().zip(&points).enumerate() {
        let (mut ru1, mut ru2, mut beta, mut eta, mut lambda) =
            (Sum::default(), Sum::default(), Sum::default(), Sum::default(), Sum::default());
        let mut reachable = 0u64;
        for o in &outcomes {
            let p = o.points[i];
            ru1.add(p.ru1);
            ru2.add(p.ru2);
            beta.add(p.beta);
            if let Some(e) = p.eta {
                eta.add(e);
            }
            if let Some(l) = p.lambda {
                lambda.add(l);
            }
            reachable += o.reachable[i];
        }
        rows.push(SweepRow {
            sweep_var: cfg.sweep.variable,
            sweep_value: value,
            scheme: cfg.scheme,
            n1: channel.n1,
            n2: channel.n2,
            rho1_db: channel.rho1_db,
            rho2_db: channel.rho2_db,
            alpha: params.alpha,
            q: params.q,
            trials: cfg.trials,
            mean_rate_ru1: ru1.mean(),
            mean_rate_ru2: ru2.mean(),
            mean_beta: beta.mean(),
            mean_eta: eta.mean(),
            mean_lambda: lambda.mean(),
            feasible_frac: reachable as f64 / total_draws as f64,
        });
    }
    Ok(SweepResult { rows, resampled: total_draws - cfg.trials as u64 })
}

/// Run several curves one after another, rows in input order.
pub fn run_all(cfgs: &[ExperimentConfig]) -> Result<SweepResult> {
    let threads = thread_count()?;
    let mut out = SweepResult::default();
    for c in cfgs {
        out.extend(run_sweep_with_threads(c, threads)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Presets.

pub const PRESETS: [&str; 8] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"];

pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 1;

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn alpha_grid() -> Vec<f64> {
    grid(0.0, 1.0, 11)
}

fn g21_grid() -> Vec<f64> {
    grid(-50.0, -10.0, 9)
}

fn curve(channel: ChannelConfig, alpha: f64, q: f64, variable: SweepVariable, values: Vec<f64>, scheme: Scheme) -> ExperimentConfig {
    ExperimentConfig {
        channel,
        params: ExperimentParams { alpha, q },
        sweep: Sweep { variable, values },
        trials: DEFAULT_TRIALS,
        seed: DEFAULT_SEED,
        solver: SolverOptions::default(),
        scheme,
    }
}

/// Curves of one figure of the simulation section, in plotting order.
pub fn preset(name: &str) -> Result<Vec<ExperimentConfig>> {
    use Scheme::*;
    use SweepVariable::*;
    let curves = match name {
        "fig2" => {
            let ch = ChannelConfig::standard(1, 1, 40.0, 40.0);
            let qs = grid(0.1, 1.0, 10);
            vec![
                curve(ch.clone(), 1.0, 0.0, Q, qs.clone(), Proposed),
                curve(ch.clone(), 0.5, 0.0, Q, qs.clone(), Proposed),
                curve(ch.clone(), 1.0, 0.0, Q, qs.clone(), NoSic),
                curve(ch.clone(), 0.5, 0.0, Q, qs.clone(), NoSic),
                curve(ch, 0.0, 0.0, Q, qs, NoCooperation),
            ]
        }
        "fig3" => {
            let mut out = Vec::new();
            for rho2 in [40.0, 30.0] {
                for q in [0.5, 0.3] {
                    let ch = ChannelConfig {
                        var_h0: -32.0,
                        var_h1: -40.0,
                        var_h2: -30.0,
                        var_h12: -32.0,
                        ..ChannelConfig::standard(1, 1, 40.0, rho2)
                    };
                    out.push(curve(ch, 0.5, q, G21Db, g21_grid(), Proposed));
                }
            }
            out
        }
        "fig4" | "fig5" => {
            let ch = ChannelConfig::standard(2, 1, 50.0, 50.0);
            let mut out = vec![
                curve(ch.clone(), 0.0, 1.0, Alpha, alpha_grid(), Proposed),
                curve(ch.clone(), 0.0, 1.0, Alpha, alpha_grid(), MrtBaseline),
            ];
            if name == "fig4" {
                out.push(curve(ch, 0.0, 1.0, Alpha, alpha_grid(), NoCooperation));
            }
            out
        }
        "fig6" | "fig8" => {
            let (ch, qs) = if name == "fig6" {
                (ChannelConfig::standard(1, 2, 50.0, 50.0), [0.5, 1.0])
            } else {
                (ChannelConfig::standard(2, 2, 50.0, 50.0), [1.0, 2.0])
            };
            let mut out = Vec::new();
            for q in qs {
                for scheme in [Proposed, MrtBaseline, NoCooperation] {
                    out.push(curve(ch.clone(), 0.0, q, Alpha, alpha_grid(), scheme));
                }
            }
            out
        }
        "fig7" | "fig9" => {
            let (ch, qs) = if name == "fig7" {
                (ChannelConfig::standard(1, 2, 50.0, 50.0), [0.5, 1.0])
            } else {
                (ChannelConfig::standard(2, 2, 50.0, 50.0), [1.0, 2.0])
            };
            qs.into_iter().map(|q| curve(ch.clone(), 0.5, q, G21Db, g21_grid(), Proposed)).collect()
        }
        other => {
            return Err(Error::InvalidInput(format!("unknown preset `{other}`; expected one of {}", PRESETS.join(", "))))
        }
    };
    Ok(curves)
}

// ---------------------------------------------------------------------------
// CSV.

pub const CSV_HEADER: &str = "sweep_var,sweep_value,scheme,n1,n2,rho1_dB,rho2_dB,alpha,Q,trials,mean_rate_ru1,mean_rate_ru2,mean_beta,mean_eta,mean_lambda,feasible_frac";

/// Nine significant digits, fixed or scientific like C's `%.9g`.
pub fn fmt_g9(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-5..9).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        let decimals = (8 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}"))
    }
}

fn csv_record(r: &SweepRow) -> [String; 16] {
    [
        r.sweep_var.to_string(),
        fmt_g9(r.sweep_value),
        r.scheme.to_string(),
        r.n1.to_string(),
        r.n2.to_string(),
        fmt_g9(r.rho1_db),
        fmt_g9(r.rho2_db),
        fmt_g9(r.alpha),
        fmt_g9(r.q),
        r.trials.to_string(),
        fmt_g9(r.mean_rate_ru1),
        fmt_g9(r.mean_rate_ru2),
        fmt_g9(r.mean_beta),
        fmt_g9(r.mean_eta),
        fmt_g9(r.mean_lambda),
        fmt_g9(r.feasible_frac),
    ]
}

pub fn write_csv(result: &SweepResult, out: &mut dyn Write) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in &result.rows {
        w.write_record(csv_record(r))?;
    }
    w.flush()
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::Io { path: path.display().to_string(), message: e.to_string() };
    let mut file = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    write_csv(result, &mut file).map_err(io)?;
    file.flush().map_err(io)
}

/// Read rows written by [`write_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::InvalidInput(e.to_string()))?;
    if header.iter().ne(CSV_HEADER.split(',')) {
        return Err(Error::InvalidInput("CSV header does not match".into()));
    }
    rdr.deserialize().map(|r| r.map_err(|e| Error::InvalidInput(format!("CSV: {e}")))).collect()
}
