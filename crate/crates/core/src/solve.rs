//! Dispatch from antenna configuration to solver, and the comparison schemes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::CVec;
use crate::rate::{self, Diagnostics, RateReport, SystemParams};
use crate::strategy::{links_from_vectors, Configuration, Strategy};
use crate::{mimo, miso, simo, siso};

fn default_eps() -> f64 {
    1e-6
}
fn default_max_iter() -> usize {
    100
}
fn default_beta_grid() -> usize {
    2001
}
fn default_lambda_m() -> usize {
    100
}

/// Numerical knobs shared by the iterative and grid-based solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    /// Relative stopping tolerance of the block coordinate loop.
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Number of uniformly spaced β points searched in the MISO case.
    #[serde(default = "default_beta_grid")]
    pub beta_grid: usize,
    /// λ-grid resolution M in the MIMO case.
    #[serde(rename = "lambda_M", default = "default_lambda_m")]
    pub lambda_m: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eps: default_eps(),
            max_iter: default_max_iter(),
            beta_grid: default_beta_grid(),
            lambda_m: default_lambda_m(),
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let cfg = |path: &str, message: &str| Error::Config { path: path.into(), message: message.into() };
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(cfg("solver.eps", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(cfg("solver.max_iter", "must be at least 1"));
        }
        if self.beta_grid < 2 {
            return Err(cfg("solver.beta_grid", "must be at least 2"));
        }
        if self.lambda_m == 0 {
            return Err(cfg("solver.lambda_M", "must be at least 1"));
        }
        Ok(())
    }
}

/// Strategy family evaluated by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Trust-aware cooperation with SIC allowed at Ru2.
    Proposed,
    /// Cooperation where Ru2 always treats the relayed symbol as interference.
    NoSic,
    /// Channel-matched beamformers with the largest interference-tolerant relay share.
    MrtBaseline,
    /// Tu2 never relays.
    NoCooperation,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Proposed, Scheme::NoSic, Scheme::MrtBaseline, Scheme::NoCooperation];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::NoSic => "no_sic",
            Scheme::MrtBaseline => "mrt_baseline",
            Scheme::NoCooperation => "no_cooperation",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown scheme `{s}`")))
    }
}

pub(crate) fn check_qos(ch: &ChannelSet, params: &SystemParams) -> Result<()> {
    let q_max = ch.q_max(params.p2);
    if params.q > q_max * (1.0 + 1e-12) {
        return Err(Error::InfeasibleQos { q: params.q, q_max });
    }
    Ok(())
}

/// Unit MRT direction toward `h`.
pub(crate) fn mrt(h: &CVec) -> Result<CVec> {
    h.normalized()
}

/// Tu1 beamforms straight to Ru1 and Tu2 serves only Ru2 at full power.
pub fn no_cooperation(ch: &ChannelSet, params: &SystemParams) -> Result<(Strategy, RateReport)> {
    check_qos(ch, params)?;
    let w1 = mrt(&ch.h1)?.scale(params.p1.sqrt());
    let w22 = mrt(&ch.h2)?.scale(params.p2.sqrt());
    let w21 = CVec::zeros(ch.n2());
    let links = links_from_vectors(ch, &w1, &w21, &w22);
    let report = rate::evaluate(params, &links, false, false, Diagnostics { converged: true, ..Default::default() });
    let strategy = Strategy {
        configuration: Configuration::of(ch.n1(), ch.n2()),
        cooperate: false,
        beta: 0.0,
        eta: None,
        lambda: None,
        w1,
        w21,
        w22,
        sic: false,
        subproblem: None,
    };
    Ok((strategy, report))
}

/// Run `scheme` on one realization, dispatching on (N1, N2).
pub fn solve(
    ch: &ChannelSet,
    params: &SystemParams,
    scheme: Scheme,
    opts: &SolverOptions,
) -> Result<(Strategy, RateReport)> {
    params.validate()?;
    if scheme == Scheme::NoCooperation {
        return no_cooperation(ch, params);
    }
    match (Configuration::of(ch.n1(), ch.n2()), scheme) {
        (Configuration::Siso, Scheme::Proposed) => siso::solve_siso(ch, params),
        (Configuration::Siso, _) => siso::solve_siso_no_sic(ch, params),
        (Configuration::Miso, Scheme::Proposed) => miso::solve_miso(ch, params, opts),
        (Configuration::Miso, Scheme::NoSic) => miso::solve_miso_no_sic(ch, params, opts),
        (Configuration::Miso, _) => miso::solve_miso_mrt_baseline(ch, params),
        (Configuration::Simo, Scheme::Proposed) => simo::solve_simo(ch, params, opts),
        (Configuration::Simo, Scheme::NoSic) => simo::solve_simo_no_sic(ch, params, opts),
        (Configuration::Simo, _) => simo::solve_simo_mrt_baseline(ch, params),
        (Configuration::Mimo, Scheme::Proposed) => mimo::solve_mimo(ch, params, opts),
        (Configuration::Mimo, Scheme::NoSic) => mimo::solve_mimo_no_sic(ch, params, opts),
        (Configuration::Mimo, _) => mimo::solve_mimo_mrt_baseline(ch, params),
    }
}
