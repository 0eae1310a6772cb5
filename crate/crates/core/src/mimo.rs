//! Multi-antenna Tu1 and Tu2.
//!
//! Tu1's beamformer is restricted to the normalized combination
//! λ·w0 + (1−λ)·w_mrt of the strongest relay-channel eigenvector and MRT
//! toward Ru1, with λ on a uniform grid. Tu2's design from the SIMO solver
//! does not depend on Tu1's beamformer and is computed once per decoding mode.

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{top_eigvec, CVec};
use crate::rate::{self, Diagnostics, RateReport, SystemParams};
use crate::simo::{best_for_w1, Candidate, Tu2Design, Tu2Runs};
use crate::solve::{check_qos, mrt, SolverOptions};
use crate::strategy::{links_from_vectors, Configuration, Strategy};

/// The two unit directions Tu1 mixes, with the MRT direction rotated so
/// that w0†w_mrt is real and nonnegative.
#[derive(Clone, Debug, PartialEq)]
pub struct Tu1Basis {
    pub w0: CVec,
    pub w_mrt: CVec,
    /// λmax(H0†H0).
    pub lambda_max: f64,
}

impl Tu1Basis {
    pub fn new(ch: &ChannelSet) -> Result<Self> {
        let (lambda_max, w0) = top_eigvec(&ch.h0.gram())?;
        let w = mrt(&ch.h1)?;
        let z = w0.dot(&w);
        let w_mrt = if z.norm() > 0.0 { w.scale_c(z.conj() / z.norm()) } else { w };
        Ok(Self { w0, w_mrt, lambda_max })
    }

    /// √P1 times the normalized mix at `lambda`.
    pub fn w1(&self, p1: f64, lambda: f64) -> Result<CVec> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidInput(format!("lambda must lie in [0,1], got {lambda}")));
        }
        let mix = &self.w0.scale(lambda) + &self.w_mrt.scale(1.0 - lambda);
        Ok(mix.normalized()?.scale(p1.sqrt()))
    }
}

/// Tu1 beamformer at grid point `lambda`.
pub fn w1_of_lambda(ch: &ChannelSet, p1: f64, lambda: f64) -> Result<CVec> {
    Tu1Basis::new(ch)?.w1(p1, lambda)
}

/// λ = 0 followed by m/M for m = 1..M.
pub fn lambda_grid(m: usize) -> Vec<f64> {
    std::iter::once(0.0).chain((1..=m).map(|i| i as f64 / m as f64)).collect()
}

pub fn cooperation_useful(ch: &ChannelSet, basis: &Tu1Basis) -> bool {
    basis.lambda_max > ch.h1.norm_sqr()
}

fn strategy(ch: &ChannelSet, params: &SystemParams, cooperate: bool, lambda: f64, w1: CVec, c: &Candidate) -> Strategy {
    Strategy {
        configuration: Configuration::of(ch.n1(), ch.n2()),
        cooperate,
        beta: c.w21.norm_sqr() / params.p2,
        eta: None,
        lambda: Some(lambda),
        w1,
        w21: c.w21.clone(),
        w22: c.w22.clone(),
        sic: c.sic,
        subproblem: c.kind,
    }
}

fn direct_only(ch: &ChannelSet, params: &SystemParams, basis: &Tu1Basis) -> Result<(Strategy, RateReport)> {
    let w1 = basis.w1(params.p1, 0.0)?;
    let w21 = CVec::zeros(ch.n2());
    let w22 = mrt(&ch.h2)?.scale(params.p2.sqrt());
    let links = links_from_vectors(ch, &w1, &w21, &w22);
    let report = rate::evaluate(params, &links, false, false, Diagnostics { converged: true, ..Default::default() });
    let c = Candidate { w21, w22, sic: false, kind: None, report };
    Ok((strategy(ch, params, false, 0.0, w1, &c), c.report))
}

fn run(ch: &ChannelSet, params: &SystemParams, opts: &SolverOptions, allow_sic: bool) -> Result<(Strategy, RateReport)> {
    check_qos(ch, params)?;
    opts.validate()?;
    let basis = Tu1Basis::new(ch)?;
    if !cooperation_useful(ch, &basis) {
        return direct_only(ch, params, &basis);
    }
    let runs = Tu2Runs::new(&Tu2Design::new(ch, params)?, allow_sic, opts);
    let mut best: Option<(f64, CVec, Candidate)> = None;
    for lambda in lambda_grid(opts.lambda_m) {
        let w1 = basis.w1(params.p1, lambda)?;
        let c = best_for_w1(ch, params, &w1, &runs)?;
        if best.as_ref().is_none_or(|b| c.report.expected_ru1 > b.2.report.expected_ru1) {
            best = Some((lambda, w1, c));
        }
    }
    let (lambda, w1, c) = best.expect("the grid contains λ = 0");
    // Relaying can lose to the direct link when Tu2 decodes Tu1 poorly.
    let silent = direct_only(ch, params, &basis)?;
    if silent.1.expected_ru1 > c.report.expected_ru1 {
        return Ok(silent);
    }
    Ok((strategy(ch, params, true, lambda, w1, &c), c.report.clone()))
}

/// Tu1 mix and Tu2 beamformers for one MIMO realization.
pub fn solve_mimo(ch: &ChannelSet, params: &SystemParams, opts: &SolverOptions) -> Result<(Strategy, RateReport)> {
    run(ch, params, opts, true)
}

/// Same search with Ru2 never cancelling the relayed symbol.
pub fn solve_mimo_no_sic(ch: &ChannelSet, params: &SystemParams, opts: &SolverOptions) -> Result<(Strategy, RateReport)> {
    run(ch, params, opts, false)
}

/// MRT toward Ru1 at Tu1; channel-matched Tu2 beamformers with the largest
/// relay power Ru2 tolerates without SIC.
pub fn solve_mimo_mrt_baseline(ch: &ChannelSet, params: &SystemParams) -> Result<(Strategy, RateReport)> {
    check_qos(ch, params)?;
    let basis = Tu1Basis::new(ch)?;
    if !cooperation_useful(ch, &basis) {
        return direct_only(ch, params, &basis);
    }
    let w1 = basis.w1(params.p1, 0.0)?;
    // With w1 fixed, relaying only pays when Tu2 hears Tu1 better than Ru1 does.
    if ch.h0.mul_vec(&w1).norm_sqr() <= ch.h1.gain(&w1) {
        return direct_only(ch, params, &basis);
    }
    let st = Tu2Design::new(ch, params)?.mrt_split().ok_or(Error::Infeasible("h21 must be nonzero"))?;
    let links = links_from_vectors(ch, &w1, &st.w21, &st.w22);
    let report = rate::evaluate(params, &links, true, false, Diagnostics { converged: true, ..Default::default() });
    let c = Candidate { w21: st.w21, w22: st.w22, sic: false, kind: None, report };
    Ok((strategy(ch, params, true, 0.0, w1, &c), c.report))
}
