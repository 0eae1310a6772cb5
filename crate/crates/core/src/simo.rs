//! Single-antenna Tu1, multi-antenna Tu2.
//!
//! Tu2 splits its budget into a relay beamformer `w21` and a private
//! beamformer `w22`. Both are found by block coordinate updates of the ratio
//! s = |h21†w21|² / (|h21†w22|² + σ²) under Ru2's QoS and the power budget.
//! That design does not depend on Tu1's beamformer or on α, so the MIMO
//! solver reuses it for every candidate `w1`.

use serde::Serialize;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{project_complement, CVec};
use crate::qcqp::{solve_boost_max, solve_leakage_min, BoostProfile, LeakProfile};
use crate::rate::{self, Diagnostics, RateReport, SystemParams, SIC_TIE_RTOL};
use crate::solve::{check_qos, mrt, SolverOptions};
use crate::strategy::{links_from_vectors, Configuration, LimitingTerm, Strategy, SubproblemKind};

/// Iterate of the block coordinate loop.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BcuState {
    pub w21: CVec,
    pub w22: CVec,
    pub s: f64,
    pub iteration: usize,
}

/// Result of one block coordinate run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BcuRun {
    pub state: BcuState,
    pub converged: bool,
    /// s after each iteration, starting with the initial point.
    pub history: Vec<f64>,
}

/// Fixed geometry of Tu2's design problem.
#[derive(Clone, Debug)]
pub struct Tu2Design {
    h21: CVec,
    h2: CVec,
    sigma2: f64,
    p2: f64,
    /// SINR Ru2 must reach, capped at what full-power MRT delivers.
    target: f64,
    boost: BoostProfile,
    leak: LeakProfile,
}

impl Tu2Design {
    pub fn new(ch: &ChannelSet, params: &SystemParams) -> Result<Self> {
        if ch.h2.norm_sqr() == 0.0 {
            return Err(Error::InvalidInput("h2 must be nonzero".into()));
        }
        let sigma2 = ch.noise_power;
        let target = params.sinr_target().min(params.p2 * ch.h2.norm_sqr() / sigma2);
        Ok(Self {
            h21: ch.h21.clone(),
            h2: ch.h2.clone(),
            sigma2,
            p2: params.p2,
            target,
            boost: BoostProfile::new(&ch.h21, &ch.h2),
            leak: LeakProfile::new(&ch.h21, &ch.h2),
        })
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn ratio(&self, w21: &CVec, w22: &CVec) -> f64 {
        self.h21.gain(w21) / (self.h21.gain(w22) + self.sigma2)
    }

    fn state(&self, w21: CVec, w22: CVec, iteration: usize) -> BcuState {
        let s = self.ratio(&w21, &w22);
        BcuState { w21, w22, s, iteration }
    }

    /// Signal Ru2 needs from `w22` given the relay beamformer.
    fn needed_signal(&self, w21: &CVec, sic: bool) -> f64 {
        let interf = if sic { 0.0 } else { self.h2.gain(w21) };
        self.target * (interf + self.sigma2)
    }

    /// Minimum-power MRT toward Ru2, with the remaining power on the part of
    /// h21 that Ru2 cannot hear (or on h21 itself when SIC removes the leak).
    pub fn initial(&self, sic: bool) -> BcuState {
        let n = self.h2.dim();
        let u2 = self.h2.scale(1.0 / self.h2.norm());
        let p22 = (self.target * self.sigma2 / self.h2.norm_sqr()).min(self.p2);
        let w22 = u2.scale(p22.sqrt());
        let rest = (self.p2 - p22).max(0.0);
        let dir = if sic {
            self.h21.normalized().ok()
        } else {
            project_complement(&self.h21, &u2).ok().and_then(|r| {
                (r.norm_sqr() > 1e-24 * self.h21.norm_sqr()).then(|| r.normalized().ok()).flatten()
            })
        };
        let w21 = dir.map_or_else(|| CVec::zeros(n), |d| d.scale(rest.sqrt()));
        self.state(w21, w22, 0)
    }

    /// Channel-matched beamformers with the largest relay share Ru2 tolerates
    /// without SIC.
    pub fn mrt_split(&self) -> Option<BcuState> {
        let u21 = self.h21.normalized().ok()?;
        let u2 = self.h2.normalized().ok()?;
        let b = self.h2.norm_sqr();
        let a = self.h2.gain(&u21);
        let p21 = ((self.p2 * b - self.target * self.sigma2) / (b + self.target * a)).clamp(0.0, self.p2);
        let w21 = u21.scale(p21.sqrt());
        let w22 = u2.scale((self.p2 - p21).max(0.0).sqrt());
        Some(self.state(w21, w22, 0))
    }

    fn qos_holds(&self, w21: &CVec, w22: &CVec, sic: bool) -> bool {
        self.h2.gain(w22) >= self.needed_signal(w21, sic) * (1.0 - SIC_TIE_RTOL)
    }

    /// One pass: `w21` given `w22`, then `w22` given the new `w21`. A block is
    /// kept at its previous value when its subproblem is infeasible or the
    /// update would lower s.
    pub fn iterate(&self, state: &BcuState, sic: bool) -> BcuState {
        let mut w21 = state.w21.clone();
        let mut w22 = state.w22.clone();
        let mut s = state.s;

        let budget = (self.p2 - w22.norm_sqr()).max(0.0);
        let leak_bound = if sic || self.target == 0.0 {
            f64::INFINITY
        } else {
            self.h2.gain(&w22) / self.target - self.sigma2
        };
        if leak_bound >= 0.0 {
            if let Ok(w) = solve_boost_max(&self.h21, &self.h2, leak_bound, budget) {
                let v = self.ratio(&w, &w22);
                if v >= s && self.qos_holds(&w, &w22, sic) {
                    w21 = w;
                    s = v;
                }
            }
        }

        let budget = (self.p2 - w21.norm_sqr()).max(0.0);
        if let Ok(w) = solve_leakage_min(&self.h21, &self.h2, self.needed_signal(&w21, sic), budget) {
            let v = self.ratio(&w21, &w);
            if v >= s && self.qos_holds(&w21, &w, sic) {
                w22 = w;
                s = v;
            }
        }
        BcuState { w21, w22, s, iteration: state.iteration + 1 }
    }

    /// Iterate from `init` until the relative change of s is at most `eps`.
    pub fn run(&self, init: BcuState, sic: bool, eps: f64, max_iter: usize) -> BcuRun {
        let mut state = init;
        let mut history = vec![state.s];
        let mut converged = false;
        for _ in 0..max_iter {
            let next = self.iterate(&state, sic);
            let change = (next.s - state.s).abs();
            history.push(next.s);
            state = next;
            if change <= eps * state.s.abs() {
                converged = true;
                break;
            }
        }
        BcuRun { state, converged, history }
    }

    /// s reached by one member of the family where `w21` maximizes the boost
    /// at leak level `leak` with power `p21`, and `w22` then minimizes its
    /// leakage with whatever power is left.
    fn family_value(&self, leak: f64, p21: f64, sic: bool) -> f64 {
        let (num, leaked) = if sic {
            (p21 * self.h21.norm_sqr(), 0.0)
        } else {
            self.boost.value(leak, p21)
        };
        match self.leak.value(self.target * (leaked + self.sigma2), self.p2 - p21) {
            Some((den, _)) => num / (den + self.sigma2),
            None => f64::NEG_INFINITY,
        }
    }

    /// Best member of the family above, turned into vectors.
    fn family_start(&self, sic: bool) -> Option<BcuState> {
        let b = self.h2.norm_sqr();
        let p22_min = self.target * self.sigma2 / b;
        let p21_hi = (self.p2 - p22_min).max(0.0);
        if p21_hi == 0.0 {
            return None;
        }
        let (leak, p21) = if sic || self.target == 0.0 {
            let f = |v: f64| self.family_value(0.0, v * p21_hi, true);
            let v = zoom_1d(&f, 2001, 40);
            (f64::INFINITY, v * p21_hi)
        } else {
            let leak_hi = self.p2 * b / self.target - self.sigma2;
            let f = |u: f64, v: f64| self.family_value(u * leak_hi, v * p21_hi, false);
            let (u, v) = zoom_2d(&f, 33, 40);
            (u * leak_hi, v * p21_hi)
        };
        let w21 = solve_boost_max(&self.h21, &self.h2, leak, p21).ok()?;
        let budget = (self.p2 - w21.norm_sqr()).max(0.0);
        let w22 = solve_leakage_min(&self.h21, &self.h2, self.needed_signal(&w21, sic), budget).ok()?;
        self.qos_holds(&w21, &w22, sic).then(|| self.state(w21, w22, 0))
    }

    /// Block coordinate runs from the family optimum, the default start and
    /// the channel-matched split; the run with the largest s wins.
    pub fn optimize(&self, sic: bool, eps: f64, max_iter: usize) -> BcuRun {
        let mut starts = Vec::with_capacity(3);
        starts.extend(self.family_start(sic));
        starts.push(self.initial(sic));
        starts.extend(self.mrt_split().filter(|st| self.qos_holds(&st.w21, &st.w22, sic)));
        let mut best: Option<BcuRun> = None;
        for init in starts {
            let run = self.run(init, sic, eps, max_iter);
            if best.as_ref().is_none_or(|b| run.state.s > b.state.s) {
                best = Some(run);
            }
        }
        best.expect("the default start is always present")
    }
}

/// Grid over [0, 1] followed by shrinking-window refinement. Returns the argmax.
fn zoom_1d(f: &dyn Fn(f64) -> f64, grid: usize, rounds: usize) -> f64 {
    let mut best = (f(0.0), 0.0);
    for i in 1..grid {
        let x = i as f64 / (grid - 1) as f64;
        let v = f(x);
        if v > best.0 {
            best = (v, x);
        }
    }
    let mut half = 1.0 / (grid - 1) as f64;
    for _ in 0..rounds {
        let c = best.1;
        for i in -10..=10 {
            let x = (c + half * i as f64 / 10.0).clamp(0.0, 1.0);
            let v = f(x);
            if v > best.0 {
                best = (v, x);
            }
        }
        half *= 0.5;
    }
    best.1
}

fn zoom_2d(f: &dyn Fn(f64, f64) -> f64, grid: usize, rounds: usize) -> (f64, f64) {
    let at = |i: usize| i as f64 / (grid - 1) as f64;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..grid {
        for j in 0..grid {
            let v = f(at(i), at(j));
            if v > best.0 {
                best = (v, at(i), at(j));
            }
        }
    }
    let mut half = 1.0 / (grid - 1) as f64;
    for _ in 0..rounds {
        let (cx, cy) = (best.1, best.2);
        for i in -5..=5 {
            for j in -5..=5 {
                let x = (cx + half * i as f64 / 5.0).clamp(0.0, 1.0);
                let y = (cy + half * j as f64 / 5.0).clamp(0.0, 1.0);
                let v = f(x, y);
                if v > best.0 {
                    best = (v, x, y);
                }
            }
        }
        half *= 0.5;
    }
    (best.1, best.2)
}

/// Block coordinate run of one subproblem from the default start.
pub fn run_bcu(ch: &ChannelSet, params: &SystemParams, kind: SubproblemKind, eps: f64, max_iter: usize) -> Result<BcuRun> {
    let d = Tu2Design::new(ch, params)?;
    Ok(d.run(d.initial(kind.sic), kind.sic, eps, max_iter))
}

/// One block coordinate pass for `kind`.
pub fn bcu_iterate(state: &BcuState, ch: &ChannelSet, params: &SystemParams, kind: SubproblemKind) -> Result<BcuState> {
    Ok(Tu2Design::new(ch, params)?.iterate(state, kind.sic))
}

/// Beamformers and report of one candidate.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Candidate {
    pub w21: CVec,
    pub w22: CVec,
    pub sic: bool,
    pub kind: Option<SubproblemKind>,
    pub report: RateReport,
}

/// Scale the relay beamformer so `kind`'s limiting term is the active one,
/// or `None` when the kind cannot hold for this state and Tu1 beamformer.
fn relay_for_kind(state: &BcuState, kind: SubproblemKind, direct: f64, relay_cap: f64, decode12: f64) -> Option<CVec> {
    let s = state.s;
    let s_eff = match (kind.sic, kind.limiting) {
        (true, LimitingTerm::Ratio) => s.min(relay_cap - direct).min(decode12 - direct),
        (true, LimitingTerm::RelayCap) => {
            if direct + s < relay_cap || decode12 < relay_cap * (1.0 - SIC_TIE_RTOL) {
                return None;
            }
            s
        }
        (false, LimitingTerm::Ratio) => s.min(relay_cap - direct),
        (false, LimitingTerm::RelayCap) => {
            if direct + s < relay_cap {
                return None;
            }
            s
        }
    };
    if s_eff < 0.0 {
        return None;
    }
    if s_eff >= s || s == 0.0 {
        return Some(state.w21.clone());
    }
    Some(state.w21.scale((s_eff / s).sqrt()))
}

/// Apply the decodability and relay caps of `kind` for Tu1 beamformer `w1`
/// and evaluate the resulting strategy.
pub(crate) fn candidate_for_kind(
    ch: &ChannelSet,
    params: &SystemParams,
    w1: &CVec,
    run: &BcuRun,
    kind: SubproblemKind,
    useful: bool,
) -> Option<Candidate> {
    let s2 = ch.noise_power;
    let direct = ch.h1.gain(w1) / s2;
    let relay_cap = ch.h0.mul_vec(w1).norm_sqr() / s2;
    let decode12 = ch.h12.gain(w1) / s2;
    let w21 = relay_for_kind(&run.state, kind, direct, relay_cap, decode12)?;
    let w22 = run.state.w22.clone();
    let links = links_from_vectors(ch, w1, &w21, &w22);
    if kind.sic && !rate::sic_feasible(&links) {
        return None;
    }
    let diag = Diagnostics {
        iterations: run.state.iteration,
        subproblem: Some(kind),
        converged: run.converged,
        clamped: false,
    };
    let report = rate::evaluate(params, &links, useful, kind.sic, diag);
    Some(Candidate { w21, w22, sic: kind.sic, kind: Some(kind), report })
}

/// Tu2 keeps everything for Ru2 while cooperation is still declared.
fn silent_relay(ch: &ChannelSet, params: &SystemParams, w1: &CVec, useful: bool) -> Result<Candidate> {
    let w21 = CVec::zeros(ch.n2());
    let w22 = mrt(&ch.h2)?.scale(params.p2.sqrt());
    let links = links_from_vectors(ch, w1, &w21, &w22);
    let report = rate::evaluate(params, &links, useful, false, Diagnostics { converged: true, ..Default::default() });
    Ok(Candidate { w21, w22, sic: false, kind: None, report })
}

/// Tu2 designs for the decoding modes a scheme allows.
pub(crate) struct Tu2Runs {
    pub sic: Option<BcuRun>,
    pub nsic: BcuRun,
}

impl Tu2Runs {
    pub fn new(d: &Tu2Design, allow_sic: bool, opts: &SolverOptions) -> Self {
        Self {
            sic: allow_sic.then(|| d.optimize(true, opts.eps, opts.max_iter)),
            nsic: d.optimize(false, opts.eps, opts.max_iter),
        }
    }
}

/// Best candidate over the subproblem kinds for a fixed Tu1 beamformer.
/// Ties keep the earlier kind; a silent relay is tried first so that
/// relaying must strictly help.
pub(crate) fn best_for_w1(ch: &ChannelSet, params: &SystemParams, w1: &CVec, runs: &Tu2Runs) -> Result<Candidate> {
    let mut best = silent_relay(ch, params, w1, true)?;
    for kind in SubproblemKind::ALL {
        let run = if kind.sic { runs.sic.as_ref() } else { Some(&runs.nsic) };
        let Some(run) = run else { continue };
        if let Some(c) = candidate_for_kind(ch, params, w1, run, kind, true) {
            if c.report.expected_ru1 > best.report.expected_ru1 {
                best = c;
            }
        }
    }
    Ok(best)
}

/// Apply the caps of `kind` to a finished state and report the resulting rate,
/// or `None` when the kind's conditions fail.
pub fn check_caps_and_rate(state: &BcuState, ch: &ChannelSet, params: &SystemParams, kind: SubproblemKind) -> Option<RateReport> {
    let w1 = simo_w1(params);
    let run = BcuRun { state: state.clone(), converged: true, history: vec![state.s] };
    let useful = cooperation_useful(ch);
    candidate_for_kind(ch, params, &w1, &run, kind, useful).map(|c| c.report)
}

pub fn cooperation_useful(ch: &ChannelSet) -> bool {
    let g0t = ch.h0.col(0).norm_sqr();
    let g1 = ch.h1.norm_sqr();
    g0t > g1
}

fn simo_w1(params: &SystemParams) -> CVec {
    CVec::from_real(&[params.p1.sqrt()])
}

fn strategy(params: &SystemParams, cooperate: bool, w1: CVec, c: &Candidate) -> Strategy {
    Strategy {
        configuration: Configuration::Simo,
        cooperate,
        beta: c.w21.norm_sqr() / params.p2,
        eta: None,
        lambda: None,
        w1,
        w21: c.w21.clone(),
        w22: c.w22.clone(),
        sic: c.sic,
        subproblem: c.kind,
    }
}

fn check_dims(ch: &ChannelSet) -> Result<()> {
    if ch.n1() != 1 {
        return Err(Error::InvalidInput(format!("SIMO solver needs N1 = 1, got {}", ch.n1())));
    }
    Ok(())
}

fn run(ch: &ChannelSet, params: &SystemParams, opts: &SolverOptions, allow_sic: bool) -> Result<(Strategy, RateReport)> {
    check_dims(ch)?;
    check_qos(ch, params)?;
    opts.validate()?;
    let w1 = simo_w1(params);
    if !cooperation_useful(ch) {
        let c = silent_relay(ch, params, &w1, false)?;
        return Ok((strategy(params, false, w1, &c), c.report));
    }
    let d = Tu2Design::new(ch, params)?;
    let runs = Tu2Runs::new(&d, allow_sic, opts);
    let c = best_for_w1(ch, params, &w1, &runs)?;
    Ok((strategy(params, true, w1, &c), c.report.clone()))
}

/// Relay and private beamformers for one SIMO realization.
pub fn solve_simo(ch: &ChannelSet, params: &SystemParams, opts: &SolverOptions) -> Result<(Strategy, RateReport)> {
    run(ch, params, opts, true)
}

/// Same design with Ru2 never cancelling the relayed symbol.
pub fn solve_simo_no_sic(ch: &ChannelSet, params: &SystemParams, opts: &SolverOptions) -> Result<(Strategy, RateReport)> {
    run(ch, params, opts, false)
}

/// Channel-matched beamformers with the largest relay power Ru2 tolerates
/// without SIC.
pub fn solve_simo_mrt_baseline(ch: &ChannelSet, params: &SystemParams) -> Result<(Strategy, RateReport)> {
    check_dims(ch)?;
    check_qos(ch, params)?;
    let w1 = simo_w1(params);
    let useful = cooperation_useful(ch);
    if !useful {
        let c = silent_relay(ch, params, &w1, false)?;
        return Ok((strategy(params, false, w1, &c), c.report));
    }
    let d = Tu2Design::new(ch, params)?;
    let st = d.mrt_split().ok_or(Error::Infeasible("h21 must be nonzero"))?;
    let links = links_from_vectors(ch, &w1, &st.w21, &st.w22);
    let report = rate::evaluate(params, &links, true, false, Diagnostics { converged: true, ..Default::default() });
    let c = Candidate { w21: st.w21, w22: st.w22, sic: false, kind: None, report };
    Ok((strategy(params, true, w1, &c), c.report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample, ChannelConfig};
    use crate::linalg::C64;
    use crate::oracle::simo_ratio_oracle;
    use crate::strategy::check_constraints;
    use crate::solve::no_cooperation;

    fn instance(n2: usize, seed: u64, trial: u64, alpha: f64, q: f64) -> (ChannelSet, SystemParams) {
        let cfg = ChannelConfig::standard(1, n2, 40.0, 40.0);
        let ch = sample(&cfg, seed, trial).unwrap();
        let params = SystemParams::from_config(&cfg, alpha, q).unwrap();
        (ch, params)
    }

    fn feasible(n2: usize, seed: u64, trial: u64, alpha: f64, q: f64) -> (ChannelSet, SystemParams) {
        (trial..)
            .map(|t| instance(n2, seed, t, alpha, q))
            .find(|(ch, p)| p.q <= ch.q_max(p.p2))
            .unwrap()
    }

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn qos_at_maximum_leaves_nothing_to_relay() {
        let (ch, mut params) = instance(2, 1, 0, 0.5, 0.0);
        params.q = ch.q_max(params.p2);
        let d = Tu2Design::new(&ch, &params).unwrap();
        for sic in [false, true] {
            let run = d.run(d.initial(sic), sic, 1e-6, 100);
            assert!(run.state.w21.norm_sqr() <= 1e-9 * params.p2);
            assert!(run.state.s <= 1e-9);
            assert!((run.state.w22.norm_sqr() - params.p2).abs() <= 1e-9 * params.p2);
        }
    }

    #[test]
    fn decoupled_channels_need_one_pass() {
        let (mut ch, params) = instance(2, 2, 0, 0.5, 1.0);
        ch.h2 = CVec::from_real(&[0.03, 0.0]);
        ch.h21 = CVec::new(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.05)]).unwrap();
        let d = Tu2Design::new(&ch, &params).unwrap();
        let run = d.run(d.initial(false), false, 1e-6, 100);
        let st = &run.state;
        assert!(run.converged && st.iteration == 1);
        let p22 = params.sinr_target() * ch.noise_power / ch.h2.norm_sqr();
        let want = (params.p2 - p22) * ch.h21.norm_sqr() / ch.noise_power;
        assert!((st.s - want).abs() <= 1e-12 * want);
        assert!(ch.h2.gain(&st.w21) <= 1e-20 && ch.h21.gain(&st.w22) <= 1e-20);
    }

    #[test]
    fn zero_qos_relays_at_full_power() {
        let (ch, params) = instance(3, 3, 0, 0.5, 0.0);
        let d = Tu2Design::new(&ch, &params).unwrap();
        let run = d.optimize(false, 1e-6, 100);
        let want = params.p2 * ch.h21.norm_sqr() / ch.noise_power;
        assert!((run.state.s - want).abs() <= 1e-12 * want);
        assert_eq!(run.state.w22.norm_sqr(), 0.0);
    }

    #[test]
    fn design_matches_direction_oracle() {
        for trial in 0..12 {
            for q in [0.5, 1.0, 2.0] {
                let (ch, params) = instance(2, 4, trial, 0.5, q);
                if q > ch.q_max(params.p2) {
                    continue;
                }
                let d = Tu2Design::new(&ch, &params).unwrap();
                for sic in [false, true] {
                    let s = d.optimize(sic, 1e-6, 100).state.s;
                    let o = simo_ratio_oracle(&ch.h21, &ch.h2, ch.noise_power, params.p2, params.sinr_target(), sic).unwrap();
                    assert!(s >= o * (1.0 - 1e-3), "trial {trial} q {q} sic {sic}: {s} vs oracle {o}");
                    assert!(s <= o * (1.0 + 1e-3), "trial {trial} q {q} sic {sic}: {s} above oracle {o}");
                }
            }
        }
    }

    #[test]
    fn bcu_is_monotone_and_converges() {
        let mut converged = 0;
        let mut total = 0;
        for trial in 0..100 {
            let (ch, params) = instance(2 + (trial as usize % 3), 5, trial, 0.5, 1.0);
            if params.q > ch.q_max(params.p2) {
                continue;
            }
            for kind in [SubproblemKind::ALL[0], SubproblemKind::ALL[2]] {
                let run = run_bcu(&ch, &params, kind, 1e-6, 100).unwrap();
                assert!(run.history.windows(2).all(|w| w[1] >= w[0]), "{:?}", run.history);
                total += 1;
                converged += run.converged as usize;
                let st = &run.state;
                assert!(st.w21.norm_sqr() + st.w22.norm_sqr() <= params.p2 * (1.0 + 1e-12));
            }
        }
        assert!(converged * 100 >= total * 95, "{converged}/{total}");
    }

    #[test]
    fn optimized_start_is_at_least_default() {
        for trial in 0..20 {
            let (ch, params) = feasible(3, 6, trial, 0.5, 1.0);
            let d = Tu2Design::new(&ch, &params).unwrap();
            for sic in [false, true] {
                let best = d.optimize(sic, 1e-6, 100).state.s;
                let plain = d.run(d.initial(sic), sic, 1e-6, 100).state.s;
                assert!(best >= plain);
            }
        }
    }

    #[test]
    fn ratio_below_caps_uses_boost() {
        let (ch, params) = feasible(2, 7, 0, 0.4, 1.0);
        let d = Tu2Design::new(&ch, &params).unwrap();
        let mut st = d.run(d.initial(false), false, 1e-6, 100).state;
        let g1 = ch.h1.norm_sqr();
        let rho1g1 = params.p1 * g1 / ch.noise_power;
        let cap = params.p1 * ch.h0.col(0).norm_sqr() / ch.noise_power;
        // Shrink the relay so the ratio sits strictly under the relay cap.
        let target = 0.5 * (cap - rho1g1).max(0.0);
        if target < st.s {
            st.w21 = st.w21.scale((target / st.s).sqrt());
            st.s = d.ratio(&st.w21, &st.w22);
        }
        let kind = SubproblemKind { sic: false, limiting: LimitingTerm::Ratio };
        let r = check_caps_and_rate(&st, &ch, &params, kind).unwrap();
        let want = 0.5 * params.alpha * (1.0 + rho1g1 + st.s).log2() + 0.5 * (1.0 - params.alpha) * (1.0 + rho1g1).log2();
        assert!((r.expected_ru1 - want).abs() <= 1e-12);
    }

    #[test]
    fn ratio_above_relay_cap_saturates() {
        for trial in 0..50 {
            let (ch, params) = feasible(2, 8, trial, 0.7, 0.5);
            let cap = params.p1 * ch.h0.col(0).norm_sqr() / ch.noise_power;
            let direct = params.p1 * ch.h1.norm_sqr() / ch.noise_power;
            let d = Tu2Design::new(&ch, &params).unwrap();
            let st = d.optimize(false, 1e-6, 100).state;
            if direct + st.s <= cap {
                continue;
            }
            let kind = SubproblemKind { sic: false, limiting: LimitingTerm::RelayCap };
            let r = check_caps_and_rate(&st, &ch, &params, kind).unwrap();
            assert!((r.rate_if_help - 0.5 * (1.0 + cap).log2()).abs() <= 1e-12);
            let ratio = SubproblemKind { sic: false, limiting: LimitingTerm::Ratio };
            let scaled = check_caps_and_rate(&st, &ch, &params, ratio).unwrap();
            assert!((scaled.rate_if_help - r.rate_if_help).abs() <= 1e-9);
            assert!(scaled.ru2 >= params.q - 1e-9);
            return;
        }
        panic!("no instance reached the relay cap");
    }

    #[test]
    fn solutions_are_feasible_and_beat_references() {
        for trial in 0..40 {
            let (ch, params) = feasible(2 + (trial as usize % 4), 9, trial, 0.6, 1.0);
            let (st, rep) = solve_simo(&ch, &params, &opts()).unwrap();
            let slack = check_constraints(&ch, &params, &st);
            assert!(slack.min_slack() >= -1e-9, "{slack:?}");
            let (_, nc) = no_cooperation(&ch, &params).unwrap();
            assert!(rep.expected_ru1 >= nc.expected_ru1 - 1e-12);
            let (ns, nsr) = solve_simo_no_sic(&ch, &params, &opts()).unwrap();
            assert!(!ns.sic && rep.expected_ru1 >= nsr.expected_ru1 - 1e-12);
            let (bs, br) = solve_simo_mrt_baseline(&ch, &params).unwrap();
            assert!(check_constraints(&ch, &params, &bs).min_slack() >= -1e-9);
            assert!(nsr.expected_ru1 >= br.expected_ru1 - 1e-12);
            let reported = crate::strategy::expected_rate_from_vectors(&ch, &params, &st);
            assert!((reported - rep.expected_ru1).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_trust_keeps_relay_silent() {
        let (ch, params) = feasible(3, 10, 0, 0.0, 1.0);
        let (st, rep) = solve_simo(&ch, &params, &opts()).unwrap();
        assert_eq!(st.w21.norm_sqr(), 0.0);
        let direct = 0.5 * (1.0 + params.p1 * ch.h1.norm_sqr() / ch.noise_power).log2();
        assert!((rep.expected_ru1 - direct).abs() <= 1e-12);
    }

    #[test]
    fn rate_grows_with_trust() {
        for trial in 0..10 {
            let (ch, params) = feasible(2, 11, trial, 0.0, 1.0);
            let rates: Vec<f64> = (0..=10)
                .map(|i| solve_simo(&ch, &params.with_alpha(i as f64 / 10.0), &opts()).unwrap().1.expected_ru1)
                .collect();
            assert!(rates.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{rates:?}");
        }
    }

    #[test]
    fn rejects_multi_antenna_tu1() {
        let cfg = ChannelConfig::standard(2, 2, 40.0, 40.0);
        let ch = sample(&cfg, 1, 0).unwrap();
        let params = SystemParams::from_config(&cfg, 0.5, 0.5).unwrap();
        assert!(solve_simo(&ch, &params, &opts()).is_err());
    }
}
