//! Multi-antenna Tu1, single-antenna Tu2.
//!
//! Tu1's beamformer lives on the arc w1(η) = √η·w0 + √(1−η)·w0⊥ between the
//! projection of h1 onto h0 and its orthogonal remainder. For each relay split
//! β the high-SNR objective picks η in closed form; β itself is chosen by a
//! one-dimensional search scored with the exact rates.

use serde::Serialize;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{orthogonal_unit, project_complement, project_onto, CVec, C64};
use crate::rate::{self, Diagnostics, EffectiveLinks, RateReport, SystemParams};
use crate::solve::{check_qos, SolverOptions};
use crate::strategy::{Configuration, Strategy};

/// Channel constants the closed forms are written in. Gains are per unit
/// transmit power; SNRs carry the power budgets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MisoDerived {
    /// ‖Π_h0 h1‖².
    pub v1: f64,
    /// ‖Π⊥_h0 h1‖².
    pub v2: f64,
    /// ‖h0‖².
    pub g0t: f64,
    /// ‖h1‖².
    pub g1t: f64,
    pub g2: f64,
    pub g21: f64,
    /// |h12† h1|².
    pub v3: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// ρ1(1 + 1/(ρ2 g21)).
    pub phi1: f64,
    pub w0: CVec,
    pub w0_perp: CVec,
    #[serde(skip)]
    h12_w0: C64,
    #[serde(skip)]
    h12_w0_perp: C64,
}

impl MisoDerived {
    pub fn new(ch: &ChannelSet, params: &SystemParams) -> Result<Self> {
        if ch.n2() != 1 {
            return Err(Error::InvalidInput("MISO solver needs N2 = 1".into()));
        }
        if ch.n1() < 2 {
            return Err(Error::InvalidInput("MISO solver needs N1 >= 2".into()));
        }
        let h0 = ch.h0.row(0).conj();
        let h1 = &ch.h1;
        if h0.norm_sqr() == 0.0 || h1.norm_sqr() == 0.0 {
            return Err(Error::DegenerateInput("zero channel vector"));
        }
        let along = project_onto(h1, &h0)?;
        let across = project_complement(h1, &h0)?;
        let (v1, v2) = (along.norm_sqr(), across.norm_sqr());
        let tiny = 1e-24 * h1.norm_sqr();
        let w0 = if v1 > tiny { along.normalized()? } else { h0.normalized()? };
        let w0_perp = if v2 > tiny {
            across.normalized()?
        } else {
            orthogonal_unit(&w0)?
        };
        let s2 = ch.noise_power;
        let rho1 = params.p1 / s2;
        let rho2 = params.p2 / s2;
        let g21 = ch.h21[0].norm_sqr();
        Ok(Self {
            v1,
            v2,
            g0t: h0.norm_sqr(),
            g1t: h1.norm_sqr(),
            g2: ch.h2[0].norm_sqr(),
            g21,
            v3: ch.h12.gain(h1),
            rho1,
            rho2,
            phi1: rho1 * (1.0 + 1.0 / (rho2 * g21)),
            h12_w0: ch.h12.dot(&w0),
            h12_w0_perp: ch.h12.dot(&w0_perp),
            w0,
            w0_perp,
        })
    }

    pub fn cooperation_useful(&self) -> bool {
        self.g0t > self.g1t
    }

    /// Lower end of the η range, where w1(η) is MRT toward h1.
    pub fn eta1(&self) -> f64 {
        self.v1 / (self.v1 + self.v2)
    }

    /// |h1† w1(η)|² per unit power.
    pub fn g_of(&self, eta: f64) -> f64 {
        let a = (eta * self.v1).sqrt() + ((1.0 - eta).max(0.0) * self.v2).sqrt();
        a * a
    }

    /// |h0† w1(η)|² per unit power.
    pub fn f_of(&self, eta: f64) -> f64 {
        eta * self.g0t
    }

    /// |h12† w1(η)|² per unit power.
    pub fn decode_gain(&self, eta: f64) -> f64 {
        (self.h12_w0 * eta.sqrt() + self.h12_w0_perp * (1.0 - eta).max(0.0).sqrt()).norm_sqr()
    }

    /// Unit-norm beamformer on the arc between the two MRT directions.
    pub fn w1(&self, eta: f64) -> CVec {
        &self.w0.scale(eta.sqrt()) + &self.w0_perp.scale((1.0 - eta).max(0.0).sqrt())
    }

    /// Relay boost expressed in units of ρ1, or +∞ once the split passes φ1/ρ1.
    pub fn m1(&self, beta: f64) -> f64 {
        let den = self.phi1 - beta * self.rho1;
        if den <= 0.0 {
            f64::INFINITY
        } else {
            beta / den
        }
    }

    /// Below this split the relay cap never binds on the arc.
    pub fn beta_lower(&self) -> f64 {
        let d = self.v1 * self.g0t - (self.v1 + self.v2).powi(2);
        d * self.phi1 / (self.v1 + self.v2 + d * self.rho1)
    }

    /// Above this split the relay cap binds everywhere on the arc.
    pub fn beta_upper(&self) -> f64 {
        let d = self.g0t - self.v1;
        d * self.phi1 / (1.0 + d * self.rho1)
    }

    /// Exact link terms for split β and direction η at full power.
    pub fn links(&self, beta: f64, eta: f64) -> EffectiveLinks {
        let x = self.rho2 * self.g21;
        EffectiveLinks {
            direct: self.rho1 * self.g_of(eta),
            boost: beta * x / ((1.0 - beta) * x + 1.0),
            relay_cap: self.rho1 * self.f_of(eta),
            decode12: self.rho1 * self.decode_gain(eta),
            ru2_signal: (1.0 - beta) * self.rho2 * self.g2,
            ru2_interf: beta * self.rho2 * self.g2,
        }
    }

    /// Largest split meeting the QoS with and without SIC, clamped to [0, 1].
    pub fn beta_q(&self, q: f64) -> (f64, f64) {
        let t = 4f64.powf(q);
        let bq1 = 1.0 - (t - 1.0) / (self.rho2 * self.g2);
        (bq1.clamp(0.0, 1.0), (bq1 / t).clamp(0.0, 1.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaBranch {
    Eta1,
    Eta2,
    Eta3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EtaChoice {
    pub eta: f64,
    pub branch: EtaBranch,
    /// The crossing-point radicand was negative and clamped to zero.
    pub clamped: bool,
}

/// Stationary point of the relay-capped objective; increasing in α.
pub fn eta2(d: &MisoDerived, alpha: f64) -> f64 {
    let (v1, v2) = (d.v1, d.v2);
    (v1 + 2.0 * v2 * alpha + (v1 * v1 + 4.0 * v1 * v2 * alpha * (1.0 - alpha)).sqrt()) / (2.0 * (v1 + v2))
}

/// Direction where f(η) = g(η) + m1(β); returns the value and a clamp flag.
pub fn eta3(d: &MisoDerived, beta: f64) -> (f64, bool) {
    let (v1, v2, g0) = (d.v1, d.v2, d.g0t);
    let m = d.m1(beta);
    if !m.is_finite() {
        return (1.0, false);
    }
    let rad = v1 * v2 * (v2 * g0 + m * (g0 - (v1 + v2) - m));
    let clamped = rad < 0.0;
    let num = v2 * (v1 + v2 + g0) + m * (g0 - v1 + v2) + 2.0 * rad.max(0.0).sqrt();
    let den = (g0 - v1).powi(2) + v2 * (2.0 * v1 + v2 + 2.0 * g0);
    (num / den, clamped)
}

/// Direction maximizing the high-SNR expected rate for given α and β.
pub fn eta_star(d: &MisoDerived, alpha: f64, beta: f64) -> EtaChoice {
    let lo = d.eta1();
    let pick = |eta: f64, branch| EtaChoice { eta, branch, clamped: false };
    if d.g0t < d.v1 {
        return pick(eta2(d, alpha), EtaBranch::Eta2);
    }
    if d.g0t > (d.v1 + d.v2).powi(2) / d.v1 && beta < d.beta_lower() {
        return pick(lo, EtaBranch::Eta1);
    }
    if beta > d.beta_upper() {
        return pick(eta2(d, alpha), EtaBranch::Eta2);
    }
    let e2 = eta2(d, alpha);
    let (e3, clamped) = eta3(d, beta);
    let e3 = e3.clamp(lo, 1.0);
    if e2 <= e3 {
        EtaChoice { eta: e2, branch: EtaBranch::Eta2, clamped }
    } else {
        EtaChoice { eta: e3, branch: EtaBranch::Eta3, clamped }
    }
}

/// High-SNR expected rate at Ru1 for direction η.
pub fn approx_rate(d: &MisoDerived, alpha: f64, beta: f64, eta: f64) -> f64 {
    let g = d.g_of(eta);
    let f = d.f_of(eta);
    let relay = (g + d.m1(beta)).min(f);
    0.5 * alpha * (d.rho1 * relay).log2() + 0.5 * (1.0 - alpha) * (d.rho1 * g).log2()
}

/// The Tu1→Tu2 link is strong enough that MRT toward h1 is optimal for every split.
pub fn strong_relay_link(d: &MisoDerived) -> bool {
    d.g0t >= d.g1t * (d.g1t + d.g21) / d.v1
}

/// Closed-form split under a strong Tu1→Tu2 link with MRT: returns (β, SIC).
pub fn strong_link_beta(d: &MisoDerived, q: f64) -> (f64, bool) {
    let (bq1, bq2) = d.beta_q(q);
    let x = d.v3 - d.g1t * d.g1t;
    if x >= 0.0 {
        let b2 = x * d.phi1 / (d.g1t + x * d.rho1);
        (b2.clamp(0.0, 1.0).min(bq1), true)
    } else {
        (bq2, false)
    }
}

/// Closed-form split under a weak Tu1→Tu2 link, where η2 is used for every split.
pub fn weak_link_beta(d: &MisoDerived, alpha: f64, q: f64) -> (f64, bool) {
    let (bq1, bq2) = d.beta_q(q);
    let e = eta2(d, alpha);
    if d.decode_gain(e) >= d.f_of(e) {
        (bq1, true)
    } else {
        (bq2, false)
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    beta: f64,
    eta: f64,
    sic: bool,
    rate: f64,
    clamped: bool,
}

fn score(d: &MisoDerived, params: &SystemParams, beta: f64, eta: f64, allow_sic: bool) -> Option<(f64, bool)> {
    let links = d.links(beta, eta);
    let sic = allow_sic && rate::sic_feasible(&links);
    if rate::rate_ru2(&links, sic) < params.q - 1e-12 {
        return None;
    }
    Some((rate::expected_rate_ru1(params, &links, true), sic))
}

fn consider(best: &mut Option<Candidate>, c: Candidate) {
    if best.is_none_or(|b| c.rate > b.rate) {
        *best = Some(c);
    }
}

fn grid_search(d: &MisoDerived, params: &SystemParams, n: usize, allow_sic: bool) -> Option<Candidate> {
    let (bq1, bq2) = d.beta_q(params.q);
    let mut betas: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    betas.push(bq1);
    betas.push(bq2);
    let mut best = None;
    for beta in betas {
        let choice = eta_star(d, params.alpha, beta);
        if let Some((rate, sic)) = score(d, params, beta, choice.eta, allow_sic) {
            consider(&mut best, Candidate { beta, eta: choice.eta, sic, rate, clamped: choice.clamped });
        }
    }
    guard(d, params, &mut best);
    best
}

/// MRT toward h1 with the interference-tolerant split is always feasible.
fn guard(d: &MisoDerived, params: &SystemParams, best: &mut Option<Candidate>) {
    let (_, bq2) = d.beta_q(params.q);
    if let Some((rate, _)) = score(d, params, bq2, d.eta1(), false) {
        consider(best, Candidate { beta: bq2, eta: d.eta1(), sic: false, rate, clamped: false });
    }
}

fn rho_equal(d: &MisoDerived) -> bool {
    (d.rho1 - d.rho2).abs() <= 1e-12 * d.rho1.max(d.rho2)
}

fn strong_link_search(d: &MisoDerived, params: &SystemParams) -> Option<Candidate> {
    let eta = d.eta1();
    let (beta, sic) = strong_link_beta(d, params.q);
    let mut best = None;
    if let Some((rate, ok)) = score(d, params, beta, eta, sic) {
        consider(&mut best, Candidate { beta, eta, sic: ok, rate, clamped: false });
    }
    guard(d, params, &mut best);
    best
}

fn direct_only(params: &SystemParams, d: &MisoDerived) -> (Strategy, RateReport) {
    let links = d.links(0.0, d.eta1());
    let report = rate::evaluate(params, &links, false, false, Diagnostics { converged: true, ..Default::default() });
    (assemble(params, d, false, 0.0, d.eta1(), false), report)
}

fn assemble(params: &SystemParams, d: &MisoDerived, cooperate: bool, beta: f64, eta: f64, sic: bool) -> Strategy {
    Strategy {
        configuration: Configuration::Miso,
        cooperate,
        beta,
        eta: Some(eta),
        lambda: None,
        w1: d.w1(eta).scale(params.p1.sqrt()),
        w21: CVec::from_real(&[(beta * params.p2).sqrt()]),
        w22: CVec::from_real(&[((1.0 - beta) * params.p2).sqrt()]),
        sic,
        subproblem: None,
    }
}

fn finish(params: &SystemParams, d: &MisoDerived, c: Candidate, iterations: usize) -> (Strategy, RateReport) {
    let links = d.links(c.beta, c.eta);
    let diag = Diagnostics { iterations, subproblem: None, converged: true, clamped: c.clamped };
    let report = rate::evaluate(params, &links, true, c.sic, diag);
    (assemble(params, d, true, c.beta, c.eta, c.sic), report)
}

fn run(ch: &ChannelSet, params: &SystemParams, opts: &SolverOptions, allow_sic: bool) -> Result<(Strategy, RateReport)> {
    check_qos(ch, params)?;
    let d = MisoDerived::new(ch, params)?;
    if !d.cooperation_useful() {
        return Ok(direct_only(params, &d));
    }
    let fast = allow_sic && rho_equal(&d) && strong_relay_link(&d);
    let best = if fast {
        strong_link_search(&d, params)
    } else {
        grid_search(&d, params, opts.beta_grid.max(2), allow_sic)
    };
    let c = best.ok_or(Error::Infeasible("no split meets the QoS requirement"))?;
    let found = finish(params, &d, c, if fast { 1 } else { opts.beta_grid + 3 });
    // Relaying can lose to the direct link when Tu2 decodes Tu1 poorly.
    let silent = direct_only(params, &d);
    Ok(if silent.1.expected_ru1 > found.1.expected_ru1 { silent } else { found })
}

/// Joint Tu1 direction and Tu2 split for one MISO realization.
pub fn solve_miso(ch: &ChannelSet, params: &SystemParams, opts: &SolverOptions) -> Result<(Strategy, RateReport)> {
    run(ch, params, opts, true)
}

/// Same search with Ru2 never cancelling the relayed symbol.
pub fn solve_miso_no_sic(ch: &ChannelSet, params: &SystemParams, opts: &SolverOptions) -> Result<(Strategy, RateReport)> {
    run(ch, params, opts, false)
}

/// Tu1 transmits MRT toward h1; Tu2 relays with the largest split tolerable without SIC.
pub fn solve_miso_mrt_baseline(ch: &ChannelSet, params: &SystemParams) -> Result<(Strategy, RateReport)> {
    check_qos(ch, params)?;
    let d = MisoDerived::new(ch, params)?;
    // With w1 fixed, relaying only pays when Tu2 hears Tu1 better than Ru1 does.
    if !d.cooperation_useful() || d.f_of(d.eta1()) <= d.g_of(d.eta1()) {
        return Ok(direct_only(params, &d));
    }
    let (_, bq2) = d.beta_q(params.q);
    let c = Candidate { beta: bq2, eta: d.eta1(), sic: false, rate: 0.0, clamped: false };
    Ok(finish(params, &d, c, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample, ChannelConfig};
    use crate::strategy::{check_constraints, links_from_vectors};
    use proptest::prelude::*;

    fn instance(seed: u64, trial: u64) -> (ChannelSet, MisoDerived, SystemParams) {
        let cfg = ChannelConfig::standard(2, 1, 50.0, 50.0);
        let ch = sample(&cfg, seed, trial).unwrap();
        let p = SystemParams::from_config(&cfg, 0.5, 0.5).unwrap();
        let d = MisoDerived::new(&ch, &p).unwrap();
        (ch, d, p)
    }

    /// Maximum of the high-SNR objective over a uniform η grid on the arc.
    fn eta_grid_best(d: &MisoDerived, alpha: f64, beta: f64, step: f64) -> f64 {
        let lo = d.eta1();
        let n = ((1.0 - lo) / step).ceil() as usize;
        (0..=n)
            .map(|i| (lo + i as f64 * step).min(1.0))
            .map(|eta| approx_rate(d, alpha, beta, eta))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn derived_constants_are_consistent() {
        for t in 0..20 {
            let (ch, d, _) = instance(1, t);
            assert!((d.v1 + d.v2 - d.g1t).abs() <= 1e-9 * d.g1t);
            assert!(d.w0.dot(&d.w0_perp).norm() < 1e-12);
            assert!((d.w0.norm() - 1.0).abs() < 1e-12 && (d.w0_perp.norm() - 1.0).abs() < 1e-12);
            assert!((d.g_of(d.eta1()) - d.g1t).abs() <= 1e-12 * d.g1t);
            assert!((d.g_of(1.0) - d.v1).abs() <= 1e-12 * d.g1t);
            assert_eq!(d.f_of(1.0), d.g0t);
            let _ = ch;
        }
    }

    #[test]
    fn scalar_links_match_vector_links() {
        for t in 0..20 {
            let (ch, d, p) = instance(2, t);
            for &(beta, eta) in &[(0.0, d.eta1()), (0.3, 0.7), (0.9, 1.0)] {
                let eta = eta.max(d.eta1());
                let w1 = d.w1(eta).scale(p.p1.sqrt());
                let w21 = CVec::from_real(&[(beta * p.p2).sqrt()]);
                let w22 = CVec::from_real(&[((1.0 - beta) * p.p2).sqrt()]);
                let a = d.links(beta, eta);
                let b = links_from_vectors(&ch, &w1, &w21, &w22);
                for (x, y) in [
                    (a.direct, b.direct),
                    (a.boost, b.boost),
                    (a.relay_cap, b.relay_cap),
                    (a.decode12, b.decode12),
                    (a.ru2_signal, b.ru2_signal),
                    (a.ru2_interf, b.ru2_interf),
                ] {
                    assert!((x - y).abs() <= 1e-10 * x.abs().max(y.abs()).max(1e-300), "{x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn eta2_endpoints() {
        for t in 0..50 {
            let (_, d, _) = instance(3, t);
            assert!((eta2(&d, 0.0) - d.eta1()).abs() <= 1e-12);
            assert!((eta2(&d, 1.0) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn eta3_is_the_crossing_point() {
        for t in 0..200 {
            let (_, d, _) = instance(4, t);
            if d.g0t < d.v1 {
                continue;
            }
            let (lo, hi) = (d.beta_lower().max(0.0), d.beta_upper().min(1.0));
            if !(lo < hi) {
                continue;
            }
            let beta = 0.5 * (lo + hi);
            let (e3, clamped) = eta3(&d, beta);
            assert!(!clamped);
            let gap = d.f_of(e3) - d.g_of(e3) - d.m1(beta);
            assert!(gap.abs() <= 1e-7 * d.f_of(e3), "gap {gap}");
        }
    }

    #[test]
    fn eta_star_matches_grid() {
        for t in 0..200 {
            let (_, d, _) = instance(5, t);
            for &(alpha, beta) in &[(0.2, 0.1), (0.8, 0.5), (0.5, 0.95), (1.0, 0.3)] {
                let e = eta_star(&d, alpha, beta);
                let best = eta_grid_best(&d, alpha, beta, 1e-5);
                assert!(approx_rate(&d, alpha, beta, e.eta) >= best - 1e-6);
            }
        }
    }

    #[test]
    fn alpha_zero_is_mrt_direct_rate() {
        let (ch, d, p) = instance(6, 0);
        let p = p.with_alpha(0.0);
        let (s, r) = solve_miso(&ch, &p, &SolverOptions::default()).unwrap();
        let want = 0.5 * (1.0 + d.rho1 * d.g1t).log2();
        assert!((r.expected_ru1 - want).abs() < 1e-12);
        assert!((s.w1.gain(&ch.h1) - p.p1 * d.g1t).abs() <= 1e-9 * p.p1 * d.g1t);
    }

    #[test]
    fn proposed_beats_baselines_and_is_feasible() {
        let opts = SolverOptions::default();
        for t in 0..100 {
            let (ch, _, p) = instance(7, t);
            let q_max = ch.q_max(p.p2);
            let p = SystemParams { q: 0.5f64.min(q_max), alpha: (t as f64 / 99.0), ..p };
            let (s, r) = solve_miso(&ch, &p, &opts).unwrap();
            let (_, base) = solve_miso_mrt_baseline(&ch, &p).unwrap();
            let (_, nsic) = solve_miso_no_sic(&ch, &p, &opts).unwrap();
            assert!(r.expected_ru1 >= base.expected_ru1 - 1e-12);
            assert!(r.expected_ru1 >= nsic.expected_ru1 - 1e-12);
            assert!(check_constraints(&ch, &p, &s).min_slack() >= -1e-9);
        }
    }

    #[test]
    fn strong_link_split_matches_grid_search() {
        let mut hits = 0;
        for t in 0..400 {
            let (ch, d, p) = instance(8, t);
            if !d.cooperation_useful() || !strong_relay_link(&d) {
                continue;
            }
            hits += 1;
            let p = p.with_alpha(1.0);
            let (fast, _) = solve_miso(&ch, &p, &SolverOptions::default()).unwrap();
            let fast_rate = rate::expected_rate_ru1(&p, &d.links(fast.beta, d.eta1()), true);
            let grid = grid_search(&d, &p, 20001, true).unwrap();
            assert!(fast_rate >= grid.rate - 1e-4, "{fast_rate} vs {}", grid.rate);
        }
        assert!(hits > 5, "only {hits} instances hit the strong-link regime");
    }

    #[test]
    fn weak_link_split_meets_qos() {
        let (ch, mut d, p) = instance(9, 1);
        d.g0t = 0.5 * d.v1;
        let (beta, sic) = weak_link_beta(&d, 0.7, p.q);
        let l = d.links(beta, eta2(&d, 0.7));
        assert!(rate::rate_ru2(&l, sic) >= p.q - 1e-9);
        let _ = ch;
    }

    proptest! {
        #[test]
        fn eta_star_in_range(seed in 0u64..2000, alpha in 0.0..=1.0f64, beta in 0.0..=1.0f64) {
            let (_, d, _) = instance(10, seed);
            let e = eta_star(&d, alpha, beta).eta;
            prop_assert!(e >= d.eta1() - 1e-15 && e <= 1.0 + 1e-15);
        }

        #[test]
        fn eta2_nondecreasing_in_alpha(seed in 0u64..2000, a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
            let (_, d, _) = instance(11, seed);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(eta2(&d, hi) >= eta2(&d, lo) - 1e-15);
        }
    }
}
