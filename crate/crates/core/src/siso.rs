//! Single-antenna case: closed-form relay power split at Tu2.
//!
//! The split β is chosen among three candidates: the largest β meeting the
//! QoS with SIC at Ru2 (βQ1), the largest without SIC (βQ2), and the largest
//! β that still lets Ru2 decode Tu1's symbol (β̃1). The comparison thresholds
//! r1, r2, r3 translate each candidate into the QoS level where it changes
//! feasibility.

use serde::Serialize;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::CVec;
use crate::rate::{self, Diagnostics, EffectiveLinks, RateReport, SystemParams};
use crate::strategy::{Configuration, Strategy};

/// Scalar channel power gains and linear SNRs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SisoGains {
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
    pub g12: f64,
    pub g21: f64,
    pub rho1: f64,
    pub rho2: f64,
}

impl SisoGains {
    pub fn new(g0: f64, g1: f64, g2: f64, g12: f64, g21: f64, rho1: f64, rho2: f64) -> Result<Self> {
        let g = Self { g0, g1, g2, g12, g21, rho1, rho2 };
        if [g0, g1, g2, g12, g21, rho1, rho2].iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput("SISO gains and SNRs must be positive and finite".into()));
        }
        Ok(g)
    }

    pub fn from_channels(ch: &ChannelSet, params: &SystemParams) -> Result<Self> {
        if ch.n1() != 1 || ch.n2() != 1 {
            return Err(Error::InvalidInput("SISO solver needs N1 = N2 = 1".into()));
        }
        Self::new(
            ch.h0.get(0, 0).norm_sqr(),
            ch.h1[0].norm_sqr(),
            ch.h2[0].norm_sqr(),
            ch.h12[0].norm_sqr(),
            ch.h21[0].norm_sqr(),
            params.p1 / ch.noise_power,
            params.p2 / ch.noise_power,
        )
    }

    pub fn q_max(&self) -> f64 {
        0.5 * (1.0 + self.rho2 * self.g2).log2()
    }

    pub fn cooperation_useful(&self) -> bool {
        self.g0 > self.g1
    }

    /// Link terms when a fraction `beta` of Tu2's power relays Tu1's symbol.
    pub fn links(&self, beta: f64) -> EffectiveLinks {
        let x = self.rho2 * self.g21;
        EffectiveLinks {
            direct: self.rho1 * self.g1,
            boost: beta * x / ((1.0 - beta) * x + 1.0),
            relay_cap: self.rho1 * self.g0,
            decode12: self.rho1 * self.g12,
            ru2_signal: (1.0 - beta) * self.rho2 * self.g2,
            ru2_interf: beta * self.rho2 * self.g2,
        }
    }
}

/// Raw closed-form value with its projection onto [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Breakpoint {
    pub raw: f64,
    pub clamped: f64,
}

impl Breakpoint {
    fn new(raw: f64) -> Self {
        Self { raw, clamped: raw.clamp(0.0, 1.0) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BetaBreakpoints {
    pub beta0: Breakpoint,
    pub beta_q1: Breakpoint,
    pub beta_q2: Breakpoint,
    pub beta_tilde1: Breakpoint,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

/// Which candidate the case analysis selected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SisoBranch {
    Direct,
    QosWithSic,
    DecodeBoundary,
    QosWithoutSic,
}

/// β at which the relay boost equals ρ1·(gx − g1), i.e. where the combined
/// rate at Ru1 meets the rate of a link with gain gx.
fn boundary_beta(g: &SisoGains, gx: f64) -> f64 {
    let x = g.rho2 * g.g21;
    let d = g.rho1 * (gx - g.g1);
    1.0 - (x - d) / (x * (1.0 + d))
}

fn positive_half_log2(arg: f64) -> f64 {
    if arg > 1.0 {
        0.5 * arg.log2()
    } else {
        0.0
    }
}

fn check_qos(g: &SisoGains, q: f64) -> Result<()> {
    let q_max = g.q_max();
    if !(q >= 0.0) || q > q_max * (1.0 + 1e-12) {
        return Err(Error::InfeasibleQos { q, q_max });
    }
    Ok(())
}

pub fn breakpoints(g: &SisoGains, q: f64) -> Result<BetaBreakpoints> {
    check_qos(g, q)?;
    let y = g.rho2 * g.g2;
    let t = 4f64.powf(q);
    let beta_q1 = 1.0 - (t - 1.0) / y;
    let beta0 = boundary_beta(g, g.g0);
    let beta_tilde1 = boundary_beta(g, g.g12);
    let r1 = positive_half_log2(1.0 + (1.0 - beta0) * y);
    let r2 = positive_half_log2(1.0 + (1.0 - beta_tilde1) * y);
    let den = 1.0 + y * beta_tilde1;
    let r3 = if den > 0.0 { 0.5 * ((1.0 + y) / den).log2() } else { f64::INFINITY };
    Ok(BetaBreakpoints {
        beta0: Breakpoint::new(beta0),
        beta_q1: Breakpoint::new(beta_q1),
        beta_q2: Breakpoint::new(beta_q1 / t),
        beta_tilde1: Breakpoint::new(beta_tilde1),
        r1,
        r2,
        r3,
    })
}

/// Case analysis over the raw breakpoints; returns (branch, β, SIC at Ru2).
pub fn optimal_branch(g: &SisoGains, q: f64) -> Result<(SisoBranch, f64, bool)> {
    let b = breakpoints(g, q)?;
    if !g.cooperation_useful() {
        return Ok((SisoBranch::Direct, 0.0, false));
    }
    let (g0, g1, g12) = (g.g0, g.g1, g.g12);
    if (g12 >= g0 && q <= b.r1) || (g12 >= g1 && q >= b.r1.max(b.r2)) {
        Ok((SisoBranch::QosWithSic, b.beta_q1.clamped, true))
    } else if g0 > g12 && g12 >= g1 && b.r2 >= q && q > b.r3 {
        Ok((SisoBranch::DecodeBoundary, b.beta_tilde1.clamped, true))
    } else {
        Ok((SisoBranch::QosWithoutSic, b.beta_q2.clamped, false))
    }
}

pub fn optimal_beta(g: &SisoGains, q: f64) -> Result<(f64, bool)> {
    optimal_branch(g, q).map(|(_, beta, sic)| (beta, sic))
}

fn strategy_for(g: &SisoGains, params: &SystemParams, beta: f64, sic: bool) -> Strategy {
    let cooperate = g.cooperation_useful();
    let beta = if cooperate { beta } else { 0.0 };
    Strategy {
        configuration: Configuration::Siso,
        cooperate,
        beta,
        eta: None,
        lambda: None,
        w1: CVec::from_real(&[params.p1.sqrt()]),
        w21: CVec::from_real(&[(beta * params.p2).sqrt()]),
        w22: CVec::from_real(&[((1.0 - beta) * params.p2).sqrt()]),
        sic: cooperate && sic,
        subproblem: None,
    }
}

fn report_for(g: &SisoGains, params: &SystemParams, strategy: &Strategy) -> RateReport {
    let links = g.links(strategy.beta);
    rate::evaluate(
        params,
        &links,
        strategy.cooperate,
        strategy.sic,
        Diagnostics { converged: true, ..Default::default() },
    )
}

/// Optimal relay split for one SISO realization.
pub fn solve_siso_gains(g: &SisoGains, params: &SystemParams) -> Result<(Strategy, RateReport)> {
    let (beta, sic) = optimal_beta(g, params.q)?;
    let s = strategy_for(g, params, beta, sic);
    let r = report_for(g, params, &s);
    Ok((s, r))
}

pub fn solve_siso(ch: &ChannelSet, params: &SystemParams) -> Result<(Strategy, RateReport)> {
    solve_siso_gains(&SisoGains::from_channels(ch, params)?, params)
}

/// Cooperation without SIC at Ru2: the largest split meeting the QoS under interference.
pub fn solve_siso_no_sic(ch: &ChannelSet, params: &SystemParams) -> Result<(Strategy, RateReport)> {
    let g = SisoGains::from_channels(ch, params)?;
    let b = breakpoints(&g, params.q)?;
    let s = strategy_for(&g, params, b.beta_q2.clamped, false);
    let r = report_for(&g, params, &s);
    Ok((s, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::Exp1;

    fn params(alpha: f64, q: f64, rho: f64) -> SystemParams {
        SystemParams::new(alpha, q, rho, rho, 1.0).unwrap()
    }

    fn random_gains(rng: &mut ChaCha8Rng, rho: f64) -> SisoGains {
        let mut e = |db: f64| 10f64.powf(db / 10.0) * rng.sample::<f64, _>(Exp1);
        SisoGains::new(e(-35.0), e(-45.0), e(-30.0), e(-25.0), e(-25.0), rho, rho).unwrap()
    }

    /// Best expected rate over a β grid among splits meeting the Ru2 QoS.
    fn grid_best(g: &SisoGains, p: &SystemParams, step: f64) -> f64 {
        let n = (1.0 / step).round() as usize;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=n {
            let beta = i as f64 * step;
            let l = g.links(beta);
            let sic = rate::sic_feasible(&l);
            if rate::rate_ru2(&l, sic) >= p.q - 1e-12 {
                best = best.max(rate::expected_rate_ru1(p, &l, g.cooperation_useful()));
            }
        }
        best
    }

    #[test]
    fn breakpoint_examples() {
        let g = SisoGains::new(2e-3, 1e-4, 1e-3, 4e-3, 3e-3, 1e4, 1e4).unwrap();
        let b = breakpoints(&g, 0.0).unwrap();
        assert_eq!(b.beta_q1.raw, 1.0);
        assert_eq!(b.beta_q2.raw, 1.0);
        let b = breakpoints(&g, g.q_max()).unwrap();
        assert!(b.beta_q1.raw.abs() < 1e-12);
        let same = SisoGains { g12: g.g1, ..g };
        assert!(breakpoints(&same, 0.5).unwrap().beta_tilde1.raw.abs() < 1e-15);
        assert!(matches!(breakpoints(&g, g.q_max() + 0.1), Err(Error::InfeasibleQos { .. })));
    }

    #[test]
    fn thresholds_ordered_when_beta0_below_tilde() {
        let g = SisoGains::new(2e-3, 1e-4, 1e-3, 4e-3, 3e-3, 1e4, 1e4).unwrap();
        let b = breakpoints(&g, 0.4).unwrap();
        assert!(b.beta0.raw <= b.beta_tilde1.raw);
        assert!(b.r1 >= b.r2);
    }

    #[test]
    fn useless_cooperation_means_direct() {
        let g = SisoGains::new(1e-4, 2e-4, 1e-3, 4e-3, 3e-3, 1e4, 1e4).unwrap();
        assert_eq!(optimal_branch(&g, 0.5).unwrap(), (SisoBranch::Direct, 0.0, false));
        let eq = SisoGains { g0: g.g1, ..g };
        assert_eq!(optimal_beta(&eq, 0.5).unwrap().0, 0.0);
    }

    #[test]
    fn strong_decode_link_uses_qos_split_with_sic() {
        let g = SisoGains::new(2e-3, 1e-4, 1e-3, 5e-3, 3e-3, 1e4, 1e4).unwrap();
        let (branch, beta, sic) = optimal_branch(&g, 0.1).unwrap();
        assert_eq!(branch, SisoBranch::QosWithSic);
        assert!(sic);
        assert_eq!(beta, breakpoints(&g, 0.1).unwrap().beta_q1.clamped);
    }

    #[test]
    fn alpha_zero_is_direct_rate() {
        let g = SisoGains::new(2e-3, 1e-4, 1e-3, 5e-3, 3e-3, 1e4, 1e4).unwrap();
        let (_, r) = solve_siso_gains(&g, &params(0.0, 0.5, 1e4)).unwrap();
        assert_eq!(r.expected_ru1, 0.5 * (1.0 + 1e4 * 1e-4f64).log2());
    }

    #[test]
    fn qos_at_maximum_leaves_no_relay_power() {
        let g = SisoGains::new(2e-3, 1e-4, 1e-3, 5e-3, 3e-3, 1e4, 1e4).unwrap();
        let p = params(1.0, g.q_max(), 1e4);
        let (s, r) = solve_siso_gains(&g, &p).unwrap();
        assert!(s.beta < 1e-12);
        assert!((r.expected_ru1 - r.rate_if_no_help).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..300 {
            let g = random_gains(&mut rng, 1e4);
            let q = rng.random::<f64>() * g.q_max();
            let p = params(rng.random(), q, 1e4);
            let (_, r) = solve_siso_gains(&g, &p).unwrap();
            let oracle = grid_best(&g, &p, 1e-4);
            assert!(r.expected_ru1 >= oracle - 1e-5, "{:?} q={q}: {} < {oracle}", g, r.expected_ru1);
            assert!(r.ru2 >= q - 1e-9);
        }
    }

    #[test]
    fn ru1_rate_nondecreasing_in_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let g = random_gains(&mut rng, 1e4);
            let p = params(1.0, 0.3, 1e4);
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=1000 {
                let v = rate::expected_rate_ru1(&p, &g.links(i as f64 / 1000.0), true);
                assert!(v >= prev - 1e-15);
                prev = v;
            }
        }
    }

    proptest! {
        #[test]
        fn sic_flag_is_consistent(seed in 0u64..5000, frac in 0.0..1.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_gains(&mut rng, 1e4);
            let q = frac * g.q_max();
            let (beta, sic) = optimal_beta(&g, q).unwrap();
            let l = g.links(beta);
            if sic {
                prop_assert!(rate::sic_feasible(&l));
            }
            prop_assert!(rate::rate_ru2(&l, sic) >= q - 1e-9);
            prop_assert!((0.0..=1.0).contains(&beta));
        }
    }
}
