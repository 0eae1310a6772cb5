//! Achievable rates shared by all four antenna configurations.
//!
//! Each configuration reduces its beamformers to an [`EffectiveLinks`]
//! record of normalized SNR terms. The half-rate factor from the two-slot
//! schedule is applied here and nowhere else.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::strategy::SubproblemKind;

/// Relative slack under which a decode SNR counts as equal to the rate it must
/// support, so boundary allocations computed in floating point still admit SIC.
pub const SIC_TIE_RTOL: f64 = 1e-12;

/// Trust degree, QoS target and power budgets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub alpha: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "P1")]
    pub p1: f64,
    #[serde(rename = "P2")]
    pub p2: f64,
    pub sigma2: f64,
}

impl SystemParams {
    pub fn new(alpha: f64, q: f64, p1: f64, p2: f64, sigma2: f64) -> Result<Self> {
        let p = Self { alpha, q, p1, p2, sigma2 };
        p.validate()?;
        Ok(p)
    }

    /// Powers derived from the configured SNRs and noise power.
    pub fn from_config(config: &ChannelConfig, alpha: f64, q: f64) -> Result<Self> {
        Self::new(alpha, q, config.p1(), config.p2(), config.noise_power)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidInput(format!("alpha must lie in [0,1], got {}", self.alpha)));
        }
        if !(self.q >= 0.0 && self.q.is_finite()) {
            return Err(Error::InvalidInput(format!("Q must be finite and >= 0, got {}", self.q)));
        }
        for (name, v) in [("P1", self.p1), ("P2", self.p2), ("sigma2", self.sigma2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn rho1(&self) -> f64 {
        self.p1 / self.sigma2
    }

    pub fn rho2(&self) -> f64 {
        self.p2 / self.sigma2
    }

    /// 4^Q − 1, the SINR Ru2 needs.
    pub fn sinr_target(&self) -> f64 {
        4f64.powf(self.q) - 1.0
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}

/// Scalar reduction of a strategy. All terms are SNRs already divided by
/// the noise power.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EffectiveLinks {
    pub direct: f64,
    pub boost: f64,
    pub relay_cap: f64,
    pub decode12: f64,
    pub ru2_signal: f64,
    pub ru2_interf: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub subproblem: Option<SubproblemKind>,
    pub converged: bool,
    /// Set when a closed form had to clamp a slightly negative radicand.
    pub clamped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub expected_ru1: f64,
    pub ru2: f64,
    pub rate_if_help: f64,
    pub rate_if_no_help: f64,
    pub sic_used: bool,
    pub diagnostics: Diagnostics,
}

fn half_log2(x: f64) -> f64 {
    0.5 * (1.0 + x).log2()
}

pub fn direct_rate(links: &EffectiveLinks) -> f64 {
    half_log2(links.direct)
}

pub fn q_tu1(links: &EffectiveLinks) -> f64 {
    half_log2((links.direct + links.boost).min(links.relay_cap))
}

pub fn expected_rate_ru1(params: &SystemParams, links: &EffectiveLinks, cooperation_useful: bool) -> f64 {
    if cooperation_useful {
        let d = direct_rate(links);
        d + params.alpha * (q_tu1(links) - d)
    } else {
        direct_rate(links)
    }
}

pub fn rate_ru2(links: &EffectiveLinks, sic: bool) -> f64 {
    if sic {
        half_log2(links.ru2_signal)
    } else {
        half_log2(links.ru2_signal / (links.ru2_interf + 1.0))
    }
}

pub fn sic_feasible(links: &EffectiveLinks) -> bool {
    let need = (links.direct + links.boost).min(links.relay_cap);
    links.decode12 >= need * (1.0 - SIC_TIE_RTOL)
}

/// Assemble a report for a strategy whose Ru2 decoding mode is `sic`.
pub fn evaluate(
    params: &SystemParams,
    links: &EffectiveLinks,
    cooperation_useful: bool,
    sic: bool,
    diagnostics: Diagnostics,
) -> RateReport {
    let no_help = direct_rate(links);
    let help = if cooperation_useful { q_tu1(links) } else { no_help };
    RateReport {
        expected_ru1: no_help + params.alpha * (help - no_help),
        ru2: rate_ru2(links, sic),
        rate_if_help: help,
        rate_if_no_help: no_help,
        sic_used: sic,
        diagnostics,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn links(direct: f64, boost: f64, relay_cap: f64, decode12: f64) -> EffectiveLinks {
        EffectiveLinks { direct, boost, relay_cap, decode12, ru2_signal: 0.0, ru2_interf: 0.0 }
    }

    fn params(alpha: f64) -> SystemParams {
        SystemParams::new(alpha, 0.5, 1e4, 1e4, 1.0).unwrap()
    }

    #[test]
    fn q_tu1_definition() {
        assert_eq!(q_tu1(&links(3.0, 0.0, 10.0, 0.0)), 1.0);
        assert_eq!(q_tu1(&links(3.0, 4.0, 10.0, 0.0)), 1.5);
        assert_eq!(q_tu1(&links(3.0, 40.0, 15.0, 0.0)), 2.0);
    }

    #[test]
    fn expected_rate_examples() {
        let l = links(1.0, 2.0, 15.0, 0.0);
        assert_eq!(expected_rate_ru1(&params(0.5), &l, true), 0.75);
        assert_eq!(expected_rate_ru1(&params(0.0), &l, true), 0.5);
        assert_eq!(expected_rate_ru1(&params(1.0), &links(1.0, 0.0, 5.0, 0.0), true), 0.5);
        assert_eq!(expected_rate_ru1(&params(1.0), &l, false), 0.5);
    }

    #[test]
    fn ru2_rate_cases() {
        let mut l = links(0.0, 0.0, 0.0, 0.0);
        l.ru2_signal = 3.0;
        assert_eq!(rate_ru2(&l, true), 1.0);
        assert_eq!(rate_ru2(&l, false), 1.0);
        l.ru2_interf = 1.0;
        assert_eq!(rate_ru2(&l, false), 0.5 * 2.5f64.log2());
    }

    #[test]
    fn siso_substitution_matches_formula() {
        let (beta, rho2, g2) = (0.3, 1e4, 1e-3);
        let l = EffectiveLinks {
            ru2_signal: (1.0 - beta) * rho2 * g2,
            ru2_interf: beta * rho2 * g2,
            ..Default::default()
        };
        let want = 0.5 * (1.0 + (1.0 - beta) * rho2 * g2 / (beta * rho2 * g2 + 1.0)).log2();
        assert_eq!(rate_ru2(&l, false), want);
    }

    #[test]
    fn sic_feasibility_cases() {
        assert!(sic_feasible(&links(1.0, 5.0, 2.0, 2.0)));
        assert!(!sic_feasible(&links(2.0, 0.0, 5.0, 1.9)));
        assert!(sic_feasible(&links(1.0, 1.0, 5.0, 2.0)));
    }

    #[test]
    fn report_is_consistent() {
        let l = EffectiveLinks { direct: 2.0, boost: 5.0, relay_cap: 6.0, decode12: 7.0, ru2_signal: 4.0, ru2_interf: 1.0 };
        let p = params(0.3);
        let r = evaluate(&p, &l, true, true, Diagnostics::default());
        assert!((r.expected_ru1 - (0.3 * r.rate_if_help + 0.7 * r.rate_if_no_help)).abs() < 1e-12);
        assert_eq!(r.expected_ru1, expected_rate_ru1(&p, &l, true));
        assert_eq!(r.ru2, rate_ru2(&l, true));
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(1.5, 0.5, 1.0, 1.0, 1.0).is_err());
        assert!(SystemParams::new(0.5, -0.1, 1.0, 1.0, 1.0).is_err());
        assert!(SystemParams::new(0.5, 0.1, 0.0, 1.0, 1.0).is_err());
    }

    fn arb_links() -> impl Strategy<Value = EffectiveLinks> {
        (0.0..1e4f64, 0.0..1e4f64, 0.0..1e4f64, 0.0..1e4f64, 0.0..1e4f64, 0.0..1e4f64).prop_map(
            |(direct, boost, relay_cap, decode12, ru2_signal, ru2_interf)| EffectiveLinks {
                direct,
                boost,
                relay_cap,
                decode12,
                ru2_signal,
                ru2_interf,
            },
        )
    }

    proptest! {
        #[test]
        fn sic_never_below_nsic(l in arb_links()) {
            prop_assert!(rate_ru2(&l, true) >= rate_ru2(&l, false));
        }

        #[test]
        fn rates_finite_and_nonnegative(l in arb_links(), alpha in 0.0..=1.0f64) {
            let p = params(alpha);
            for v in [q_tu1(&l), rate_ru2(&l, true), rate_ru2(&l, false),
                      expected_rate_ru1(&p, &l, true), expected_rate_ru1(&p, &l, false)] {
                prop_assert!(v.is_finite() && v >= 0.0);
            }
        }

        #[test]
        fn expected_rate_monotone_in_boost_and_cap(l in arb_links(), alpha in 0.0..=1.0f64,
                                                   db in 0.0..100.0f64, dc in 0.0..100.0f64) {
            let p = params(alpha);
            let base = expected_rate_ru1(&p, &l, true);
            let more_boost = EffectiveLinks { boost: l.boost + db, ..l };
            let more_cap = EffectiveLinks { relay_cap: l.relay_cap + dc, ..l };
            prop_assert!(expected_rate_ru1(&p, &more_boost, true) >= base);
            prop_assert!(expected_rate_ru1(&p, &more_cap, true) >= base);
        }

        #[test]
        fn expected_rate_monotone_in_alpha_when_helping(l in arb_links(), a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
            prop_assume!(q_tu1(&l) >= direct_rate(&l));
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(expected_rate_ru1(&params(hi), &l, true) >= expected_rate_ru1(&params(lo), &l, true));
        }
    }
}
