//! Solver output and an independent constraint check that re-derives every
//! rate from the raw beamformers.

use std::fmt;

use serde::Serialize;

use crate::channel::ChannelSet;
use crate::linalg::CVec;
use crate::rate::{self, EffectiveLinks, SystemParams};

/// Antenna configuration implied by (N1, N2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Configuration {
    Siso,
    Miso,
    Simo,
    Mimo,
}

impl Configuration {
    pub fn of(n1: usize, n2: usize) -> Self {
        match (n1 > 1, n2 > 1) {
            (false, false) => Self::Siso,
            (true, false) => Self::Miso,
            (false, true) => Self::Simo,
            (true, true) => Self::Mimo,
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Siso => "SISO",
            Self::Miso => "MISO",
            Self::Simo => "SIMO",
            Self::Mimo => "MIMO",
        };
        f.write_str(s)
    }
}

/// Which argument of the decode-and-forward minimum is active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitingTerm {
    Ratio,
    RelayCap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SubproblemKind {
    pub sic: bool,
    pub limiting: LimitingTerm,
}

impl SubproblemKind {
    /// Enumeration order, which also breaks ties between equal rates.
    pub const ALL: [SubproblemKind; 4] = [
        SubproblemKind { sic: true, limiting: LimitingTerm::Ratio },
        SubproblemKind { sic: true, limiting: LimitingTerm::RelayCap },
        SubproblemKind { sic: false, limiting: LimitingTerm::Ratio },
        SubproblemKind { sic: false, limiting: LimitingTerm::RelayCap },
    ];
}

impl fmt::Display for SubproblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = if self.sic { "sic" } else { "nsic" };
        let term = match self.limiting {
            LimitingTerm::Ratio => "ratio",
            LimitingTerm::RelayCap => "cap",
        };
        write!(f, "{mode}-{term}")
    }
}

/// Beamformers and power split chosen by a solver. `w1` carries power P1 and
/// `w21`/`w22` carry the physical Tu2 powers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Strategy {
    pub configuration: Configuration,
    /// False when relaying cannot raise Ru1's rate and Tu2 serves only Ru2.
    pub cooperate: bool,
    /// Fraction of Tu2's budget spent on relaying, ‖w21‖²/P2.
    pub beta: f64,
    pub eta: Option<f64>,
    pub lambda: Option<f64>,
    pub w1: CVec,
    pub w21: CVec,
    pub w22: CVec,
    pub sic: bool,
    pub subproblem: Option<SubproblemKind>,
}

/// Recompute all link terms from the beamformers.
pub fn links_from_vectors(ch: &ChannelSet, w1: &CVec, w21: &CVec, w22: &CVec) -> EffectiveLinks {
    let s2 = ch.noise_power;
    EffectiveLinks {
        direct: ch.h1.gain(w1) / s2,
        boost: ch.h21.gain(w21) / (ch.h21.gain(w22) + s2),
        relay_cap: ch.h0.mul_vec(w1).norm_sqr() / s2,
        decode12: ch.h12.gain(w1) / s2,
        ru2_signal: ch.h2.gain(w22) / s2,
        ru2_interf: ch.h2.gain(w21) / s2,
    }
}

/// Constraint margins of a strategy; every field is nonnegative when feasible.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstraintSlack {
    /// (P1 − ‖w1‖²)/P1.
    pub power1: f64,
    /// (P2 − ‖w21‖² − ‖w22‖²)/P2.
    pub power2: f64,
    /// R_Ru2 − Q in bits/s/Hz.
    pub qos: f64,
    /// Claimed SIC is decodable.
    pub sic_consistent: bool,
}

impl ConstraintSlack {
    pub fn min_slack(&self) -> f64 {
        let sic = if self.sic_consistent { f64::INFINITY } else { f64::NEG_INFINITY };
        self.power1.min(self.power2).min(self.qos).min(sic)
    }
}

pub fn check_constraints(ch: &ChannelSet, params: &SystemParams, s: &Strategy) -> ConstraintSlack {
    let links = links_from_vectors(ch, &s.w1, &s.w21, &s.w22);
    let p2_used = s.w21.norm_sqr() + s.w22.norm_sqr();
    ConstraintSlack {
        power1: (params.p1 - s.w1.norm_sqr()) / params.p1,
        power2: (params.p2 - p2_used) / params.p2,
        qos: rate::rate_ru2(&links, s.sic) - params.q,
        sic_consistent: !s.sic || rate::sic_feasible(&links),
    }
}

/// Expected Ru1 rate re-derived from the vectors, for cross-checking reports.
pub fn expected_rate_from_vectors(ch: &ChannelSet, params: &SystemParams, s: &Strategy) -> f64 {
    let links = links_from_vectors(ch, &s.w1, &s.w21, &s.w22);
    rate::expected_rate_ru1(params, &links, s.cooperate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn configuration_from_antennas() {
        assert_eq!(Configuration::of(1, 1), Configuration::Siso);
        assert_eq!(Configuration::of(2, 1), Configuration::Miso);
        assert_eq!(Configuration::of(1, 2), Configuration::Simo);
        assert_eq!(Configuration::of(3, 2), Configuration::Mimo);
    }

    #[test]
    fn kind_order_and_names() {
        let names: Vec<String> = SubproblemKind::ALL.iter().map(|k| k.to_string()).collect();
        assert_eq!(names, ["sic-ratio", "sic-cap", "nsic-ratio", "nsic-cap"]);
    }
}
