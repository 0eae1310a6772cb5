//! Channel realizations and dB conversions.
//!
//! Every trial owns an independent ChaCha stream selected by `(seed, trial)`,
//! so a Monte Carlo run gives the same draws whatever order or thread the
//! trials are evaluated on. Draws are taken at unit variance and scaled
//! afterwards, which lets a sweep over one channel's average gain reuse the
//! same underlying randomness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn default_noise_power() -> f64 {
    1.0
}

/// Antenna counts, average element gains (dB) and transmit SNRs (dB).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub n1: usize,
    pub n2: usize,
    #[serde(rename = "var_H0")]
    pub var_h0: f64,
    pub var_h1: f64,
    pub var_h2: f64,
    pub var_h12: f64,
    pub var_h21: f64,
    #[serde(default = "default_noise_power")]
    pub noise_power: f64,
    #[serde(rename = "rho1_dB")]
    pub rho1_db: f64,
    #[serde(rename = "rho2_dB")]
    pub rho2_db: f64,
}

impl ChannelConfig {
    /// Average gains used throughout the simulation section:
    /// {H0, h1, h2, h12, h21} = {−35, −45, −30, −25, −25} dB.
    pub fn standard(n1: usize, n2: usize, rho1_db: f64, rho2_db: f64) -> Self {
        Self {
            n1,
            n2,
            var_h0: -35.0,
            var_h1: -45.0,
            var_h2: -30.0,
            var_h12: -25.0,
            var_h21: -25.0,
            noise_power: 1.0,
            rho1_db,
            rho2_db,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |path: &str, message: String| Error::Config { path: path.to_string(), message };
        if self.n1 == 0 || self.n1 > 8 {
            return Err(cfg("channel.n1", format!("must be in 1..=8, got {}", self.n1)));
        }
        if self.n2 == 0 || self.n2 > 8 {
            return Err(cfg("channel.n2", format!("must be in 1..=8, got {}", self.n2)));
        }
        for (name, v) in [
            ("channel.var_H0", self.var_h0),
            ("channel.var_h1", self.var_h1),
            ("channel.var_h2", self.var_h2),
            ("channel.var_h12", self.var_h12),
            ("channel.var_h21", self.var_h21),
            ("channel.rho1_dB", self.rho1_db),
            ("channel.rho2_dB", self.rho2_db),
        ] {
            if !v.is_finite() {
                return Err(cfg(name, "must be finite".into()));
            }
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(cfg("channel.noise_power", format!("must be positive, got {}", self.noise_power)));
        }
        Ok(())
    }

    pub fn p1(&self) -> f64 {
        db_to_linear(self.rho1_db) * self.noise_power
    }

    pub fn p2(&self) -> f64 {
        db_to_linear(self.rho2_db) * self.noise_power
    }
}

/// One realization of every channel in the two-pair network.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    /// Tu1 → Tu2, N2 × N1.
    pub h0: CMat,
    /// Tu1 → Ru1.
    pub h1: CVec,
    /// Tu1 → Ru2.
    pub h12: CVec,
    /// Tu2 → Ru2.
    pub h2: CVec,
    /// Tu2 → Ru1.
    pub h21: CVec,
    pub noise_power: f64,
}

impl ChannelSet {
    pub fn new(h0: CMat, h1: CVec, h12: CVec, h2: CVec, h21: CVec, noise_power: f64) -> Result<Self> {
        let (n2, n1) = (h0.rows(), h0.cols());
        if h1.dim() != n1 || h12.dim() != n1 || h2.dim() != n2 || h21.dim() != n2 {
            return Err(Error::InvalidInput("channel dimensions are inconsistent".into()));
        }
        if !(noise_power > 0.0) {
            return Err(Error::InvalidInput("noise power must be positive".into()));
        }
        if ![&h1, &h12, &h2, &h21].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("channel has non-finite entries".into()));
        }
        Ok(Self { h0, h1, h12, h2, h21, noise_power })
    }

    pub fn n1(&self) -> usize {
        self.h0.cols()
    }

    pub fn n2(&self) -> usize {
        self.h0.rows()
    }

    /// Largest Ru2 rate, reached by full-power MRT from Tu2 with no relaying.
    pub fn q_max(&self, p2: f64) -> f64 {
        0.5 * (1.0 + p2 * self.h2.norm_sqr() / self.noise_power).log2()
    }
}

/// Unit-variance draw of every channel, scaled into a [`ChannelSet`] later.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardDraw {
    h0: CMat,
    h1: CVec,
    h12: CVec,
    h2: CVec,
    h21: CVec,
}

impl StandardDraw {
    pub fn scaled(&self, config: &ChannelConfig) -> ChannelSet {
        let s = |db: f64| db_to_linear(db).sqrt();
        ChannelSet {
            h0: self.h0.scale(s(config.var_h0)),
            h1: self.h1.scale(s(config.var_h1)),
            h12: self.h12.scale(s(config.var_h12)),
            h2: self.h2.scale(s(config.var_h2)),
            h21: self.h21.scale(s(config.var_h21)),
            noise_power: config.noise_power,
        }
    }
}

/// Random stream private to one trial.
pub struct TrialStream {
    rng: ChaCha8Rng,
}

impl TrialStream {
    pub fn new(seed: u64, trial_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial_index);
        Self { rng }
    }

    fn cn(&mut self) -> C64 {
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    fn cvec(&mut self, n: usize) -> CVec {
        CVec::from_entries((0..n).map(|_| self.cn()).collect())
    }

    /// Next unit-variance realization in this trial's stream.
    pub fn draw_standard(&mut self, n1: usize, n2: usize) -> StandardDraw {
        let h0 = CMat::from_fn(n2, n1, |_, _| self.cn());
        let h1 = self.cvec(n1);
        let h12 = self.cvec(n1);
        let h2 = self.cvec(n2);
        let h21 = self.cvec(n2);
        StandardDraw { h0, h1, h12, h2, h21 }
    }

    pub fn draw(&mut self, config: &ChannelConfig) -> ChannelSet {
        self.draw_standard(config.n1, config.n2).scaled(config)
    }
}

/// First realization of trial `trial_index` under `seed`.
pub fn sample(config: &ChannelConfig, seed: u64, trial_index: u64) -> Result<ChannelSet> {
    config.validate()?;
    Ok(TrialStream::new(seed, trial_index).draw(config))
}
