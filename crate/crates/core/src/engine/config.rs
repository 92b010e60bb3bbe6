use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::agents::ProtocolMode;
use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Masquerade,
    StatusQuo,
    Ideal,
    /// Masquerade with token purchases and spends separated into epochs.
    Phased,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Masquerade => "masquerade",
            Mode::StatusQuo => "status-quo",
            Mode::Ideal => "ideal",
            Mode::Phased => "phased",
        }
    }

    /// Settlement rules used by this mode.
    pub fn protocol(self) -> ProtocolMode {
        match self {
            Mode::Masquerade | Mode::Phased => ProtocolMode::Masquerade,
            Mode::StatusQuo => ProtocolMode::StatusQuo,
            Mode::Ideal => ProtocolMode::Ideal,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "masquerade" => Ok(Mode::Masquerade),
            "status-quo" | "status_quo" | "statusquo" => Ok(Mode::StatusQuo),
            "ideal" => Ok(Mode::Ideal),
            "phased" => Ok(Mode::Phased),
            other => Err(Error::invalid("mode", format!("unknown mode `{other}`"))),
        }
    }
}

/// Distribution of per-opportunity MEV value.
#[derive(Clone, Debug, PartialEq)]
pub enum EtaModel {
    Constant(f64),
    Gaussian {
        mean: f64,
        std_dev: f64,
        clip_lo: f64,
        clip_hi: f64,
    },
    Cauchy {
        median: f64,
        scale: f64,
        clip_lo: f64,
        clip_hi: f64,
    },
    /// Values replayed from a CSV file, cycling when exhausted.
    Trace {
        path: PathBuf,
    },
}

impl EtaModel {
    pub fn kind(&self) -> &'static str {
        match self {
            EtaModel::Constant(_) => "constant",
            EtaModel::Gaussian { .. } => "gaussian",
            EtaModel::Cauchy { .. } => "cauchy",
            EtaModel::Trace { .. } => "trace",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        !matches!(self, EtaModel::Constant(_))
    }
}

/// Analysis-only parameters that the wealth bounds need on top of the
/// scenario itself.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundSettings {
    pub sigma: f64,
    pub epsilon: f64,
    /// Tail-surplus coefficient; `None` picks the smallest admissible value.
    pub tail_c: Option<f64>,
}

impl Default for BoundSettings {
    fn default() -> Self {
        BoundSettings { sigma: 0.25, epsilon: 0.02, tail_c: None }
    }
}

/// Full parameterization of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub rounds: u64,
    pub w_user0: f64,
    pub w_adv0: f64,
    /// Token price.
    pub y: f64,
    /// Spend threshold.
    pub tau: f64,
    /// Fraction of an opportunity lost to a successful frontrun.
    pub f: f64,
    pub eta_model: EtaModel,
    /// Probability that a round offers an MEV opportunity.
    pub p_mev: f64,
    /// Probability that an opportunity is fatal when frontrun.
    pub fatal_fraction: f64,
    pub refund: bool,
    /// Token lifetime in rounds; 0 never expires.
    pub expiry_rounds: u64,
    /// Tokenized transactions per block; 0 is unbounded.
    pub block_cap: usize,
    pub seed: u64,
    pub eta_pivot: f64,
    pub fatal_value_cap: f64,
    pub bounds: BoundSettings,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            mode: Mode::Masquerade,
            rounds: 10_000,
            w_user0: 1000.0,
            w_adv0: 500.0,
            y: 80.0,
            tau: 80.0,
            f: 0.8,
            eta_model: EtaModel::Constant(100.0),
            p_mev: 0.5,
            fatal_fraction: 0.0,
            refund: true,
            expiry_rounds: 0,
            block_cap: 0,
            seed: 0,
            eta_pivot: 100.0,
            fatal_value_cap: 100.0,
            bounds: BoundSettings::default(),
        }
    }
}

fn check(ok: bool, key: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(key, reason))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        check(self.rounds > 0, "rounds", "must be positive")?;
        check(self.y > 0.0 && self.y.is_finite(), "y", "must be positive")?;
        check(self.tau > 0.0 && self.tau.is_finite(), "tau", "must be positive")?;
        check((0.0..=1.0).contains(&self.f), "f", "must lie in [0, 1]")?;
        check((0.0..=1.0).contains(&self.p_mev), "p_mev", "must lie in [0, 1]")?;
        check((0.0..=1.0).contains(&self.fatal_fraction), "fatal_fraction", "must lie in [0, 1]")?;
        check(self.w_user0 >= 0.0 && self.w_user0.is_finite(), "w_user0", "must be non-negative")?;
        check(self.w_adv0 >= 0.0 && self.w_adv0.is_finite(), "w_adv0", "must be non-negative")?;
        match &self.eta_model {
            EtaModel::Constant(v) => check(*v > 0.0 && v.is_finite(), "eta", "must be positive")?,
            EtaModel::Gaussian { std_dev, clip_lo, clip_hi, mean } => {
                check(mean.is_finite(), "eta_mu", "must be finite")?;
                check(*std_dev > 0.0 && std_dev.is_finite(), "eta_sigma", "must be positive")?;
                check_clip(*clip_lo, *clip_hi)?;
            }
            EtaModel::Cauchy { scale, clip_lo, clip_hi, median } => {
                check(median.is_finite(), "cauchy_x0", "must be finite")?;
                check(*scale > 0.0 && scale.is_finite(), "cauchy_gamma", "must be positive")?;
                check_clip(*clip_lo, *clip_hi)?;
            }
            EtaModel::Trace { .. } => {}
        }
        let b = &self.bounds;
        check(b.sigma > 0.0, "sigma", "must be positive")?;
        check(b.epsilon.is_finite(), "epsilon", "must be finite")?;
        Ok(())
    }

    /// Copy with the seed replaced by `seed ^ index`, as used by fan-out runners.
    pub fn for_scenario(&self, index: u64) -> ScenarioConfig {
        ScenarioConfig { seed: self.seed ^ index, ..self.clone() }
    }

    pub fn ledger_lifetime(&self) -> Option<u128> {
        (self.expiry_rounds > 0).then_some(u128::from(self.expiry_rounds))
    }

    pub fn block_cap(&self) -> Option<usize> {
        (self.block_cap > 0).then_some(self.block_cap)
    }
}

fn check_clip(lo: f64, hi: f64) -> Result<()> {
    check(lo > 0.0, "clip_lo", "must be positive")?;
    check(hi >= lo && hi.is_finite(), "clip_hi", "must be finite and at least clip_lo")
}
