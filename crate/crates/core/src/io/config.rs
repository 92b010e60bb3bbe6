use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::engine::{BoundSettings, EtaModel, Mode, ScenarioConfig};
use crate::error::{Error, Result};

/// Every key accepted in a config file.
pub const CONFIG_KEYS: &[&str] = &[
    "mode",
    "rounds",
    "w_user0",
    "w_adv0",
    "y",
    "tau",
    "f",
    "eta_model",
    "eta",
    "eta_mu",
    "eta_sigma",
    "cauchy_x0",
    "cauchy_gamma",
    "clip_lo",
    "clip_hi",
    "trace_path",
    "p_mev",
    "fatal_fraction",
    "refund",
    "expiry_rounds",
    "block_cap",
    "seed",
    "eta_pivot",
    "fatal_value_cap",
    "sigma",
    "epsilon",
    "tail_c",
];

/// Keys whose values are numbers, and so may be swept.
pub const NUMERIC_KEYS: &[&str] = &[
    "rounds",
    "w_user0",
    "w_adv0",
    "y",
    "tau",
    "f",
    "eta",
    "eta_mu",
    "eta_sigma",
    "cauchy_x0",
    "cauchy_gamma",
    "clip_lo",
    "clip_hi",
    "p_mev",
    "fatal_fraction",
    "expiry_rounds",
    "block_cap",
    "seed",
    "eta_pivot",
    "fatal_value_cap",
    "sigma",
    "epsilon",
    "tail_c",
];

const GAUSSIAN_MEAN: f64 = 100.0;
const GAUSSIAN_STD: f64 = 20.0;
const CAUCHY_MEDIAN: f64 = 100.0;
const CAUCHY_SCALE: f64 = 20.0;
const CLIP_LO: f64 = 1.0;
const CLIP_HI: f64 = 1000.0;

/// Raw `key=value` pairs of a config file, before interpretation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigMap {
    values: BTreeMap<String, String>,
    /// Directory that relative trace paths are resolved against.
    base_dir: Option<PathBuf>,
}

impl ConfigMap {
    /// Parses the flat format: one `key=value` per line, `#` starts a comment,
    /// blank lines are ignored, later assignments win.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Parse { line: i + 1 })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Parse { line: i + 1 });
            }
            if !CONFIG_KEYS.contains(&key) {
                return Err(Error::UnknownKey { key: key.to_string(), line: i + 1 });
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(ConfigMap { values, base_dir: None })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Overrides one key, as a sweep does.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::UnknownKey { key: key.to_string(), line: 0 });
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    fn num<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e: T::Err| Error::invalid(key, format!("`{v}`: {e}"))),
        }
    }

    fn opt_num(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|_| self.num(key, 0.0)).transpose()
    }

    /// Interprets the pairs, filling in defaults, and validates the result.
    pub fn build(&self) -> Result<ScenarioConfig> {
        let d = ScenarioConfig::default();
        let mode = match self.get("mode") {
            Some(m) => m.parse::<Mode>()?,
            None => d.mode,
        };
        let y = self.num("y", d.y)?;
        let clip_lo = self.num("clip_lo", CLIP_LO)?;
        let clip_hi = self.num("clip_hi", CLIP_HI)?;
        let eta_model = match self.get("eta_model").unwrap_or("constant") {
            "constant" => EtaModel::Constant(self.num("eta", 100.0)?),
            "gaussian" => EtaModel::Gaussian {
                mean: self.num("eta_mu", GAUSSIAN_MEAN)?,
                std_dev: self.num("eta_sigma", GAUSSIAN_STD)?,
                clip_lo,
                clip_hi,
            },
            "cauchy" => EtaModel::Cauchy {
                median: self.num("cauchy_x0", CAUCHY_MEDIAN)?,
                scale: self.num("cauchy_gamma", CAUCHY_SCALE)?,
                clip_lo,
                clip_hi,
            },
            "trace" => {
                let raw =
                    self.get("trace_path").ok_or_else(|| Error::invalid("trace_path", "required for a trace model"))?;
                let path = PathBuf::from(raw);
                let path = match &self.base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path,
                };
                EtaModel::Trace { path }
            }
            other => return Err(Error::invalid("eta_model", format!("unknown model `{other}`"))),
        };
        let bounds = BoundSettings {
            sigma: self.num("sigma", d.bounds.sigma)?,
            epsilon: self.num("epsilon", d.bounds.epsilon)?,
            tail_c: self.opt_num("tail_c")?,
        };
        let config = ScenarioConfig {
            mode,
            rounds: self.num("rounds", d.rounds)?,
            w_user0: self.num("w_user0", d.w_user0)?,
            w_adv0: self.num("w_adv0", d.w_adv0)?,
            y,
            // the spend threshold defaults to the token price
            tau: self.num("tau", y)?,
            f: self.num("f", d.f)?,
            eta_model,
            p_mev: self.num("p_mev", d.p_mev)?,
            fatal_fraction: self.num("fatal_fraction", d.fatal_fraction)?,
            refund: self.num("refund", d.refund)?,
            expiry_rounds: self.num("expiry_rounds", d.expiry_rounds)?,
            block_cap: self.num("block_cap", d.block_cap)?,
            seed: self.num("seed", d.seed)?,
            eta_pivot: self.num("eta_pivot", d.eta_pivot)?,
            fatal_value_cap: self.num("fatal_value_cap", d.fatal_value_cap)?,
            bounds,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Reads the raw pairs of a config file.
pub fn load_config_map(path: &Path) -> Result<ConfigMap> {
    let text = std::fs::read_to_string(path)?;
    let mut map = ConfigMap::parse(&text)?;
    map.base_dir = path.parent().map(Path::to_path_buf);
    Ok(map)
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    load_config_map(path)?.build()
}
