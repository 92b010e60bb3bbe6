use rand::Rng;
use rand_distr::{Cauchy, Distribution, Normal};

use super::EtaModel;
use crate::error::{Error, Result};
use crate::io::load_trace;

enum Source {
    Constant(f64),
    Gaussian(Normal<f64>, f64, f64),
    Cauchy(Cauchy<f64>, f64, f64),
    Trace { values: Vec<f64>, cursor: usize },
}

/// Draws opportunity values. Distribution samples are clipped to
/// `[clip_lo, clip_hi]`; traces replay in file order and wrap around.
pub struct EtaSampler {
    source: Source,
}

impl EtaSampler {
    /// Builds a sampler, reading the trace file for [`EtaModel::Trace`].
    pub fn new(model: &EtaModel) -> Result<Self> {
        let source = match *model {
            EtaModel::Constant(v) => Source::Constant(v),
            EtaModel::Gaussian { mean, std_dev, clip_lo, clip_hi } => Source::Gaussian(
                Normal::new(mean, std_dev).map_err(|e| Error::invalid("eta_sigma", e.to_string()))?,
                clip_lo,
                clip_hi,
            ),
            EtaModel::Cauchy { median, scale, clip_lo, clip_hi } => Source::Cauchy(
                Cauchy::new(median, scale).map_err(|e| Error::invalid("cauchy_gamma", e.to_string()))?,
                clip_lo,
                clip_hi,
            ),
            EtaModel::Trace { ref path } => return Self::from_trace(load_trace(path)?.values, path),
        };
        Ok(EtaSampler { source })
    }

    pub fn from_trace(values: Vec<f64>, origin: &std::path::Path) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyTrace(origin.to_path_buf()));
        }
        Ok(EtaSampler { source: Source::Trace { values, cursor: 0 } })
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        match &mut self.source {
            Source::Constant(v) => *v,
            Source::Gaussian(d, lo, hi) => clip(d.sample(rng), *lo, *hi),
            Source::Cauchy(d, lo, hi) => clip(d.sample(rng), *lo, *hi),
            Source::Trace { values, cursor } => {
                let v = values[*cursor];
                *cursor = (*cursor + 1) % values.len();
                v
            }
        }
    }
}

fn clip(v: f64, lo: f64, hi: f64) -> f64 {
    if v.is_nan() {
        lo
    } else {
        v.clamp(lo, hi)
    }
}
