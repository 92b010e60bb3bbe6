//! Deterministic simulator of token-number transaction ordering as a defence
//! against frontrunning.
//!
//! The core is generic over the currency type. [`Fixed4`] is the default
//! and keeps runs bit-reproducible; `f64` is used where wealth grows past
//! what fixed point can hold, such as the many-epoch bounds checks.

pub mod agents;
pub mod analysis;
pub mod engine;
pub mod error;
pub mod io;
pub mod num;
pub mod protocol;

pub use error::{Error, Result};
pub use num::{Currency, Fixed4};

/// Default currency.
pub type Amount = Fixed4;
pub type Ledger = protocol::Ledger<Amount>;
pub type MetricsSeries = engine::MetricsSeries<Amount>;
pub type RoundRecord = engine::RoundRecord<Amount>;
pub type EpochBoundary = engine::EpochBoundary<Amount>;
pub type World = engine::World<Amount>;
pub type SummaryStats = io::SummaryStats<Amount>;
pub type BoundParams = analysis::BoundParams<f64>;
pub type BoundsReport = analysis::BoundsReport<f64>;
