//! Round loop, scenario modes and epoch bookkeeping.

mod config;
mod epochs;
mod eta;
mod phased;
mod world;

pub use config::{BoundSettings, EtaModel, Mode, ScenarioConfig};
pub use epochs::{detect_epochs, EpochBoundary};
pub use eta::EtaSampler;
pub use phased::{run_phased, run_phased_epochs, PhasedRun};
pub use world::{ContinuousRun, World};

use crate::error::Result;
use crate::num::Currency;
use crate::protocol::{ByParty, Round};

/// State of both parties at the end of one round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord<C> {
    pub round: Round,
    pub w_u_liquid: C,
    pub w_u_total: C,
    pub w_a_liquid: C,
    pub w_a_total: C,
    pub mev_made: bool,
    pub frontrun: bool,
    pub backrun: bool,
    pub fatal: bool,
    pub tokens_bought_u: u128,
    pub tokens_bought_a: u128,
    pub epoch: u64,
}

/// Streaming tallies kept alongside the per-round records.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub mev: u128,
    pub frontrun: u128,
    pub backrun: u128,
    pub fatal: u128,
    /// Tokenized transactions dropped by the block cap.
    pub dropped: u128,
}

impl Counters {
    pub(crate) fn observe<C>(&mut self, r: &RoundRecord<C>) {
        self.mev += u128::from(r.mev_made);
        self.frontrun += u128::from(r.frontrun);
        self.backrun += u128::from(r.backrun);
        self.fatal += u128::from(r.fatal && r.frontrun);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsSeries<C> {
    pub mode: Mode,
    pub initial: ByParty<C>,
    pub records: Vec<RoundRecord<C>>,
    pub counters: Counters,
}

impl<C: Currency> MetricsSeries<C> {
    pub fn new(mode: Mode, initial: ByParty<C>) -> Self {
        MetricsSeries { mode, initial, records: Vec::new(), counters: Counters::default() }
    }

    pub(crate) fn push(&mut self, r: RoundRecord<C>) {
        self.counters.observe(&r);
        self.records.push(r);
    }

    /// Total wealth per party after the last round.
    pub fn final_wealth(&self) -> ByParty<C> {
        self.records.last().map(|r| ByParty::new(r.w_u_total, r.w_a_total)).unwrap_or(self.initial)
    }
}

/// Runs one scenario to completion.
pub fn run_scenario<C: Currency>(config: &ScenarioConfig) -> Result<MetricsSeries<C>> {
    match config.mode {
        Mode::Phased => Ok(run_phased(config)?.series),
        _ => Ok(World::new(config)?.run()?.series),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Fixed4;

    fn baseline(mode: Mode) -> ScenarioConfig {
        ScenarioConfig { mode, rounds: 10, p_mev: 1.0, f: 0.8, w_user0: 1000.0, ..Default::default() }
    }

    #[test]
    fn status_quo_closed_form() {
        let s = run_scenario::<Fixed4>(&baseline(Mode::StatusQuo)).unwrap();
        for (i, r) in s.records.iter().enumerate() {
            let k = i as i64 + 1;
            assert_eq!(r.w_u_total, Fixed4::from_int(1000 + 20 * k));
            assert_eq!(r.w_a_total, Fixed4::from_int(500 + 80 * k));
        }
        assert_eq!(s.final_wealth().user, Fixed4::from_int(1200));
    }

    #[test]
    fn ideal_closed_form() {
        let s = run_scenario::<Fixed4>(&baseline(Mode::Ideal)).unwrap();
        assert_eq!(s.final_wealth(), ByParty::new(Fixed4::from_int(2000), Fixed4::from_int(500)));
        assert!(s.records.iter().all(|r| r.tokens_bought_u == 0 && r.tokens_bought_a == 0 && !r.frontrun));
    }
}
