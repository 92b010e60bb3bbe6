use super::{EpochBoundary, EtaModel, MetricsSeries, Mode, RoundRecord, ScenarioConfig};
use crate::error::{Error, Result};
use crate::num::Currency;
use crate::protocol::{ByParty, Round, TokenSet};

/// Output of the phased engine.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasedRun<C> {
    pub series: MetricsSeries<C>,
    pub epochs: Vec<EpochBoundary<C>>,
}

/// Masquerade with purchasing and spending separated.
///
/// Each epoch after the first spends, one per round, every token the user
/// bought at the end of the previous epoch, then closes with a single
/// purchase round in which the adversary buys to capacity first and the user
/// buys down to its threshold. Adversary ids from a purchase round all sit
/// below the user's, so the adversary frontruns with its highest token while
/// it has one and never holds a token above the user's.
struct Phased<C> {
    y: C,
    eta: C,
    f: C,
    tau: C,
    refund: bool,
    liquid: ByParty<C>,
    /// Unspent adversary tokens as ascending inclusive runs.
    adversary_held: Vec<(u128, u128)>,
    /// User tokens from the last purchase round: first id and count.
    user_pending: (u128, u128),
    next_id: u128,
    round: Round,
}

impl<C: Currency> Phased<C> {
    fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let EtaModel::Constant(eta) = config.eta_model else {
            return Err(Error::Unsupported("a stochastic opportunity value in phased mode".into()));
        };
        if config.fatal_fraction > 0.0 {
            return Err(Error::Unsupported("fatal opportunities in phased mode".into()));
        }
        if config.expiry_rounds > 0 || config.block_cap > 0 {
            return Err(Error::Unsupported("token expiry or a block cap in phased mode".into()));
        }
        Ok(Phased {
            y: C::from_f64_lossy(config.y),
            eta: C::from_f64_lossy(eta),
            f: C::from_f64_lossy(config.f),
            tau: C::from_f64_lossy(config.tau),
            refund: config.refund,
            liquid: ByParty::new(C::from_f64_lossy(config.w_user0), C::from_f64_lossy(config.w_adv0)),
            adversary_held: Vec::new(),
            user_pending: (1, 0),
            next_id: 1,
            round: 0,
        })
    }

    fn adversary_count(&self) -> u128 {
        self.adversary_held.iter().map(|&(s, e)| e - s + 1).sum()
    }

    fn totals(&self) -> ByParty<C> {
        let user_locked = self.y * C::from_count(self.user_pending.1);
        let adversary_locked = self.y * C::from_count(self.adversary_count());
        ByParty::new(self.liquid.user + user_locked, self.liquid.adversary + adversary_locked)
    }

    /// Drops the `n` highest adversary tokens.
    fn take_adversary_top(&mut self, mut n: u128) {
        while n > 0 {
            let (s, e) = self.adversary_held.last_mut().expect("adversary holds enough tokens");
            let len = *e - *s + 1;
            if len <= n {
                self.adversary_held.pop();
                n -= len;
            } else {
                *e -= n;
                n = 0;
            }
        }
    }

    /// Plays `n` spend rounds at once, all frontrun or none.
    fn spend(&mut self, n: u128, frontrun: bool) {
        if n == 0 {
            return;
        }
        let count = C::from_count(n);
        let refund = if self.refund { self.y } else { C::zero() };
        let stolen = self.f * self.eta;
        if frontrun {
            self.take_adversary_top(n);
            self.liquid.user += count * (self.eta - stolen + refund);
            self.liquid.adversary += count * (stolen + refund);
        } else {
            self.liquid.user += count * (self.eta + refund);
        }
        self.user_pending.0 += n;
        self.user_pending.1 -= n;
        self.round += n;
    }

    /// One purchase round. Returns the runs bought by the user and the adversary.
    fn purchase(&mut self) -> ByParty<TokenSet> {
        self.round += 1;
        let a = self.liquid.adversary.units_of(self.y);
        let floor = if self.tau > self.y { self.tau } else { self.y };
        let u = (self.liquid.user - floor).ceil_units_of(self.y);
        self.liquid.adversary -= self.y * C::from_count(a);
        self.liquid.user -= self.y * C::from_count(u);
        let adversary = TokenSet::from_run(self.next_id, a);
        if a > 0 {
            self.adversary_held.push((self.next_id, self.next_id + a - 1));
        }
        self.next_id += a;
        let user = TokenSet::from_run(self.next_id, u);
        self.user_pending = (self.next_id, u);
        self.next_id += u;
        ByParty::new(user, adversary)
    }

    fn record(&self, mev_made: bool, frontrun: bool, bought: (u128, u128), epoch: u64) -> RoundRecord<C> {
        let totals = self.totals();
        RoundRecord {
            round: self.round,
            w_u_liquid: self.liquid.user,
            w_u_total: totals.user,
            w_a_liquid: self.liquid.adversary,
            w_a_total: totals.adversary,
            mev_made,
            frontrun,
            backrun: false,
            fatal: false,
            tokens_bought_u: bought.0,
            tokens_bought_a: bought.1,
            epoch,
        }
    }

    fn boundary(
        &self,
        index: u64,
        start_round: Round,
        bought: ByParty<TokenSet>,
        user_mev: u128,
        frontruns: u128,
    ) -> EpochBoundary<C> {
        let totals = self.totals();
        EpochBoundary {
            index,
            start_round,
            end_round: self.round,
            user_tokens: bought.user,
            adversary_tokens: bought.adversary,
            user_wealth: totals.user,
            adversary_wealth: totals.adversary,
            terminal: false,
            user_mev,
            frontruns,
        }
    }
}

/// Runs `config.rounds` rounds of the phased engine, one record per round.
pub fn run_phased<C: Currency>(config: &ScenarioConfig) -> Result<PhasedRun<C>> {
    let mut p = Phased::<C>::new(config)?;
    let budget = u128::from(config.rounds);
    let mut series = MetricsSeries::new(Mode::Phased, p.totals());
    let mut epochs = Vec::new();
    let mut epoch = 0u64;

    while p.round < budget {
        let start = p.round + 1;
        let n_u = p.user_pending.1;
        let attacks = n_u.min(p.adversary_count());
        let mut user_mev = 0;
        for k in 0..n_u {
            if p.round == budget {
                break;
            }
            let frontrun = k < attacks;
            p.spend(1, frontrun);
            user_mev += 1;
            series.push(p.record(true, frontrun, (0, 0), epoch));
        }
        let frontruns = user_mev.min(attacks);
        if p.round == budget {
            let mut b = p.boundary(epoch, start, ByParty::default(), user_mev, frontruns);
            b.terminal = true;
            epochs.push(b);
            break;
        }
        let bought = p.purchase();
        let counts = (bought.user.len(), bought.adversary.len());
        series.push(p.record(false, false, counts, epoch));
        let stalled = n_u == 0 && counts == (0, 0) && epoch > 0;
        epochs.push(p.boundary(epoch, start, bought, user_mev, frontruns));
        if stalled {
            break;
        }
        epoch += 1;
    }
    Ok(PhasedRun { series, epochs })
}

/// Runs the phased engine for `count` complete epochs without per-round
/// records. Spend phases are applied in bulk, so epochs spanning far more
/// rounds than could be simulated one by one stay cheap.
pub fn run_phased_epochs<C: Currency>(config: &ScenarioConfig, count: usize) -> Result<Vec<EpochBoundary<C>>> {
    let mut p = Phased::<C>::new(config)?;
    let mut epochs = Vec::with_capacity(count);
    for index in 0..count as u64 {
        let start = p.round + 1;
        let n_u = p.user_pending.1;
        let attacks = n_u.min(p.adversary_count());
        p.spend(attacks, true);
        p.spend(n_u - attacks, false);
        let bought = p.purchase();
        epochs.push(p.boundary(index, start, bought, n_u, attacks));
    }
    Ok(epochs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Fixed4;

    fn fx(v: i64) -> Fixed4 {
        Fixed4::from_int(v)
    }

    fn cfg() -> ScenarioConfig {
        ScenarioConfig { mode: Mode::Phased, rounds: 200, ..Default::default() }
    }

    #[test]
    fn first_purchase_phase_counts() {
        let e = run_phased_epochs::<Fixed4>(&cfg(), 1).unwrap();
        // user ceil((1000-80)/80) = 12, adversary floor(500/80) = 6
        assert_eq!(e[0].user_tokens, TokenSet::from_run(7, 12));
        assert_eq!(e[0].adversary_tokens, TokenSet::from_run(1, 6));
        assert_eq!((e[0].user_wealth, e[0].adversary_wealth), (fx(1000), fx(500)));
        assert_eq!((e[0].start_round, e[0].end_round), (1, 1));
    }

    #[test]
    fn second_epoch_by_hand() {
        let e = run_phased_epochs::<Fixed4>(&cfg(), 2).unwrap();
        // 12 spends, the first 6 frontrun: user +6*20 +6*100 +12*80 refund
        assert_eq!(e[1].frontruns, 6);
        assert_eq!(e[1].user_mev, 12);
        assert_eq!(e[1].user_wealth, fx(1000 + 6 * 20 + 6 * 100));
        assert_eq!(e[1].adversary_wealth, fx(500 + 6 * 80));
        assert_eq!(e[1].end_round, 1 + 12 + 1);
    }

    #[test]
    fn bulk_and_per_round_agree() {
        let run = run_phased::<Fixed4>(&cfg()).unwrap();
        let complete: Vec<_> = run.epochs.iter().filter(|e| !e.terminal).cloned().collect();
        assert!(complete.len() >= 3);
        let bulk = run_phased_epochs::<Fixed4>(&cfg(), complete.len()).unwrap();
        assert_eq!(bulk, complete);
        assert_eq!(run.series.records.len(), 200);
        assert_eq!(run.series.records.last().unwrap().round, 200);
    }

    #[test]
    fn records_carry_epoch_indices() {
        let run = run_phased::<Fixed4>(&cfg()).unwrap();
        for e in &run.epochs {
            for r in e.start_round..=e.end_round {
                assert_eq!(run.series.records[(r - 1) as usize].epoch, e.index);
            }
        }
    }

    #[test]
    fn zero_wealth_adversary_is_ideal_plus_churn() {
        let c = ScenarioConfig { w_adv0: 0.0, ..cfg() };
        let run = run_phased::<Fixed4>(&c).unwrap();
        assert_eq!(run.series.counters.frontrun, 0);
        let mev = run.series.counters.mev as i64;
        let last = run.series.records.last().unwrap();
        assert_eq!(last.w_u_total, fx(1000 + 100 * mev));
        assert_eq!(last.w_a_total, fx(0));
    }

    #[test]
    fn unsupported_settings_rejected() {
        let c = ScenarioConfig { expiry_rounds: 5, ..cfg() };
        assert!(matches!(run_phased::<Fixed4>(&c), Err(Error::Unsupported(_))));
        let c = ScenarioConfig {
            eta_model: EtaModel::Gaussian { mean: 100.0, std_dev: 20.0, clip_lo: 1.0, clip_hi: 1000.0 },
            ..cfg()
        };
        assert!(matches!(run_phased::<Fixed4>(&c), Err(Error::Unsupported(_))));
    }

    #[test]
    fn bulk_handles_astronomical_epochs() {
        let c = ScenarioConfig { w_user0: 10_000.0, w_adv0: 2_000.0, y: 10.0, tau: 100.0, f: 0.1, ..cfg() };
        let e = run_phased_epochs::<f64>(&c, 31).unwrap();
        assert!(e[30].user_wealth > 1e30);
        assert!(e[30].user_tokens.run_count() == 1);
    }
}
