use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{detect_epochs, EpochBoundary, EtaModel, EtaSampler, MetricsSeries, Mode, RoundRecord, ScenarioConfig};
use crate::agents::{
    adversary_decide, settle_mev, user_decide, AdversaryVariant, Opportunity, OpportunityKind, PolicyParams,
    ProtocolMode, SettleInput, UserVariant,
};
use crate::error::{Error, Result};
use crate::num::Currency;
use crate::protocol::{build_block, ByParty, Ledger, LedgerRules, Party, Round, TokenId, Transaction, TxKind};

/// Tracks epoch boundaries while the simulation runs.
#[derive(Clone, Debug)]
struct EpochTracker {
    index: u64,
    /// First token id issued in the current epoch.
    first_token: TokenId,
}

/// Round-by-round simulation state for the continuous modes.
pub struct World<C> {
    config: ScenarioConfig,
    protocol: ProtocolMode,
    ledger: Ledger<C>,
    params: PolicyParams<C>,
    f: C,
    user_variant: UserVariant,
    adversary_variant: AdversaryVariant<C>,
    rng: ChaCha8Rng,
    sampler: EtaSampler,
    round: Round,
    epoch: EpochTracker,
    series: MetricsSeries<C>,
}

/// Output of a finished continuous run.
pub struct ContinuousRun<C> {
    pub series: MetricsSeries<C>,
    pub ledger: Ledger<C>,
    pub tau: C,
}

impl<C: Currency> ContinuousRun<C> {
    pub fn epochs(&self) -> Vec<EpochBoundary<C>> {
        detect_epochs(&self.series, &self.ledger, self.tau)
    }
}

impl<C: Currency> World<C> {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        if config.mode == Mode::Phased {
            return Err(Error::Unsupported("phased mode in the round-by-round engine".into()));
        }
        let sampler = EtaSampler::new(&config.eta_model)?;
        let y = C::from_f64_lossy(config.y);
        let rules = LedgerRules {
            token_cost: y,
            refund: config.refund,
            lifetime: config.ledger_lifetime(),
            block_cap: config.block_cap(),
        };
        let ledger = Ledger::new(rules, C::from_f64_lossy(config.w_user0), C::from_f64_lossy(config.w_adv0));
        let params = PolicyParams {
            token_cost: y,
            threshold: C::from_f64_lossy(config.tau),
            eta_pivot: C::from_f64_lossy(config.eta_pivot),
            fatal_value_cap: C::from_f64_lossy(config.fatal_value_cap),
        };
        let user_variant =
            UserVariant { stochastic: config.eta_model.is_stochastic(), fatal_aware: config.fatal_fraction > 0.0 };
        let adversary_variant = match config.eta_model {
            EtaModel::Constant(_) => AdversaryVariant::Greedy,
            EtaModel::Gaussian { mean, .. } => AdversaryVariant::Lookahead { expected_next: C::from_f64_lossy(mean) },
            _ => AdversaryVariant::Lookahead { expected_next: params.eta_pivot },
        };
        let initial = ByParty::new(ledger.total(Party::User), ledger.total(Party::Adversary));
        Ok(World {
            config: config.clone(),
            protocol: config.mode.protocol(),
            ledger,
            params,
            f: C::from_f64_lossy(config.f),
            user_variant,
            adversary_variant,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            sampler,
            round: 0,
            epoch: EpochTracker { index: 0, first_token: TokenId(1) },
            series: MetricsSeries::new(config.mode, initial),
        })
    }

    pub fn ledger(&self) -> &Ledger<C> {
        &self.ledger
    }

    pub fn round(&self) -> Round {
        self.round
    }

    pub fn series(&self) -> &MetricsSeries<C> {
        &self.series
    }

    /// Draws this round's opportunity. The random stream consumed here does
    /// not depend on the mode, so baselines see the same opportunities.
    fn draw_opportunity(&mut self) -> Option<Opportunity<C>> {
        let arrives = self.rng.random::<f64>() < self.config.p_mev;
        let fatal = self.rng.random::<f64>() < self.config.fatal_fraction;
        if !arrives {
            return None;
        }
        let value = C::from_f64_lossy(self.sampler.sample(&mut self.rng));
        let kind = if fatal { OpportunityKind::Fatal } else { OpportunityKind::Protectable };
        Some(Opportunity { value, kind })
    }

    /// Advances one round and returns its record.
    pub fn step_round(&mut self) -> Result<RoundRecord<C>> {
        self.round += 1;
        let round = self.round;
        let opportunity = self.draw_opportunity();

        let record = match self.protocol {
            ProtocolMode::Masquerade => self.step_masquerade(round, opportunity)?,
            baseline => self.step_baseline(round, baseline, opportunity),
        };
        self.series.push(record.clone());
        Ok(record)
    }

    fn step_baseline(&mut self, round: Round, mode: ProtocolMode, opp: Option<Opportunity<C>>) -> RoundRecord<C> {
        let input = SettleInput {
            mode,
            mev_made: opp.is_some(),
            frontrun: mode == ProtocolMode::StatusQuo,
            backrun: mode == ProtocolMode::StatusQuo,
            eta: opp.map_or(C::zero(), |o| o.value),
            f: self.f,
            token_cost: self.params.token_cost,
            buy_counts: ByParty::new(0, 0),
            refund: self.config.refund,
            fatal: opp.is_some_and(|o| o.is_fatal()),
        };
        let s = settle_mev(&input);
        self.ledger.credit(Party::User, s.mev_u);
        self.ledger.credit(Party::Adversary, s.mev_a);
        self.record(round, s.frontrun, s.backrun, s.fatal, opp.is_some(), ByParty::new(0, 0), 0)
    }

    fn step_masquerade(&mut self, round: Round, opp: Option<Opportunity<C>>) -> Result<RoundRecord<C>> {
        self.ledger.expire_tokens(round);

        let user = user_decide(
            self.ledger.liquid(Party::User),
            self.ledger.held(Party::User),
            opp.as_ref(),
            &self.params,
            self.user_variant,
        );
        let adversary = adversary_decide(
            self.ledger.liquid(Party::Adversary),
            self.ledger.held(Party::Adversary),
            &user,
            opp.as_ref(),
            &self.params,
            self.adversary_variant,
        );

        self.ledger.issue_tokens(Party::Adversary, adversary.buy_count, round)?;
        self.ledger.issue_tokens(Party::User, user.buy_count, round)?;

        let value = opp.map_or(C::zero(), |o| o.value);
        let mut user_txns = Vec::new();
        let mut adversary_txns = Vec::new();
        if user.buy_count > 0 {
            user_txns.push(Transaction {
                kind: TxKind::TokenPurchase { count: user.buy_count },
                submitter: Party::User,
                round,
            });
        }
        if adversary.buy_count > 0 {
            adversary_txns.push(Transaction {
                kind: TxKind::TokenPurchase { count: adversary.buy_count },
                submitter: Party::Adversary,
                round,
            });
        }
        if let (true, Some(token)) = (user.make_mev, user.token_choice) {
            user_txns.push(Transaction { kind: TxKind::TokenizedMev { token, value }, submitter: Party::User, round });
        }
        if let (true, Some(token)) = (adversary.attack, adversary.token_choice) {
            adversary_txns.push(Transaction {
                kind: TxKind::TokenizedMev { token, value },
                submitter: Party::Adversary,
                round,
            });
        }

        let (block, dropped) = build_block(round, user_txns, adversary_txns, self.config.block_cap());
        self.series.counters.dropped += dropped.len() as u128;

        let mev_made = block.user_mev_included();
        let settlement = settle_mev(&SettleInput {
            mode: ProtocolMode::Masquerade,
            mev_made,
            frontrun: block.user_is_frontrun(),
            backrun: adversary.backrun_token.is_some(),
            eta: value,
            f: self.f,
            token_cost: self.params.token_cost,
            buy_counts: ByParty::new(user.buy_count, adversary.buy_count),
            refund: self.config.refund,
            fatal: opp.is_some_and(|o| o.is_fatal()),
        });
        self.ledger.apply_block(&block, &settlement).map_err(|v| Error::Protocol(v.into()))?;

        let epoch = self.advance_epoch();
        Ok(self.record(
            round,
            settlement.frontrun,
            settlement.backrun,
            settlement.fatal,
            mev_made,
            ByParty::new(user.buy_count, adversary.buy_count),
            epoch,
        ))
    }

    /// Returns the epoch of the round just played and closes it when both
    /// end conditions hold.
    fn advance_epoch(&mut self) -> u64 {
        let current = self.epoch.index;
        let previous_spent = self.ledger.held(Party::User).range(..self.epoch.first_token).next().is_none();
        if previous_spent && self.ledger.liquid(Party::User) < self.params.threshold {
            self.epoch = EpochTracker { index: current + 1, first_token: self.ledger.next_token_id() };
        }
        current
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        round: Round,
        frontrun: bool,
        backrun: bool,
        fatal: bool,
        mev_made: bool,
        bought: ByParty<u128>,
        epoch: u64,
    ) -> RoundRecord<C> {
        RoundRecord {
            round,
            w_u_liquid: self.ledger.liquid(Party::User),
            w_u_total: self.ledger.total(Party::User),
            w_a_liquid: self.ledger.liquid(Party::Adversary),
            w_a_total: self.ledger.total(Party::Adversary),
            mev_made,
            frontrun,
            backrun,
            fatal,
            tokens_bought_u: bought.user,
            tokens_bought_a: bought.adversary,
            epoch,
        }
    }

    /// Plays all configured rounds.
    pub fn run(mut self) -> Result<ContinuousRun<C>> {
        while self.round < u128::from(self.config.rounds) {
            self.step_round()?;
        }
        Ok(ContinuousRun { series: self.series, ledger: self.ledger, tau: self.params.threshold })
    }
}
