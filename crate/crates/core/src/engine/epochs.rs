use super::MetricsSeries;
use crate::num::Currency;
use crate::protocol::{Ledger, Party, Round, TokenSet, TokenStatus};

/// One epoch of a masquerade run.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochBoundary<C> {
    pub index: u64,
    pub start_round: Round,
    pub end_round: Round,
    /// Tokens bought by the user during the epoch.
    pub user_tokens: TokenSet,
    /// Tokens bought by the adversary during the epoch.
    pub adversary_tokens: TokenSet,
    /// Total user wealth at `end_round`.
    pub user_wealth: C,
    /// Total adversary wealth at `end_round`.
    pub adversary_wealth: C,
    /// The run stopped before the end conditions were met.
    pub terminal: bool,
    /// User MEV transactions executed during the epoch.
    pub user_mev: u128,
    pub frontruns: u128,
}

impl<C: Currency> EpochBoundary<C> {
    /// Share of the epoch's user MEV transactions that were frontrun.
    pub fn frontrun_fraction(&self) -> f64 {
        if self.user_mev == 0 {
            0.0
        } else {
            self.frontruns as f64 / self.user_mev as f64
        }
    }
}

/// Splits a finished masquerade run into epochs.
///
/// An epoch closes at the end of the first round in which the user holds no
/// token bought before the epoch began and its liquid wealth is below `tau`.
/// Every token belongs to the epoch of its purchase round. A trailing stretch
/// of rounds that never met the end conditions is returned flagged terminal.
pub fn detect_epochs<C: Currency>(series: &MetricsSeries<C>, ledger: &Ledger<C>, tau: C) -> Vec<EpochBoundary<C>> {
    let registry = ledger.tokens();
    let gone_round = |i: usize| match registry[i].status {
        TokenStatus::Spent { round } | TokenStatus::Expired { round } => round,
        TokenStatus::Unspent => Round::MAX,
    };

    let mut out = Vec::new();
    // registry[..issued] holds every token bought up to the current round
    let mut issued = 0usize;
    // registry[..epoch_first] holds every token bought before the current epoch
    let mut epoch_first = 0usize;
    // latest round in which a user token from an earlier epoch was spent or expired
    let mut earlier_gone: Round = 0;
    let mut start_round: Round = 1;
    let mut user_mev = 0u128;
    let mut frontruns = 0u128;

    let close = |index: u64, start: Round, end: Round, range: std::ops::Range<usize>, rec_u: C, rec_a: C| {
        let mut user_tokens = TokenSet::new();
        let mut adversary_tokens = TokenSet::new();
        for t in &registry[range] {
            match t.owner {
                Party::User => user_tokens.push_run(t.id.0, 1),
                Party::Adversary => adversary_tokens.push_run(t.id.0, 1),
            }
        }
        EpochBoundary {
            index,
            start_round: start,
            end_round: end,
            user_tokens,
            adversary_tokens,
            user_wealth: rec_u,
            adversary_wealth: rec_a,
            terminal: false,
            user_mev: 0,
            frontruns: 0,
        }
    };

    for rec in &series.records {
        let r = rec.round;
        while issued < registry.len() && registry[issued].purchase_round <= r {
            issued += 1;
        }
        user_mev += u128::from(rec.mev_made);
        frontruns += u128::from(rec.frontrun);
        if earlier_gone <= r && rec.w_u_liquid < tau {
            let mut b = close(out.len() as u64, start_round, r, epoch_first..issued, rec.w_u_total, rec.w_a_total);
            b.user_mev = user_mev;
            b.frontruns = frontruns;
            out.push(b);
            for (i, t) in registry.iter().enumerate().take(issued).skip(epoch_first) {
                if t.owner == Party::User {
                    earlier_gone = earlier_gone.max(gone_round(i));
                }
            }
            epoch_first = issued;
            start_round = r + 1;
            user_mev = 0;
            frontruns = 0;
        }
    }

    if let Some(last) = series.records.last() {
        if last.round >= start_round {
            let mut b =
                close(out.len() as u64, start_round, last.round, epoch_first..issued, last.w_u_total, last.w_a_total);
            b.user_mev = user_mev;
            b.frontruns = frontruns;
            b.terminal = true;
            out.push(b);
        }
    }
    out
}
