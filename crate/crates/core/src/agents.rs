//! User and adversary policies, and per-round reward settlement.

use std::collections::BTreeSet;

use crate::num::Currency;
use crate::protocol::{ByParty, TokenId};

/// Inputs shared by both policies.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyParams<C> {
    /// Token price `y`.
    pub token_cost: C,
    /// Liquid wealth at or below which the user starts spending tokens (`τ`).
    pub threshold: C,
    /// Opportunity value above which the stochastic user spends its best token.
    pub eta_pivot: C,
    /// Fatal-aware users only take fatal opportunities worth less than this.
    pub fatal_value_cap: C,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum OpportunityKind {
    /// Losses bounded by slippage (swaps): an attacker takes `fη`.
    Protectable,
    /// Arbitrage/liquidation: a frontrun victim gets nothing.
    Fatal,
}

/// The MEV opportunity available to the user in one round.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Opportunity<C> {
    pub value: C,
    pub kind: OpportunityKind,
}

impl<C> Opportunity<C> {
    pub fn is_fatal(&self) -> bool {
        self.kind == OpportunityKind::Fatal
    }
}

/// Which refinements of the base user policy are active.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct UserVariant {
    /// Spend the lowest token only on high-value opportunities, the second
    /// lowest otherwise.
    pub stochastic: bool,
    /// Skip fatal opportunities at or above the value cap.
    pub fatal_aware: bool,
}

impl UserVariant {
    pub const BASE: UserVariant = UserVariant { stochastic: false, fatal_aware: false };
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct UserAction {
    pub buy_count: u128,
    pub make_mev: bool,
    /// `None` stands for "no token" (an infinite token number).
    pub token_choice: Option<TokenId>,
}

/// The user's move for one round.
///
/// Buys one token whenever liquid wealth exceeds the token price. Once the
/// remaining liquid wealth is at or below the threshold, takes the
/// opportunity with its lowest held token. The purchase is applied before the
/// spend check.
pub fn user_decide<C: Currency>(
    liquid: C,
    owned: &BTreeSet<TokenId>,
    opportunity: Option<&Opportunity<C>>,
    params: &PolicyParams<C>,
    variant: UserVariant,
) -> UserAction {
    let y = params.token_cost;
    let buy_count = u128::from(liquid > y);
    let remaining = liquid - y * C::from_count(buy_count);

    let no_mev = UserAction { buy_count, make_mev: false, token_choice: None };
    let Some(opp) = opportunity else { return no_mev };
    if remaining > params.threshold {
        return no_mev;
    }
    if variant.fatal_aware && opp.is_fatal() && opp.value >= params.fatal_value_cap {
        return no_mev;
    }
    let mut held = owned.iter().copied();
    let Some(lowest) = held.next() else { return no_mev };
    let token =
        if variant.stochastic && opp.value <= params.eta_pivot { held.next().unwrap_or(lowest) } else { lowest };
    UserAction { buy_count, make_mev: true, token_choice: Some(token) }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum AdversaryVariant<C> {
    /// Attack whenever a smaller token is held.
    Greedy,
    /// Hold back when the next opportunity is expected to be worth more than
    /// the current one.
    Lookahead { expected_next: C },
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct AdversaryAction {
    pub buy_count: u128,
    pub attack: bool,
    pub token_choice: Option<TokenId>,
    /// Smallest held token above the user's, if any. Backruns are tallied but
    /// carry no reward and do not consume the token.
    pub backrun_token: Option<TokenId>,
}

/// The adversary's move after observing the user's.
///
/// Spends all liquid wealth on tokens, and frontruns a tokenized user
/// transaction with its largest held token numbered below the user's.
pub fn adversary_decide<C: Currency>(
    liquid: C,
    owned: &BTreeSet<TokenId>,
    observed: &UserAction,
    opportunity: Option<&Opportunity<C>>,
    params: &PolicyParams<C>,
    variant: AdversaryVariant<C>,
) -> AdversaryAction {
    let buy_count = liquid.units_of(params.token_cost);
    let mut action = AdversaryAction { buy_count, ..AdversaryAction::default() };
    let Some(user_token) = observed.token_choice.filter(|_| observed.make_mev) else {
        return action;
    };
    action.backrun_token = owned.range(TokenId(user_token.0 + 1)..).next().copied();
    let Some(best) = owned.range(..user_token).next_back().copied() else {
        return action;
    };
    if let (AdversaryVariant::Lookahead { expected_next }, Some(opp)) = (variant, opportunity) {
        if expected_next > opp.value {
            return action;
        }
    }
    action.attack = true;
    action.token_choice = Some(best);
    action
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProtocolMode {
    /// Every user MEV transaction is frontrun.
    StatusQuo,
    Masquerade,
    /// No attacks.
    Ideal,
}

/// Everything that determines one round's rewards.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SettleInput<C> {
    pub mode: ProtocolMode,
    pub mev_made: bool,
    pub frontrun: bool,
    pub backrun: bool,
    pub eta: C,
    pub f: C,
    pub token_cost: C,
    pub buy_counts: ByParty<u128>,
    pub refund: bool,
    pub fatal: bool,
}

/// Per-round rewards.
///
/// `h_u`/`h_a` are the net changes of liquid wealth including token purchases
/// and refunds; `mev_u`/`mev_a` are the MEV value components alone, which the
/// ledger credits on top of its own token flows.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Settlement<C> {
    pub h_u: C,
    pub h_a: C,
    pub mev_u: C,
    pub mev_a: C,
    pub frontrun: bool,
    pub backrun: bool,
    pub fatal: bool,
}

impl<C: Currency> Settlement<C> {
    pub fn zero() -> Self {
        Settlement {
            h_u: C::zero(),
            h_a: C::zero(),
            mev_u: C::zero(),
            mev_a: C::zero(),
            frontrun: false,
            backrun: false,
            fatal: false,
        }
    }
}

pub fn settle_mev<C: Currency>(input: &SettleInput<C>) -> Settlement<C> {
    let SettleInput { mode, mev_made, eta, f, token_cost: y, refund, fatal, .. } = *input;
    let zero = C::zero();
    let stolen = if fatal { eta } else { f * eta };

    match mode {
        ProtocolMode::Ideal => {
            let mev_u = if mev_made { eta } else { zero };
            Settlement { h_u: mev_u, h_a: zero, mev_u, mev_a: zero, frontrun: false, backrun: false, fatal }
        }
        ProtocolMode::StatusQuo => {
            let (mev_u, mev_a) = if mev_made { (eta - stolen, stolen) } else { (zero, zero) };
            Settlement { h_u: mev_u, h_a: mev_a, mev_u, mev_a, frontrun: mev_made, backrun: mev_made, fatal }
        }
        ProtocolMode::Masquerade => {
            let frontrun = mev_made && input.frontrun;
            let (mev_u, mev_a) = match (mev_made, frontrun) {
                (false, _) => (zero, zero),
                (true, true) => (eta - stolen, stolen),
                (true, false) => (eta, zero),
            };
            let refund_u = if refund && mev_made { y } else { zero };
            let refund_a = if refund && frontrun { y } else { zero };
            let buy_u = y * C::from_count(input.buy_counts.user);
            let buy_a = y * C::from_count(input.buy_counts.adversary);
            Settlement {
                h_u: mev_u + refund_u - buy_u,
                h_a: mev_a + refund_a - buy_a,
                mev_u,
                mev_a,
                frontrun,
                backrun: mev_made && input.backrun,
                fatal,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Fixed4;
    use proptest::prelude::*;

    fn fx(v: i64) -> Fixed4 {
        Fixed4::from_int(v)
    }

    fn params() -> PolicyParams<Fixed4> {
        PolicyParams { token_cost: fx(80), threshold: fx(80), eta_pivot: fx(100), fatal_value_cap: fx(100) }
    }

    fn toks(ids: &[u128]) -> BTreeSet<TokenId> {
        ids.iter().map(|&i| TokenId(i)).collect()
    }

    fn opp(v: i64) -> Opportunity<Fixed4> {
        Opportunity { value: fx(v), kind: OpportunityKind::Protectable }
    }

    #[test]
    fn user_buys_when_rich_and_cannot_spend_without_tokens() {
        let a = user_decide(fx(100), &toks(&[]), Some(&opp(100)), &params(), UserVariant::BASE);
        assert_eq!(a, UserAction { buy_count: 1, make_mev: false, token_choice: None });
    }

    #[test]
    fn user_spends_lowest_token_when_poor() {
        let a = user_decide(fx(20), &toks(&[1, 4]), Some(&opp(100)), &params(), UserVariant::BASE);
        assert_eq!(a, UserAction { buy_count: 0, make_mev: true, token_choice: Some(TokenId(1)) });
    }

    #[test]
    fn user_without_opportunity_is_noop() {
        let a = user_decide(fx(20), &toks(&[1]), None, &params(), UserVariant::BASE);
        assert!(!a.make_mev && a.token_choice.is_none());
    }

    #[test]
    fn stochastic_user_keeps_best_token_for_big_opportunities() {
        let v = UserVariant { stochastic: true, fatal_aware: false };
        let low = user_decide(fx(20), &toks(&[1, 4]), Some(&opp(90)), &params(), v);
        assert_eq!(low.token_choice, Some(TokenId(4)));
        let high = user_decide(fx(20), &toks(&[1, 4]), Some(&opp(150)), &params(), v);
        assert_eq!(high.token_choice, Some(TokenId(1)));
        let single = user_decide(fx(20), &toks(&[7]), Some(&opp(90)), &params(), v);
        assert_eq!(single.token_choice, Some(TokenId(7)));
    }

    #[test]
    fn fatal_aware_user_skips_valuable_fatal_opportunities() {
        let v = UserVariant { stochastic: false, fatal_aware: true };
        let fatal = |value| Opportunity { value: fx(value), kind: OpportunityKind::Fatal };
        assert!(!user_decide(fx(20), &toks(&[1]), Some(&fatal(100)), &params(), v).make_mev);
        assert!(user_decide(fx(20), &toks(&[1]), Some(&fatal(99)), &params(), v).make_mev);
        assert!(user_decide(fx(20), &toks(&[1]), Some(&opp(500)), &params(), v).make_mev);
    }

    fn observed(t: u128) -> UserAction {
        UserAction { buy_count: 0, make_mev: true, token_choice: Some(TokenId(t)) }
    }

    #[test]
    fn adversary_attacks_with_largest_smaller_token() {
        let a = adversary_decide(
            fx(0),
            &toks(&[1, 2, 6]),
            &observed(5),
            Some(&opp(100)),
            &params(),
            AdversaryVariant::Greedy,
        );
        assert!(a.attack);
        assert_eq!(a.token_choice, Some(TokenId(2)));
        assert_eq!(a.backrun_token, Some(TokenId(6)));
    }

    #[test]
    fn adversary_without_smaller_token_abstains() {
        let a =
            adversary_decide(fx(0), &toks(&[7]), &observed(5), Some(&opp(100)), &params(), AdversaryVariant::Greedy);
        assert!(!a.attack && a.token_choice.is_none());
        assert_eq!(a.backrun_token, Some(TokenId(7)));
    }

    #[test]
    fn adversary_spends_all_liquid_on_tokens() {
        let a =
            adversary_decide(fx(170), &toks(&[]), &UserAction::default(), None, &params(), AdversaryVariant::Greedy);
        assert_eq!(a.buy_count, 2);
        assert!(!a.attack);
    }

    #[test]
    fn lookahead_adversary_waits_for_better_value() {
        let v = AdversaryVariant::Lookahead { expected_next: fx(100) };
        let low = adversary_decide(fx(0), &toks(&[1]), &observed(5), Some(&opp(60)), &params(), v);
        assert!(!low.attack);
        let high = adversary_decide(fx(0), &toks(&[1]), &observed(5), Some(&opp(140)), &params(), v);
        assert!(high.attack);
    }

    fn input(mode: ProtocolMode, frontrun: bool, eta: i64, f: f64) -> SettleInput<Fixed4> {
        SettleInput {
            mode,
            mev_made: true,
            frontrun,
            backrun: false,
            eta: fx(eta),
            f: Fixed4::from_f64_lossy(f),
            token_cost: fx(80),
            buy_counts: ByParty::new(0, 0),
            refund: true,
            fatal: false,
        }
    }

    #[test]
    fn status_quo_rewards() {
        let s = settle_mev(&input(ProtocolMode::StatusQuo, false, 100, 0.8));
        assert_eq!((s.h_u, s.h_a), (fx(20), fx(80)));
        assert!(s.frontrun && s.backrun);
    }

    #[test]
    fn ideal_rewards() {
        let s = settle_mev(&input(ProtocolMode::Ideal, true, 100, 0.8));
        assert_eq!((s.h_u, s.h_a), (fx(100), fx(0)));
        assert!(!s.frontrun);
    }

    #[test]
    fn masquerade_frontrun_rewards() {
        let mut i = input(ProtocolMode::Masquerade, true, 100, 0.8);
        i.buy_counts = ByParty::new(1, 1);
        let s = settle_mev(&i);
        assert_eq!(s.h_u, fx(20));
        assert_eq!(s.h_a, fx(80));
        assert_eq!((s.mev_u, s.mev_a), (fx(20), fx(80)));
    }

    #[test]
    fn masquerade_unattacked_rewards_with_and_without_refund() {
        let mut i = input(ProtocolMode::Masquerade, false, 100, 0.8);
        assert_eq!(settle_mev(&i).h_u, fx(180));
        i.refund = false;
        assert_eq!(settle_mev(&i).h_u, fx(100));
        assert_eq!(settle_mev(&i).h_a, fx(0));
    }

    #[test]
    fn fatal_frontrun_gives_everything_to_adversary() {
        let mut i = input(ProtocolMode::Masquerade, true, 100, 0.8);
        i.fatal = true;
        let s = settle_mev(&i);
        assert_eq!((s.mev_u, s.mev_a), (fx(0), fx(100)));
        let mut sq = input(ProtocolMode::StatusQuo, true, 100, 0.8);
        sq.fatal = true;
        assert_eq!(settle_mev(&sq).h_u, fx(0));
    }

    #[test]
    fn slippage_boundaries() {
        let s0 = settle_mev(&input(ProtocolMode::Masquerade, true, 100, 0.0));
        assert_eq!(s0.mev_a, fx(0));
        let s1 = settle_mev(&input(ProtocolMode::StatusQuo, true, 100, 1.0));
        assert_eq!(s1.mev_u, fx(0));
    }

    proptest! {
        #[test]
        fn token_choices_match_brute_force(
            user in proptest::collection::btree_set(1u128..200, 1..30),
            adv in proptest::collection::btree_set(1u128..200, 0..30),
        ) {
            let adv: BTreeSet<u128> = adv.difference(&user).copied().collect();
            let user_set: BTreeSet<TokenId> = user.iter().map(|&i| TokenId(i)).collect();
            let adv_set: BTreeSet<TokenId> = adv.iter().map(|&i| TokenId(i)).collect();

            let u = user_decide(fx(0), &user_set, Some(&opp(100)), &params(), UserVariant::BASE);
            let brute_min = user.iter().copied().fold(u128::MAX, u128::min);
            prop_assert_eq!(u.token_choice, Some(TokenId(brute_min)));

            let a = adversary_decide(fx(0), &adv_set, &u, Some(&opp(100)), &params(), AdversaryVariant::Greedy);
            let brute_max_below = adv.iter().copied().filter(|&t| t < brute_min).max();
            prop_assert_eq!(a.token_choice.map(|t| t.0), brute_max_below);
            prop_assert_eq!(a.attack, brute_max_below.is_some());
            // the globally lowest token can never be frontrun
            if adv.iter().all(|&t| t > brute_min) {
                prop_assert!(!a.attack);
            }
        }
    }
}
