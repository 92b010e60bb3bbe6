use masquerade::agents::Settlement;
use masquerade::engine::{EtaModel, Mode, ScenarioConfig, World};
use masquerade::protocol::{Block, Ledger, LedgerRules, Party, TokenId, TokenStatus, Transaction, TxKind, Violation};
use masquerade::{Currency, Fixed4};
use proptest::prelude::*;

fn fx(v: i64) -> Fixed4 {
    Fixed4::from_int(v)
}

fn tx(id: u128, who: Party, round: u128) -> Transaction<Fixed4> {
    Transaction { kind: TxKind::TokenizedMev { token: TokenId(id), value: fx(1) }, submitter: who, round }
}

/// Ledger where the adversary holds tokens 1..=a and the user a+1..=a+u,
/// all bought in round 1.
fn ledger(a: u128, u: u128) -> Ledger<Fixed4> {
    let rules = LedgerRules { token_cost: fx(10), refund: true, lifetime: None, block_cap: None };
    let mut l = Ledger::new(rules, fx(10_000), fx(10_000));
    l.issue_tokens(Party::Adversary, a, 1).unwrap();
    l.issue_tokens(Party::User, u, 1).unwrap();
    l
}

fn owner(id: u128, a: u128) -> Party {
    if id <= a {
        Party::Adversary
    } else {
        Party::User
    }
}

proptest! {
    #[test]
    fn only_sorted_order_is_accepted(
        a in 0u128..5,
        u in 1u128..5,
        picks in proptest::collection::vec(any::<bool>(), 9),
        perm in any::<proptest::sample::Index>(),
    ) {
        let l = ledger(a, u);
        let ids: Vec<u128> = (1..=a + u).filter(|&i| picks[(i - 1) as usize]).collect();
        prop_assume!(ids.len() >= 2);
        let sorted: Vec<Transaction<Fixed4>> = ids.iter().map(|&i| tx(i, owner(i, a), 2)).collect();
        let ok = l.validate_block(&Block { round: 2, transactions: sorted.clone() });
        prop_assert!(ok.is_ok(), "{:?}", ok);

        // pick a non-identity permutation deterministically from `perm`
        let n = sorted.len();
        let k = 1 + perm.index(n - 1);
        let mut shuffled = sorted.clone();
        shuffled.rotate_left(k);
        prop_assert_ne!(&shuffled, &sorted);
        let err = l.validate_block(&Block { round: 2, transactions: shuffled });
        prop_assert!(matches!(err, Err(Violation::OutOfOrder { .. })), "{:?}", err);
    }

    #[test]
    fn any_swap_is_rejected(n in 2u128..8, i in 0usize..7, j in 0usize..7) {
        let (i, j) = (i % n as usize, j % n as usize);
        prop_assume!(i != j);
        let l = ledger(0, n);
        let mut txs: Vec<_> = (1..=n).map(|id| tx(id, Party::User, 2)).collect();
        txs.swap(i, j);
        let err = l.validate_block(&Block { round: 2, transactions: txs });
        prop_assert!(matches!(err, Err(Violation::OutOfOrder { .. })), "{:?}", err);
    }
}

#[test]
fn double_spend_rejected_within_and_across_blocks() {
    let mut l = ledger(0, 2);
    let dup = Block { round: 2, transactions: vec![tx(1, Party::User, 2), tx(1, Party::User, 2)] };
    assert_eq!(l.validate_block(&dup), Err(Violation::DoubleSpend(TokenId(1))));

    let once = Block { round: 2, transactions: vec![tx(1, Party::User, 2)] };
    l.apply_block(&once, &Settlement::zero()).unwrap();
    let again = Block { round: 3, transactions: vec![tx(1, Party::User, 3)] };
    assert_eq!(l.validate_block(&again), Err(Violation::DoubleSpend(TokenId(1))));
}

#[test]
fn same_round_token_is_unconfirmed() {
    let l = ledger(0, 1);
    let b = Block { round: 1, transactions: vec![tx(1, Party::User, 1)] };
    assert_eq!(l.validate_block(&b), Err(Violation::UnconfirmedToken(TokenId(1))));
}

#[test]
fn foreign_and_unknown_tokens_rejected() {
    let l = ledger(1, 1);
    let b = Block { round: 2, transactions: vec![tx(1, Party::User, 2)] };
    assert_eq!(l.validate_block(&b), Err(Violation::WrongOwner(TokenId(1))));
    let b = Block { round: 2, transactions: vec![tx(9, Party::User, 2)] };
    assert_eq!(l.validate_block(&b), Err(Violation::UnknownToken(TokenId(9))));
}

/// Checks per-round accounting of a run: locked wealth equals the price of
/// the held tokens, and the change in system wealth is the value created
/// minus the token prices burned.
fn check_conservation(config: &ScenarioConfig) {
    let EtaModel::Constant(eta) = config.eta_model else { panic!("needs a constant value") };
    let eta = Fixed4::from_f64_lossy(eta);
    let y = Fixed4::from_f64_lossy(config.y);
    let mut w = World::<Fixed4>::new(config).unwrap();
    let mut prev = w.series().initial.user + w.series().initial.adversary;
    for _ in 0..config.rounds {
        let r = w.step_round().unwrap();
        let l = w.ledger();
        let round = r.round;
        let burned_now = l
            .tokens()
            .iter()
            .filter(|t| match t.status {
                TokenStatus::Spent { round: s } => s == round && !config.refund,
                TokenStatus::Expired { round: e } => e == round,
                TokenStatus::Unspent => false,
            })
            .count() as u128;
        let total = r.w_u_total + r.w_a_total;
        let created = if r.mev_made { eta } else { Fixed4::ZERO };
        assert_eq!(total - prev, created - y * Fixed4::from_count(burned_now), "round {round} of {config:?}");
        assert_eq!(total, l.system_total());
        for (p, liquid, tot) in
            [(Party::User, r.w_u_liquid, r.w_u_total), (Party::Adversary, r.w_a_liquid, r.w_a_total)]
        {
            if config.mode == Mode::Masquerade {
                assert_eq!(tot - liquid, y * Fixed4::from_count(l.held(p).len() as u128));
            }
            assert!(liquid >= Fixed4::ZERO);
        }
        prev = total;
    }
}

#[test]
fn conservation_in_every_mode_and_ablation() {
    let base = ScenarioConfig { rounds: 1500, ..Default::default() };
    let configs = [
        base.clone(),
        ScenarioConfig { mode: Mode::StatusQuo, ..base.clone() },
        ScenarioConfig { mode: Mode::Ideal, ..base.clone() },
        ScenarioConfig { refund: false, ..base.clone() },
        ScenarioConfig { expiry_rounds: 7, ..base.clone() },
        ScenarioConfig { expiry_rounds: 30, refund: false, ..base.clone() },
        ScenarioConfig { block_cap: 1, ..base.clone() },
        ScenarioConfig { fatal_fraction: 0.5, ..base.clone() },
        ScenarioConfig { w_user0: 10_000.0, w_adv0: 2_000.0, y: 10.0, tau: 100.0, f: 0.1, ..base.clone() },
    ];
    for c in &configs {
        for seed in 0..3 {
            check_conservation(&ScenarioConfig { seed, ..c.clone() });
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conservation_random_params(
        y in 5u32..200,
        tau_mul in 1u32..4,
        f in 0.0f64..1.0,
        w_u in 100u32..5000,
        w_a in 0u32..3000,
        refund in any::<bool>(),
        expiry in prop_oneof![Just(0u64), 1u64..50],
        seed in any::<u64>(),
    ) {
        let cfg = ScenarioConfig {
            rounds: 300,
            y: y as f64,
            tau: (y * tau_mul) as f64,
            f: (f * 100.0).round() / 100.0,
            w_user0: w_u as f64,
            w_adv0: w_a as f64,
            refund,
            expiry_rounds: expiry,
            seed,
            ..Default::default()
        };
        check_conservation(&cfg);
    }
}
