use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{validate_block, Block, ByParty, Party, ProtocolError, Round, Token, TokenId, TokenStatus, Violation};
use crate::agents::Settlement;
use crate::num::Currency;

/// Token economics enforced by the ledger.
#[derive(Clone, Debug, PartialEq)]
pub struct LedgerRules<C> {
    /// Price of one token (`y`).
    pub token_cost: C,
    /// Whether spending a token returns its price to the owner.
    pub refund: bool,
    /// Rounds after purchase at which an unspent token expires; `None` never.
    pub lifetime: Option<Round>,
    /// Maximum tokenized transactions per block; `None` unbounded.
    pub block_cap: Option<usize>,
}

/// What `apply_block` did, for bookkeeping and invariant checks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockEffects<C> {
    pub spent: Vec<TokenId>,
    /// Token price returned to owners.
    pub refunded: C,
    /// Token price destroyed (no-refund mode).
    pub burned: C,
}

/// Balances and the token registry.
///
/// `liquid` is spendable money; `locked` is money tied up in held tokens
/// (token cost times the number of unspent, unexpired tokens).
#[derive(Clone, Debug)]
pub struct Ledger<C> {
    rules: LedgerRules<C>,
    liquid: ByParty<C>,
    locked: ByParty<C>,
    registry: Vec<Token>,
    held: ByParty<BTreeSet<TokenId>>,
    next_token_id: u128,
    expiry_cursor: usize,
}

impl<C: Currency> Ledger<C> {
    pub fn new(rules: LedgerRules<C>, user_wealth: C, adversary_wealth: C) -> Self {
        Ledger {
            rules,
            liquid: ByParty::new(user_wealth, adversary_wealth),
            locked: ByParty::new(C::zero(), C::zero()),
            registry: Vec::new(),
            held: ByParty::default(),
            next_token_id: 1,
            expiry_cursor: 0,
        }
    }

    pub fn rules(&self) -> &LedgerRules<C> {
        &self.rules
    }

    pub fn rules_mut(&mut self) -> &mut LedgerRules<C> {
        &mut self.rules
    }

    pub fn liquid(&self, p: Party) -> C {
        self.liquid[p]
    }

    pub fn locked(&self, p: Party) -> C {
        self.locked[p]
    }

    pub fn total(&self, p: Party) -> C {
        self.liquid[p] + self.locked[p]
    }

    /// Money held by both parties, liquid and locked.
    pub fn system_total(&self) -> C {
        self.total(Party::User) + self.total(Party::Adversary)
    }

    /// Unspent, unexpired tokens of `p`, ascending.
    pub fn held(&self, p: Party) -> &BTreeSet<TokenId> {
        &self.held[p]
    }

    pub fn token(&self, id: TokenId) -> Option<&Token> {
        let idx = usize::try_from(id.0.checked_sub(1)?).ok()?;
        self.registry.get(idx)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.registry
    }

    pub fn next_token_id(&self) -> TokenId {
        TokenId(self.next_token_id)
    }

    pub fn credit(&mut self, p: Party, amount: C) {
        self.liquid[p] += amount;
    }

    /// Issues `count` consecutive tokens to `party`, paying for them from its
    /// liquid balance.
    ///
    /// Calls within one round are numbered in call order; the engine issues
    /// adversary purchases first.
    pub fn issue_tokens(&mut self, party: Party, count: u128, round: Round) -> Result<Vec<TokenId>, ProtocolError> {
        if count == 0 {
            return Ok(Vec::new());
        }
        let cost = self.rules.token_cost * C::from_count(count);
        if cost > self.liquid[party] {
            return Err(ProtocolError::InsufficientFunds { party, count });
        }
        self.liquid[party] -= cost;
        self.locked[party] += cost;
        let expiry_round = self.rules.lifetime.map(|l| round + l);
        let first = self.next_token_id;
        self.next_token_id += count;
        let ids: Vec<TokenId> = (first..first + count).map(TokenId).collect();
        for &id in &ids {
            self.registry.push(Token {
                id,
                owner: party,
                purchase_round: round,
                status: TokenStatus::Unspent,
                expiry_round,
            });
            self.held[party].insert(id);
        }
        Ok(ids)
    }

    /// Expires every unspent token whose lifetime ends at or before `round`.
    /// The locked cost of an expired token is destroyed.
    pub fn expire_tokens(&mut self, round: Round) -> Vec<TokenId> {
        let mut expired = Vec::new();
        while let Some(tok) = self.registry.get_mut(self.expiry_cursor) {
            match tok.expiry_round {
                Some(e) if e <= round => {}
                _ => break,
            }
            if tok.status == TokenStatus::Unspent {
                tok.status = TokenStatus::Expired { round };
                self.held[tok.owner].remove(&tok.id);
                self.locked[tok.owner] -= self.rules.token_cost;
                expired.push(tok.id);
            }
            self.expiry_cursor += 1;
        }
        expired
    }

    pub fn validate_block(&self, block: &Block<C>) -> Result<(), Violation> {
        validate_block(block, self)
    }

    /// Executes a validated block: spends every referenced token, refunds or
    /// burns its price, and credits the MEV amounts of `settlement`.
    pub fn apply_block(&mut self, block: &Block<C>, settlement: &Settlement<C>) -> Result<BlockEffects<C>, Violation> {
        self.validate_block(block)?;
        let y = self.rules.token_cost;
        let mut effects = BlockEffects { spent: Vec::new(), refunded: C::zero(), burned: C::zero() };
        for tx in block.tokenized() {
            let id = tx.token().expect("tokenized");
            let idx = (id.0 - 1) as usize;
            let owner = self.registry[idx].owner;
            self.registry[idx].status = TokenStatus::Spent { round: block.round };
            self.held[owner].remove(&id);
            self.locked[owner] -= y;
            if self.rules.refund {
                self.liquid[owner] += y;
                effects.refunded += y;
            } else {
                effects.burned += y;
            }
            effects.spent.push(id);
        }
        self.liquid.user += settlement.mev_u;
        self.liquid.adversary += settlement.mev_a;
        Ok(effects)
    }

    /// Line-oriented registry dump: `id,owner,purchase_round,spent,expiry`.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for t in &self.registry {
            let expiry = t.expiry_round.map(|e| e.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{}", t.id, t.owner, t.purchase_round, t.is_spent(), expiry);
        }
        out
    }
}
