use std::collections::HashSet;

use super::{Ledger, Party, Round, TokenId, TokenStatus, Violation};
use crate::num::Currency;

#[derive(Clone, Debug, PartialEq)]
pub enum TxKind<C> {
    TokenPurchase { count: u128 },
    TokenizedMev { token: TokenId, value: C },
    NonTokenizedMev { value: C },
    Regular,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transaction<C> {
    pub kind: TxKind<C>,
    pub submitter: Party,
    pub round: Round,
}

impl<C> Transaction<C> {
    pub fn token(&self) -> Option<TokenId> {
        match self.kind {
            TxKind::TokenizedMev { token, .. } => Some(token),
            _ => None,
        }
    }

    pub fn is_tokenized(&self) -> bool {
        self.token().is_some()
    }
}

/// Ordered transactions of one round.
#[derive(Clone, Debug, PartialEq)]
pub struct Block<C> {
    pub round: Round,
    pub transactions: Vec<Transaction<C>>,
}

impl<C> Block<C> {
    pub fn empty(round: Round) -> Self {
        Block { round, transactions: Vec::new() }
    }

    pub fn tokenized(&self) -> impl Iterator<Item = &Transaction<C>> {
        self.transactions.iter().filter(|t| t.is_tokenized())
    }

    /// Whether an adversary tokenized transaction executes ahead of the user's
    /// tokenized MEV transaction.
    pub fn user_is_frontrun(&self) -> bool {
        let mut adversary_seen = false;
        for tx in self.tokenized() {
            match tx.submitter {
                Party::Adversary => adversary_seen = true,
                Party::User => return adversary_seen,
            }
        }
        false
    }

    pub fn user_mev_included(&self) -> bool {
        self.tokenized().any(|t| t.submitter == Party::User)
    }
}

/// Orders candidate transactions into a block.
///
/// Tokenized transactions come first in ascending token id regardless of
/// submitter; when more than `cap` are offered, the highest ids are returned
/// as dropped and their tokens stay unspent. Non-tokenized transactions follow,
/// adversary submissions ahead of the user's.
pub fn build_block<C: Clone>(
    round: Round,
    user_txns: Vec<Transaction<C>>,
    adversary_txns: Vec<Transaction<C>>,
    cap: Option<usize>,
) -> (Block<C>, Vec<Transaction<C>>) {
    let (mut tokenized, plain_adv): (Vec<_>, Vec<_>) = adversary_txns.into_iter().partition(Transaction::is_tokenized);
    let (tok_user, plain_user): (Vec<_>, Vec<_>) = user_txns.into_iter().partition(Transaction::is_tokenized);
    tokenized.extend(tok_user);
    tokenized.sort_by_key(|t| t.token());

    let dropped = match cap {
        Some(n) if tokenized.len() > n => tokenized.split_off(n),
        _ => Vec::new(),
    };

    let mut transactions = tokenized;
    transactions.extend(plain_adv);
    transactions.extend(plain_user);
    (Block { round, transactions }, dropped)
}

/// Checks block structure and every referenced token against the ledger.
pub fn validate_block<C: Currency>(block: &Block<C>, ledger: &Ledger<C>) -> Result<(), Violation> {
    let mut seen_plain = false;
    let mut prev: Option<TokenId> = None;
    let mut used = HashSet::new();
    let mut count = 0usize;

    for (i, tx) in block.transactions.iter().enumerate() {
        let Some(id) = tx.token() else {
            seen_plain = true;
            continue;
        };
        if seen_plain {
            return Err(Violation::TokenizedAfterPlain(i));
        }
        if !used.insert(id) {
            return Err(Violation::DoubleSpend(id));
        }
        if let Some(p) = prev {
            if id < p {
                return Err(Violation::OutOfOrder { prev: p, next: id });
            }
        }
        prev = Some(id);
        count += 1;

        let token = ledger.token(id).ok_or(Violation::UnknownToken(id))?;
        if token.owner != tx.submitter {
            return Err(Violation::WrongOwner(id));
        }
        match token.status {
            TokenStatus::Spent { .. } => return Err(Violation::DoubleSpend(id)),
            TokenStatus::Expired { .. } => return Err(Violation::Expired(id)),
            TokenStatus::Unspent => {}
        }
        if token.purchase_round >= block.round {
            return Err(Violation::UnconfirmedToken(id));
        }
        if token.expiry_round.is_some_and(|e| block.round >= e) {
            return Err(Violation::Expired(id));
        }
    }

    if let Some(cap) = ledger.rules().block_cap {
        if count > cap {
            return Err(Violation::CapExceeded { count, cap });
        }
    }
    Ok(())
}
