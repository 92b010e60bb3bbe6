//! Tokens, transactions, blocks and the ledger that enforces token-number
//! ordering.

mod block;
mod ledger;
mod token_set;

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

pub use block::{build_block, validate_block, Block, Transaction, TxKind};
pub use ledger::{BlockEffects, Ledger, LedgerRules};
pub use token_set::TokenSet;

/// Round index. Wide enough for the phased engine, whose epochs span far more
/// rounds than fit in 64 bits.
pub type Round = u128;

/// Globally unique token number; lower numbers execute first.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenId(pub u128);

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Party {
    User,
    Adversary,
}

impl Party {
    pub const ALL: [Party; 2] = [Party::User, Party::Adversary];

    pub fn as_str(self) -> &'static str {
        match self {
            Party::User => "user",
            Party::Adversary => "adversary",
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One value per party.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ByParty<T> {
    pub user: T,
    pub adversary: T,
}

impl<T> ByParty<T> {
    pub fn new(user: T, adversary: T) -> Self {
        ByParty { user, adversary }
    }
}

impl<T> Index<Party> for ByParty<T> {
    type Output = T;
    fn index(&self, p: Party) -> &T {
        match p {
            Party::User => &self.user,
            Party::Adversary => &self.adversary,
        }
    }
}

impl<T> IndexMut<Party> for ByParty<T> {
    fn index_mut(&mut self, p: Party) -> &mut T {
        match p {
            Party::User => &mut self.user,
            Party::Adversary => &mut self.adversary,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TokenStatus {
    Unspent,
    Spent { round: Round },
    Expired { round: Round },
}

/// A numbered, one-shot ordering credential.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub id: TokenId,
    pub owner: Party,
    pub purchase_round: Round,
    pub status: TokenStatus,
    /// First round in which the token can no longer be used.
    pub expiry_round: Option<Round>,
}

impl Token {
    pub fn is_spent(&self) -> bool {
        matches!(self.status, TokenStatus::Spent { .. })
    }

    /// Usable in a tokenized transaction of `round`.
    pub fn is_valid_at(&self, round: Round) -> bool {
        self.status == TokenStatus::Unspent
            && self.purchase_round < round
            && self.expiry_round.is_none_or(|e| round < e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("{party} cannot afford {count} token(s)")]
    InsufficientFunds { party: Party, count: u128 },
    #[error("block rejected: {0}")]
    Invalid(#[from] Violation),
}

/// First rule broken by a candidate block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("token {next} follows token {prev}")]
    OutOfOrder { prev: TokenId, next: TokenId },
    #[error("token {0} already spent")]
    DoubleSpend(TokenId),
    #[error("token {0} not confirmed before this round")]
    UnconfirmedToken(TokenId),
    #[error("token {0} expired")]
    Expired(TokenId),
    #[error("{count} tokenized transactions exceed cap {cap}")]
    CapExceeded { count: usize, cap: usize },
    #[error("tokenized transaction at position {0} follows a non-tokenized one")]
    TokenizedAfterPlain(usize),
    #[error("token {0} was never issued")]
    UnknownToken(TokenId),
    #[error("token {0} is not owned by its submitter")]
    WrongOwner(TokenId),
}
