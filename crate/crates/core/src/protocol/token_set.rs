use std::fmt;
use std::ops::RangeInclusive;

use super::TokenId;

/// A set of token ids stored as sorted, disjoint, non-adjacent runs.
///
/// Purchases within one round (and, in the phased engine, within one whole
/// phase) receive consecutive ids, so a run-compressed set stays small even when
/// it holds astronomically many tokens.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSet {
    runs: Vec<(u128, u128)>,
}

impl TokenSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// `len` consecutive ids starting at `start`.
    pub fn from_run(start: u128, len: u128) -> Self {
        let mut s = Self::new();
        s.push_run(start, len);
        s
    }

    /// Appends `len` consecutive ids starting at `start`.
    ///
    /// # Panics
    ///
    /// If `start` does not lie strictly above the current maximum.
    pub fn push_run(&mut self, start: u128, len: u128) {
        if len == 0 {
            return;
        }
        let end = start + (len - 1);
        match self.runs.last_mut() {
            Some((_, last)) if *last + 1 == start => *last = end,
            Some((_, last)) => {
                assert!(start > *last, "runs must be appended in ascending order");
                self.runs.push((start, end));
            }
            None => self.runs.push((start, end)),
        }
    }

    pub fn insert(&mut self, id: TokenId) {
        let v = id.0;
        if self.runs.last().is_none_or(|&(_, e)| v > e) {
            self.push_run(v, 1);
            return;
        }
        let idx = self.runs.partition_point(|&(_, e)| e < v);
        let (s, _) = self.runs[idx];
        if s <= v {
            return;
        }
        let joins_prev = idx > 0 && self.runs[idx - 1].1 + 1 == v;
        let joins_next = s == v + 1;
        match (joins_prev, joins_next) {
            (true, true) => {
                self.runs[idx - 1].1 = self.runs[idx].1;
                self.runs.remove(idx);
            }
            (true, false) => self.runs[idx - 1].1 = v,
            (false, true) => self.runs[idx].0 = v,
            (false, false) => self.runs.insert(idx, (v, v)),
        }
    }

    pub fn contains(&self, id: TokenId) -> bool {
        let idx = self.runs.partition_point(|&(_, e)| e < id.0);
        self.runs.get(idx).is_some_and(|&(s, _)| s <= id.0)
    }

    pub fn len(&self) -> u128 {
        self.runs.iter().map(|&(s, e)| e - s + 1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn min(&self) -> Option<TokenId> {
        self.runs.first().map(|&(s, _)| TokenId(s))
    }

    pub fn max(&self) -> Option<TokenId> {
        self.runs.last().map(|&(_, e)| TokenId(e))
    }

    /// Runs as inclusive ranges, ascending.
    pub fn runs(&self) -> impl ExactSizeIterator<Item = RangeInclusive<u128>> + '_ {
        self.runs.iter().map(|&(s, e)| s..=e)
    }

    pub fn run_count(&self) -> usize {
        self.runs.len()
    }

    /// Every id, ascending. Only sensible for small sets.
    pub fn iter(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.runs.iter().flat_map(|&(s, e)| (s..=e).map(TokenId))
    }

    /// Number of members strictly below `bound`.
    pub fn count_below(&self, bound: u128) -> u128 {
        self.runs.iter().take_while(|&&(s, _)| s < bound).map(|&(s, e)| e.min(bound - 1) - s + 1).sum()
    }
}

impl FromIterator<TokenId> for TokenSet {
    fn from_iter<I: IntoIterator<Item = TokenId>>(iter: I) -> Self {
        let mut ids: Vec<u128> = iter.into_iter().map(|t| t.0).collect();
        ids.sort_unstable();
        ids.dedup();
        let mut s = TokenSet::new();
        for id in ids {
            s.push_run(id, 1);
        }
        s
    }
}

impl fmt::Debug for TokenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set()
            .entries(self.runs.iter().map(|&(s, e)| if s == e { format!("{s}") } else { format!("{s}..={e}") }))
            .finish()
    }
}
