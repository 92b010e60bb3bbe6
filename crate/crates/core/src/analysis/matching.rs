use std::ops::RangeInclusive;

use num_traits::Float;

use crate::protocol::{TokenId, TokenSet};

/// A stretch of consecutive adversary tokens mapped onto consecutive user
/// tokens starting at `first_image`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchSegment {
    pub adversary: RangeInclusive<u128>,
    pub first_image: u128,
}

impl MatchSegment {
    pub fn image(&self, token: u128) -> Option<u128> {
        self.adversary.contains(&token).then(|| self.first_image + (token - self.adversary.start()))
    }
}

/// Outcome of the balance check for one epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct BalanceCheck {
    /// Greedy mapping, ascending. Complete when `witness` is `None`.
    pub mapping: Vec<MatchSegment>,
    /// First adversary token with no larger unmatched user token.
    pub witness: Option<TokenId>,
    /// Whether the adversary holds exactly `floor(W_a / y)` tokens.
    pub count_matches: bool,
    /// User tokens above the largest image.
    pub unmapped_tail: u128,
}

impl BalanceCheck {
    pub fn injective(&self) -> bool {
        self.witness.is_none()
    }

    pub fn balanced(&self) -> bool {
        self.injective() && self.count_matches
    }

    /// Flattened mapping. Only sensible for small sets.
    pub fn pairs(&self) -> Vec<(u128, u128)> {
        self.mapping.iter().flat_map(|s| s.adversary.clone().map(move |t| (t, s.image(t).unwrap()))).collect()
    }
}

/// Greedy injective mapping from adversary tokens to strictly larger user
/// tokens: each adversary token, in ascending order, takes the smallest
/// unmatched user token above it. A mapping exists iff the greedy one
/// succeeds. Works run by run, so cost grows with the number of runs rather
/// than the number of tokens.
pub fn greedy_matching(adversary: &TokenSet, user: &TokenSet) -> (Vec<MatchSegment>, Option<TokenId>) {
    let user_runs: Vec<(u128, u128)> = user.runs().map(|r| (*r.start(), *r.end())).collect();
    let mut mapping = Vec::new();
    let mut j = 0usize;
    // next user id that may still be used as an image
    let mut cursor = 0u128;

    for run in adversary.runs() {
        let (mut t, end) = (*run.start(), *run.end());
        loop {
            cursor = cursor.max(t + 1);
            while j < user_runs.len() && user_runs[j].1 < cursor {
                j += 1;
            }
            let Some(&(us, ue)) = user_runs.get(j) else {
                return (mapping, Some(TokenId(t)));
            };
            cursor = cursor.max(us);
            let k = (end - t + 1).min(ue - cursor + 1);
            push_segment(&mut mapping, t, t + k - 1, cursor);
            t += k;
            cursor += k;
            if t > end {
                break;
            }
        }
    }
    (mapping, None)
}

fn push_segment(mapping: &mut Vec<MatchSegment>, start: u128, end: u128, first_image: u128) {
    if let Some(last) = mapping.last_mut() {
        let len = last.adversary.end() - last.adversary.start() + 1;
        if *last.adversary.end() + 1 == start && last.first_image + len == first_image {
            last.adversary = *last.adversary.start()..=end;
            return;
        }
    }
    mapping.push(MatchSegment { adversary: start..=end, first_image });
}

/// Decides whether an epoch is balanced: every adversary token maps
/// injectively to a larger user token of the same epoch, and the adversary
/// bought exactly `floor(adversary_wealth / y)` tokens.
///
/// The count comparison allows a relative error of `1e-9` because the
/// wealth is a float while the token count is exact.
pub fn check_balanced_epoch<F: Float>(
    adversary: &TokenSet,
    user: &TokenSet,
    adversary_wealth: F,
    y: F,
) -> BalanceCheck {
    let (mapping, witness) = greedy_matching(adversary, user);
    let held = adversary.len();
    let expected = (adversary_wealth / y).floor();
    let held_f = F::from(held).unwrap_or_else(F::infinity);
    let tol = F::from(1e-9).unwrap() * held_f.max(F::one());
    let count_matches = (expected - held_f).abs() <= tol;
    let max_image = mapping.last().map(|s| s.first_image + (s.adversary.end() - s.adversary.start()));
    let unmapped_tail = match max_image {
        Some(m) => user.len() - user.count_below(m + 1),
        None => user.len(),
    };
    BalanceCheck { mapping, witness, count_matches, unmapped_tail }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[u128]) -> TokenSet {
        ids.iter().map(|&i| TokenId(i)).collect()
    }

    #[test]
    fn examples() {
        let c = check_balanced_epoch(&set(&[1, 2]), &set(&[3, 4, 5]), 160.0, 80.0);
        assert!(c.balanced());
        assert_eq!(c.pairs(), vec![(1, 3), (2, 4)]);
        assert_eq!(c.unmapped_tail, 1);

        let c = check_balanced_epoch(&set(&[5]), &set(&[1, 2]), 80.0, 80.0);
        assert!(!c.balanced());
        assert_eq!(c.witness, Some(TokenId(5)));

        let c = check_balanced_epoch(&set(&[1, 4]), &set(&[2, 3, 9]), 160.0, 80.0);
        assert!(c.balanced());
        assert_eq!(c.pairs(), vec![(1, 2), (4, 9)]);
    }

    #[test]
    fn count_mismatch_is_unbalanced() {
        let c = check_balanced_epoch(&set(&[1]), &set(&[3, 4]), 170.0, 80.0);
        assert!(c.injective());
        assert!(!c.count_matches);
    }

    #[test]
    fn huge_runs_match_in_constant_work() {
        let adv = TokenSet::from_run(1, 10u128.pow(30));
        let user = TokenSet::from_run(10u128.pow(30) + 1, 5 * 10u128.pow(30));
        let c = check_balanced_epoch(&adv, &user, 1e31, 10.0);
        assert!(c.balanced());
        assert_eq!(c.mapping.len(), 1);
        assert_eq!(c.unmapped_tail, 4 * 10u128.pow(30));
    }

    #[test]
    fn segments_split_across_user_runs() {
        let adv = TokenSet::from_run(1, 4);
        let user = set(&[2, 3, 10, 11, 12]);
        let (m, w) = greedy_matching(&adv, &user);
        assert_eq!(w, None);
        let c = BalanceCheck { mapping: m, witness: w, count_matches: true, unmapped_tail: 0 };
        assert_eq!(c.pairs(), vec![(1, 2), (2, 3), (3, 10), (4, 11)]);
    }
}
