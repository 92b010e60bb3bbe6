//! Closed-form wealth bounds for the masquerade game and checks of simulated
//! epochs against them.

mod matching;

use std::fmt;

use num_traits::Float;
use thiserror::Error;

pub use matching::{check_balanced_epoch, greedy_matching, BalanceCheck, MatchSegment};

use crate::engine::{EpochBoundary, ScenarioConfig};
use crate::num::Currency;

/// Parameters of the bounds.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BoundParams<F> {
    /// Bound on the adversary/user wealth ratio.
    pub sigma: F,
    pub epsilon: F,
    /// Tail-surplus coefficient.
    pub c: F,
    pub f: F,
    pub eta: F,
    pub y: F,
    pub tau: F,
    pub w_u0: F,
    pub w_a0: F,
}

impl<F: Float> BoundParams<F> {
    /// Smallest coefficient strictly above `(f+ε)/(1−f−ε)`, nudged up by a
    /// relative `1e-9`.
    pub fn min_tail_c(f: F, epsilon: F) -> F {
        let b = (f + epsilon) / (F::one() - f - epsilon);
        b + b.abs().max(F::one()) * F::from(1e-9).unwrap()
    }

    /// `1 + fη/y`, the per-epoch adversary growth factor.
    pub fn adversary_growth(&self) -> F {
        F::one() + self.f * self.eta / self.y
    }

    /// `1 + η/y − σfη/y`, the per-epoch user growth factor.
    pub fn user_growth(&self) -> F {
        F::one() + self.eta / self.y - self.sigma * self.f * self.eta / self.y
    }
}

impl BoundParams<f64> {
    /// Reads the bound parameters from a scenario. Only constant opportunity
    /// values have a closed form.
    pub fn from_config(config: &ScenarioConfig) -> Option<Self> {
        let crate::engine::EtaModel::Constant(eta) = config.eta_model else {
            return None;
        };
        let b = &config.bounds;
        Some(BoundParams {
            sigma: b.sigma,
            epsilon: b.epsilon,
            c: b.tail_c.unwrap_or_else(|| Self::min_tail_c(config.f, b.epsilon)),
            f: config.f,
            eta,
            y: config.y,
            tau: config.tau,
            w_u0: config.w_user0,
            w_a0: config.w_adv0,
        })
    }
}

/// A precondition of the balance theorem.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    /// `W_a0 < σ·W_u0` and `σ < 1/2`.
    WealthRatio,
    /// `f < (1−σ−ε)/(1+σ)`.
    Slippage,
    /// `ε < (yf + f²η)/(η(1−f))`.
    Slack,
    /// `W_a0 > y²/(ηε)`.
    AdversaryFloor,
    /// `τ < ε·W_u0`.
    Threshold,
    /// `c > (f+ε)/(1−f−ε)`.
    TailSurplus,
}

impl Condition {
    pub const ALL: [Condition; 6] = [
        Condition::WealthRatio,
        Condition::Slippage,
        Condition::Slack,
        Condition::AdversaryFloor,
        Condition::Threshold,
        Condition::TailSurplus,
    ];

    pub fn describe(self) -> &'static str {
        match self {
            Condition::WealthRatio => "W_a0 < sigma*W_u0 with sigma < 1/2",
            Condition::Slippage => "f < (1-sigma-epsilon)/(1+sigma)",
            Condition::Slack => "epsilon < (y*f + f^2*eta)/(eta*(1-f))",
            Condition::AdversaryFloor => "W_a0 > y^2/(eta*epsilon)",
            Condition::Threshold => "tau < epsilon*W_u0",
            Condition::TailSurplus => "c > (f+epsilon)/(1-f-epsilon)",
        }
    }

    pub fn holds<F: Float>(self, p: &BoundParams<F>) -> bool {
        let one = F::one();
        let half = F::from(0.5).unwrap();
        match self {
            Condition::WealthRatio => p.w_a0 < p.sigma * p.w_u0 && p.sigma < half,
            Condition::Slippage => p.f < (one - p.sigma - p.epsilon) / (one + p.sigma),
            Condition::Slack => p.epsilon < (p.y * p.f + p.f * p.f * p.eta) / (p.eta * (one - p.f)),
            Condition::AdversaryFloor => p.w_a0 > p.y * p.y / (p.eta * p.epsilon),
            Condition::Threshold => p.tau < p.epsilon * p.w_u0,
            Condition::TailSurplus => p.c > (p.f + p.epsilon) / (one - p.f - p.epsilon),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.describe())
    }
}

/// Checks every precondition independently and lists the ones that fail.
pub fn validate_params<F: Float>(p: &BoundParams<F>) -> Result<(), Vec<Condition>> {
    let failed: Vec<Condition> = Condition::ALL.into_iter().filter(|c| !c.holds(p)).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(failed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("bound has a non-positive denominator")]
    DegenerateDenominator,
}

/// Upper bound on adversary wealth after `k` epochs: `W_a0·(1+fη/y)^k`.
pub fn adv_wealth_upper<F: Float>(w_a0: F, f: F, eta: F, y: F, k: u32) -> F {
    w_a0 * (F::one() + f * eta / y).powi(k as i32)
}

/// Lower bound on adversary wealth after `k` epochs: `(W_a0−y)(1+fη/y)^k + y`.
pub fn adv_wealth_lower<F: Float>(w_a0: F, f: F, eta: F, y: F, k: u32) -> F {
    (w_a0 - y) * (F::one() + f * eta / y).powi(k as i32) + y
}

/// Lower bound on user wealth after `k` epochs:
/// `W_u0·g^k − (τη/y)(g^k−1)/(g−1)` with `g = 1 + η/y − σfη/y`.
pub fn user_wealth_lower<F: Float>(w_u0: F, sigma: F, f: F, eta: F, y: F, tau: F, k: u32) -> F {
    let g = F::one() + eta / y - sigma * f * eta / y;
    let gk = g.powi(k as i32);
    // geometric sum 1 + g + ... + g^(k-1)
    let series = if g == F::one() { F::from(k).unwrap() } else { (gk - F::one()) / (g - F::one()) };
    w_u0 * gk - tau * eta / y * series
}

/// Bound on the share of user transactions frontrun during epoch `e ≥ 1`.
pub fn frontrun_fraction_bound<F: Float>(p: &BoundParams<F>, e: u32) -> Result<F, AnalysisError> {
    let k = e.saturating_sub(1);
    let num = adv_wealth_upper(p.w_a0, p.f, p.eta, p.y, k);
    let den = user_wealth_lower(p.w_u0, p.sigma, p.f, p.eta, p.y, p.tau, k) - p.tau;
    if den <= F::zero() || !den.is_finite() {
        return Err(AnalysisError::DegenerateDenominator);
    }
    Ok(num / den)
}

/// Worst-case ratio between an optimal adversary's reward and the greedy
/// one's: `y/(y−ηε)`.
pub fn optimality_ratio<F: Float>(y: F, eta: F, epsilon: F) -> Result<F, AnalysisError> {
    let den = y - eta * epsilon;
    if den <= F::zero() {
        return Err(AnalysisError::DegenerateDenominator);
    }
    Ok(y / den)
}

/// Bound checked per epoch.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum BoundKind {
    AdversaryUpper,
    AdversaryLower,
    UserLower,
    WealthRatio,
    FrontrunFraction,
    Unbalanced,
    /// Not part of the theorem statement: the user tokens left without a
    /// preimage fall short of `c·ceil(W_a/y)`.
    TailSurplus,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::AdversaryUpper => "adversary_upper",
            BoundKind::AdversaryLower => "adversary_lower",
            BoundKind::UserLower => "user_lower",
            BoundKind::WealthRatio => "wealth_ratio",
            BoundKind::FrontrunFraction => "frontrun_fraction",
            BoundKind::Unbalanced => "unbalanced",
            BoundKind::TailSurplus => "tail_surplus",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct BoundViolation {
    pub epoch: u64,
    pub kind: BoundKind,
}

/// One row of a [`BoundsReport`].
#[derive(Clone, Debug, PartialEq)]
pub struct EpochBounds<F> {
    pub epoch: u64,
    pub adversary_wealth: F,
    pub adversary_upper: F,
    pub adversary_lower: F,
    pub user_wealth: F,
    pub user_lower: F,
    pub frontrun_fraction: F,
    /// `None` for the first epoch, which has no opportunities.
    pub fraction_bound: Option<F>,
    pub balanced: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsReport<F> {
    pub rows: Vec<EpochBounds<F>>,
    /// Violations of the theorem statements.
    pub violations: Vec<BoundViolation>,
    /// Violations of the induction hypothesis used in the proof only.
    pub proof_invariant_violations: Vec<BoundViolation>,
}

impl<F> BoundsReport<F> {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first_violation(&self) -> Option<BoundViolation> {
        self.violations.first().copied()
    }
}

/// Relative slack used when comparing a simulated quantity with a bound.
/// Several bounds are attained exactly, so a strict float comparison would
/// report rounding noise.
fn within<F: Float>(value: F, bound: F, upper: bool) -> bool {
    let tol = F::from(1e-12).unwrap() * value.abs().max(bound.abs()).max(F::one());
    if upper {
        value <= bound + tol
    } else {
        value >= bound - tol
    }
}

/// Checks every non-terminal epoch of a masquerade run against the bounds.
///
/// Refuses to run when the preconditions fail.
pub fn verify_run<C: Currency, F: Float>(
    epochs: &[EpochBoundary<C>],
    p: &BoundParams<F>,
) -> Result<BoundsReport<F>, Vec<Condition>> {
    validate_params(p)?;
    let to_f = |c: C| F::from(c.as_f64()).unwrap();
    let mut report = BoundsReport { rows: Vec::new(), violations: Vec::new(), proof_invariant_violations: Vec::new() };

    for e in epochs.iter().filter(|e| !e.terminal) {
        let k = e.index as u32;
        let w_a = to_f(e.adversary_wealth);
        let w_u = to_f(e.user_wealth);
        let upper = adv_wealth_upper(p.w_a0, p.f, p.eta, p.y, k);
        let lower = adv_wealth_lower(p.w_a0, p.f, p.eta, p.y, k);
        let user_lower = user_wealth_lower(p.w_u0, p.sigma, p.f, p.eta, p.y, p.tau, k);
        let fraction = F::from(e.frontrun_fraction()).unwrap();
        let fraction_bound = if k == 0 { None } else { frontrun_fraction_bound(p, k).ok() };
        let check = check_balanced_epoch(&e.adversary_tokens, &e.user_tokens, w_a, p.y);

        let mut flag = |ok: bool, kind| {
            if !ok {
                report.violations.push(BoundViolation { epoch: e.index, kind });
            }
        };
        flag(within(w_a, upper, true), BoundKind::AdversaryUpper);
        flag(within(w_a, lower, false), BoundKind::AdversaryLower);
        flag(within(w_u, user_lower, false), BoundKind::UserLower);
        flag(w_a < p.sigma * w_u, BoundKind::WealthRatio);
        if k > 0 {
            flag(fraction_bound.is_some_and(|b| within(fraction, b, true)), BoundKind::FrontrunFraction);
        }
        flag(check.balanced(), BoundKind::Unbalanced);

        let required = p.c * (w_a / p.y).ceil();
        if F::from(check.unmapped_tail).unwrap_or_else(F::infinity) < required {
            report.proof_invariant_violations.push(BoundViolation { epoch: e.index, kind: BoundKind::TailSurplus });
        }

        report.rows.push(EpochBounds {
            epoch: e.index,
            adversary_wealth: w_a,
            adversary_upper: upper,
            adversary_lower: lower,
            user_wealth: w_u,
            user_lower,
            frontrun_fraction: fraction,
            fraction_bound,
            balanced: check.balanced(),
        });
    }
    Ok(report)
}
