//! Value at Risk, Expected Shortfall and Worst Conditional Expectation.

use crate::distributions::{DiscreteDistribution, FiniteSpace, Level};
use crate::error::{Error, Result};
use crate::ORACLE_TOLERANCE;

/// Largest space for which WCE is computed by enumerating every event.
pub const MAX_WCE_OUTCOMES: usize = 20;

/// `VaR_β(X) = -q⁺_β(X)`.
pub fn var(dist: &DiscreteDistribution, level: Level) -> f64 {
    -dist.upper_quantile(level)
}

/// Expected Shortfall from the tail index `K = min{h : c_h >= α}`:
///
/// `ES_α(X) = Σ_{k<K} (x_K - x_k) p_k / α - x_K`.
pub fn es_closed_form(dist: &DiscreteDistribution, level: Level) -> f64 {
    let alpha = level.value();
    let k = dist.tail_index(level);
    let atoms = dist.atoms();
    let x_k = atoms[k];
    let spread: f64 = atoms[..k]
        .iter()
        .zip(&dist.probs()[..k])
        .map(|(x, p)| (x_k - x) * p)
        .sum();
    spread / alpha - x_k
}

/// Expected Shortfall as the average of `VaR_β` over `β ∈ (0, α)`, integrated
/// exactly over the quantile breakpoints.
pub fn es_integral(dist: &DiscreteDistribution, level: Level) -> f64 {
    let alpha = level.value();
    let integral = dist
        .quantile_integral(0.0, alpha)
        .expect("(0, α) is a valid interval for α in (0, 1)");
    -integral / alpha
}

/// Shorthand for [`es_closed_form`].
#[inline]
pub fn es(dist: &DiscreteDistribution, level: Level) -> f64 {
    es_closed_form(dist, level)
}

/// Maximizer of `E(-X | A)` over events with `P(A) > α`.
#[derive(Debug, Clone, PartialEq)]
pub struct WceResult {
    pub value: f64,
    /// Outcome indices of the maximizing event, ascending.
    pub event: Vec<usize>,
}

/// Worst Conditional Expectation by exhaustive enumeration of events.
///
/// Ties on the value are broken towards the lexicographically smallest
/// index list.
pub fn wce(space: &FiniteSpace, label: &str, level: Level) -> Result<WceResult> {
    let values = space.variable(label)?;
    wce_of_values(space.probs(), values, level)
}

pub(crate) fn wce_of_values(probs: &[f64], values: &[f64], level: Level) -> Result<WceResult> {
    let m = probs.len();
    if m > MAX_WCE_OUTCOMES {
        return Err(Error::TooManyOutcomes(m, MAX_WCE_OUTCOMES));
    }
    let alpha = level.value();
    let mut best: Option<(f64, u32)> = None;
    for mask in 1u32..(1u32 << m) {
        let mut mass = 0.0;
        let mut loss = 0.0;
        let mut bits = mask;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            mass += probs[i];
            loss -= values[i] * probs[i];
            bits &= bits - 1;
        }
        if mass <= alpha {
            continue;
        }
        let cond = loss / mass;
        best = match best {
            None => Some((cond, mask)),
            Some((v, _)) if cond > v => Some((cond, mask)),
            Some((v, b)) if cond == v && lex_less(mask, b) => Some((cond, mask)),
            keep => keep,
        };
    }
    // Ω itself has mass 1 > α, so at least one event qualifies.
    let (value, mask) = best.expect("the full event is always feasible");
    Ok(WceResult {
        value,
        event: mask_indices(mask),
    })
}

fn mask_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

fn lex_less(a: u32, b: u32) -> bool {
    mask_indices(a) < mask_indices(b)
}

/// VaR, ES by both routes, and (for small spaces) WCE at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub alpha: Level,
    pub var_at_alpha: f64,
    pub es: f64,
    pub es_oracle: f64,
    pub wce: Option<f64>,
}

impl RiskReport {
    pub fn for_distribution(dist: &DiscreteDistribution, level: Level) -> Self {
        RiskReport {
            alpha: level,
            var_at_alpha: var(dist, level),
            es: es_closed_form(dist, level),
            es_oracle: es_integral(dist, level),
            wce: None,
        }
    }

    /// Includes WCE when the space is small enough to enumerate.
    pub fn for_space(space: &FiniteSpace, label: &str, level: Level) -> Result<Self> {
        let mut report = Self::for_distribution(&space.law(label)?, level);
        if space.len() <= MAX_WCE_OUTCOMES {
            report.wce = Some(wce(space, label, level)?.value);
        }
        Ok(report)
    }

    pub fn is_consistent(&self) -> bool {
        let oracle_ok = (self.es - self.es_oracle).abs() <= ORACLE_TOLERANCE;
        let wce_ok = self.wce.is_none_or(|w| w <= self.es + ORACLE_TOLERANCE);
        oracle_ok && wce_ok
    }
}

/// Monotonicity: with `X >= Y` pointwise, `ES(X) <= ES(Y)`.
///
/// Fails with `PreconditionViolated` if `X >= Y` does not hold on every
/// outcome.
pub fn monotonicity_holds(
    space: &FiniteSpace,
    upper: &str,
    lower: &str,
    level: Level,
) -> Result<bool> {
    let xs = space.variable(upper)?;
    let ys = space.variable(lower)?;
    if xs.iter().zip(ys).any(|(x, y)| x < y) {
        return Err(Error::PreconditionViolated(format!(
            "`{upper}` is not pointwise >= `{lower}`"
        )));
    }
    let es_x = es(&space.law(upper)?, level);
    let es_y = es(&space.law(lower)?, level);
    Ok(es_x <= es_y + ORACLE_TOLERANCE)
}

/// `|ES(X + c) - (ES(X) - c)|`.
pub fn cash_invariance_gap(dist: &DiscreteDistribution, level: Level, c: f64) -> f64 {
    (es(&dist.shift(c), level) - (es(dist, level) - c)).abs()
}

/// Whether `ES(min{X, m}) == ES(X)` holds exactly.
pub fn truncation_preserves_es(dist: &DiscreteDistribution, level: Level, m: f64) -> bool {
    let clipped = dist.map_monotone(|x| x.min(m));
    es(&clipped, level) == es(dist, level)
}
