//! Executable versions of the limiting arguments that carry the dual
//! representation from discrete to bounded to integrable positions:
//! discretization from above, truncation stability, and the `X_{m,n}`
//! witness search.

use crate::distributions::{DiscreteDistribution, Level};
use crate::duality::{
    expectation_under, is_feasible, worst_case_measure, DensityMeasure, Orientation,
};
use crate::error::{Error, Result};
use crate::risk_measures::es_closed_form;
use crate::ORACLE_TOLERANCE;

/// Smallest multiple of `delta` that is `>= x`.
pub fn discretize_up(x: f64, delta: f64) -> f64 {
    let steps = (x / delta).ceil();
    let v = steps * delta;
    if v < x {
        (steps + 1.0) * delta
    } else {
        v
    }
}

/// Law of `X' = δ·⌈X/δ⌉`, so that `X <= X' <= X + δ` on every outcome.
pub fn upper_discretization(
    dist: &DiscreteDistribution,
    delta: f64,
) -> Result<DiscreteDistribution> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidDelta(delta));
    }
    Ok(dist.map_monotone(|x| discretize_up(x, delta)))
}

/// `es(D) - δ <= es(X') <= es(D)` for the upper discretization `X'`.
pub fn sandwich_holds(dist: &DiscreteDistribution, level: Level, delta: f64) -> Result<bool> {
    let es = es_closed_form(dist, level);
    let es_up = es_closed_form(&upper_discretization(dist, delta)?, level);
    Ok(es_up <= es + ORACLE_TOLERANCE && es_up >= es - delta - ORACLE_TOLERANCE)
}

/// Integer `k` above which truncating `X` from above leaves every quantile
/// below `α` unchanged: `k = ⌊q⁺_γ(X)⌋ + 1` with `γ = (1 + α)/2`.
pub fn truncation_stability_bound(dist: &DiscreteDistribution, level: Level) -> f64 {
    let gamma = Level::new((1.0 + level.value()) / 2.0).expect("(1 + α)/2 lies in (α, 1)");
    dist.upper_quantile(gamma).floor() + 1.0
}

/// Truncation levels `m` (upper) and `n` (lower) at which `X_{m,n} =
/// max(min(X, m), -n)` is close enough to `X` for the ε-argument to go through.
#[derive(Debug, Clone, PartialEq)]
pub struct Step3Witness {
    /// Upper truncation level; always integral.
    pub m: f64,
    /// Lower truncation level; always integral.
    pub n: f64,
    pub epsilon: f64,
    /// `ES_α(X_{m,n} + ε)`
    pub truncated_es_shifted: f64,
    /// `E_P|X - X_{m,n}|`
    pub l1_error: f64,
}

impl Step3Witness {
    pub fn conditions_hold(&self, level: Level) -> bool {
        self.truncated_es_shifted > 0.0 && self.l1_error < level.value() * self.epsilon
    }

    fn clip(&self, x: f64) -> f64 {
        x.min(self.m).max(-self.n)
    }
}

fn truncated_shifted(
    dist: &DiscreteDistribution,
    m: f64,
    n: f64,
    eps: f64,
) -> DiscreteDistribution {
    dist.map_monotone(|x| x.min(m).max(-n) + eps)
}

fn l1_truncation_error(dist: &DiscreteDistribution, m: f64, n: f64) -> f64 {
    dist.atoms()
        .iter()
        .zip(dist.probs())
        .map(|(x, p)| (x - x.min(m).max(-n)).abs() * p)
        .sum()
}

/// Doubling search `m = n = 1, 2, 4, …` for the first truncation with
/// `ES_α(X_{m,n} + ε) > 0` and `E_P|X - X_{m,n}| < αε`.
pub fn step3_witness(
    dist: &DiscreteDistribution,
    level: Level,
    epsilon: f64,
) -> Result<Step3Witness> {
    let es = es_closed_form(dist, level);
    if !(es > 0.0) {
        return Err(Error::PreconditionViolated(format!(
            "expected shortfall {es} is not positive"
        )));
    }
    if !(epsilon > 0.0 && epsilon < es) {
        return Err(Error::PreconditionViolated(format!(
            "epsilon {epsilon} is outside (0, {es})"
        )));
    }
    let mut bound = 1.0_f64;
    while bound.is_finite() {
        let shifted = truncated_shifted(dist, bound, bound, epsilon);
        let witness = Step3Witness {
            m: bound,
            n: bound,
            epsilon,
            truncated_es_shifted: es_closed_form(&shifted, level),
            l1_error: l1_truncation_error(dist, bound, bound),
        };
        if witness.conditions_hold(level) {
            return Ok(witness);
        }
        bound *= 2.0;
    }
    Err(Error::SearchExhausted)
}

/// A measure `Q ∈ P_α` with `E_Q(X_{m,n} + ε) < 0`, and the bound it implies
/// on `E_Q(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Step3Certificate {
    /// Densities over the atoms of the original law.
    pub measure: DensityMeasure,
    pub feasible: bool,
    /// `E_Q(X_{m,n} + ε)`
    pub truncated_expectation: f64,
    /// `E_Q(X)`
    pub expectation: f64,
    /// `l1_error/α - ε`
    pub bound: f64,
}

impl Step3Certificate {
    /// `E_Q(X) <= bound < 0`.
    pub fn certifies_negative(&self) -> bool {
        self.feasible
            && self.truncated_expectation < 0.0
            && self.expectation <= self.bound + ORACLE_TOLERANCE
            && self.bound < 0.0
    }
}

/// Builds the worst-case measure of `X_{m,n} + ε` and pulls it back to the
/// atoms of `X` (outcomes merged by the truncation share one density).
pub fn step3_certificate(
    dist: &DiscreteDistribution,
    level: Level,
    witness: &Step3Witness,
) -> Step3Certificate {
    let shifted = truncated_shifted(dist, witness.m, witness.n, witness.epsilon);
    let q_trunc = worst_case_measure(&shifted, level);
    let truncated_expectation = expectation_under(&shifted, &q_trunc, Orientation::Position)
        .expect("measure built over the truncated law");

    let densities: Vec<f64> = dist
        .atoms()
        .iter()
        .map(|x| {
            let y = witness.clip(*x) + witness.epsilon;
            let j = shifted
                .atoms()
                .binary_search_by(|a| a.total_cmp(&y))
                .expect("truncated atom present in the truncated law");
            q_trunc.densities()[j]
        })
        .collect();
    let measure = DensityMeasure::over(dist, densities).expect("one density per atom");
    let expectation = expectation_under(dist, &measure, Orientation::Position)
        .expect("measure built over the original law");
    Step3Certificate {
        feasible: is_feasible(&measure, level),
        measure,
        truncated_expectation,
        expectation,
        bound: witness.l1_error / level.value() - witness.epsilon,
    }
}

/// `ES_α(X + 1/n)` for `n = 1..=n_max`; nondecreasing towards `ES_α(X)`.
pub fn verify_continuity_from_above(
    dist: &DiscreteDistribution,
    level: Level,
    n_max: usize,
) -> Vec<f64> {
    (1..=n_max)
        .map(|n| es_closed_form(&dist.shift(1.0 / n as f64), level))
        .collect()
}

/// `|E_Q(X) - E_Q(X')| <= E_P|X - X'| / α` for `Q ∈ P_α` and two variables
/// given on the same base. Returns `(lhs, rhs)`.
pub fn density_transfer_bound(
    base: &[f64],
    x: &[f64],
    x_prime: &[f64],
    measure: &DensityMeasure,
    level: Level,
) -> Result<(f64, f64)> {
    if x.len() != base.len() || x_prime.len() != base.len() {
        return Err(Error::BaseMismatch);
    }
    let lhs = (measure.expectation(base, x)? - measure.expectation(base, x_prime)?).abs();
    let l1: f64 = x
        .iter()
        .zip(x_prime)
        .zip(base)
        .map(|((a, b), p)| (a - b).abs() * p)
        .sum();
    Ok((lhs, l1 / level.value()))
}
