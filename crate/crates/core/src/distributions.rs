//! Finite-support laws, finite probability spaces, and the quantile
//! machinery (CDF, upper quantile, truncation, exact quantile integrals).

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Tolerance on the total mass of user-supplied probabilities. Anything
/// within it is renormalized, anything outside is rejected.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A risk level in the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Level(f64);

impl Level {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Level(value))
        } else {
            Err(Error::InvalidLevel(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Level {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Level::new(value)
    }
}

/// Law of a random variable with finitely many values.
///
/// Atoms are strictly increasing, probabilities strictly positive. The
/// cumulative sums are accumulated once, left to right, and the last one is
/// pinned to exactly 1; every quantile-based routine reads the same array so
/// the `K` index is identical across the closed form, the integral and the
/// worst-case measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    atoms: Vec<f64>,
    probs: Vec<f64>,
    cum: Vec<f64>,
}

impl DiscreteDistribution {
    /// Builds a law from (value, probability) scenarios.
    ///
    /// Duplicate values are merged, zero-probability rows dropped, and the
    /// remaining mass renormalized to 1.
    pub fn from_scenarios(values: &[f64], probs: &[f64]) -> Result<Self> {
        if values.len() != probs.len() {
            return Err(Error::LengthMismatch {
                values: values.len(),
                probs: probs.len(),
            });
        }
        if values.is_empty() {
            return Err(Error::EmptySupport);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(i));
        }
        if let Some(i) = probs.iter().position(|p| !(*p >= 0.0)) {
            return Err(Error::NegativeProbability(probs[i], i));
        }
        let total: f64 = probs.iter().sum();
        if !((total - 1.0).abs() <= MASS_TOLERANCE) {
            return Err(Error::MassNotOne(total));
        }

        let pairs: Vec<(f64, f64)> = values
            .iter()
            .zip(probs)
            .filter(|(_, p)| **p > 0.0)
            .map(|(v, p)| (*v, *p))
            .collect();
        if pairs.is_empty() {
            return Err(Error::EmptySupport);
        }
        let (atoms, mut merged) = sort_and_merge(pairs);
        let mass: f64 = merged.iter().sum();
        for p in &mut merged {
            *p /= mass;
        }
        Ok(Self::from_canonical(atoms, merged))
    }

    /// Empirical law: every value carries weight 1/n.
    pub fn from_sample(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySupport);
        }
        let w = 1.0 / values.len() as f64;
        let weights = vec![w; values.len()];
        Self::from_scenarios(values, &weights)
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        Self::from_scenarios(&[value], &[1.0])
    }

    /// Atoms must be strictly increasing and probabilities positive.
    fn from_canonical(atoms: Vec<f64>, probs: Vec<f64>) -> Self {
        debug_assert!(atoms.windows(2).all(|w| w[0] < w[1]));
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cum.push(acc);
        }
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        DiscreteDistribution { atoms, probs, cum }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Cumulative probabilities `c_k = p_1 + ... + p_k`, with `c_N = 1`.
    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn min_atom(&self) -> f64 {
        self.atoms[0]
    }

    pub fn max_atom(&self) -> f64 {
        self.atoms[self.atoms.len() - 1]
    }

    /// `F(x) = P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let idx = self.atoms.partition_point(|a| *a <= x);
        if idx == 0 {
            0.0
        } else {
            self.cum[idx - 1]
        }
    }

    /// Index of the atom `q⁺_β = inf{x : F(x) > β}`.
    pub fn upper_quantile_index(&self, level: Level) -> usize {
        let beta = level.value();
        // cum ends at exactly 1 > beta, so the index is always in range
        self.cum.partition_point(|c| *c <= beta)
    }

    /// Upper quantile `q⁺_β = inf{x : F(x) > β}`; always an atom.
    pub fn upper_quantile(&self, level: Level) -> f64 {
        self.atoms[self.upper_quantile_index(level)]
    }

    /// Smallest index `K` with `c_K >= α` (zero-based).
    pub fn tail_index(&self, level: Level) -> usize {
        let alpha = level.value();
        self.cum.partition_point(|c| *c < alpha)
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().zip(&self.probs).map(|(x, p)| x * p).sum()
    }

    /// Exact integral of `β ↦ q⁺_β` over `(a, b)`.
    ///
    /// The quantile function equals `x_k` on `(c_{k-1}, c_k)`. Cells fully
    /// inside the interval contribute `x_k p_k`; the (at most two) boundary
    /// cells contribute `x_k` times the overlap length.
    pub fn quantile_integral(&self, a: f64, b: f64) -> Result<f64> {
        if !(a >= 0.0 && b <= 1.0 && a < b) {
            return Err(Error::InvalidInterval { a, b });
        }
        let mut total = 0.0;
        let mut lo = 0.0;
        for ((x, p), hi) in self.atoms.iter().zip(&self.probs).zip(&self.cum) {
            if lo >= b {
                break;
            }
            if a <= lo && *hi <= b {
                total += x * p;
            } else {
                let overlap = b.min(*hi) - a.max(lo);
                if overlap > 0.0 {
                    total += x * overlap;
                }
            }
            lo = *hi;
        }
        Ok(total)
    }

    /// Law of `max(min(X, upper), lower)`. Pass infinities for one-sided
    /// truncation.
    pub fn truncate(&self, lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::InvalidBounds { lower, upper });
        }
        Ok(self.map_monotone(|x| x.min(upper).max(lower)))
    }

    /// Law of `X + c`.
    pub fn shift(&self, c: f64) -> Self {
        self.map_monotone(|x| x + c)
    }

    /// Law of `f(X)` for a nondecreasing `f`. Probabilities are carried
    /// over unchanged (merged where `f` collapses atoms), never renormalized.
    pub fn map_monotone(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut atoms: Vec<f64> = Vec::with_capacity(self.atoms.len());
        let mut probs: Vec<f64> = Vec::with_capacity(self.atoms.len());
        for (x, p) in self.atoms.iter().zip(&self.probs) {
            let y = f(*x);
            match atoms.last() {
                Some(last) if *last == y => *probs.last_mut().unwrap() += p,
                Some(last) if *last > y => {
                    // f was not monotone after rounding; fall back to sorting.
                    return self.map(f);
                }
                _ => {
                    atoms.push(y);
                    probs.push(*p);
                }
            }
        }
        Self::from_canonical(atoms, probs)
    }

    /// Law of `f(X)` for an arbitrary finite-valued `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let pairs = self
            .atoms
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| (f(*x), *p))
            .collect();
        let (atoms, probs) = sort_and_merge(pairs);
        Self::from_canonical(atoms, probs)
    }
}

fn sort_and_merge(mut pairs: Vec<(f64, f64)>) -> (Vec<f64>, Vec<f64>) {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut atoms: Vec<f64> = Vec::with_capacity(pairs.len());
    let mut probs: Vec<f64> = Vec::with_capacity(pairs.len());
    for (v, p) in pairs {
        if atoms.last() == Some(&v) {
            *probs.last_mut().unwrap() += p;
        } else {
            atoms.push(v);
            probs.push(p);
        }
    }
    (atoms, probs)
}

/// An explicit finite probability space carrying labelled random variables.
///
/// Pointwise statements (`X >= Y`, `X + Y`, conditional expectations on
/// events) need the joint structure that a law alone does not keep.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    outcomes: Vec<String>,
    probs: Vec<f64>,
    variables: BTreeMap<String, Vec<f64>>,
}

impl FiniteSpace {
    pub fn new(outcomes: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if outcomes.len() != probs.len() {
            return Err(Error::LengthMismatch {
                values: outcomes.len(),
                probs: probs.len(),
            });
        }
        if outcomes.is_empty() {
            return Err(Error::EmptySupport);
        }
        if let Some(i) = probs.iter().position(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::NonPositiveOutcome(probs[i], i));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::MassNotOne(total));
        }
        let probs = probs.into_iter().map(|p| p / total).collect();
        Ok(FiniteSpace {
            outcomes,
            probs,
            variables: BTreeMap::new(),
        })
    }

    /// Space with outcomes `w1..wm` and the given probabilities.
    pub fn with_probs(probs: Vec<f64>) -> Result<Self> {
        let outcomes = (1..=probs.len()).map(|i| format!("w{i}")).collect();
        Self::new(outcomes, probs)
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptySupport);
        }
        Self::with_probs(vec![1.0 / m as f64; m])
    }

    pub fn with_variable(mut self, label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        self.insert_variable(label, values)?;
        Ok(self)
    }

    pub fn insert_variable(&mut self, label: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let label = label.into();
        if values.len() != self.probs.len() {
            return Err(Error::VariableLength {
                label,
                got: values.len(),
                expected: self.probs.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(i));
        }
        self.variables.insert(label, values);
        Ok(())
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.variables.keys().map(String::as_str)
    }

    pub fn variable(&self, label: &str) -> Result<&[f64]> {
        self.variables
            .get(label)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingVariable(label.to_string()))
    }

    /// Marginal law of a labelled variable.
    pub fn law(&self, label: &str) -> Result<DiscreteDistribution> {
        self.law_of(self.variable(label)?)
    }

    /// Law of an ad hoc variable given by its per-outcome values.
    pub fn law_of(&self, values: &[f64]) -> Result<DiscreteDistribution> {
        DiscreteDistribution::from_scenarios(values, &self.probs)
    }

    /// Pointwise sum `X + Y`.
    pub fn sum_of(&self, x: &str, y: &str) -> Result<Vec<f64>> {
        let xs = self.variable(x)?;
        let ys = self.variable(y)?;
        Ok(xs.iter().zip(ys).map(|(a, b)| a + b).collect())
    }
}
