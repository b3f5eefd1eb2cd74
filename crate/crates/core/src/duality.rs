//! The dual set `P_α = {Q ≪ P : dQ/dP <= 1/α}`, the worst-case measure,
//! an independent greedy solver for `sup_{Q ∈ P_α} E_Q(-X)`, randomized
//! feasible measures, and the acceptance-set and subadditivity checks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distributions::{DiscreteDistribution, FiniteSpace, Level};
use crate::error::{Error, Result};
use crate::risk_measures::es_closed_form;
use crate::{IDENTITY_TOLERANCE, ORACLE_TOLERANCE};

/// A measure `Q` given by its density `dQ/dP` on each atom (or outcome) of a
/// reference probability vector `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMeasure {
    base: Vec<f64>,
    densities: Vec<f64>,
}

impl DensityMeasure {
    /// No feasibility check beyond matching lengths; see [`is_feasible`].
    pub fn new(base: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        if base.len() != densities.len() {
            return Err(Error::LengthMismatch {
                values: densities.len(),
                probs: base.len(),
            });
        }
        Ok(DensityMeasure { base, densities })
    }

    pub fn over(dist: &DiscreteDistribution, densities: Vec<f64>) -> Result<Self> {
        Self::new(dist.probs().to_vec(), densities)
    }

    /// `Q = P`.
    pub fn reference(base: &[f64]) -> Self {
        DensityMeasure {
            base: base.to_vec(),
            densities: vec![1.0; base.len()],
        }
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    /// Per-atom masses `q_k = d_k p_k`.
    pub fn masses(&self) -> Vec<f64> {
        self.densities
            .iter()
            .zip(&self.base)
            .map(|(d, p)| d * p)
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.densities
            .iter()
            .zip(&self.base)
            .map(|(d, p)| d * p)
            .sum()
    }

    /// `E_Q(values)` over the same base.
    pub fn expectation(&self, base: &[f64], values: &[f64]) -> Result<f64> {
        if base != self.base.as_slice() || values.len() != self.base.len() {
            return Err(Error::BaseMismatch);
        }
        Ok(values
            .iter()
            .zip(&self.densities)
            .zip(&self.base)
            .map(|((x, d), p)| x * d * p)
            .sum())
    }
}

/// Which side of the position an expectation is taken on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `E_Q(X)`
    Position,
    /// `E_Q(-X)`
    Loss,
}

impl Orientation {
    fn sign(self) -> f64 {
        match self {
            Orientation::Position => 1.0,
            Orientation::Loss => -1.0,
        }
    }
}

/// Membership in `P_α`: nonnegative densities bounded by `1/α`, unit mass.
pub fn is_feasible(measure: &DensityMeasure, level: Level) -> bool {
    let cap = 1.0 / level.value() + IDENTITY_TOLERANCE;
    let bounded = measure
        .densities
        .iter()
        .all(|d| d.is_finite() && *d >= 0.0 && *d <= cap);
    bounded && (measure.total_mass() - 1.0).abs() <= IDENTITY_TOLERANCE
}

/// `E_Q(±X)` for `X` distributed as `dist` under `P`.
pub fn expectation_under(
    dist: &DiscreteDistribution,
    measure: &DensityMeasure,
    orientation: Orientation,
) -> Result<f64> {
    Ok(orientation.sign() * measure.expectation(dist.probs(), dist.atoms())?)
}

/// `E_Q(±X)` for a labelled variable on a finite space.
pub fn expectation_on_space(
    space: &FiniteSpace,
    label: &str,
    measure: &DensityMeasure,
    orientation: Orientation,
) -> Result<f64> {
    let values = space.variable(label)?;
    Ok(orientation.sign() * measure.expectation(space.probs(), values)?)
}

/// The maximizer of `E_Q(-X)` over `P_α`: full weight `1/α` on the atoms
/// below the tail index `K`, the residual `(α - c_{K-1})/α` on atom `K`,
/// nothing above.
pub fn worst_case_measure(dist: &DiscreteDistribution, level: Level) -> DensityMeasure {
    let alpha = level.value();
    let k = dist.tail_index(level);
    let probs = dist.probs();
    let below = if k == 0 {
        0.0
    } else {
        dist.cumulative()[k - 1]
    };
    let mut densities = vec![0.0; probs.len()];
    for d in &mut densities[..k] {
        *d = 1.0 / alpha;
    }
    densities[k] = (alpha - below) / (alpha * probs[k]);
    DensityMeasure {
        base: probs.to_vec(),
        densities,
    }
}

/// `sup_{Q ∈ P_α} E_Q(-X)` as a fractional knapsack: visit atoms in
/// ascending order and give each `min(p_k/α, remaining mass)`.
///
/// Does not use the tail index or any ES formula.
pub fn dual_value_greedy(dist: &DiscreteDistribution, level: Level) -> f64 {
    let alpha = level.value();
    let mut remaining = 1.0_f64;
    let mut value = 0.0;
    for (x, p) in dist.atoms().iter().zip(dist.probs()) {
        if remaining <= 0.0 {
            break;
        }
        let q = (p / alpha).min(remaining);
        value -= x * q;
        remaining -= q;
    }
    value
}

/// Vertex of `P_α` obtained by filling capacities `p_k/α` in `order`.
pub fn vertex_for_order(base: &[f64], level: Level, order: &[usize]) -> DensityMeasure {
    let alpha = level.value();
    let mut densities = vec![0.0; base.len()];
    let mut remaining = 1.0_f64;
    for &k in order {
        if remaining <= 0.0 {
            break;
        }
        let cap = base[k] / alpha;
        if cap <= remaining {
            densities[k] = 1.0 / alpha;
            remaining -= cap;
        } else {
            densities[k] = remaining / base[k];
            remaining = 0.0;
        }
    }
    DensityMeasure {
        base: base.to_vec(),
        densities,
    }
}

/// Random element of `P_α` over an arbitrary base: a random vertex, mixed
/// half of the time with a second random vertex.
pub fn sample_feasible_density<R: Rng + ?Sized>(
    base: &[f64],
    level: Level,
    rng: &mut R,
) -> DensityMeasure {
    let mut order: Vec<usize> = (0..base.len()).collect();
    order.shuffle(rng);
    let first = vertex_for_order(base, level, &order);
    if !rng.random_bool(0.5) {
        return first;
    }
    order.shuffle(rng);
    let second = vertex_for_order(base, level, &order);
    let w: f64 = rng.random();
    let densities = first
        .densities
        .iter()
        .zip(&second.densities)
        .map(|(a, b)| w * a + (1.0 - w) * b)
        .collect();
    DensityMeasure {
        base: first.base,
        densities,
    }
}

/// Deterministic in `seed`.
pub fn sample_feasible_measure(
    dist: &DiscreteDistribution,
    level: Level,
    seed: u64,
) -> DensityMeasure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_feasible_density(dist.probs(), level, &mut rng)
}

/// Sign of `ES_α(X)`, i.e. whether `X` lies in the acceptance set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsSign {
    NonPositive,
    Positive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceOutcome {
    pub sign: EsSign,
    pub es: f64,
    /// For a positive ES, the worst-case measure, under which `E_Q(X) = -ES`.
    pub witness: Option<DensityMeasure>,
}

/// Rounding slack when classifying an ES that is zero up to the error of a
/// cash shift, scaled to the magnitude of the atoms.
pub fn sign_tolerance(dist: &DiscreteDistribution) -> f64 {
    let scale = dist.min_atom().abs().max(dist.max_atom().abs()).max(1.0);
    IDENTITY_TOLERANCE * scale
}

/// Acceptance-set dichotomy: ES <= 0 means every `Q ∈ P_α` has
/// `E_Q(X) >= 0`; ES > 0 is certified by the worst-case measure.
pub fn acceptance_check(dist: &DiscreteDistribution, level: Level) -> AcceptanceOutcome {
    let es = es_closed_form(dist, level);
    if es <= sign_tolerance(dist) {
        AcceptanceOutcome {
            sign: EsSign::NonPositive,
            es,
            witness: None,
        }
    } else {
        AcceptanceOutcome {
            sign: EsSign::Positive,
            es,
            witness: Some(worst_case_measure(dist, level)),
        }
    }
}

/// One leg of the `ES(X) <= m ⟺ sup_Q E_Q(-X) <= m` chain, checked on
/// `X + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DichotomyCheck {
    pub shift: f64,
    pub es_shifted: f64,
    pub sign: EsSign,
    /// Largest `E_Q(-(X+m))` over the sampled measures and the greedy optimum.
    pub sup_loss: f64,
    /// Smallest `E_Q(X+m)` over the sampled measures.
    pub min_position: f64,
    pub consistent: bool,
}

/// Compares the ES sign of `X + shift` against the dual side, built from
/// `samples` feasible measures (seeds `seed, seed+1, …`) plus the greedy
/// optimum.
pub fn dichotomy_check(
    dist: &DiscreteDistribution,
    level: Level,
    shift: f64,
    samples: usize,
    seed: u64,
) -> DichotomyCheck {
    let shifted = dist.shift(shift);
    let outcome = acceptance_check(&shifted, level);
    let mut sup_loss = dual_value_greedy(&shifted, level);
    let mut min_position = f64::INFINITY;
    for i in 0..samples {
        let q = sample_feasible_measure(&shifted, level, seed.wrapping_add(i as u64));
        let e = q
            .expectation(shifted.probs(), shifted.atoms())
            .expect("sampled over the same base");
        sup_loss = sup_loss.max(-e);
        min_position = min_position.min(e);
    }
    let consistent = match outcome.sign {
        EsSign::NonPositive => min_position >= -ORACLE_TOLERANCE && sup_loss <= ORACLE_TOLERANCE,
        EsSign::Positive => {
            let witness = outcome
                .witness
                .as_ref()
                .expect("positive branch has a witness");
            let e = expectation_under(&shifted, witness, Orientation::Position)
                .expect("witness built over the shifted law");
            is_feasible(witness, level) && e < 0.0 && sup_loss > 0.0
        }
    };
    DichotomyCheck {
        shift,
        es_shifted: outcome.es,
        sign: outcome.sign,
        sup_loss,
        min_position,
        consistent,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubadditivityCheck {
    /// `ES(X + Y)`
    pub lhs: f64,
    /// `ES(X) + ES(Y)`
    pub rhs: f64,
    pub holds: bool,
}

pub fn verify_subadditivity(
    space: &FiniteSpace,
    x: &str,
    y: &str,
    level: Level,
) -> Result<SubadditivityCheck> {
    let sum = space.sum_of(x, y)?;
    let lhs = es_closed_form(&space.law_of(&sum)?, level);
    let rhs = es_closed_form(&space.law(x)?, level) + es_closed_form(&space.law(y)?, level);
    Ok(SubadditivityCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + ORACLE_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> DiscreteDistribution {
        DiscreteDistribution::from_scenarios(&[-3.0, -1.0, 2.0, 5.0], &[0.1, 0.2, 0.3, 0.4])
            .unwrap()
    }

    fn lvl(v: f64) -> Level {
        Level::new(v).unwrap()
    }

    #[test]
    fn feasibility_examples() {
        let d = reference();
        assert!(is_feasible(
            &DensityMeasure::reference(d.probs()),
            lvl(0.01)
        ));
        let base = vec![0.5, 0.5];
        let boundary = DensityMeasure::new(base.clone(), vec![2.0, 0.0]).unwrap();
        assert!(is_feasible(&boundary, lvl(0.5)));
        let negative = DensityMeasure::new(base.clone(), vec![2.5, -0.5]).unwrap();
        assert!((negative.total_mass() - 1.0).abs() < 1e-15);
        assert!(!is_feasible(&negative, lvl(0.3)));
        let too_dense = DensityMeasure::new(base.clone(), vec![2.0, 0.0]).unwrap();
        assert!(!is_feasible(&too_dense, lvl(0.6)));
        let short = DensityMeasure::new(base, vec![1.0, 0.5]).unwrap();
        assert!(!is_feasible(&short, lvl(0.5)));
    }

    #[test]
    fn expectation_examples() {
        let d = reference();
        let p = DensityMeasure::reference(d.probs());
        let m = expectation_under(&d, &p, Orientation::Position).unwrap();
        assert!((m - d.mean()).abs() < 1e-15);

        let q = DensityMeasure::over(&d, vec![4.0, 3.0, 0.0, 0.0]).unwrap();
        let loss = expectation_under(&d, &q, Orientation::Loss).unwrap();
        assert!((loss - 1.8).abs() <= 1e-12);

        let c = DiscreteDistribution::point_mass(2.0).unwrap();
        let qc = DensityMeasure::reference(c.probs());
        assert_eq!(expectation_under(&c, &qc, Orientation::Loss).unwrap(), -2.0);
    }

    #[test]
    fn expectation_rejects_foreign_base() {
        let d = reference();
        let other = DensityMeasure::reference(&[0.5, 0.5]);
        assert_eq!(
            expectation_under(&d, &other, Orientation::Loss),
            Err(Error::BaseMismatch)
        );
    }

    #[test]
    fn worst_case_examples() {
        let d = reference();
        let q = worst_case_measure(&d, lvl(0.25));
        let expected = [4.0, 3.0, 0.0, 0.0];
        for (got, want) in q.densities().iter().zip(expected) {
            assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
        }
        assert!(is_feasible(&q, lvl(0.25)));

        let c = DiscreteDistribution::point_mass(1.0).unwrap();
        assert_eq!(worst_case_measure(&c, lvl(0.4)).densities(), &[1.0]);

        let h = DiscreteDistribution::from_scenarios(&[-1.0, 1.0], &[0.5, 0.5]).unwrap();
        let q = worst_case_measure(&h, lvl(0.5));
        assert_eq!(q.densities(), &[2.0, 0.0]);
        assert!(is_feasible(&q, lvl(0.5)));
        assert_eq!(expectation_under(&h, &q, Orientation::Loss).unwrap(), 1.0);
    }

    #[test]
    fn greedy_examples() {
        assert!((dual_value_greedy(&reference(), lvl(0.25)) - 1.8).abs() <= 1e-12);
        let c = DiscreteDistribution::point_mass(3.0).unwrap();
        assert!((dual_value_greedy(&c, lvl(0.2)) + 3.0).abs() <= 1e-12);
        let d = DiscreteDistribution::from_scenarios(&[-1.0, 0.0, 2.0], &[0.3, 0.3, 0.4]).unwrap();
        assert!((dual_value_greedy(&d, lvl(0.5)) - 0.6).abs() <= 1e-12);
    }

    #[test]
    fn identity_order_vertex_is_worst_case() {
        let d = reference();
        let v = vertex_for_order(d.probs(), lvl(0.25), &[0, 1, 2, 3]);
        let loss = expectation_under(&d, &v, Orientation::Loss).unwrap();
        assert!((loss - 1.8).abs() <= 1e-12);
    }

    #[test]
    fn samples_are_feasible_and_seeded() {
        let d = reference();
        for seed in 0..200 {
            let q = sample_feasible_measure(&d, lvl(0.25), seed);
            assert!(is_feasible(&q, lvl(0.25)));
            assert_eq!(q, sample_feasible_measure(&d, lvl(0.25), seed));
        }
        let c = DiscreteDistribution::point_mass(0.0).unwrap();
        for seed in 0..20 {
            assert_eq!(
                sample_feasible_measure(&c, lvl(0.1), seed).densities(),
                &[1.0]
            );
        }
    }

    #[test]
    fn acceptance_branches() {
        let d = reference();
        let zero = acceptance_check(&d.shift(1.8), lvl(0.25));
        assert_eq!(zero.sign, EsSign::NonPositive);
        assert!(zero.witness.is_none());

        let neg = acceptance_check(&d.shift(2.0), lvl(0.25));
        assert_eq!(neg.sign, EsSign::NonPositive);
        assert!((neg.es + 0.2).abs() < 1e-12);

        let shifted = d.shift(1.6);
        let pos = acceptance_check(&shifted, lvl(0.25));
        assert_eq!(pos.sign, EsSign::Positive);
        let w = pos.witness.unwrap();
        let e = expectation_under(&shifted, &w, Orientation::Position).unwrap();
        assert!((e + 0.2).abs() <= 1e-12);
    }

    #[test]
    fn dichotomy_on_reference() {
        let d = reference();
        let es = es_closed_form(&d, lvl(0.25));
        for m in [es - 1.0, es, es + 1.0] {
            let c = dichotomy_check(&d, lvl(0.25), m, 500, 7);
            assert!(c.consistent, "{c:?}");
        }
        assert_eq!(
            dichotomy_check(&d, lvl(0.25), es, 10, 0).sign,
            EsSign::NonPositive
        );
    }

    #[test]
    fn subadditivity_examples() {
        let s = FiniteSpace::with_probs(vec![0.1, 0.2, 0.3, 0.4])
            .unwrap()
            .with_variable("x", vec![-3.0, -1.0, 2.0, 5.0])
            .unwrap()
            .with_variable("neg", vec![3.0, 1.0, -2.0, -5.0])
            .unwrap()
            .with_variable("same", vec![-3.0, -1.0, 2.0, 5.0])
            .unwrap();
        let r = verify_subadditivity(&s, "x", "neg", lvl(0.25)).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.holds);
        let r = verify_subadditivity(&s, "x", "same", lvl(0.25)).unwrap();
        assert_eq!(r.lhs, r.rhs);
        assert!(r.holds);
        assert!(matches!(
            verify_subadditivity(&s, "x", "nope", lvl(0.25)),
            Err(Error::MissingVariable(_))
        ));
    }
}
