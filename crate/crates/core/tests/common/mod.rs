//! Random instance generators and brute-force oracles shared by the
//! integration suites. The oracles only use the raw (value, probability)
//! lists and never call into the library's formulas.

#![allow(dead_code)]

use esdual::{DiscreteDistribution, FiniteSpace, Level};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StudentT};

/// Dirichlet(1, …, 1) weights.
pub fn dirichlet<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect::<Vec<f64>>();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w: &f64| w / total).collect()
}

/// Student-t(3) draws: finite mean, heavy tails.
pub fn heavy_tailed<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let t = StudentT::new(3.0).unwrap();
    (0..n).map(|_| t.sample(rng)).collect()
}

pub fn random_distribution<R: Rng>(rng: &mut R, max_atoms: usize) -> DiscreteDistribution {
    let n = rng.random_range(1..=max_atoms);
    let values = heavy_tailed(rng, n);
    let probs = dirichlet(rng, n);
    DiscreteDistribution::from_scenarios(&values, &probs).unwrap()
}

/// Level drawn uniformly from [0.01, 0.99].
pub fn random_level<R: Rng>(rng: &mut R) -> Level {
    Level::new(rng.random_range(0.01..=0.99)).unwrap()
}

/// Space with `m` outcomes and Dirichlet probabilities carrying `x` and `y`.
pub fn random_space<R: Rng>(rng: &mut R, m: usize) -> FiniteSpace {
    let probs = dirichlet(rng, m);
    let x = heavy_tailed(rng, m);
    let y = heavy_tailed(rng, m);
    FiniteSpace::with_probs(probs)
        .unwrap()
        .with_variable("x", x)
        .unwrap()
        .with_variable("y", y)
        .unwrap()
}

/// `inf{x : P(X <= x) > β}` by scanning every candidate value.
pub fn brute_upper_quantile(values: &[f64], probs: &[f64], beta: f64) -> f64 {
    let mut best = f64::INFINITY;
    for &x in values {
        let f: f64 = values
            .iter()
            .zip(probs)
            .filter(|(v, _)| **v <= x)
            .map(|(_, p)| p)
            .sum();
        if f > beta && x < best {
            best = x;
        }
    }
    best
}

/// Midpoint-rule average of `VaR_β` over `(0, α)`.
pub fn riemann_es(values: &[f64], probs: &[f64], alpha: f64, steps: usize) -> f64 {
    let h = alpha / steps as f64;
    let total: f64 = (0..steps)
        .map(|i| -brute_upper_quantile(values, probs, (i as f64 + 0.5) * h))
        .sum();
    total * h / alpha
}

/// `max E_Q(-X)` over all vertices of `{0 <= q_k <= p_k/α, Σ q_k = 1}`,
/// enumerating every fill order.
pub fn vertex_enumeration_dual(values: &[f64], probs: &[f64], alpha: f64) -> f64 {
    let n = values.len();
    assert!(n <= 8, "permutation oracle is exponential");
    let mut order: Vec<usize> = (0..n).collect();
    let mut best = f64::NEG_INFINITY;
    permute(&mut order, 0, &mut |perm| {
        let mut remaining = 1.0_f64;
        let mut value = 0.0;
        for &k in perm {
            let q = (probs[k] / alpha).min(remaining.max(0.0));
            value -= values[k] * q;
            remaining -= q;
        }
        best = best.max(value);
    });
    best
}

fn permute(v: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == v.len() {
        visit(v);
        return;
    }
    for i in start..v.len() {
        v.swap(start, i);
        permute(v, start + 1, visit);
        v.swap(start, i);
    }
}

/// `sup{E(-X | A) : P(A) > α}` by recursive subset enumeration.
pub fn brute_wce(values: &[f64], probs: &[f64], alpha: f64) -> f64 {
    fn walk(i: usize, mass: f64, loss: f64, v: &[f64], p: &[f64], alpha: f64, best: &mut f64) {
        if i == v.len() {
            if mass > alpha {
                *best = best.max(loss / mass);
            }
            return;
        }
        walk(i + 1, mass, loss, v, p, alpha, best);
        walk(i + 1, mass + p[i], loss - v[i] * p[i], v, p, alpha, best);
    }
    let mut best = f64::NEG_INFINITY;
    walk(0, 0.0, 0.0, values, probs, alpha, &mut best);
    best
}
