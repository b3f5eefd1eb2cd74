//! Worked examples checked against brute-force oracles, then pinned.

mod common;

use common::{brute_upper_quantile, brute_wce, riemann_es, vertex_enumeration_dual};
use esdual::approximation::{step3_certificate, step3_witness, truncation_stability_bound};
use esdual::duality::{dual_value_greedy, expectation_under, worst_case_measure};
use esdual::risk_measures::{es_closed_form, es_integral, var, wce};
use esdual::{DiscreteDistribution, FiniteSpace, Level, Orientation};

const X: [f64; 4] = [-3.0, -1.0, 2.0, 5.0];
const P: [f64; 4] = [0.1, 0.2, 0.3, 0.4];

fn lvl(v: f64) -> Level {
    Level::new(v).unwrap()
}

fn reference() -> DiscreteDistribution {
    DiscreteDistribution::from_scenarios(&X, &P).unwrap()
}

#[test]
fn quantile_examples_match_scan() {
    let d = reference();
    for (beta, frozen) in [(0.05, -3.0), (0.1, -1.0), (0.35, 2.0), (0.65, 5.0)] {
        let oracle = brute_upper_quantile(&X, &P, beta);
        assert_eq!(oracle, frozen);
        assert_eq!(d.upper_quantile(lvl(beta)), frozen);
        assert_eq!(var(&d, lvl(beta)), -frozen);
    }
}

#[test]
fn es_examples_match_riemann_and_vertex_oracles() {
    let cases: [(&[f64], &[f64], f64, f64); 3] = [
        (&X, &P, 0.25, 1.8),
        (&[-1.0, 0.0, 2.0], &[0.3, 0.3, 0.4], 0.5, 0.6),
        (&[-1.0, 1.0], &[0.5, 0.5], 0.5, 1.0),
    ];
    for (values, probs, alpha, frozen) in cases {
        let riemann = riemann_es(values, probs, alpha, 20_000);
        let vertex = vertex_enumeration_dual(values, probs, alpha);
        assert!((riemann - frozen).abs() < 1e-4, "riemann {riemann}");
        assert!((vertex - frozen).abs() < 1e-12, "vertex {vertex}");

        let d = DiscreteDistribution::from_scenarios(values, probs).unwrap();
        assert!((es_closed_form(&d, lvl(alpha)) - frozen).abs() <= 1e-12);
        assert!((es_integral(&d, lvl(alpha)) - frozen).abs() <= 1e-12);
        assert!((dual_value_greedy(&d, lvl(alpha)) - frozen).abs() <= 1e-12);
    }
}

#[test]
fn quantile_integral_first_quarter() {
    // Breakpoints at 0.1 and 0.3: -3 on (0, 0.1), -1 on (0.1, 0.25).
    let oracle = -3.0 * 0.1 - 0.15;
    assert!((reference().quantile_integral(0.0, 0.25).unwrap() - oracle).abs() <= 1e-12);
    assert!((oracle + 0.45).abs() <= 1e-12);
}

#[test]
fn worst_case_densities_and_attainment() {
    let d = reference();
    let q = worst_case_measure(&d, lvl(0.25));
    let masses = q.masses();
    for (got, want) in masses.iter().zip([0.4, 0.6, 0.0, 0.0]) {
        assert!((got - want).abs() <= 1e-12);
    }
    let loss = expectation_under(&d, &q, Orientation::Loss).unwrap();
    // direct sum 0.4·3 + 0.6·1
    assert!((loss - 1.8).abs() <= 1e-12);
}

#[test]
fn wce_gap_matches_subset_enumeration() {
    let oracle = brute_wce(&X, &P, 0.25);
    assert!((oracle - 5.0 / 3.0).abs() <= 1e-12);
    let space = FiniteSpace::with_probs(P.to_vec())
        .unwrap()
        .with_variable("x", X.to_vec())
        .unwrap();
    let r = wce(&space, "x", lvl(0.25)).unwrap();
    assert!((r.value - oracle).abs() <= 1e-12);
    let gap = es_closed_form(&reference(), lvl(0.25)) - r.value;
    assert!((gap - (1.8 - 5.0 / 3.0)).abs() <= 1e-12);
    assert!(gap > 0.13);
}

#[test]
fn stability_bound_recomputed() {
    // γ = 0.625: F(2) = 0.6 is not > 0.625, F(5) = 1 is, so q⁺_γ = 5.
    assert_eq!(brute_upper_quantile(&X, &P, 0.625), 5.0);
    assert_eq!(truncation_stability_bound(&reference(), lvl(0.25)), 6.0);
}

#[test]
fn step3_trace_on_reference() {
    let d = reference();
    let w = step3_witness(&d, lvl(0.25), 0.9).unwrap();
    // L1 errors along the doubling trace: 2.1, 1.3, 0.4, 0.
    assert_eq!(w.m, 8.0);
    assert_eq!(w.l1_error, 0.0);
    assert!((w.truncated_es_shifted - 0.9).abs() <= 1e-12);
    let cert = step3_certificate(&d, lvl(0.25), &w);
    assert!((cert.expectation + 1.8).abs() <= 1e-12);
    assert!((cert.bound + 0.9).abs() <= 1e-12);
}
