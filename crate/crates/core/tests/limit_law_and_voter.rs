use coalescent::experiments::{
    complete_graph_expected_c, eq1_compare, eq1_tail_variance, eq1_truncation, lemma1_audit, sample_eq1_limit,
};
use coalescent::graph::Graph;
use coalescent::stats::SampleSummary;
use coalescent::voter::{duality_check, run_voter};

fn weight(i: usize) -> f64 {
    1.0 / (i as f64 * (i as f64 + 1.0))
}

/// Tail sum by brute force up to a large cutoff plus the integral remainder.
fn brute_tail(from: usize) -> f64 {
    let cutoff = 2_000_000usize;
    let head: f64 = (from + 1..=cutoff).rev().map(|i| weight(i).powi(2)).sum();
    head + 1.0 / (3.0 * (cutoff as f64 + 0.5).powi(3))
}

#[test]
fn tail_variance_matches_direct_summation() {
    for i in [1usize, 5, 19, 20, 21, 50, 100, 321, 1000] {
        let (a, b) = (eq1_tail_variance(i), brute_tail(i));
        assert!((a - b).abs() <= 1e-9 * b, "I={i}: {a} vs {b}");
    }
}

#[test]
fn truncation_for_default_tolerance() {
    let i = eq1_truncation(1e-4).unwrap();
    assert_eq!(i, 321);
    assert!(brute_tail(i).sqrt() < 1e-4);
    assert!(brute_tail(i - 1).sqrt() >= 1e-4);
    assert!(eq1_truncation(0.0).is_err());
}

#[test]
fn series_sampler_moments() {
    let n = 1_000_000;
    let samples = sample_eq1_limit(n, 1e-4, 17).unwrap().samples;
    let s = SampleSummary::from_samples(&samples);
    // mean telescopes to 1
    assert!((s.mean - 1.0).abs() <= 4.0 * s.std_err, "mean {}", s.mean);
    // variance sum of w_i^2 and fourth cumulant 6 sum of w_i^4 (exponential cumulants)
    let var: f64 = (1..=5_000_000usize).rev().map(|i| weight(i).powi(2)).sum();
    let k4: f64 = 6.0 * (1..=100_000usize).rev().map(|i| weight(i).powi(4)).sum::<f64>();
    assert!((var - (std::f64::consts::PI.powi(2) / 3.0 - 3.0)).abs() < 1e-12);
    let se_var = ((k4 + 2.0 * var * var) / n as f64).sqrt();
    assert!((s.variance - var).abs() <= 4.0 * se_var, "variance {} vs {var}", s.variance);
}

#[test]
fn complete_graph_oracle_edges() {
    assert_eq!(complete_graph_expected_c(10, 10), 0.0);
    assert_eq!(complete_graph_expected_c(10, 12), 0.0);
    assert!((complete_graph_expected_c(3, 1) - 4.0 / 3.0).abs() < 1e-15);
    // telescoping: (n-1)(1/k - 1/n)
    assert!((complete_graph_expected_c(50, 4) - 49.0 * (0.25 - 0.02)).abs() < 1e-12);
}

#[test]
fn two_vertices_reject_the_limit_law() {
    let r = eq1_compare(2, 10_000, 1).unwrap();
    assert!(r.ks.p_value < 1e-6, "p={}", r.ks.p_value);
    let again = eq1_compare(2, 10_000, 1).unwrap();
    assert_eq!(r.ks, again.ks);
}

#[test]
fn lemma_audit_passes_on_random_chains() {
    let r = lemma1_audit(None, 200, 5).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.constant_path_max_error <= 1e-10);
}

#[test]
fn two_vertex_consensus_is_first_wakeup() {
    let g = Graph::path(2);
    let times: Vec<f64> = (0..100_000u64).map(|s| run_voter(&g, &[0, 1], s).unwrap()).collect();
    let s = SampleSummary::from_samples(&times);
    assert!((s.mean - 0.5).abs() <= 4.0 * s.std_err, "{}", s.mean);
}

#[test]
fn duality_holds_on_small_graphs() {
    for (g, seed) in [(Graph::complete(5), 1), (Graph::cycle(8), 2)] {
        let r = duality_check(&g, 4_000, seed).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.consensus.count, 4_000);
    }
}
