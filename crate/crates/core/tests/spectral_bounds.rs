use coalescent::chain::{random_reversible, random_walk_generator, t_hit, Generator};
use coalescent::coalescence::sample_ensemble;
use coalescent::experiments::random_path;
use coalescent::graph::Graph;
use coalescent::rng;
use coalescent::spectral::{
    claim_convergence, killed_generator, meeting_time_bound, quasistationary, survival_probability,
};
use coalescent::ProbabilityVector;
use proptest::prelude::*;
use rand::Rng;

fn chain(seed: u64, n: usize) -> Generator {
    let mut r = rng::stream(seed, "spectral", 0);
    random_reversible(n, 0.35, &mut r).unwrap()
}

#[test]
fn killed_generator_shapes() {
    let two = Generator::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], None).unwrap();
    let k = killed_generator(&two, 1).unwrap();
    assert_eq!(k.matrix.nrows(), 1);
    assert!((k.matrix[(0, 0)] - 1.0).abs() < 1e-15);
    let star = random_walk_generator(&Graph::star(6)).unwrap();
    assert_eq!(killed_generator(&star, 0).unwrap().blocks.len(), 5);
    let g = chain(1, 8);
    assert!(killed_generator(&g, 3).unwrap().asymmetry() <= 1e-12);
}

#[test]
fn two_state_survival_against_pi() {
    let g = Generator::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], None).unwrap();
    let h = coalescent::PiecewisePath::constant(1, 20.0);
    for t in [0.0, 0.4, 3.0, 20.0] {
        let s = survival_probability(&g, g.pi(), &h, t).unwrap();
        assert!((s - 0.5 * (-t).exp()).abs() < 1e-12);
    }
    assert!((meeting_time_bound(&g).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn bound_is_at_most_hitting_time() {
    for seed in 0..40 {
        let g = chain(seed, 2 + (seed as usize % 11));
        assert!(meeting_time_bound(&g).unwrap() <= t_hit(&g).unwrap() * (1.0 + 1e-9));
    }
    let k = random_walk_generator(&Graph::complete(9)).unwrap();
    assert!((meeting_time_bound(&k).unwrap() - 8.0).abs() < 1e-9);
}

#[test]
fn survival_matches_simulation() {
    let g = chain(7, 6);
    let mut r = rng::stream(7, "spectral", 1);
    let h = random_path(6, 5, 4.0, &mut r);
    let t = 3.0;
    let exact = survival_probability(&g, g.pi(), &h, t).unwrap();
    let replicas = 100_000u64;
    let mut avoided = 0u64;
    for rep in 0..replicas {
        let mut pick = rng::stream(rep, "start", 0);
        let u: f64 = pick.random();
        let mut acc = 0.0;
        let start = (0..6).find(|&x| {
            acc += g.pi()[x];
            u < acc
        });
        let e = sample_ensemble(&g, &[start.unwrap_or(5)], h.horizon(), rep).unwrap();
        if e.path(0).first_meeting(&h).is_none_or(|s| s > t) {
            avoided += 1;
        }
    }
    let p = avoided as f64 / replicas as f64;
    let se = (exact * (1.0 - exact) / replicas as f64).sqrt();
    assert!((p - exact).abs() <= 4.0 * se, "{p} vs {exact} (se {se})");
}

#[test]
fn zero_time_survival() {
    let g = chain(3, 5);
    let mu = ProbabilityVector::point_mass(5, 2);
    let h = coalescent::PiecewisePath::constant(4, 1.0);
    assert_eq!(survival_probability(&g, &mu, &h, 0.0).unwrap(), 1.0);
    let on = coalescent::PiecewisePath::constant(2, 1.0);
    assert_eq!(survival_probability(&g, &mu, &on, 0.0).unwrap(), 0.0);
    assert!(survival_probability(&g, &mu, &on, 2.0).is_err());
}

#[test]
fn claim_converges_to_killed_eigenvalue() {
    let g = chain(9, 6);
    let t = 1.3;
    let limit = t * quasistationary(&g, 2).unwrap().lambda;
    let vals = claim_convergence(&g, 2, t, &[0.0, 1e2, 1e3, 1e4]).unwrap();
    assert!(vals[0].abs() < 1e-9);
    let c = 1e3 * (limit - vals[2]);
    assert!((limit - vals[3]) <= 1.5 * c / 1e4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quasistationary_laws(seed in any::<u64>(), n in 2usize..10) {
        let g = chain(seed, n);
        for v in 0..n {
            let q = quasistationary(&g, v).unwrap();
            prop_assert!(q.lambda > 0.0);
            prop_assert_eq!(q.qsd[v], 0.0);
            prop_assert!(q.qsd.iter().all(|&x| x >= 0.0));
            prop_assert!((q.qsd.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((q.lambda * q.expected_hit - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn lemma_inequality(seed in any::<u64>(), n in 2usize..13) {
        let g = chain(seed, n);
        let bound = meeting_time_bound(&g).unwrap();
        let mut r = rng::stream(seed, "lemma", 0);
        let horizon = bound * r.random_range(0.1..4.0);
        let h = random_path(n, 10, horizon, &mut r);
        let t = r.random_range(0.0..=horizon);
        let s = survival_probability(&g, g.pi(), &h, t).unwrap();
        prop_assert!(s <= (-t / bound).exp() + 1e-10);
    }

    #[test]
    fn claim_is_monotone_and_bounded(seed in any::<u64>(), n in 2usize..9, t in 0.1f64..3.0) {
        let g = chain(seed, n);
        let v = seed as usize % n;
        let limit = t * quasistationary(&g, v).unwrap().lambda;
        let vals = claim_convergence(&g, v, t, &[0.0, 0.5, 5.0, 50.0, 500.0, 5000.0]).unwrap();
        for w in vals.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
        prop_assert!(vals.iter().all(|&x| x <= limit + 1e-9));
    }
}
