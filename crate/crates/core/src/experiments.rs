//! Experiment orchestration shared by the command-line tool and the acceptance tests.
//!
//! Every experiment takes one master seed; sub-experiments draw from streams derived
//! from `(seed, tag)`, so reruns are bit-identical.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::chain::{self, random_reversible, random_walk_generator, ChainAnalytics, Generator, GeneratorJson};
use crate::coalescence::{estimate_coalescence, CoalescenceEstimate, EstimateOptions};
use crate::graph::{Family, Graph};
use crate::path::PiecewisePath;
use crate::rng::{self, derive_seed};
use crate::spectral::{meeting_time_bound, quasistationary, survival_probability, Quasistationary};
use crate::stats::{combined_std_err, ks_two_sample, KsResult, SampleSummary};
use crate::voter::{duality_check, DualityReport};
use crate::{Error, Result};

/// Where a chain comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ChainSource {
    Family { family: Family, size: Option<usize> },
    EdgeList(PathBuf),
    GeneratorJson(PathBuf),
}

/// A loaded chain; `graph` is present when the chain is a graph random walk.
#[derive(Debug, Clone)]
pub struct LoadedChain {
    pub generator: Generator,
    pub graph: Option<Graph>,
    pub description: String,
}

impl ChainSource {
    pub fn load(&self) -> Result<LoadedChain> {
        match self {
            ChainSource::Family { family, size } => {
                let graph = family.build(*size)?;
                let description = match size {
                    Some(n) => format!("{family} n={n}"),
                    None => family.to_string(),
                };
                Ok(LoadedChain { generator: random_walk_generator(&graph)?, graph: Some(graph), description })
            }
            ChainSource::EdgeList(path) => {
                let graph = Graph::parse_edge_list(&std::fs::read_to_string(path)?, None)?;
                Ok(LoadedChain {
                    generator: random_walk_generator(&graph)?,
                    graph: Some(graph),
                    description: format!("edges {}", path.display()),
                })
            }
            ChainSource::GeneratorJson(path) => {
                let json: GeneratorJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
                Ok(LoadedChain {
                    generator: Generator::from_json(&json)?,
                    graph: None,
                    description: format!("generator {}", path.display()),
                })
            }
        }
    }
}

/// Hex SHA-256 of the generator's JSON form.
pub fn chain_hash(g: &Generator) -> String {
    let text = serde_json::to_string(&g.to_json()).expect("generator serializes");
    Sha256::digest(text.as_bytes()).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub n_states: usize,
    pub chain_hash: String,
    pub analytics: ChainAnalytics,
    /// `t_hit / t_meet`, large on stars.
    pub hit_meet_ratio: Option<f64>,
    pub mix_hit_ratio: f64,
    pub meeting_time_bound: f64,
}

pub fn analyze(g: &Generator) -> Result<AnalyzeReport> {
    let analytics = ChainAnalytics::compute(g)?;
    Ok(AnalyzeReport {
        n_states: g.n_states(),
        chain_hash: chain_hash(g),
        hit_meet_ratio: analytics.t_meet.map(|m| analytics.t_hit / m),
        mix_hit_ratio: analytics.t_mix / analytics.t_hit,
        meeting_time_bound: meeting_time_bound(g)?,
        analytics,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoalesceRow {
    pub k: usize,
    pub mean: f64,
    pub std_err: f64,
    /// `mean(C_k) · k / t_hit`.
    pub scaled: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoalesceReport {
    pub chain_hash: String,
    pub seed: u64,
    pub replicas: usize,
    pub t_hit: f64,
    pub rows: Vec<CoalesceRow>,
    #[serde(skip)]
    pub estimate: CoalescenceEstimate,
}

impl CoalesceReport {
    /// `replica_id,k,C_k,horizon_used` rows.
    pub fn csv(&self) -> String {
        estimate_csv(&self.estimate)
    }
}

pub fn estimate_csv(est: &CoalescenceEstimate) -> String {
    let mut out = String::from("replica_id,k,C_k,horizon_used\n");
    for r in &est.replicas {
        for (k, c) in est.ks.iter().zip(&r.c) {
            let _ = writeln!(out, "{},{},{},{}", r.replica, k, c, r.horizon_used);
        }
    }
    out
}

fn all_occupied(g: &Generator) -> Vec<usize> {
    (0..g.n_states()).collect()
}

/// Estimates `E[C_k]` from all states occupied.
pub fn coalesce(g: &Generator, ks: &[usize], replicas: usize, seed: u64) -> Result<CoalesceReport> {
    let t_hit = chain::t_hit(g)?;
    let opts = EstimateOptions { initial_horizon: Some(4.0 * t_hit), ..Default::default() };
    let estimate = estimate_coalescence(g, &all_occupied(g), ks, replicas, seed, opts)?;
    let rows = ks
        .iter()
        .zip(&estimate.summaries)
        .map(|(&k, s)| CoalesceRow { k, mean: s.mean, std_err: s.std_err, scaled: s.mean * k as f64 / t_hit })
        .collect();
    Ok(CoalesceReport { chain_hash: chain_hash(g), seed, replicas, t_hit, rows, estimate })
}

fn eq1_weight(i: usize) -> f64 {
    1.0 / (i as f64 * (i as f64 + 1.0))
}

/// `Σ_{i>I} (1/(i(i+1)))²`.
///
/// This equals `2ψ'(I+1) − 1/(I+1)² − 2/(I+1)`; for large arguments the asymptotic
/// series of the trigamma function is used with the leading terms cancelled by hand.
pub fn eq1_tail_variance(truncation: usize) -> f64 {
    let x = (truncation + 1) as f64;
    if truncation < 20 {
        let head: f64 = (1..=truncation).map(|i| eq1_weight(i).powi(2)).sum();
        return std::f64::consts::PI.powi(2) / 3.0 - 3.0 - head;
    }
    // 2 Σ_k B_{2k} / x^{2k+1}
    let bernoulli = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0];
    bernoulli.iter().enumerate().map(|(k, b)| 2.0 * b / x.powi(2 * k as i32 + 3)).sum()
}

/// Smallest `I` whose tail standard deviation is below `tol`.
pub fn eq1_truncation(tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::invalid("truncation tolerance must be positive"));
    }
    let mut i = 1;
    while eq1_tail_variance(i).sqrt() >= tol {
        i += 1;
    }
    Ok(i)
}

#[derive(Debug, Clone, Serialize)]
pub struct Eq1Samples {
    pub truncation: usize,
    pub samples: Vec<f64>,
}

/// Samples of `Σ_i Z_i / (i(i+1))` with `Z_i` i.i.d. mean-one exponentials, truncated at
/// `I` and compensated by the tail mean `1/(I+1)`.
pub fn sample_eq1_limit(replicas: usize, tol: f64, seed: u64) -> Result<Eq1Samples> {
    let truncation = eq1_truncation(tol)?;
    let samples = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, "eq1_limit", r as u64);
            let head: f64 = (1..=truncation).map(|i| rng.sample::<f64, _>(Exp1) * eq1_weight(i)).sum();
            head + 1.0 / (truncation + 1) as f64
        })
        .collect();
    Ok(Eq1Samples { truncation, samples })
}

/// Truncation tolerance used by [`eq1_compare`].
pub const EQ1_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct Eq1Report {
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
    pub truncation: usize,
    pub ks: KsResult,
    pub simulated: SampleSummary,
    pub limit: SampleSummary,
    pub combined_std_err: f64,
    /// Both means within three combined standard errors of 1.
    pub means_agree: bool,
    #[serde(skip)]
    pub simulated_samples: Vec<f64>,
}

/// Compares `C/n` on the complete graph `K_n` with the series limit law.
pub fn eq1_compare(n: usize, replicas: usize, seed: u64) -> Result<Eq1Report> {
    if n < 2 {
        return Err(Error::invalid("the complete graph needs at least two vertices"));
    }
    let g = random_walk_generator(&Graph::complete(n))?;
    let opts = EstimateOptions { initial_horizon: Some(4.0 * (n - 1) as f64), ..Default::default() };
    let est = estimate_coalescence(&g, &all_occupied(&g), &[1], replicas, derive_seed(seed, "eq1_sim", 0), opts)?;
    let simulated_samples: Vec<f64> = est.samples(0).iter().map(|c| c / n as f64).collect();
    let limit = sample_eq1_limit(replicas, EQ1_TOLERANCE, derive_seed(seed, "eq1_limit", 0))?;
    let ks = ks_two_sample(&simulated_samples, &limit.samples)?;
    let sim = SampleSummary::from_samples(&simulated_samples);
    let lim = SampleSummary::from_samples(&limit.samples);
    let se = combined_std_err(&sim, &lim);
    Ok(Eq1Report {
        n,
        replicas,
        seed,
        truncation: limit.truncation,
        ks,
        simulated: sim,
        limit: lim,
        combined_std_err: se,
        means_agree: (sim.mean - 1.0).abs() <= 3.0 * se && (lim.mean - 1.0).abs() <= 3.0 * se,
        simulated_samples,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub k: usize,
    pub mean: f64,
    pub std_err: f64,
    /// `t_hit / k + t_mix`.
    pub bound: f64,
    pub ratio: f64,
    /// `mean · k / t_hit`.
    pub scaled: f64,
    /// Exact `E[C_k]` when the chain is a complete graph.
    pub exact: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub chain_hash: String,
    pub seed: u64,
    pub replicas: usize,
    pub t_hit: f64,
    pub t_mix: f64,
    pub rows: Vec<ScalingRow>,
    #[serde(skip)]
    pub estimate: CoalescenceEstimate,
}

/// Exact `E[C_k]` on `K_n` from all vertices occupied. With `j` clusters each of the
/// `j(j-1)/2` pairs merges at rate `2/(n-1)`.
pub fn complete_graph_expected_c(n: usize, k: usize) -> f64 {
    let nf = (n - 1) as f64;
    (k + 1..=n).map(|j| nf / (j as f64 * (j - 1) as f64)).sum()
}

pub fn thm2_scaling(
    g: &Generator,
    complete: bool,
    ks: &[usize],
    replicas: usize,
    seed: u64,
) -> Result<ScalingReport> {
    let t_hit = chain::t_hit(g)?;
    let t_mix = chain::t_mix(g)?;
    let opts = EstimateOptions { initial_horizon: Some(4.0 * t_hit), ..Default::default() };
    let estimate = estimate_coalescence(g, &all_occupied(g), ks, replicas, seed, opts)?;
    let n = g.n_states();
    let rows = ks
        .iter()
        .zip(&estimate.summaries)
        .map(|(&k, s)| {
            let bound = t_hit / k as f64 + t_mix;
            ScalingRow {
                k,
                mean: s.mean,
                std_err: s.std_err,
                bound,
                ratio: s.mean / bound,
                scaled: s.mean * k as f64 / t_hit,
                exact: complete.then(|| complete_graph_expected_c(n, k)),
            }
        })
        .collect();
    Ok(ScalingReport { chain_hash: chain_hash(g), seed, replicas, t_hit, t_mix, rows, estimate })
}

/// Tolerance of the audited inequalities.
pub const AUDIT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct AuditTrial {
    pub trial: usize,
    pub n_states: usize,
    pub segments: usize,
    pub t: f64,
    pub survival: f64,
    pub bound: f64,
    /// Bound using only the states visited by the path up to `t`.
    pub visited_bound: f64,
    pub constant_path_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub trials: usize,
    pub seed: u64,
    pub violations: usize,
    pub max_excess: f64,
    /// Informational: trials exceeding the visited-states bound.
    pub visited_violations: usize,
    pub constant_path_max_error: f64,
    pub passed: bool,
    #[serde(skip)]
    pub rows: Vec<AuditTrial>,
}

impl AuditReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("trial,n_states,segments,t,survival,bound,visited_bound,constant_path_error\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.trial, r.n_states, r.segments, r.t, r.survival, r.bound, r.visited_bound, r.constant_path_error
            );
        }
        out
    }
}

/// A random path with 1 to `max_segments` segments on `[0, horizon]`.
pub fn random_path<R: Rng + ?Sized>(n_states: usize, max_segments: usize, horizon: f64, rng: &mut R) -> PiecewisePath {
    let segments = rng.random_range(1..=max_segments);
    let mut cuts: Vec<f64> = (1..segments).map(|_| rng.random_range(0.0..horizon)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.retain(|&c| c > 0.0);
    let mut breakpoints = vec![0.0];
    breakpoints.extend(cuts);
    let values = breakpoints.iter().map(|_| rng.random_range(0..n_states)).collect();
    PiecewisePath::new(breakpoints, values, horizon).expect("sorted cuts inside the horizon")
}

fn audit_one<R: Rng + ?Sized>(trial: usize, g: &Generator, rng: &mut R) -> Result<AuditTrial> {
    let n = g.n_states();
    let qsds: Vec<Quasistationary> = (0..n).map(|v| quasistationary(g, v)).collect::<Result<_>>()?;
    let bound_time = qsds.iter().map(|q| q.expected_hit).fold(0.0, f64::max);
    let horizon = bound_time * rng.random_range(0.05..4.0);
    let h = random_path(n, 10, horizon, rng);
    let t = rng.random_range(0.0..=horizon);
    let survival = survival_probability(g, g.pi(), &h, t)?;
    let visited_time = h
        .values()
        .iter()
        .zip(h.breakpoints())
        .filter(|&(_, &s)| s <= t)
        .map(|(&v, _)| qsds[v].expected_hit)
        .fold(0.0, f64::max);

    let v = rng.random_range(0..n);
    let q = &qsds[v];
    let s = rng.random_range(0.0..=3.0 * q.expected_hit);
    let constant = PiecewisePath::constant(v, s);
    let exact = survival_probability(g, &q.qsd, &constant, s)?;
    Ok(AuditTrial {
        trial,
        n_states: n,
        segments: h.breakpoints().len(),
        t,
        survival,
        bound: (-t / bound_time).exp(),
        visited_bound: (-t / visited_time).exp(),
        constant_path_error: (exact - (-q.lambda * s).exp()).abs(),
    })
}

/// Randomized audit of `P_π[X avoids h on [0, t]] ≤ exp(-t / max_v E_{q_v}[H_v])`,
/// together with the exact exponential law from `q_v` against a constant path.
///
/// With `chain` the audit draws paths on that chain; otherwise each trial uses a fresh
/// random reversible chain on 2 to 12 states.
pub fn lemma1_audit(chain: Option<&Generator>, trials: usize, seed: u64) -> Result<AuditReport> {
    if trials == 0 {
        return Err(Error::invalid("at least one trial is needed"));
    }
    let rows: Vec<AuditTrial> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, "lemma1", i as u64);
            match chain {
                Some(g) => audit_one(i, g, &mut rng),
                None => {
                    let n = rng.random_range(2..=12);
                    let p = rng.random_range(0.0..0.6);
                    let g = random_reversible(n, p, &mut rng)?;
                    audit_one(i, &g, &mut rng)
                }
            }
        })
        .collect::<Result<_>>()?;
    let excess = |r: &AuditTrial| r.survival - r.bound;
    let violations = rows.iter().filter(|r| excess(r) > AUDIT_TOL).count();
    let max_excess = rows.iter().map(excess).fold(f64::NEG_INFINITY, f64::max);
    let visited_violations = rows.iter().filter(|r| r.survival - r.visited_bound > AUDIT_TOL).count();
    let constant_path_max_error = rows.iter().map(|r| r.constant_path_error).fold(0.0, f64::max);
    Ok(AuditReport {
        trials,
        seed,
        violations,
        max_excess,
        visited_violations,
        constant_path_max_error,
        passed: violations == 0 && constant_path_max_error <= AUDIT_TOL,
        rows,
    })
}

pub fn voter_duality(graph: &Graph, replicas: usize, seed: u64) -> Result<DualityReport> {
    duality_check(graph, replicas, seed)
}
