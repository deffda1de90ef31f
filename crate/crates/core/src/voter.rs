//! The voter model: every vertex, at rate 1, adopts the opinion of a uniformly chosen
//! neighbour. By duality with coalescing walks its consensus time from all-distinct
//! opinions is at most the coalescence time from all vertices occupied, in mean.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::random_walk_generator;
use crate::coalescence::{estimate_coalescence, EstimateOptions};
use crate::graph::Graph;
use crate::rng::{self, derive_seed};
use crate::stats::{combined_std_err, SampleSummary};
use crate::{Error, Result};

const VOTER_TAG: &str = "voter";
const DUAL_TAG: &str = "voter_dual";

/// Minimum replica count for [`duality_check`].
pub const MIN_DUALITY_REPLICAS: usize = 1000;

/// Opinions on the vertices of a graph, with a running count per opinion.
#[derive(Debug, Clone)]
pub struct VoterState<'g> {
    graph: &'g Graph,
    opinions: Vec<usize>,
    counts: Vec<usize>,
    distinct: usize,
    time: f64,
}

impl<'g> VoterState<'g> {
    pub fn new(graph: &'g Graph, opinions: Vec<usize>) -> Result<Self> {
        if opinions.len() != graph.n_vertices() {
            return Err(Error::invalid(format!(
                "{} opinions for {} vertices",
                opinions.len(),
                graph.n_vertices()
            )));
        }
        let palette = opinions.iter().max().map_or(0, |&m| m + 1);
        let mut counts = vec![0; palette];
        for &o in &opinions {
            counts[o] += 1;
        }
        let distinct = counts.iter().filter(|&&c| c > 0).count();
        Ok(VoterState { graph, opinions, counts, distinct, time: 0.0 })
    }

    pub fn opinions(&self) -> &[usize] {
        &self.opinions
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn n_opinions(&self) -> usize {
        self.distinct
    }

    /// Advances to the next wake-up: a global clock of rate `|V|` picks a uniform vertex,
    /// which copies a uniform neighbour.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.opinions.len();
        let e: f64 = rng.sample(Exp1);
        self.time += e / n as f64;
        let v = rng.random_range(0..n);
        let nbrs = self.graph.neighbors(v);
        if nbrs.is_empty() {
            return;
        }
        let w = nbrs[rng.random_range(0..nbrs.len())];
        let (old, new) = (self.opinions[v], self.opinions[w]);
        if old != new {
            self.opinions[v] = new;
            self.counts[old] -= 1;
            if self.counts[old] == 0 {
                self.distinct -= 1;
            }
            self.counts[new] += 1;
        }
    }
}

/// Runs the voter model until all vertices agree and returns that time.
pub fn run_voter(graph: &Graph, initial: &[usize], seed: u64) -> Result<f64> {
    if graph.n_vertices() == 0 {
        return Err(Error::invalid("the voter model needs at least one vertex"));
    }
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    let mut state = VoterState::new(graph, initial.to_vec())?;
    let mut rng = rng::stream(seed, VOTER_TAG, 0);
    while state.n_opinions() > 1 {
        state.step(&mut rng);
    }
    Ok(state.time())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    pub consensus: SampleSummary,
    pub coalescence: SampleSummary,
    pub combined_std_err: f64,
    /// `mean consensus ≤ mean C + 3 · combined standard error`.
    pub passed: bool,
    #[serde(skip)]
    pub consensus_samples: Vec<f64>,
}

/// Compares the mean consensus time from all-distinct opinions with the mean
/// coalescence time from all vertices occupied.
pub fn duality_check(graph: &Graph, replicas: usize, seed: u64) -> Result<DualityReport> {
    if replicas < MIN_DUALITY_REPLICAS {
        return Err(Error::invalid(format!("duality check needs at least {MIN_DUALITY_REPLICAS} replicas")));
    }
    let n = graph.n_vertices();
    if n == 1 {
        let zeros = SampleSummary::from_samples(&vec![0.0; replicas]);
        return Ok(DualityReport {
            consensus: zeros,
            coalescence: zeros,
            combined_std_err: 0.0,
            passed: true,
            consensus_samples: vec![0.0; replicas],
        });
    }
    let g = random_walk_generator(graph)?;
    let initial: Vec<usize> = (0..n).collect();
    let consensus_samples = (0..replicas)
        .into_par_iter()
        .map(|r| run_voter(graph, &initial, derive_seed(seed, VOTER_TAG, r as u64)))
        .collect::<Result<Vec<f64>>>()?;
    let coal = estimate_coalescence(&g, &initial, &[1], replicas, derive_seed(seed, DUAL_TAG, 0), EstimateOptions::default())?;
    let consensus = SampleSummary::from_samples(&consensus_samples);
    let coalescence = coal.summaries[0];
    let se = combined_std_err(&consensus, &coalescence);
    Ok(DualityReport {
        consensus,
        coalescence,
        combined_std_err: se,
        passed: consensus.mean <= coalescence.mean + 3.0 * se,
        consensus_samples,
    })
}
