use rayon::prelude::*;
use serde::Serialize;

use super::derive::{killed_sweep, LazySource};
use crate::chain::{self, Generator};
use crate::rng::{derive_seed, REPLICA_TAG};
use crate::stats::SampleSummary;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    /// First horizon tried; defaults to `4 · t_hit` (or 4 if `t_hit` is unavailable).
    pub initial_horizon: Option<f64>,
    /// Number of horizon doublings allowed before giving up.
    pub max_doublings: u32,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions { initial_horizon: None, max_doublings: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaOutcome {
    pub replica: usize,
    /// `C_k` for each requested `k`, in request order.
    pub c: Vec<f64>,
    pub horizon_used: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoalescenceEstimate {
    pub ks: Vec<usize>,
    pub summaries: Vec<SampleSummary>,
    pub replicas: Vec<ReplicaOutcome>,
    pub seed: u64,
}

impl CoalescenceEstimate {
    /// Samples of `C_k` for the `i`-th requested `k`.
    pub fn samples(&self, i: usize) -> Vec<f64> {
        self.replicas.iter().map(|r| r.c[i]).collect()
    }
}

/// Monte Carlo estimate of `E[C_k]` from `start` for each `k` in `ks`.
///
/// Each replica runs the killing process, whose alive count equals the number of
/// occupied sites of the coalescing process on the same trajectories. Trajectories are
/// drawn lazily, so dead walkers cost nothing. If `min(ks)` is not reached by the
/// horizon, the replica is rerun with twice the horizon; its walker streams do not
/// depend on the horizon, so the rerun continues the same trajectories.
pub fn estimate_coalescence(
    g: &Generator,
    start: &[usize],
    ks: &[usize],
    replicas: usize,
    seed: u64,
    opts: EstimateOptions,
) -> Result<CoalescenceEstimate> {
    if replicas < 2 {
        return Err(Error::invalid("at least two replicas are needed for a standard error"));
    }
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::invalid("k values must be positive"));
    }
    if start.is_empty() || start.iter().any(|&x| x >= g.n_states()) {
        return Err(Error::invalid("start states must be nonempty and in range"));
    }
    let h0 = match opts.initial_horizon {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::invalid(format!("initial horizon {h} must be positive"))),
        None => chain::t_hit(g).map(|t| 4.0 * t).unwrap_or(4.0),
    };
    let cap = h0 * 2f64.powi(opts.max_doublings as i32);
    let k_min = *ks.iter().min().unwrap();
    let outcomes: Vec<ReplicaOutcome> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let replica_seed = derive_seed(seed, REPLICA_TAG, r as u64);
            let mut horizon = h0;
            loop {
                let mut src = LazySource::new(g, start, replica_seed);
                let p = killed_sweep(&mut src, start, g.n_states(), horizon, k_min);
                if p.complete {
                    let c = ks.iter().map(|&k| p.c_time(k).expect("reached")).collect();
                    return Ok(ReplicaOutcome { replica: r, c, horizon_used: horizon });
                }
                horizon *= 2.0;
                if horizon > cap {
                    return Err(Error::HorizonCapExceeded { cap });
                }
            }
        })
        .collect::<Result<_>>()?;
    let summaries = (0..ks.len())
        .map(|i| SampleSummary::from_samples(&outcomes.iter().map(|o| o.c[i]).collect::<Vec<_>>()))
        .collect();
    Ok(CoalescenceEstimate { ks: ks.to_vec(), summaries, replicas: outcomes, seed })
}
