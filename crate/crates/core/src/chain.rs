//! Reversible continuous-time Markov chains on a finite state space.
//!
//! A [`Generator`] stores the off-diagonal rates `q(x, y)`. Internally the chain is
//! handled through `Q_raw = diag(exit rates) - rates`, so that `e^{-t Q_raw}` is the
//! (stochastic) transition matrix at time `t`; every module uses this one sign
//! convention.

use std::collections::VecDeque;
use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::numerics::expm_generator;
use crate::{Error, Result};

/// Relative tolerance on each detailed-balance pair.
pub const REVERSIBILITY_TOL: f64 = 1e-10;

/// Default cap on the number of base states for the pair-chain meeting-time solve.
pub const DEFAULT_PRODUCT_CAP: usize = 100;

/// A probability distribution over the states of a chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    /// Validates nonnegative entries summing to one within `1e-12`.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("probability weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("probability weights sum to {total}, not 1")));
        }
        Ok(ProbabilityVector(weights))
    }

    /// Rescales nonnegative weights to sum to one.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::invalid("weights have no positive finite mass"));
        }
        ProbabilityVector::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut w = vec![0.0; n];
        w[at] = 1.0;
        ProbabilityVector(w)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ProbabilityVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Outgoing jumps of one state, for categorical sampling.
#[derive(Debug, Clone)]
pub(crate) struct JumpTable {
    pub targets: Vec<usize>,
    pub cumulative: Vec<f64>,
}

impl JumpTable {
    /// Target for `u` uniform on `[0, total)`.
    pub fn pick(&self, u: f64) -> usize {
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.targets[i.min(self.targets.len() - 1)]
    }
}

/// Validated generator of an irreducible reversible chain.
#[derive(Debug, Clone)]
pub struct Generator {
    rates: DMatrix<f64>,
    labels: Option<Vec<String>>,
    exit: Vec<f64>,
    pi: ProbabilityVector,
    jumps: Vec<JumpTable>,
}

/// On-disk form: `{"n": int, "rates": [[...]], "labels": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorJson {
    pub n: usize,
    pub rates: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl Generator {
    /// Validates `rates` (diagonal ignored) and computes the stationary law.
    pub fn new(rates: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> Result<Self> {
        let n = rates.len();
        if n < 2 {
            return Err(Error::invalid("a generator needs at least two states"));
        }
        if let Some(row) = rates.iter().position(|r| r.len() != n) {
            return Err(Error::invalid(format!("rate row {row} has the wrong length")));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::invalid(format!("{} labels for {n} states", l.len())));
            }
        }
        let mut m = DMatrix::zeros(n, n);
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                let r = rates[x][y];
                if !r.is_finite() {
                    return Err(Error::invalid(format!("rate ({x}, {y}) is not finite")));
                }
                if r < 0.0 {
                    return Err(Error::NegativeRate { from: x, to: y, rate: r });
                }
                m[(x, y)] = r;
            }
        }
        check_irreducible(&m)?;

        let exit: Vec<f64> = (0..n).map(|x| m.row(x).sum()).collect();
        let q_raw = q_raw_of(&m, &exit);
        let pi = solve_stationary(&q_raw, &exit)?;
        check_reversible(&m, &pi)?;

        let jumps = (0..n)
            .map(|x| {
                let mut targets = Vec::new();
                let mut cumulative = Vec::new();
                let mut acc = 0.0;
                for y in 0..n {
                    if m[(x, y)] > 0.0 {
                        acc += m[(x, y)];
                        targets.push(y);
                        cumulative.push(acc);
                    }
                }
                JumpTable { targets, cumulative }
            })
            .collect();

        Ok(Generator { rates: m, labels, exit, pi, jumps })
    }

    pub fn from_json(json: &GeneratorJson) -> Result<Self> {
        if json.rates.len() != json.n {
            return Err(Error::invalid(format!("\"n\" is {} but there are {} rate rows", json.n, json.rates.len())));
        }
        Generator::new(json.rates.clone(), json.labels.clone())
    }

    pub fn to_json(&self) -> GeneratorJson {
        let n = self.n_states();
        GeneratorJson {
            n,
            rates: (0..n).map(|x| (0..n).map(|y| self.rates[(x, y)]).collect()).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.exit.len()
    }

    pub fn rate(&self, x: usize, y: usize) -> f64 {
        self.rates[(x, y)]
    }

    /// Total jump rate out of `x`.
    pub fn exit_rate(&self, x: usize) -> f64 {
        self.exit[x]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn pi(&self) -> &ProbabilityVector {
        &self.pi
    }

    pub(crate) fn jump_table(&self, x: usize) -> &JumpTable {
        &self.jumps[x]
    }

    /// `Q_raw = diag(exit rates) - rates`.
    pub fn q_raw(&self) -> DMatrix<f64> {
        q_raw_of(&self.rates, &self.exit)
    }

    /// Neighbours of `x` under positive rates.
    pub fn successors(&self, x: usize) -> &[usize] {
        &self.jumps[x].targets
    }
}

fn q_raw_of(rates: &DMatrix<f64>, exit: &[f64]) -> DMatrix<f64> {
    let mut q = -rates.clone();
    for (x, &e) in exit.iter().enumerate() {
        q[(x, x)] = e;
    }
    q
}

fn check_irreducible(rates: &DMatrix<f64>) -> Result<()> {
    let n = rates.nrows();
    for forward in [true, false] {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for y in 0..n {
                let r = if forward { rates[(x, y)] } else { rates[(y, x)] };
                if r > 0.0 && !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::NotIrreducible(missing));
        }
    }
    Ok(())
}

fn check_reversible(rates: &DMatrix<f64>, pi: &[f64]) -> Result<()> {
    let n = rates.nrows();
    for x in 0..n {
        for y in x + 1..n {
            let a = pi[x] * rates[(x, y)];
            let b = pi[y] * rates[(y, x)];
            let scale = a.max(b);
            if scale == 0.0 {
                continue;
            }
            let relative_error = (a - b).abs() / scale;
            if relative_error > REVERSIBILITY_TOL {
                return Err(Error::NotReversible { x, y, relative_error });
            }
        }
    }
    Ok(())
}

/// Solves `π^T Q_raw = 0`, `Σπ = 1` by replacing one balance equation with the
/// normalisation.
fn solve_stationary(q_raw: &DMatrix<f64>, exit: &[f64]) -> Result<ProbabilityVector> {
    let n = q_raw.nrows();
    let mut a = q_raw.transpose();
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SolveFailed("stationary system is singular".into()))?;
    if pi.iter().any(|p| !p.is_finite() || *p < -1e-12) {
        return Err(Error::SolveFailed("stationary solve produced invalid weights".into()));
    }
    let weights: Vec<f64> = pi.iter().map(|p| p.max(0.0)).collect();
    let pi = ProbabilityVector::normalized(weights)?;

    let residual = (DVector::from_column_slice(&pi).transpose() * q_raw).amax();
    let scale = exit.iter().copied().fold(1.0, f64::max);
    if residual > 1e-10 * scale {
        return Err(Error::SolveFailed(format!("stationary residual {residual:e}")));
    }
    Ok(pi)
}

/// Continuous-time simple random walk on a graph: `q(x, y) = 1/deg(x)` for every edge,
/// so each walker jumps at total rate one.
pub fn random_walk_generator(graph: &Graph) -> Result<Generator> {
    let n = graph.n_vertices();
    if n < 2 {
        return Err(Error::invalid("random walk needs at least two vertices"));
    }
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    let mut rates = vec![vec![0.0; n]; n];
    for (x, row) in rates.iter_mut().enumerate() {
        let d = graph.degree(x) as f64;
        for &y in graph.neighbors(x) {
            row[y] = 1.0 / d;
        }
    }
    Generator::new(rates, None)
}

pub fn stationary_distribution(g: &Generator) -> ProbabilityVector {
    g.pi().clone()
}

/// `e^{-t Q_raw}`, rows indexed by the starting state.
pub fn transition_matrix(g: &Generator, t: f64) -> Result<DMatrix<f64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("time {t} must be finite and nonnegative")));
    }
    Ok(expm_generator(&g.q_raw(), t))
}

/// `max_x TV(P_t(x, ·), π)`, total variation as half the L1 distance.
pub fn worst_tv(g: &Generator, t: f64) -> Result<f64> {
    let p = transition_matrix(g, t)?;
    let pi = g.pi();
    Ok((0..g.n_states())
        .map(|x| 0.5 * (0..g.n_states()).map(|y| (p[(x, y)] - pi[y]).abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

/// `E_w[H_v]` for every start `w`.
pub fn hitting_times(g: &Generator, v: usize) -> Result<Vec<f64>> {
    let n = g.n_states();
    if v >= n {
        return Err(Error::invalid(format!("state {v} out of range")));
    }
    let q = g.q_raw();
    let others: Vec<usize> = (0..n).filter(|&x| x != v).collect();
    let m = DMatrix::from_fn(n - 1, n - 1, |i, j| q[(others[i], others[j])]);
    let u = m
        .lu()
        .solve(&DVector::from_element(n - 1, 1.0))
        .ok_or_else(|| Error::SolveFailed(format!("hitting-time system for state {v} is singular")))?;
    let mut out = vec![0.0; n];
    for (i, &x) in others.iter().enumerate() {
        if !u[i].is_finite() || u[i] < -1e-9 {
            return Err(Error::SolveFailed(format!("hitting time E_{x}[H_{v}] = {}", u[i])));
        }
        out[x] = u[i].max(0.0);
    }
    Ok(out)
}

/// `hit[w][v] = E_w[H_v]`.
pub fn hitting_table(g: &Generator) -> Result<Vec<Vec<f64>>> {
    let n = g.n_states();
    let mut hit = vec![vec![0.0; n]; n];
    for v in 0..n {
        for (w, h) in hitting_times(g, v)?.into_iter().enumerate() {
            hit[w][v] = h;
        }
    }
    Ok(hit)
}

pub fn t_hit(g: &Generator) -> Result<f64> {
    Ok(hitting_table(g)?.iter().flatten().copied().fold(0.0, f64::max))
}

/// Expected meeting times of two independent copies from every pair of distinct
/// starts, as a symmetric table with zero diagonal.
///
/// The pair chain is solved on unordered pairs: its rates are those of the product
/// chain with the diagonal made absorbing, and both walkers have the same law.
pub fn meeting_table(g: &Generator, cap: usize) -> Result<Vec<Vec<f64>>> {
    let n = g.n_states();
    if n > cap {
        return Err(Error::TooLarge { n, cap });
    }
    let index = |x: usize, y: usize| {
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        // pairs (a, b) with a < b in lexicographic order
        a * (2 * n - a - 1) / 2 + (b - a - 1)
    };
    let size = n * (n - 1) / 2;
    let mut m = DMatrix::zeros(size, size);
    for x in 0..n {
        for y in x + 1..n {
            let i = index(x, y);
            m[(i, i)] = g.exit_rate(x) + g.exit_rate(y);
            for (mover, other) in [(x, y), (y, x)] {
                for &z in g.successors(mover) {
                    if z != other {
                        m[(i, index(z, other))] -= g.rate(mover, z);
                    }
                }
            }
        }
    }
    let u = m
        .lu()
        .solve(&DVector::from_element(size, 1.0))
        .ok_or_else(|| Error::SolveFailed("meeting-time system is singular".into()))?;
    let mut out = vec![vec![0.0; n]; n];
    for x in 0..n {
        for y in x + 1..n {
            let value = u[index(x, y)];
            if !value.is_finite() || value < -1e-9 {
                return Err(Error::SolveFailed(format!("meeting time from ({x}, {y}) = {value}")));
            }
            out[x][y] = value.max(0.0);
            out[y][x] = out[x][y];
        }
    }
    Ok(out)
}

pub fn t_meet(g: &Generator) -> Result<f64> {
    t_meet_capped(g, DEFAULT_PRODUCT_CAP)
}

pub fn t_meet_capped(g: &Generator, cap: usize) -> Result<f64> {
    Ok(meeting_table(g, cap)?.iter().flatten().copied().fold(0.0, f64::max))
}

/// Smallest `t` with worst-case total variation at most 1/4, by bisection to relative
/// precision `1e-6`. The bracket starts at `[0, 1]` and doubles its upper end until it
/// contains the threshold.
pub fn t_mix(g: &Generator) -> Result<f64> {
    let mut hi = 1.0;
    while worst_tv(g, hi)? > 0.25 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::SolveFailed("mixing time bracket diverged".into()));
        }
    }
    let mut lo = if hi == 1.0 { 0.0 } else { hi / 2.0 };
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if worst_tv(g, mid)? <= 0.25 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Exact analytics of one chain.
#[derive(Debug, Clone, Serialize)]
pub struct ChainAnalytics {
    pub pi: ProbabilityVector,
    pub hit: Vec<Vec<f64>>,
    pub t_hit: f64,
    /// `None` when the chain exceeds the pair-chain cap.
    pub t_meet: Option<f64>,
    pub t_mix: f64,
}

impl ChainAnalytics {
    pub fn compute(g: &Generator) -> Result<Self> {
        Self::compute_with_cap(g, DEFAULT_PRODUCT_CAP)
    }

    pub fn compute_with_cap(g: &Generator, cap: usize) -> Result<Self> {
        let hit = hitting_table(g)?;
        let t_hit = hit.iter().flatten().copied().fold(0.0, f64::max);
        let t_meet = match t_meet_capped(g, cap) {
            Ok(v) => Some(v),
            Err(Error::TooLarge { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(ChainAnalytics { pi: g.pi().clone(), hit, t_hit, t_meet, t_mix: t_mix(g)? })
    }
}

/// Random irreducible reversible chain on `n` states: a random spanning tree plus
/// extra edges with probability `extra_edge_p`, symmetric conductances `c(x, y)` and
/// state weights `w(x)`, with `q(x, y) = c(x, y) / w(x)`.
pub fn random_reversible<R: Rng + ?Sized>(n: usize, extra_edge_p: f64, rng: &mut R) -> Result<Generator> {
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    let mut conductance = vec![vec![0.0; n]; n];
    for x in 1..n {
        let y = rng.random_range(0..x);
        let c = rng.random_range(0.1..1.0);
        conductance[x][y] = c;
        conductance[y][x] = c;
    }
    for x in 0..n {
        for y in x + 1..n {
            if conductance[x][y] == 0.0 && rng.random::<f64>() < extra_edge_p {
                let c = rng.random_range(0.1..1.0);
                conductance[x][y] = c;
                conductance[y][x] = c;
            }
        }
    }
    let rates = (0..n)
        .map(|x| (0..n).map(|y| if x == y { 0.0 } else { conductance[x][y] / weights[x] }).collect())
        .collect();
    Generator::new(rates, None)
}
