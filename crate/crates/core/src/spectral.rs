//! Killed chains, quasistationary distributions and survival against a moving target.
//!
//! For a target state `v`, `Q_{-v}` is the restriction of the symmetrised generator
//! `S = Π^{1/2} Q_raw Π^{-1/2}` to the coordinates other than `v`. Its smallest
//! eigenvalue `λ(v)` is the exit rate of the quasistationary distribution `q_v`: started
//! from `q_v`, the hitting time of `v` is exactly exponential with rate `λ(v)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::chain::{Generator, ProbabilityVector};
use crate::numerics::{propagate_killed, smallest_eigenpair};
use crate::path::PiecewisePath;
use crate::{Error, Result};

pub const EIGEN_TOL: f64 = 1e-12;
pub const EIGEN_MAX_ITER: usize = 10_000;

/// `S = Π^{1/2} Q_raw Π^{-1/2}`, symmetric for reversible chains.
pub fn symmetrized_generator(g: &Generator) -> DMatrix<f64> {
    let q = g.q_raw();
    let sqrt_pi: Vec<f64> = g.pi().iter().map(|p| p.sqrt()).collect();
    DMatrix::from_fn(q.nrows(), q.ncols(), |x, y| sqrt_pi[x] * q[(x, y)] / sqrt_pi[y])
}

#[derive(Debug, Clone)]
pub struct KilledGenerator {
    pub target: usize,
    /// States of `V \ {v}` in increasing order; row `i` of `matrix` is `states[i]`.
    pub states: Vec<usize>,
    /// `Q_{-v}`.
    pub matrix: DMatrix<f64>,
    /// Connected components of `V \ {v}` under positive rates, as indices into
    /// `states`, ordered by their smallest state.
    pub blocks: Vec<Vec<usize>>,
}

impl KilledGenerator {
    pub fn asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    fn block_matrix(&self, block: &[usize]) -> DMatrix<f64> {
        let m = block.len();
        let mut b = DMatrix::from_fn(m, m, |i, j| self.matrix[(block[i], block[j])]);
        // remove rounding asymmetry before factorising
        b = (&b + b.transpose()) * 0.5;
        b
    }
}

pub fn killed_generator(g: &Generator, v: usize) -> Result<KilledGenerator> {
    let n = g.n_states();
    if v >= n {
        return Err(Error::invalid(format!("state {v} out of range")));
    }
    let s = symmetrized_generator(g);
    let states: Vec<usize> = (0..n).filter(|&x| x != v).collect();
    let matrix = DMatrix::from_fn(n - 1, n - 1, |i, j| s[(states[i], states[j])]);

    let mut position = vec![usize::MAX; n];
    for (i, &x) in states.iter().enumerate() {
        position[x] = i;
    }
    let mut block_of = vec![usize::MAX; n - 1];
    let mut blocks = Vec::new();
    for start in 0..n - 1 {
        if block_of[start] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        let mut members = vec![start];
        block_of[start] = id;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for &y in g.successors(states[i]) {
                if y == v {
                    continue;
                }
                let j = position[y];
                if block_of[j] == usize::MAX {
                    block_of[j] = id;
                    members.push(j);
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        blocks.push(members);
    }
    Ok(KilledGenerator { target: v, states, matrix, blocks })
}

#[derive(Debug, Clone, Serialize)]
pub struct Quasistationary {
    pub target: usize,
    /// `q_v`, zero at the target.
    pub qsd: ProbabilityVector,
    /// `λ(v)`, smallest eigenvalue of `Q_{-v}`.
    pub lambda: f64,
    /// `E_{q_v}[H_v] = 1/λ(v)`.
    pub expected_hit: f64,
    /// Index of the block carrying `q_v`.
    pub block: usize,
    pub iterations: usize,
    pub residual: f64,
}

/// Quasistationary distribution for the chain killed at `v`.
///
/// Every block of `Q_{-v}` is solved separately; the block with the smallest eigenvalue
/// carries `q_v` (ties go to the lowest block index).
pub fn quasistationary(g: &Generator, v: usize) -> Result<Quasistationary> {
    let killed = killed_generator(g, v)?;
    let mut best: Option<(usize, crate::numerics::Eigenpair)> = None;
    for (b, block) in killed.blocks.iter().enumerate() {
        let pair = smallest_eigenpair(&killed.block_matrix(block), 0.0, EIGEN_TOL, EIGEN_MAX_ITER)?;
        if best.as_ref().is_none_or(|(_, p)| pair.value < p.value) {
            best = Some((b, pair));
        }
    }
    let (block, pair) = best.expect("n >= 2 leaves at least one block");
    if !(pair.value > 0.0) {
        return Err(Error::SolveFailed(format!("killed chain at {v} has nonpositive eigenvalue {}", pair.value)));
    }

    let pi = g.pi();
    let mut weights = vec![0.0; g.n_states()];
    for (i, &local) in killed.blocks[block].iter().enumerate() {
        let x = killed.states[local];
        weights[x] = pi[x].sqrt() * pair.vector[i].max(0.0);
    }
    Ok(Quasistationary {
        target: v,
        qsd: ProbabilityVector::normalized(weights)?,
        lambda: pair.value,
        expected_hit: 1.0 / pair.value,
        block,
        iterations: pair.iterations,
        residual: pair.residual,
    })
}

/// Exact `P_μ[X_s ≠ h_s for all 0 ≤ s ≤ t]`.
///
/// On each segment of `h` the mass at the current value is removed at the segment
/// start, then the remainder evolves under the chain killed on entering that value.
pub fn survival_probability(g: &Generator, mu: &ProbabilityVector, h: &PiecewisePath, t: f64) -> Result<f64> {
    let n = g.n_states();
    if mu.len() != n {
        return Err(Error::invalid("initial law has the wrong length"));
    }
    if h.max_value() >= n {
        return Err(Error::invalid("path visits a state outside the chain"));
    }
    if !(t >= 0.0) || t > h.horizon() {
        return Err(Error::invalid(format!("time {t} outside [0, {}]", h.horizon())));
    }
    let q = g.q_raw();
    let mut mass = DVector::from_column_slice(mu);
    let bps = h.breakpoints();
    for (k, (&start, &target)) in bps.iter().zip(h.values()).enumerate() {
        if start > t {
            break;
        }
        let end = bps.get(k + 1).copied().unwrap_or(h.horizon()).min(t);
        mass[target] = 0.0;
        propagate_killed(&q, &mut mass, Some(target), end - start);
    }
    Ok(mass.sum().clamp(0.0, 1.0))
}

/// `max_v E_{q_v}[H_v]`: every path `h` satisfies
/// `P_π[X avoids h on [0, t]] ≤ exp(-t / bound)`.
pub fn meeting_time_bound(g: &Generator) -> Result<f64> {
    Ok(all_quasistationary(g)?.iter().map(|q| q.expected_hit).fold(0.0, f64::max))
}

pub fn all_quasistationary(g: &Generator) -> Result<Vec<Quasistationary>> {
    (0..g.n_states()).map(|v| quasistationary(g, v)).collect()
}

/// `λ_min(t·S + Δ·D_v)` for each `Δ`, where `D_v` is the indicator of entry `(v, v)`.
/// As `Δ` grows these increase to `t·λ(v)`.
pub fn claim_convergence(g: &Generator, v: usize, t: f64, deltas: &[f64]) -> Result<Vec<f64>> {
    if v >= g.n_states() {
        return Err(Error::invalid(format!("state {v} out of range")));
    }
    if !(t > 0.0) {
        return Err(Error::invalid("time must be positive"));
    }
    let s = symmetrized_generator(g);
    let base = (&s + s.transpose()) * (0.5 * t);
    deltas
        .iter()
        .map(|&delta| {
            if !(delta >= 0.0) {
                return Err(Error::invalid("penalties must be nonnegative"));
            }
            let mut a = base.clone();
            a[(v, v)] += delta;
            // a is positive semidefinite; a small negative shift makes it definite
            let shift = -1e-6 * (1.0 + a.amax());
            smallest_eigenpair(&a, shift, EIGEN_TOL, EIGEN_MAX_ITER).map(|p| p.value)
        })
        .collect()
}
