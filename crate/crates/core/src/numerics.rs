//! Dense numerical kernels shared by the chain and spectral modules.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Poisson tail mass left out of every uniformization sum.
pub(crate) const POISSON_TAIL: f64 = 1e-13;

/// Largest uniformized time `Λt` evaluated directly for matrices; longer times are
/// handled by squaring.
const MATRIX_CHUNK: f64 = 8.0;

/// Largest uniformized time evaluated in one Poisson sum when propagating vectors.
const VECTOR_CHUNK: f64 = 32.0;

/// Poisson(x) probabilities `p_0, p_1, ...`, stopping once the remaining tail mass is
/// below `tail` and the mode has been passed. `x` must be small enough that `e^{-x}`
/// does not underflow; callers chunk longer times.
pub(crate) fn poisson_weights(x: f64, tail: f64) -> Vec<f64> {
    debug_assert!((0.0..=700.0).contains(&x));
    let mut w = (-x).exp();
    let mut weights = vec![w];
    let mut cumulative = w;
    let mut k = 0.0;
    while 1.0 - cumulative >= tail || k < x {
        k += 1.0;
        w *= x / k;
        weights.push(w);
        cumulative += w;
        // Rounding can keep `cumulative` a few ulps short of 1; the tail is
        // negligible once the weights themselves are.
        if k > x && w < tail * 1e-3 {
            break;
        }
    }
    weights
}

/// `P = I - Q/Λ` for a generator `Q` with nonnegative diagonal and nonpositive
/// off-diagonal entries, where `Λ` is the largest diagonal entry.
fn uniformized(q: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let n = q.nrows();
    let lambda = (0..n).map(|i| q[(i, i)]).fold(0.0, f64::max);
    let mut p = -q / lambda;
    for i in 0..n {
        p[(i, i)] += 1.0;
    }
    (p, lambda)
}

/// `e^{-tQ}` by uniformization. Times with `Λt` above a small threshold are split as
/// `t / 2^s` and the result squared `s` times.
pub(crate) fn expm_generator(q: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = q.nrows();
    if t == 0.0 {
        return DMatrix::identity(n, n);
    }
    let (p, lambda) = uniformized(q);
    let x = lambda * t;
    let squarings = if x > MATRIX_CHUNK {
        (x / MATRIX_CHUNK).log2().ceil() as i32
    } else {
        0
    };
    let x_step = x / 2f64.powi(squarings);

    // Renormalized so each step is exactly stochastic; otherwise the dropped tail
    // compounds through the squarings.
    let mut weights = poisson_weights(x_step, POISSON_TAIL);
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut term = DMatrix::identity(n, n);
    let mut acc = &term * weights[0];
    for &w in &weights[1..] {
        term = &term * &p;
        acc += &term * w;
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    acc.apply(|v| {
        if *v < 0.0 && *v >= -1e-12 {
            *v = 0.0;
        }
    });
    acc
}

/// Propagates a row vector by the semigroup of `q` with state `killed` made absorbing
/// and removed: mass that jumps into `killed` is lost. With `killed = None` this is
/// the ordinary (stochastic) semigroup.
pub(crate) fn propagate_killed(
    q: &DMatrix<f64>,
    mu: &mut DVector<f64>,
    killed: Option<usize>,
    t: f64,
) {
    if t <= 0.0 {
        return;
    }
    let (p, lambda) = uniformized(q);
    let pt = p.transpose();
    let mut remaining = lambda * t;
    while remaining > 0.0 {
        let x = remaining.min(VECTOR_CHUNK);
        remaining -= x;
        let weights = poisson_weights(x, POISSON_TAIL);
        let mut term = mu.clone();
        let mut acc = &term * weights[0];
        for &w in &weights[1..] {
            term = &pt * &term;
            if let Some(h) = killed {
                term[h] = 0.0;
            }
            acc.axpy(w, &term, 1.0);
        }
        *mu = acc;
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Eigenpair {
    pub value: f64,
    pub vector: DVector<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Smallest eigenpair of a symmetric matrix by inverse power iteration on
/// `a - shift·I`, started from the all-ones vector.
///
/// Convergence is declared when successive Rayleigh quotients differ by less than
/// `tol·|λ|` plus a few ulps of `‖a‖`, and the residual `‖ax - λx‖` is below `tol·‖a‖`.
/// The second test matters for the eigenvector: the Rayleigh quotient settles
/// quadratically faster than the vector does.
pub(crate) fn smallest_eigenpair(
    a: &DMatrix<f64>,
    shift: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Eigenpair> {
    let n = a.nrows();
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let chol = shifted.clone().cholesky();
    let lu = if chol.is_none() { Some(shifted.lu()) } else { None };
    let solve = |x: &DVector<f64>| -> Option<DVector<f64>> {
        match (&chol, &lu) {
            (Some(c), _) => Some(c.solve(x)),
            (None, Some(l)) => l.solve(x),
            _ => None,
        }
    };

    let a_norm = a.norm();
    let scale = 8.0 * f64::EPSILON * a_norm;
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut value = x.dot(&(a * &x));
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let y = solve(&x)
            .ok_or_else(|| Error::SolveFailed("singular shifted matrix in inverse iteration".into()))?;
        let norm = y.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::SolveFailed("inverse iteration produced a degenerate vector".into()));
        }
        x = y / norm;
        let ax = a * &x;
        let next = x.dot(&ax);
        residual = (&ax - &x * next).norm();
        let settled = (next - value).abs() <= tol * next.abs() + scale && residual <= tol * a_norm;
        value = next;
        if it >= 2 && settled {
            if x.sum() < 0.0 {
                x.neg_mut();
            }
            return Ok(Eigenpair { value, vector: x, iterations: it, residual });
        }
    }
    Err(Error::EigenNotConverged { iterations: max_iter, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_weights_cover_the_mass() {
        for &x in &[0.0, 0.3, 1.0, 7.9, 32.0] {
            let w = poisson_weights(x, POISSON_TAIL);
            let total: f64 = w.iter().sum();
            assert!((1.0 - total).abs() < 2e-13, "x={x} total={total}");
        }
    }

    #[test]
    fn two_state_exponential_closed_form() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        for &t in &[0.01, 0.5, 3.0, 40.0, 900.0] {
            let p = expm_generator(&q, t);
            let expected = 0.5 + 0.5 * (-2.0 * t).exp();
            assert!((p[(0, 0)] - expected).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn killed_propagation_of_single_exponential() {
        // State 0 leaks to 1 at rate 3; killing 1 leaves mass e^{-3t}.
        let q = DMatrix::from_row_slice(2, 2, &[3.0, -3.0, -1.0, 1.0]);
        let mut mu = DVector::from_vec(vec![1.0, 0.0]);
        propagate_killed(&q, &mut mu, Some(1), 70.0);
        assert!((mu.sum() - (-210.0f64).exp()).abs() < 1e-13);
        let mut mu = DVector::from_vec(vec![1.0, 0.0]);
        propagate_killed(&q, &mut mu, Some(1), 0.2);
        assert!((mu.sum() - (-0.6f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn inverse_iteration_matches_dense_eigensolver() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let pair = smallest_eigenpair(&a, 0.0, 1e-12, 10_000).unwrap();
        let exact = 2.0 - 2f64.sqrt();
        assert!((pair.value - exact).abs() < 1e-12);
        assert!(pair.vector.iter().all(|&v| v > 0.0));
        let sym = a.symmetric_eigen();
        assert!((sym.eigenvalues.min() - pair.value).abs() < 1e-12);
    }
}
