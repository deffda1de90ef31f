use rand::Rng;
use rand_distr::Exp1;

use crate::chain::Generator;
use crate::path::PiecewisePath;
use crate::rng::{self, StreamRng, WALKER_TAG};
use crate::{Error, Result};

/// Resumption state of one walker: its generator stream, current state and the time of
/// its next (not yet recorded) jump.
#[derive(Debug, Clone)]
pub(crate) struct WalkerCursor {
    rng: StreamRng,
    state: usize,
    next_jump: f64,
}

impl WalkerCursor {
    pub(crate) fn new(g: &Generator, start: usize, seed: u64, walker: usize) -> Self {
        let mut rng = rng::stream(seed, WALKER_TAG, walker as u64);
        let next_jump = holding_time(g, start, &mut rng);
        WalkerCursor { rng, state: start, next_jump }
    }

    pub(crate) fn peek(&self) -> f64 {
        self.next_jump
    }

    /// Performs the pending jump and returns `(time, target)`.
    pub(crate) fn pop(&mut self, g: &Generator) -> (f64, usize) {
        let t = self.next_jump;
        let u = self.rng.random::<f64>() * g.exit_rate(self.state);
        let target = g.jump_table(self.state).pick(u);
        self.state = target;
        self.next_jump += holding_time(g, target, &mut self.rng);
        (t, target)
    }

    /// Records every jump up to and including `horizon`.
    fn advance(&mut self, g: &Generator, path: &mut PiecewisePath, horizon: f64) {
        while self.next_jump <= horizon {
            let (t, target) = self.pop(g);
            path.push_jump(t, target);
        }
        path.set_horizon(horizon);
    }
}

fn holding_time(g: &Generator, state: usize, rng: &mut StreamRng) -> f64 {
    loop {
        let e: f64 = rng.sample(Exp1);
        if e > 0.0 {
            return e / g.exit_rate(state);
        }
    }
}

/// `n` independent trajectories of one generator on `[0, horizon]`.
///
/// Walker `a` draws from its own stream, seeded from `(seed, a)`; per jump it draws the
/// target and then the next holding time. A path therefore depends only on
/// `(seed, a, start)` and not on the horizon, which is what makes extension exact.
#[derive(Debug, Clone)]
pub struct WalkerEnsemble<'g> {
    generator: &'g Generator,
    start: Vec<usize>,
    paths: Vec<PiecewisePath>,
    cursors: Vec<WalkerCursor>,
    horizon: f64,
    seed: u64,
}

impl<'g> WalkerEnsemble<'g> {
    pub fn generator(&self) -> &'g Generator {
        self.generator
    }

    pub fn n_walkers(&self) -> usize {
        self.paths.len()
    }

    pub fn start(&self) -> &[usize] {
        &self.start
    }

    pub fn paths(&self) -> &[PiecewisePath] {
        &self.paths
    }

    pub fn path(&self, walker: usize) -> &PiecewisePath {
        &self.paths[walker]
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `X_t(a)`.
    pub fn position(&self, walker: usize, t: f64) -> usize {
        self.paths[walker].value_at(t)
    }

    /// Extends every path to `new_horizon` in place.
    pub fn extend_to(&mut self, new_horizon: f64) -> Result<()> {
        if !(new_horizon >= self.horizon) || !new_horizon.is_finite() {
            return Err(Error::invalid(format!(
                "new horizon {new_horizon} is below the current horizon {}",
                self.horizon
            )));
        }
        for (cursor, path) in self.cursors.iter_mut().zip(&mut self.paths) {
            cursor.advance(self.generator, path, new_horizon);
        }
        self.horizon = new_horizon;
        Ok(())
    }
}

pub fn sample_ensemble<'g>(
    g: &'g Generator,
    start: &[usize],
    horizon: f64,
    seed: u64,
) -> Result<WalkerEnsemble<'g>> {
    if start.is_empty() {
        return Err(Error::invalid("an ensemble needs at least one walker"));
    }
    if let Some(&bad) = start.iter().find(|&&x| x >= g.n_states()) {
        return Err(Error::invalid(format!("start state {bad} out of range")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::invalid(format!("horizon {horizon} must be positive and finite")));
    }
    let mut cursors = Vec::with_capacity(start.len());
    let mut paths = Vec::with_capacity(start.len());
    for (a, &x) in start.iter().enumerate() {
        let mut cursor = WalkerCursor::new(g, x, seed, a);
        let mut path = PiecewisePath::constant(x, 0.0);
        cursor.advance(g, &mut path, horizon);
        cursors.push(cursor);
        paths.push(path);
    }
    Ok(WalkerEnsemble { generator: g, start: start.to_vec(), paths, cursors, horizon, seed })
}

/// The ensemble continued to `new_horizon`; equal to sampling afresh at that horizon.
pub fn extend_ensemble<'g>(e: &WalkerEnsemble<'g>, new_horizon: f64) -> Result<WalkerEnsemble<'g>> {
    let mut out = e.clone();
    out.extend_to(new_horizon)?;
    Ok(out)
}
