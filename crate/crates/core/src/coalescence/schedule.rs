use serde::Serialize;

use crate::{Error, Result};

/// A time-dependent list of allowed killings: `allows(b, a, t)` says whether walker
/// `b` may kill walker `a` at time `t`. Implementations are right-continuous and change
/// only at the times listed by `change_times`.
pub trait KillSchedule {
    fn allows(&self, killer: usize, victim: usize, t: f64) -> bool;

    /// Times at which the allowed set may change, ascending.
    fn change_times(&self) -> Vec<f64>;
}

/// The two constant schedules: every pair `b < a` always allowed, or none ever.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UniformSchedule {
    Always,
    Never,
}

impl KillSchedule for UniformSchedule {
    fn allows(&self, killer: usize, victim: usize, _t: f64) -> bool {
        matches!(self, UniformSchedule::Always) && killer < victim
    }

    fn change_times(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Dyadic epochs: walkers split into groups `A_0 = {0}`, `A_j` of size `2^j`, and a
/// final group `A_m` holding the rest. Nothing may be killed before `t_m`. During
/// `[t_j, t_{j-1})` members of `A_{j-1}` may kill members of any later group. From
/// `t_0` on, every lower index may kill every higher one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochSchedule {
    pub m: usize,
    /// `groups[j]` is the half-open walker range of `A_j`.
    pub groups: Vec<(usize, usize)>,
    /// `times[j] = t_j`; decreasing in `j`.
    pub times: Vec<f64>,
}

pub fn build_epoch_schedule(n: usize, t_mix: f64, t_hit: f64) -> Result<EpochSchedule> {
    if n < 2 {
        return Err(Error::invalid("an epoch schedule needs at least two walkers"));
    }
    if !(t_mix > 0.0 && t_hit > 0.0) || !t_mix.is_finite() || !t_hit.is_finite() {
        return Err(Error::invalid("t_mix and t_hit must be positive and finite"));
    }
    let mut m = 0;
    while n > (1usize << (m + 1)) - 1 {
        m += 1;
    }
    let mut groups: Vec<(usize, usize)> = (0..m).map(|j| ((1 << j) - 1, (1 << (j + 1)) - 1)).collect();
    groups.push(((1 << m) - 1, n));
    let mut times = vec![0.0; m + 1];
    times[m] = 2.0 * t_mix;
    for j in (0..m).rev() {
        times[j] = times[j + 1] + 5f64.ln() * 2f64.powi(4 - j as i32) * t_hit;
    }
    Ok(EpochSchedule { m, groups, times })
}

impl EpochSchedule {
    pub fn n_walkers(&self) -> usize {
        self.groups[self.m].1
    }

    pub fn group_of(&self, walker: usize) -> usize {
        self.groups.partition_point(|&(_, end)| end <= walker)
    }

    /// `Some(j)` when `t` lies in the epoch `[t_j, t_{j-1})`, `Some(0)` from `t_0` on, and
    /// `None` before `t_m`.
    pub fn epoch_at(&self, t: f64) -> Option<usize> {
        // times is decreasing, so count the entries still above t
        let above = self.times.partition_point(|&s| s > t);
        (above <= self.m).then_some(above)
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }
}

impl KillSchedule for EpochSchedule {
    fn allows(&self, killer: usize, victim: usize, t: f64) -> bool {
        if killer >= victim {
            return false;
        }
        match self.epoch_at(t) {
            None => false,
            Some(0) => true,
            Some(j) => self.group_of(killer) == j - 1 && self.group_of(victim) >= j,
        }
    }

    fn change_times(&self) -> Vec<f64> {
        self.times.iter().rev().copied().collect()
    }
}
