use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::Serialize;

use super::ensemble::{WalkerCursor, WalkerEnsemble};
use super::schedule::KillSchedule;
use crate::chain::Generator;
use crate::path::PiecewisePath;
use crate::{Error, Result};

const NOBODY: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    Coalescing,
    Killing,
    Allowed,
}

/// A particle process read off a walker ensemble.
///
/// `occupied` lists `(t, |S_t|)` at time 0 and at every later change of the number of
/// occupied sites, with at most one entry per time. `c_times[k]` is the first time with
/// at most `k` occupied sites, `+inf` if not reached within the horizon, and
/// `c_times[0]` is always `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedProcess {
    pub kind: ProcessKind,
    /// `τ_a`: coalescence time or death time, `+inf` if not within the horizon.
    pub tau: Vec<f64>,
    /// `B_a` for the coalescing process: the walker followed from `τ_a` on.
    pub followed: Vec<Option<usize>>,
    pub occupied: Vec<(f64, usize)>,
    pub c_times: Vec<f64>,
    pub horizon: f64,
    /// Whether the process had reached its terminal state within the horizon.
    pub complete: bool,
}

impl DerivedProcess {
    fn assemble(
        kind: ProcessKind,
        tau: Vec<f64>,
        followed: Vec<Option<usize>>,
        raw: Vec<(f64, usize)>,
        horizon: f64,
        complete: bool,
    ) -> Self {
        let occupied = normalize_profile(raw);
        let n = tau.len();
        let mut c_times = vec![f64::INFINITY; n + 1];
        for k in 1..=n {
            if let Some(&(t, _)) = occupied.iter().find(|&&(_, s)| s <= k) {
                c_times[k] = t;
            }
        }
        DerivedProcess { kind, tau, followed, occupied, c_times, horizon, complete }
    }

    pub fn n_walkers(&self) -> usize {
        self.tau.len()
    }

    /// `|S_t|` for `t` within the horizon.
    pub fn size_at(&self, t: f64) -> usize {
        let i = self.occupied.partition_point(|&(s, _)| s <= t);
        self.occupied[i.saturating_sub(1)].1
    }

    /// `C_k`, or `None` if not reached within the horizon.
    pub fn c_time(&self, k: usize) -> Option<f64> {
        if k == 0 {
            return None;
        }
        let c = self.c_times.get(k).copied().unwrap_or(0.0);
        c.is_finite().then_some(c)
    }

    /// Number of walkers with `τ_a > t`.
    pub fn alive_at(&self, t: f64) -> usize {
        self.tau.iter().filter(|&&s| s > t).count()
    }

    /// Occupied sites at time `t`, sorted.
    pub fn occupied_sites(&self, e: &WalkerEnsemble<'_>, t: f64) -> Vec<usize> {
        let mut sites: Vec<usize> = match self.kind {
            ProcessKind::Coalescing => (0..self.n_walkers())
                .map(|mut a| {
                    while t >= self.tau[a] {
                        a = self.followed[a].expect("coalesced walker follows someone");
                    }
                    e.position(a, t)
                })
                .collect(),
            _ => (0..self.n_walkers()).filter(|&a| self.tau[a] > t).map(|a| e.position(a, t)).collect(),
        };
        sites.sort_unstable();
        sites.dedup();
        sites
    }

    fn into_result(self) -> Result<Self> {
        if self.complete {
            Ok(self)
        } else {
            Err(Error::HorizonExceeded(Box::new(self)))
        }
    }
}

/// Keeps the last entry per time and drops entries that do not change the size.
fn normalize_profile(raw: Vec<(f64, usize)>) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::with_capacity(raw.len());
    for (t, s) in raw {
        if let Some(last) = out.last_mut() {
            if last.0 == t {
                last.1 = s;
                continue;
            }
        }
        out.push((t, s));
    }
    let mut dedup: Vec<(f64, usize)> = Vec::with_capacity(out.len());
    for entry in out {
        if dedup.last().is_none_or(|last| last.1 != entry.1) {
            dedup.push(entry);
        }
    }
    dedup
}

/// Number of distinct values taken by `paths` over time, as `(t, count)` changes.
fn occupancy_profile(paths: &[PiecewisePath], n_states: usize) -> Vec<(f64, usize)> {
    let mut counts = vec![0usize; n_states];
    let mut distinct = 0;
    for p in paths {
        counts[p.start()] += 1;
        if counts[p.start()] == 1 {
            distinct += 1;
        }
    }
    let mut jumps: Vec<(f64, usize, usize, usize)> = Vec::new();
    for (a, p) in paths.iter().enumerate() {
        let (b, v) = (p.breakpoints(), p.values());
        for k in 1..b.len() {
            jumps.push((b[k], a, v[k - 1], v[k]));
        }
    }
    jumps.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut profile = vec![(0.0, distinct)];
    for (t, _, from, to) in jumps {
        counts[from] -= 1;
        if counts[from] == 0 {
            distinct -= 1;
        }
        counts[to] += 1;
        if counts[to] == 1 {
            distinct += 1;
        }
        profile.push((t, distinct));
    }
    profile
}

/// The coalescing process, built literally: walker `a` follows its own trajectory until
/// it first sits on the coalesced trajectory of some `b < a`, and from then on follows
/// the smallest such `b`.
pub fn derive_coalescing(e: &WalkerEnsemble<'_>) -> Result<DerivedProcess> {
    let n = e.n_walkers();
    let mut co: Vec<PiecewisePath> = Vec::with_capacity(n);
    let mut tau = vec![f64::INFINITY; n];
    let mut followed = vec![None; n];
    co.push(e.path(0).clone());
    for a in 1..n {
        let x = e.path(a);
        let mut best: Option<(f64, usize)> = None;
        for (b, cb) in co.iter().enumerate() {
            if let Some(t) = x.first_meeting(cb) {
                // strict comparison keeps the smallest b among simultaneous meetings
                if best.is_none_or(|(s, _)| t < s) {
                    best = Some((t, b));
                }
            }
        }
        match best {
            Some((t, b)) => {
                tau[a] = t;
                followed[a] = Some(b);
                let spliced = x.splice(t, &co[b]);
                co.push(spliced);
            }
            None => co.push(x.clone()),
        }
    }
    let raw = occupancy_profile(&co, e.generator().n_states());
    let complete = raw.last().is_some_and(|&(_, s)| s == 1);
    DerivedProcess::assemble(ProcessKind::Coalescing, tau, followed, raw, e.horizon(), complete).into_result()
}

/// Supplies each walker's jumps in time order.
pub(crate) trait JumpSource {
    fn peek(&self, walker: usize) -> f64;
    fn pop(&mut self, walker: usize) -> (f64, usize);
}

struct PathSource<'a> {
    paths: &'a [PiecewisePath],
    next: Vec<usize>,
}

impl<'a> PathSource<'a> {
    fn new(paths: &'a [PiecewisePath]) -> Self {
        PathSource { paths, next: vec![1; paths.len()] }
    }
}

impl JumpSource for PathSource<'_> {
    fn peek(&self, walker: usize) -> f64 {
        self.paths[walker].breakpoints().get(self.next[walker]).copied().unwrap_or(f64::INFINITY)
    }

    fn pop(&mut self, walker: usize) -> (f64, usize) {
        let k = self.next[walker];
        self.next[walker] += 1;
        let p = &self.paths[walker];
        (p.breakpoints()[k], p.values()[k])
    }
}

/// Draws jumps on demand, so walkers that die are never simulated further. Yields the
/// same trajectories as [`super::sample_ensemble`] with the same seed.
pub(crate) struct LazySource<'g> {
    generator: &'g Generator,
    cursors: Vec<WalkerCursor>,
}

impl<'g> LazySource<'g> {
    pub(crate) fn new(g: &'g Generator, start: &[usize], seed: u64) -> Self {
        let cursors = start.iter().enumerate().map(|(a, &x)| WalkerCursor::new(g, x, seed, a)).collect();
        LazySource { generator: g, cursors }
    }
}

impl JumpSource for LazySource<'_> {
    fn peek(&self, walker: usize) -> f64 {
        self.cursors[walker].peek()
    }

    fn pop(&mut self, walker: usize) -> (f64, usize) {
        self.cursors[walker].pop(self.generator)
    }
}

/// Heap entry ordered by `(time, walker)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Event(f64, usize);

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Killing process driven by `src`, run until the horizon or until at most `stop_at`
/// walkers are alive.
pub(crate) fn killed_sweep<S: JumpSource>(
    src: &mut S,
    start: &[usize],
    n_states: usize,
    horizon: f64,
    stop_at: usize,
) -> DerivedProcess {
    let n = start.len();
    let mut owner = vec![NOBODY; n_states];
    let mut pos = start.to_vec();
    let mut tau = vec![f64::INFINITY; n];
    let mut alive = 0;
    for (a, &x) in start.iter().enumerate() {
        if owner[x] == NOBODY {
            owner[x] = a;
            alive += 1;
        } else {
            tau[a] = 0.0;
        }
    }
    let mut raw = vec![(0.0, alive)];
    let mut heap = BinaryHeap::new();
    for a in 0..n {
        if tau[a].is_infinite() && src.peek(a) <= horizon {
            heap.push(Reverse(Event(src.peek(a), a)));
        }
    }
    while alive > stop_at.max(1) {
        let Some(Reverse(Event(_, a))) = heap.pop() else { break };
        if tau[a].is_finite() {
            continue;
        }
        let (t, y) = src.pop(a);
        owner[pos[a]] = NOBODY;
        pos[a] = y;
        let b = owner[y];
        if b == NOBODY {
            owner[y] = a;
        } else {
            let victim = a.max(b);
            tau[victim] = t;
            owner[y] = a.min(b);
            alive -= 1;
            raw.push((t, alive));
        }
        if tau[a].is_infinite() && src.peek(a) <= horizon {
            heap.push(Reverse(Event(src.peek(a), a)));
        }
    }
    let complete = alive <= stop_at.max(1);
    DerivedProcess::assemble(ProcessKind::Killing, tau, vec![None; n], raw, horizon, complete)
}

/// The killing process: walker `a` moves to the coffin state the first time it shares
/// a site with a live walker of smaller index.
pub fn derive_killed(e: &WalkerEnsemble<'_>) -> Result<DerivedProcess> {
    let mut src = PathSource::new(e.paths());
    killed_sweep(&mut src, e.start(), e.generator().n_states(), e.horizon(), 1).into_result()
}

/// The process with allowed killings: walker `a` dies the first time it shares a site
/// with a live walker `b` such that `sched.allows(b, a, t)`.
///
/// Sites are re-examined at time 0, at every jump and at every schedule change. A
/// change and a jump at the same instant are handled change first.
pub fn derive_allowed(e: &WalkerEnsemble<'_>, sched: &dyn KillSchedule) -> Result<DerivedProcess> {
    let n = e.n_walkers();
    let horizon = e.horizon();
    let mut src = PathSource::new(e.paths());
    let mut sites: Vec<Vec<usize>> = vec![Vec::new(); e.generator().n_states()];
    let mut pos = e.start().to_vec();
    let mut tau = vec![f64::INFINITY; n];
    for (a, &x) in pos.iter().enumerate() {
        sites[x].push(a);
    }
    let mut distinct = sites.iter().filter(|s| !s.is_empty()).count();
    let mut alive = n;

    let examine = |site: &mut Vec<usize>, t: f64, tau: &mut [f64]| -> usize {
        if site.len() < 2 {
            return 0;
        }
        site.sort_unstable();
        let mut survivors: Vec<usize> = Vec::with_capacity(site.len());
        let mut killed = 0;
        for &a in site.iter() {
            if survivors.iter().any(|&b| sched.allows(b, a, t)) {
                tau[a] = t;
                killed += 1;
            } else {
                survivors.push(a);
            }
        }
        *site = survivors;
        killed
    };

    for site in sites.iter_mut() {
        alive -= examine(site, 0.0, &mut tau);
    }
    let mut raw = vec![(0.0, distinct)];
    let changes: Vec<f64> = sched.change_times().into_iter().filter(|&c| c > 0.0 && c <= horizon).collect();
    let mut next_change = 0;
    let mut heap = BinaryHeap::new();
    for a in 0..n {
        if tau[a].is_infinite() && src.peek(a) <= horizon {
            heap.push(Reverse(Event(src.peek(a), a)));
        }
    }
    while alive > 1 {
        let jump_time = heap.peek().map_or(f64::INFINITY, |Reverse(ev)| ev.0);
        let change_time = changes.get(next_change).copied().unwrap_or(f64::INFINITY);
        if change_time.is_infinite() && jump_time.is_infinite() {
            break;
        }
        if change_time <= jump_time {
            next_change += 1;
            for site in sites.iter_mut() {
                alive -= examine(site, change_time, &mut tau);
            }
            continue;
        }
        let Some(Reverse(Event(_, a))) = heap.pop() else { break };
        if tau[a].is_finite() {
            continue;
        }
        let (t, y) = src.pop(a);
        let from = &mut sites[pos[a]];
        from.retain(|&b| b != a);
        if from.is_empty() {
            distinct -= 1;
        }
        pos[a] = y;
        sites[y].push(a);
        if sites[y].len() == 1 {
            distinct += 1;
        }
        alive -= examine(&mut sites[y], t, &mut tau);
        raw.push((t, distinct));
        if tau[a].is_infinite() && src.peek(a) <= horizon {
            heap.push(Reverse(Event(src.peek(a), a)));
        }
    }
    DerivedProcess::assemble(ProcessKind::Allowed, tau, vec![None; n], raw, horizon, alive == 1).into_result()
}
