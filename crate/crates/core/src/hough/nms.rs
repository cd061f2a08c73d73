use std::cmp::Ordering;

use super::space::{CellUpdateSet, HoughState};
use super::{Cell, DistanceMetric};
use crate::event::Polarity;

/// Work counters for the incremental suppression.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NmsStats {
    pub updates: u64,
    /// Neighborhood re-scans around a changed or suppressed global maximum.
    pub disc_scans: u64,
    pub disc_cells: u64,
    /// Phase-2 suppression passes, at least one per update.
    pub passes: u64,
}

impl NmsStats {
    /// Cells visited by disc scans per update, in units of whole-grid scans.
    pub fn full_scan_equivalents_per_update(&self, grid_cells: usize) -> f64 {
        if self.updates == 0 {
            return 0.0;
        }
        self.disc_cells as f64 / grid_cells as f64 / self.updates as f64
    }
}

/// Reusable buffers. Membership marks are stamped with `epoch` so they never
/// need clearing.
#[derive(Debug, Clone)]
pub(crate) struct NmsScratch {
    epoch: u32,
    plus_mark: Vec<u32>,
    minus_mark: Vec<u32>,
    cand_mark: Vec<u32>,
    reopened: Vec<u32>,
    cand: Vec<Cell>,
    disc: Vec<Cell>,
    accepted: Vec<Cell>,
    suppressed: Vec<Cell>,
}

impl NmsScratch {
    pub(crate) fn new(cells: usize) -> Self {
        NmsScratch {
            epoch: 0,
            plus_mark: vec![0; cells],
            minus_mark: vec![0; cells],
            cand_mark: vec![0; cells],
            reopened: vec![0; cells],
            cand: Vec::new(),
            disc: Vec::new(),
            accepted: Vec::new(),
            suppressed: Vec::new(),
        }
    }

    fn next_epoch(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            for m in [
                &mut self.plus_mark,
                &mut self.minus_mark,
                &mut self.cand_mark,
                &mut self.reopened,
            ] {
                m.fill(0);
            }
            self.epoch = 1;
        }
        self.epoch
    }
}

/// Read-only view of one polarity's accumulator.
#[derive(Clone, Copy)]
pub(crate) struct Grid<'a> {
    votes: &'a [u16],
    n_theta: usize,
    n_r: usize,
    threshold: u32,
    radius: u32,
    metric: DistanceMetric,
}

impl<'a> Grid<'a> {
    fn of(state: &'a HoughState, polarity: Polarity) -> Self {
        Grid {
            votes: &state.spaces[polarity.index()].votes,
            n_theta: state.n_theta,
            n_r: state.n_r,
            threshold: state.cfg.threshold,
            radius: state.cfg.suppression_radius,
            metric: state.cfg.metric,
        }
    }

    #[inline]
    fn idx(&self, c: Cell) -> usize {
        c.theta as usize * self.n_r + c.r as usize
    }

    #[inline]
    fn v(&self, c: Cell) -> u32 {
        self.votes[self.idx(c)] as u32
    }

    #[inline]
    fn neighbors(&self, c: Cell, mut f: impl FnMut(Cell)) {
        let (t, r) = (c.theta as isize, c.r as isize);
        for dt in -1..=1isize {
            let tt = t + dt;
            if tt < 0 || tt >= self.n_theta as isize {
                continue;
            }
            for dr in -1..=1isize {
                let rr = r + dr;
                if (dt == 0 && dr == 0) || rr < 0 || rr >= self.n_r as isize {
                    continue;
                }
                f(Cell::new(tt as u16, rr as u16));
            }
        }
    }

    /// Above threshold and strictly greater than every in-grid 8-neighbor.
    #[inline]
    fn is_local(&self, c: Cell) -> bool {
        let v = self.v(c);
        if v < self.threshold {
            return false;
        }
        let mut strict = true;
        self.neighbors(c, |n| strict &= self.v(n) < v);
        strict
    }

    #[inline]
    fn within(&self, a: Cell, b: Cell, radius: u32) -> bool {
        let dt = (a.theta as i64 - b.theta as i64).unsigned_abs();
        let dr = (a.r as i64 - b.r as i64).unsigned_abs();
        let r = radius as u64;
        match self.metric {
            DistanceMetric::Euclidean => dt * dt + dr * dr <= r * r,
            DistanceMetric::Chebyshev => dt.max(dr) <= r,
        }
    }

    /// Votes descending, then angle bin ascending, then distance bin ascending.
    #[inline]
    fn rank(&self, a: &Cell, b: &Cell) -> Ordering {
        self.v(*b)
            .cmp(&self.v(*a))
            .then(a.theta.cmp(&b.theta))
            .then(a.r.cmp(&b.r))
    }

    /// Appends the local maxima within `radius` of `center`; returns cells visited.
    fn disc(&self, center: Cell, radius: u32, out: &mut Vec<Cell>) -> usize {
        let rad = radius as i64;
        let (ct, cr) = (center.theta as i64, center.r as i64);
        let mut visited = 0;
        for dt in -rad..=rad {
            let t = ct + dt;
            if t < 0 || t >= self.n_theta as i64 {
                continue;
            }
            let half = match self.metric {
                DistanceMetric::Euclidean => isqrt((rad * rad - dt * dt) as u64) as i64,
                DistanceMetric::Chebyshev => rad,
            };
            let lo = (cr - half).max(0);
            let hi = (cr + half).min(self.n_r as i64 - 1);
            for r in lo..=hi {
                visited += 1;
                let c = Cell::new(t as u16, r as u16);
                if self.is_local(c) {
                    out.push(c);
                }
            }
        }
        visited
    }

    /// Greedy suppression over rank-sorted candidates.
    fn suppress(&self, sorted: &[Cell], accepted: &mut Vec<Cell>, suppressed: &mut Vec<Cell>) {
        accepted.clear();
        suppressed.clear();
        for &c in sorted {
            if accepted.iter().any(|&a| self.within(a, c, self.radius)) {
                suppressed.push(c);
            } else {
                accepted.push(c);
            }
        }
    }
}

fn isqrt(n: u64) -> u64 {
    let mut x = (n as f64).sqrt() as u64;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

impl HoughState {
    /// True iff the cell has at least `threshold` votes and strictly more than
    /// each of its 8-connected neighbors.
    pub fn is_local_maximum(&self, polarity: Polarity, cell: Cell) -> bool {
        Grid::of(self, polarity).is_local(cell)
    }

    /// Local maxima inside the disc of `radius` cells around `center`.
    pub fn local_maxima_in_radius(&self, polarity: Polarity, center: Cell, radius: u32) -> Vec<Cell> {
        let mut out = Vec::new();
        Grid::of(self, polarity).disc(center, radius, &mut out);
        out
    }

    /// Every local maximum of the grid, in rank order.
    pub fn all_local_maxima(&self, polarity: Polarity) -> Vec<Cell> {
        let g = Grid::of(self, polarity);
        let mut out: Vec<Cell> = (0..self.n_theta)
            .flat_map(|t| (0..self.n_r).map(move |r| Cell::new(t as u16, r as u16)))
            .filter(|&c| g.is_local(c))
            .collect();
        out.sort_unstable_by(|a, b| g.rank(a, b));
        out
    }

    /// Full non-maxima suppression: scan the whole grid, sort the local maxima
    /// and accept each one that has no accepted maximum within the radius.
    pub fn full_nms_oracle(&self, polarity: Polarity) -> Vec<Cell> {
        let g = Grid::of(self, polarity);
        let local = self.all_local_maxima(polarity);
        let (mut accepted, mut suppressed) = (Vec::new(), Vec::new());
        g.suppress(&local, &mut accepted, &mut suppressed);
        accepted
    }

    /// Updates the global maxima of `updates.polarity` from the cells the last
    /// event changed. The accumulator must already include the update.
    pub fn iterative_nms(&mut self, updates: &CellUpdateSet) -> &[Cell] {
        let Some(polarity) = updates.polarity else {
            return &[];
        };
        let mut scratch = std::mem::replace(&mut self.scratch, NmsScratch::new(0));
        let mut stats = self.stats;
        let next = {
            let g = Grid::of(self, polarity);
            let sp = &self.spaces[polarity.index()];
            run(&g, &sp.is_max, &sp.maxima, updates, &mut scratch, &mut stats)
        };
        self.scratch = scratch;
        self.stats = stats;
        self.replace_maxima(polarity, next);
        self.maxima(polarity)
    }
}

fn run(
    g: &Grid,
    is_prev: &[bool],
    prev: &[Cell],
    upd: &CellUpdateSet,
    s: &mut NmsScratch,
    stats: &mut NmsStats,
) -> Vec<Cell> {
    stats.updates += 1;
    let epoch = s.next_epoch();
    for &c in &upd.plus {
        s.plus_mark[g.idx(c)] = epoch;
    }
    for &c in &upd.minus {
        s.minus_mark[g.idx(c)] = epoch;
    }

    // Phase 1: candidates start as the previous global maxima.
    s.cand.clear();
    for &m in prev {
        s.cand_mark[g.idx(m)] = epoch;
        s.cand.push(m);
    }
    let add = |s: &mut NmsScratch, c: Cell| {
        let i = g.idx(c);
        if s.cand_mark[i] != epoch {
            s.cand_mark[i] = epoch;
            s.cand.push(c);
        }
    };
    let reopen = |s: &mut NmsScratch, stats: &mut NmsStats, c: Cell| {
        let i = g.idx(c);
        if s.reopened[i] == epoch {
            return;
        }
        s.reopened[i] = epoch;
        s.disc.clear();
        stats.disc_scans += 1;
        stats.disc_cells += g.disc(c, g.radius, &mut s.disc) as u64;
        for k in 0..s.disc.len() {
            let m = s.disc[k];
            add(s, m);
        }
    };
    let remove = |s: &mut NmsScratch, c: Cell| {
        s.cand_mark[g.idx(c)] = 0;
    };

    // Cells both added and removed by this event keep their count and are skipped.
    for &p in &upd.plus {
        if s.minus_mark[g.idx(p)] == epoch {
            continue;
        }
        let vp = g.v(p);
        let mut skip = false;
        let mut equalled = [Cell::new(0, 0); 8];
        let mut n_eq = 0;
        g.neighbors(p, |n| {
            if g.v(n) == vp {
                skip = true;
                if is_prev[g.idx(n)] {
                    equalled[n_eq] = n;
                    n_eq += 1;
                }
            }
        });
        for &n in &equalled[..n_eq] {
            // a previous global maximum was caught up with by an incremented neighbor
            remove(s, n);
            reopen(s, stats, n);
        }
        if !skip && !is_prev[g.idx(p)] && g.is_local(p) {
            add(s, p);
        }
    }

    for &p in &upd.minus {
        if s.plus_mark[g.idx(p)] == epoch {
            continue;
        }
        let vp = g.v(p);
        let mut risen = [Cell::new(0, 0); 8];
        let mut n_risen = 0;
        g.neighbors(p, |n| {
            if vp + 1 == g.v(n) && g.is_local(n) {
                risen[n_risen] = n;
                n_risen += 1;
            }
        });
        for &n in &risen[..n_risen] {
            add(s, n);
        }
        if is_prev[g.idx(p)] {
            remove(s, p);
            reopen(s, stats, p);
        }
    }

    // Drop removed entries; a reopened disc re-adds a cell that is still local.
    let cand_mark = &s.cand_mark;
    s.cand.retain(|&c| cand_mark[g.idx(c)] == epoch);
    debug_assert!(s.cand.iter().all(|&c| g.is_local(c)));

    // Phase 2: suppress, and re-open the neighborhood of every suppressed
    // previous global maximum until no new one is suppressed. Suppressed
    // candidates stay in the set since a later pass can free them again.
    loop {
        stats.passes += 1;
        s.cand.sort_unstable_by(|a, b| g.rank(a, b));
        let (mut accepted, mut suppressed) = (std::mem::take(&mut s.accepted), std::mem::take(&mut s.suppressed));
        g.suppress(&s.cand, &mut accepted, &mut suppressed);
        let mut reopened_any = false;
        for &c in &suppressed {
            if is_prev[g.idx(c)] && s.reopened[g.idx(c)] != epoch {
                reopen(s, stats, c);
                reopened_any = true;
            }
        }
        s.accepted = accepted;
        s.suppressed = suppressed;
        if !reopened_any {
            return s.accepted.clone();
        }
    }
}
