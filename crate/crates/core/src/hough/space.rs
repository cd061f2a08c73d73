use std::collections::VecDeque;

use super::nms::{NmsScratch, NmsStats};
use super::{Cell, HoughConfig, LineTable};
use crate::error::Result;
use crate::event::{Event, Polarity};

/// Cells touched by one event: `plus` for the newest event, `minus` for the
/// evicted one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CellUpdateSet {
    pub polarity: Option<Polarity>,
    pub plus: Vec<Cell>,
    pub minus: Vec<Cell>,
}

impl CellUpdateSet {
    pub fn new(polarity: Polarity) -> Self {
        CellUpdateSet {
            polarity: Some(polarity),
            ..Default::default()
        }
    }
}

/// Accumulator, event window and maxima of one polarity.
#[derive(Debug, Clone)]
pub(crate) struct PolaritySpace {
    pub(crate) votes: Vec<u16>,
    pub(crate) window: VecDeque<(u16, u16)>,
    pub(crate) maxima: Vec<Cell>,
    pub(crate) is_max: Vec<bool>,
}

impl PolaritySpace {
    fn new(cells: usize, window: usize) -> Self {
        PolaritySpace {
            votes: vec![0; cells],
            window: VecDeque::with_capacity(window + 1),
            maxima: Vec::new(),
            is_max: vec![false; cells],
        }
    }
}

/// Hough space state for both polarities.
#[derive(Debug, Clone)]
pub struct HoughState {
    pub(crate) cfg: HoughConfig,
    pub(crate) lines: LineTable,
    pub(crate) n_theta: usize,
    pub(crate) n_r: usize,
    pub(crate) spaces: [PolaritySpace; 2],
    pub(crate) scratch: NmsScratch,
    pub(crate) stats: NmsStats,
}

impl HoughState {
    pub fn new(cfg: HoughConfig) -> Result<Self> {
        cfg.validate()?;
        let (n_theta, n_r) = (cfg.theta_bins(), cfg.r_bins());
        let cells = n_theta * n_r;
        Ok(HoughState {
            lines: LineTable::new(&cfg),
            n_theta,
            n_r,
            spaces: [
                PolaritySpace::new(cells, cfg.window_size),
                PolaritySpace::new(cells, cfg.window_size),
            ],
            scratch: NmsScratch::new(cells),
            stats: NmsStats::default(),
            cfg,
        })
    }

    pub fn config(&self) -> &HoughConfig {
        &self.cfg
    }

    /// Grid shape as `(angle bins, distance bins)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.n_theta, self.n_r)
    }

    #[inline]
    pub(crate) fn idx(&self, c: Cell) -> usize {
        c.theta as usize * self.n_r + c.r as usize
    }

    pub fn votes(&self, polarity: Polarity, cell: Cell) -> u32 {
        self.spaces[polarity.index()].votes[self.idx(cell)] as u32
    }

    pub fn accumulator(&self, polarity: Polarity) -> &[u16] {
        &self.spaces[polarity.index()].votes
    }

    /// Current window contents (pixel coordinates), oldest first.
    pub fn window(&self, polarity: Polarity) -> impl Iterator<Item = (u16, u16)> + '_ {
        self.spaces[polarity.index()].window.iter().copied()
    }

    /// Current global maxima in descending rank order.
    pub fn maxima(&self, polarity: Polarity) -> &[Cell] {
        &self.spaces[polarity.index()].maxima
    }

    pub fn stats(&self) -> &NmsStats {
        &self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = NmsStats::default();
    }

    /// Sets the accumulator of one polarity directly, clearing its window and maxima.
    pub fn set_accumulator(&mut self, polarity: Polarity, votes: &[u16]) {
        let sp = &mut self.spaces[polarity.index()];
        assert_eq!(votes.len(), sp.votes.len(), "accumulator size mismatch");
        sp.votes.copy_from_slice(votes);
        sp.window.clear();
        for &m in &sp.maxima {
            sp.is_max[m.theta as usize * self.n_r + m.r as usize] = false;
        }
        sp.maxima.clear();
    }

    /// Pushes `e` into its polarity window, evicting the oldest event when the
    /// window is full, and updates the accumulator.
    pub fn apply_event(&mut self, e: Event) -> CellUpdateSet {
        let mut upd = CellUpdateSet::new(e.polarity);
        self.apply_event_into(e, &mut upd);
        upd
    }

    pub fn apply_event_into(&mut self, e: Event, upd: &mut CellUpdateSet) {
        upd.polarity = Some(e.polarity);
        let n_r = self.n_r;
        let window_size = self.cfg.window_size;
        self.lines.cells_into(e.x as f64, e.y as f64, &mut upd.plus);
        let sp = &mut self.spaces[e.polarity.index()];
        for c in &upd.plus {
            sp.votes[c.theta as usize * n_r + c.r as usize] += 1;
        }
        sp.window.push_back((e.x, e.y));
        upd.minus.clear();
        if sp.window.len() > window_size {
            let (x, y) = sp.window.pop_front().expect("window is non-empty");
            self.lines.cells_into(x as f64, y as f64, &mut upd.minus);
            for c in &upd.minus {
                let v = &mut sp.votes[c.theta as usize * n_r + c.r as usize];
                debug_assert!(*v > 0, "accumulator underflow");
                *v -= 1;
            }
        }
    }

    /// Applies the event and updates the maxima incrementally.
    pub fn step(&mut self, e: Event, upd: &mut CellUpdateSet) -> &[Cell] {
        self.apply_event_into(e, upd);
        self.iterative_nms(upd)
    }

    /// Applies the event and recomputes the maxima from scratch.
    pub fn step_full(&mut self, e: Event, upd: &mut CellUpdateSet) -> &[Cell] {
        self.apply_event_into(e, upd);
        let maxima = self.full_nms_oracle(e.polarity);
        self.replace_maxima(e.polarity, maxima);
        self.maxima(e.polarity)
    }

    pub(crate) fn replace_maxima(&mut self, polarity: Polarity, maxima: Vec<Cell>) {
        let n_r = self.n_r;
        let sp = &mut self.spaces[polarity.index()];
        for &m in &sp.maxima {
            sp.is_max[m.theta as usize * n_r + m.r as usize] = false;
        }
        for &m in &maxima {
            sp.is_max[m.theta as usize * n_r + m.r as usize] = true;
        }
        sp.maxima = maxima;
    }
}
