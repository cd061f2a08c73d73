//! Second Hough transform over `(horizontal position, time)` that groups line
//! detections into per-polarity tracks, and pairing of positive with negative
//! tracks.
//!
//! Time is normalized so that `window_duration` spans `time_bins` units and
//! each point votes for `rho = x cos(phi) + tau sin(phi)` over all angle bins.
//! A structure moving through the field of view at constant speed traces a
//! straight line here. Tracks are extracted by repeatedly taking the strongest
//! cell, collecting the window points near its line (refined by least
//! squares) and removing their votes.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::event::Polarity;
use crate::hough::Detection;
use crate::scalar::{round_half_up, Scalar};

/// Sign of the apparent image motion the tracker looks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TravelDirection {
    /// Image positions decrease over time; angles in `[phi_min, phi_max]`.
    #[default]
    Forward,
    /// Image positions increase over time; angles in `[-phi_max, -phi_min]`.
    Reverse,
}

impl std::str::FromStr for TravelDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(TravelDirection::Forward),
            "reverse" => Ok(TravelDirection::Reverse),
            other => Err(Error::Config(format!("unknown direction {other:?}"))),
        }
    }
}

impl std::fmt::Display for TravelDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TravelDirection::Forward => "forward",
            TravelDirection::Reverse => "reverse",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    /// Microseconds of detections kept in the rolling window.
    pub window_duration: u64,
    pub time_bins: usize,
    pub rho_bins: usize,
    /// Degrees.
    pub phi_min: f64,
    pub phi_max: f64,
    pub phi_step: f64,
    pub direction: TravelDirection,
    pub track_threshold: u32,
    /// Pixels, measured horizontally from the track line.
    pub assoc_tolerance: f64,
    pub min_track_span: u64,
    pub pair_max_dx: f64,
    /// In angle bins.
    pub pair_max_dphi: f64,
    /// Range of horizontal positions, pixels.
    pub xpos_min: f64,
    pub xpos_max: f64,
    /// A track is final once it has had no point for this many microseconds.
    pub completion_gap: u64,
    /// Image row at which a detected line's horizontal position is read.
    pub reference_row: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            window_duration: 1_500_000,
            time_bins: 240,
            rho_bins: 261,
            phi_min: 5.0,
            phi_max: 85.0,
            phi_step: 1.0,
            direction: TravelDirection::Forward,
            track_threshold: 15,
            assoc_tolerance: 3.0,
            min_track_span: 200_000,
            pair_max_dx: 20.0,
            pair_max_dphi: 2.0,
            xpos_min: 0.0,
            xpos_max: 240.0,
            completion_gap: 200_000,
            reference_row: 89.5,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.window_duration > self.min_track_span && self.min_track_span > 0) {
            return fail("need window_duration > min_track_span > 0");
        }
        if !(self.phi_min > 0.0 && self.phi_min < self.phi_max && self.phi_max < 90.0) {
            return fail("phi range must lie strictly inside (0, 90) degrees");
        }
        if !(self.phi_step > 0.0) || self.time_bins == 0 || self.rho_bins < 2 {
            return fail("phi_step, time_bins and rho_bins must be positive (rho_bins >= 2)");
        }
        if self.track_threshold == 0 || !(self.assoc_tolerance > 0.0) {
            return fail("track_threshold and assoc_tolerance must be positive");
        }
        if !(self.xpos_min < self.xpos_max) {
            return fail("xpos range must be increasing");
        }
        Ok(())
    }

    pub fn phi_bins(&self) -> usize {
        ((self.phi_max - self.phi_min) / self.phi_step).round() as usize + 1
    }

    /// Signed angle of bin `k` in degrees.
    pub fn phi_deg(&self, k: usize) -> f64 {
        let a = self.phi_min + k as f64 * self.phi_step;
        match self.direction {
            TravelDirection::Forward => a,
            TravelDirection::Reverse => -a,
        }
    }
}

/// A detection placed in the spatio-temporal plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatioTemporalPoint {
    pub xpos: f64,
    pub t: u64,
    pub polarity: Polarity,
}

/// Least-squares line `x(t) = x_ref + slope * (t - t_ref)`, slope in px/us.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub t_ref: u64,
    pub x_ref: f64,
    pub slope: f64,
}

impl LineFit {
    pub fn eval(&self, t: u64) -> f64 {
        self.x_ref + self.slope * (t as f64 - self.t_ref as f64)
    }

    fn fit(points: impl Iterator<Item = (u64, f64)> + Clone) -> Option<LineFit> {
        let (mut n, mut t0) = (0usize, u64::MAX);
        for (t, _) in points.clone() {
            n += 1;
            t0 = t0.min(t);
        }
        if n < 2 {
            return None;
        }
        let (mut st, mut sx) = (0.0, 0.0);
        for (t, x) in points.clone() {
            st += (t - t0) as f64;
            sx += x;
        }
        let (mt, mx) = (st / n as f64, sx / n as f64);
        let (mut stt, mut stx) = (0.0, 0.0);
        for (t, x) in points {
            let dt = (t - t0) as f64 - mt;
            stt += dt * dt;
            stx += dt * (x - mx);
        }
        if stt <= 0.0 {
            return None;
        }
        let t_ref = t0 + mt.round() as u64;
        let slope = stx / stt;
        Some(LineFit {
            t_ref,
            x_ref: mx + slope * (t_ref as f64 - t0 as f64 - mt),
            slope,
        })
    }
}

/// The winning accumulator cell of a track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatioTemporalLine {
    pub rho: f64,
    /// Degrees.
    pub phi: f64,
}

/// Samples of one polarity grouped onto a straight spatio-temporal line.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarityTrack {
    pub polarity: Polarity,
    /// Time-ordered `(t, xpos)`, one entry per timestamp.
    pub samples: Vec<(u64, f64)>,
    pub line: SpatioTemporalLine,
    /// Refined line; every sample lies within `assoc_tolerance` of it.
    pub fit: LineFit,
    /// Angle of `fit` in the normalized plane, degrees.
    pub phi_fit: f64,
    pub votes: u32,
}

impl PolarityTrack {
    pub fn t_first(&self) -> u64 {
        self.samples[0].0
    }

    pub fn t_last(&self) -> u64 {
        self.samples[self.samples.len() - 1].0
    }

    pub fn span(&self) -> u64 {
        self.t_last() - self.t_first()
    }
}

/// A physical structure: samples `(t, xpos)` with strictly increasing `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Track<T = f64> {
    pub id: u64,
    pub samples: Vec<(u64, T)>,
    pub positive: LineFit,
    pub negative: LineFit,
}

#[derive(Debug, Clone, Default)]
struct Layer {
    points: VecDeque<SpatioTemporalPoint>,
    /// Per point, the rho bin for each angle bin (`NONE` when out of range).
    bins: VecDeque<Vec<u32>>,
    votes: Vec<u32>,
}

const NONE: u32 = u32::MAX;

/// Rolling spatio-temporal accumulator for both polarities.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    trig: Vec<(f64, f64)>,
    rho_min: f64,
    rho_step: f64,
    origin: u64,
    last_t: Option<u64>,
    layers: [Layer; 2],
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        let trig: Vec<(f64, f64)> = (0..cfg.phi_bins())
            .map(|k| {
                let (s, c) = cfg.phi_deg(k).to_radians().sin_cos();
                (c, s)
            })
            .collect();
        let tau_max = 2.0 * cfg.time_bins as f64;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(c, s) in &trig {
            for x in [cfg.xpos_min, cfg.xpos_max] {
                for tau in [0.0, tau_max] {
                    let rho = x * c + tau * s;
                    lo = lo.min(rho);
                    hi = hi.max(rho);
                }
            }
        }
        let cells = trig.len() * cfg.rho_bins;
        Ok(Tracker {
            rho_step: (hi - lo) / (cfg.rho_bins - 1) as f64,
            rho_min: lo,
            trig,
            origin: 0,
            last_t: None,
            layers: [
                Layer {
                    votes: vec![0; cells],
                    ..Default::default()
                },
                Layer {
                    votes: vec![0; cells],
                    ..Default::default()
                },
            ],
            cfg,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn accumulator(&self, polarity: Polarity) -> &[u32] {
        &self.layers[polarity.index()].votes
    }

    pub fn live_points(&self, polarity: Polarity) -> impl Iterator<Item = &SpatioTemporalPoint> {
        self.layers[polarity.index()].points.iter()
    }

    fn tau(&self, t: u64) -> f64 {
        (t as f64 - self.origin as f64) * self.cfg.time_bins as f64 / self.cfg.window_duration as f64
    }

    /// Accumulator cells (flat indices) a point votes for.
    pub fn vote_cells(&self, xpos: f64, t: u64) -> Vec<usize> {
        self.bins(xpos, t)
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != NONE)
            .map(|(k, &b)| k * self.cfg.rho_bins + b as usize)
            .collect()
    }

    fn bins(&self, xpos: f64, t: u64) -> Vec<u32> {
        let tau = self.tau(t);
        self.trig
            .iter()
            .map(|&(c, s)| {
                let bin = round_half_up((xpos * c + tau * s - self.rho_min) / self.rho_step);
                if bin >= 0.0 && bin < self.cfg.rho_bins as f64 {
                    bin as u32
                } else {
                    NONE
                }
            })
            .collect()
    }

    fn vote(votes: &mut [u32], bins: &[u32], rho_bins: usize, add: bool) {
        for (k, &b) in bins.iter().enumerate() {
            if b != NONE {
                let v = &mut votes[k * rho_bins + b as usize];
                *v = if add { *v + 1 } else { *v - 1 };
            }
        }
    }

    fn expire(&mut self, now: u64) {
        let horizon = now.saturating_sub(self.cfg.window_duration);
        let rho_bins = self.cfg.rho_bins;
        for layer in &mut self.layers {
            while layer.points.front().is_some_and(|p| p.t < horizon) {
                layer.points.pop_front();
                let bins = layer.bins.pop_front().expect("bins track points");
                Self::vote(&mut layer.votes, &bins, rho_bins, false);
            }
        }
    }

    fn reanchor_if_needed(&mut self, t: u64) {
        if self.tau(t) <= 2.0 * self.cfg.time_bins as f64 {
            return;
        }
        self.origin = t.saturating_sub(self.cfg.window_duration);
        for k in 0..2 {
            let bins: VecDeque<Vec<u32>> = self.layers[k].points.iter().map(|p| self.bins(p.xpos, p.t)).collect();
            let layer = &mut self.layers[k];
            layer.votes.fill(0);
            for b in &bins {
                Self::vote(&mut layer.votes, b, self.cfg.rho_bins, true);
            }
            layer.bins = bins;
        }
    }

    /// Adds a detection to the window of its polarity, placed at the column
    /// where its line crosses `reference_row`.
    pub fn ingest_detection(&mut self, d: &Detection) -> Result<()> {
        if let Some(prev) = self.last_t {
            if d.t < prev {
                return Err(Error::Order {
                    record: 0,
                    t: d.t,
                    previous: prev,
                });
            }
        } else {
            self.origin = d.t;
        }
        self.last_t = Some(d.t);
        self.expire(d.t);
        self.reanchor_if_needed(d.t);
        let xpos = reference_xpos(d, self.cfg.reference_row);
        let bins = self.bins(xpos, d.t);
        let layer = &mut self.layers[d.polarity.index()];
        Self::vote(&mut layer.votes, &bins, self.cfg.rho_bins, true);
        layer.points.push_back(SpatioTemporalPoint {
            xpos,
            t: d.t,
            polarity: d.polarity,
        });
        layer.bins.push_back(bins);
        Ok(())
    }

    /// Extracts every finished track from both polarities.
    ///
    /// A track is finished once its newest sample is at least `completion_gap`
    /// older than `now`. Unfinished lines stay in the window; finished
    /// groupings shorter than `min_track_span` are discarded.
    pub fn extract_tracks(&mut self, now: u64) -> Vec<PolarityTrack> {
        if self.last_t.is_some_and(|l| now >= l) {
            self.expire(now);
        }
        let mut out = Vec::new();
        for polarity in Polarity::BOTH {
            self.extract_polarity(polarity, now, &mut out);
        }
        out
    }

    /// End of stream: extracts every remaining line as finished.
    pub fn finish(&mut self) -> Vec<PolarityTrack> {
        let mut out = Vec::new();
        for polarity in Polarity::BOTH {
            self.extract_polarity(polarity, u64::MAX, &mut out);
        }
        out
    }

    fn extract_polarity(&mut self, polarity: Polarity, now: u64, out: &mut Vec<PolarityTrack>) {
        let rho_bins = self.cfg.rho_bins;
        let tol = self.cfg.assoc_tolerance;
        let mut layer = std::mem::take(&mut self.layers[polarity.index()]);
        let n_points = layer.points.len();
        // 0 = live, 1 = held back for this call, 2 = consumed
        let mut state = vec![0u8; n_points];
        loop {
            // a line straddling a rho boundary splits its votes, so a cell is
            // scored together with its stronger neighbour, capped at its own votes
            let mut best: Option<(usize, u32)> = None;
            for (k, row) in layer.votes.chunks(rho_bins).enumerate() {
                for j in 0..rho_bins {
                    let left = if j > 0 { row[j - 1] } else { 0 };
                    let right = row.get(j + 1).copied().unwrap_or(0);
                    let score = row[j] + left.max(right).min(row[j]);
                    if score >= self.cfg.track_threshold && best.is_none_or(|(_, s)| score > s) {
                        best = Some((k * rho_bins + j, score));
                    }
                }
            }
            let Some((best, v)) = best else { break };
            let (phi_bin, rho_bin) = (best / rho_bins, (best % rho_bins) as u32);
            let points = &layer.points;

            let mut voters = Vec::new();
            let mut members = Vec::new();
            for (i, bins) in layer.bins.iter().enumerate() {
                let b = bins[phi_bin];
                if state[i] != 0 || b == NONE {
                    continue;
                }
                if b == rho_bin {
                    voters.push(i);
                }
                if b.abs_diff(rho_bin) <= 1 {
                    members.push(i);
                }
            }

            let mut fit = LineFit::fit(members.iter().map(|&i| (points[i].t, points[i].xpos)));
            for _ in 0..10 {
                let Some(f) = fit else { break };
                let next: Vec<usize> = (0..n_points)
                    .filter(|&i| state[i] == 0 && (points[i].xpos - f.eval(points[i].t)).abs() <= tol)
                    .collect();
                if next == members {
                    break;
                }
                fit = LineFit::fit(next.iter().map(|&i| (points[i].t, points[i].xpos)));
                members = next;
            }

            let t_first = members.iter().map(|&i| points[i].t).min();
            let t_last = members.iter().map(|&i| points[i].t).max();
            let finished = t_last.is_some_and(|tl| now.saturating_sub(tl) >= self.cfg.completion_gap);
            if let (Some(fit), Some(a), Some(b)) = (fit, t_first, t_last) {
                if finished && b - a >= self.cfg.min_track_span {
                    out.push(self.build_track(polarity, points, &members, fit, phi_bin, rho_bin as usize, v));
                }
            }

            let mark = if finished { 2 } else { 1 };
            // the cell's own voters always leave the search so the loop advances
            for &i in members.iter().chain(&voters) {
                if state[i] == 0 {
                    state[i] = mark;
                    Self::vote(&mut layer.votes, &layer.bins[i], rho_bins, false);
                }
            }
        }

        // restore held-back points, drop consumed ones
        let mut kept = Layer {
            votes: layer.votes,
            ..Default::default()
        };
        for ((p, bins), st) in layer.points.into_iter().zip(layer.bins).zip(state) {
            if st == 2 {
                continue;
            }
            if st == 1 {
                Self::vote(&mut kept.votes, &bins, rho_bins, true);
            }
            kept.points.push_back(p);
            kept.bins.push_back(bins);
        }
        self.layers[polarity.index()] = kept;
    }

    #[allow(clippy::too_many_arguments)]
    fn build_track(
        &self,
        polarity: Polarity,
        points: &VecDeque<SpatioTemporalPoint>,
        members: &[usize],
        fit: LineFit,
        phi_bin: usize,
        rho_bin: usize,
        votes: u32,
    ) -> PolarityTrack {
        let mut samples: Vec<(u64, f64)> = Vec::new();
        let mut count = 0usize;
        for &i in members {
            let p = points[i];
            match samples.last_mut() {
                Some((t, x)) if *t == p.t => {
                    *x += p.xpos;
                    count += 1;
                }
                _ => {
                    if let Some(last) = samples.last_mut() {
                        last.1 /= count as f64;
                    }
                    samples.push((p.t, p.xpos));
                    count = 1;
                }
            }
        }
        if let Some(last) = samples.last_mut() {
            last.1 /= count as f64;
        }
        let dx_dtau = fit.slope * self.cfg.window_duration as f64 / self.cfg.time_bins as f64;
        PolarityTrack {
            polarity,
            samples,
            line: SpatioTemporalLine {
                rho: self.rho_min + rho_bin as f64 * self.rho_step,
                phi: self.cfg.phi_deg(phi_bin),
            },
            fit,
            phi_fit: (-dx_dtau).atan().to_degrees(),
            votes,
        }
    }
}

/// Matches each positive track with the closest unmatched parallel negative
/// track. Unmatched tracks of either polarity are dropped. Each pair yields a
/// [`Track`] at the midpoint of the two lines, sampled at the times of the
/// pair member with the longer span.
/// Column at which the detected image line crosses `row`.
pub fn reference_xpos(d: &Detection, row: f64) -> f64 {
    let (s, c) = d.theta.to_radians().sin_cos();
    (d.r - row * s) / c
}

/// Thins a batch of detections: a detection is dropped when a stronger one of the
/// same polarity crosses `row` within `dx` pixels of it. Ties go to the earlier
/// entry. Input order is kept. `dx <= 0` keeps everything.
pub fn suppress_side_lobes(batch: &[Detection], row: f64, dx: f64) -> Vec<Detection> {
    if !(dx > 0.0) {
        return batch.to_vec();
    }
    let xs: Vec<f64> = batch.iter().map(|d| reference_xpos(d, row)).collect();
    let mut order: Vec<usize> = (0..batch.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(batch[i].votes));
    let mut keep = vec![false; batch.len()];
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let shadowed = kept
            .iter()
            .any(|&k| batch[k].polarity == batch[i].polarity && (xs[k] - xs[i]).abs() <= dx);
        if !shadowed {
            keep[i] = true;
            kept.push(i);
        }
    }
    batch.iter().zip(keep).filter(|(_, k)| *k).map(|(d, _)| *d).collect()
}

pub fn pair_tracks(pos: &[PolarityTrack], neg: &[PolarityTrack], cfg: &TrackerConfig) -> Vec<Track> {
    pair_track_indices(pos, neg, cfg)
        .into_iter()
        .filter_map(|(_, _, t)| t)
        .collect()
}

/// Like [`pair_tracks`], also reporting the matched indices. A pair whose
/// midpoint leaves the position range everywhere has no track.
pub fn pair_track_indices(
    pos: &[PolarityTrack],
    neg: &[PolarityTrack],
    cfg: &TrackerConfig,
) -> Vec<(usize, usize, Option<Track>)> {
    let mut order: Vec<usize> = (0..pos.len()).collect();
    order.sort_by(|&a, &b| {
        pos[a]
            .t_first()
            .cmp(&pos[b].t_first())
            .then(pos[a].samples[0].1.total_cmp(&pos[b].samples[0].1))
    });
    let mut used = vec![false; neg.len()];
    let mut out = Vec::new();
    for i in order {
        let p = &pos[i];
        let mut best: Option<(usize, f64)> = None;
        for (j, n) in neg.iter().enumerate() {
            if used[j] || (p.phi_fit - n.phi_fit).abs() / cfg.phi_step > cfg.pair_max_dphi {
                continue;
            }
            let (lo, hi) = (p.t_first().max(n.t_first()), p.t_last().min(n.t_last()));
            let diffs: Vec<f64> = p
                .samples
                .iter()
                .filter(|(t, _)| *t >= lo && *t <= hi)
                .map(|&(t, _)| (p.fit.eval(t) - n.fit.eval(t)).abs())
                .collect();
            if diffs.is_empty() {
                continue;
            }
            let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
            if mean <= cfg.pair_max_dx && best.is_none_or(|(_, m)| mean < m) {
                best = Some((j, mean));
            }
        }
        let Some((j, _)) = best else { continue };
        used[j] = true;
        let n = &neg[j];
        let times = if n.span() > p.span() { &n.samples } else { &p.samples };
        let samples: Vec<(u64, f64)> = times
            .iter()
            .map(|&(t, _)| (t, 0.5 * (p.fit.eval(t) + n.fit.eval(t))))
            .filter(|&(_, x)| x >= cfg.xpos_min && x <= cfg.xpos_max)
            .collect();
        let track = (samples.len() >= 2).then_some(Track {
            id: 0,
            samples,
            positive: p.fit,
            negative: n.fit,
        });
        out.push((i, j, track));
    }
    out
}

impl<T: Scalar> Track<T> {
    pub fn t_first(&self) -> u64 {
        self.samples.first().map_or(0, |s| s.0)
    }

    pub fn t_last(&self) -> u64 {
        self.samples.last().map_or(0, |s| s.0)
    }
}

/// `track_id,t_us,xpos_px` rows.
pub fn tracks_to_csv<T: Scalar>(tracks: &[Track<T>]) -> String {
    let mut s = String::new();
    for tr in tracks {
        for (t, x) in &tr.samples {
            let _ = writeln!(s, "{},{},{}", tr.id, t, x);
        }
    }
    s
}

/// Reads `track_id,t_us,xpos_px` rows back into tracks. Line fits are not
/// stored in the file and are refitted from the samples.
pub fn parse_tracks_csv(text: &str) -> Result<Vec<Track>> {
    let mut out: Vec<Track> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(Error::parse(i + 1, "track rows need track_id,t_us,xpos_px"));
        }
        let bad = |w: &str| Error::parse(i + 1, format!("invalid {w}"));
        let id: u64 = f[0].parse().map_err(|_| bad("track_id"))?;
        let t: u64 = f[1].parse().map_err(|_| bad("t_us"))?;
        let x: f64 = f[2].parse().map_err(|_| bad("xpos_px"))?;
        match out.last_mut() {
            Some(tr) if tr.id == id => {
                if t <= tr.t_last() {
                    return Err(Error::Order {
                        record: i + 1,
                        t,
                        previous: tr.t_last(),
                    });
                }
                tr.samples.push((t, x));
            }
            _ => {
                let zero = LineFit {
                    t_ref: t,
                    x_ref: x,
                    slope: 0.0,
                };
                out.push(Track {
                    id,
                    samples: vec![(t, x)],
                    positive: zero,
                    negative: zero,
                });
            }
        }
    }
    for tr in &mut out {
        if let Some(f) = LineFit::fit(tr.samples.iter().copied()) {
            tr.positive = f;
            tr.negative = f;
        }
    }
    Ok(out)
}
