//! End-to-end processing: undistortion, line detection, tracking, pairing,
//! triangulation and map assembly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::camera::{build_undistortion_lut, undistort_event, CameraIntrinsics};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::event::{Event, Polarity};
use crate::hough::{Detection, Detector};
use crate::pose::PoseLog;
use crate::track::{pair_track_indices, suppress_side_lobes, PolarityTrack, Track, Tracker};
use crate::triangulate::{triangulate, Landmark, LandmarkMap};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PipelineStats {
    pub events: usize,
    pub dropped_subsample: usize,
    /// Events whose pixel has no undistorted position on the sensor.
    pub dropped_undistort: usize,
    pub detections: usize,
    /// Per polarity, indexed by [`Polarity::index`].
    pub polarity_tracks: [usize; 2],
    pub unpaired: usize,
    pub tracks: usize,
    pub landmarks: usize,
    pub degenerate: usize,
    pub behind_camera: usize,
    pub outside_poses: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub detections: Vec<Detection>,
    pub polarity_tracks: Vec<PolarityTrack>,
    pub tracks: Vec<Track>,
    /// One entry per successfully triangulated track, before merging.
    pub landmarks: Vec<Landmark<f64>>,
    pub map: LandmarkMap<f64>,
    pub stats: PipelineStats,
}

struct Mapper<'a> {
    cfg: &'a PipelineConfig,
    poses: &'a PoseLog<f64>,
    intr: &'a CameraIntrinsics<f64>,
    pending: [Vec<PolarityTrack>; 2],
    out: PipelineOutput,
}

impl Mapper<'_> {
    fn absorb(&mut self, found: Vec<PolarityTrack>, now: u64) {
        for t in found {
            self.out.stats.polarity_tracks[t.polarity.index()] += 1;
            self.out.polarity_tracks.push(t.clone());
            self.pending[t.polarity.index()].push(t);
        }
        let [neg, pos] = &self.pending;
        let pairs = pair_track_indices(pos, neg, &self.cfg.tracker);
        let (mut used_pos, mut used_neg) = (vec![false; pos.len()], vec![false; neg.len()]);
        let mut tracks = Vec::new();
        for (i, j, track) in pairs {
            used_pos[i] = true;
            used_neg[j] = true;
            tracks.extend(track);
        }
        // unmatched tracks wait for a partner for one tracking window at most
        let horizon = now.saturating_sub(self.cfg.tracker.window_duration);
        for (k, used) in [
            (Polarity::Negative.index(), used_neg),
            (Polarity::Positive.index(), used_pos),
        ] {
            let pool = std::mem::take(&mut self.pending[k]);
            for (t, u) in pool.into_iter().zip(used) {
                if u {
                    continue;
                }
                if t.t_last() < horizon {
                    self.out.stats.unpaired += 1;
                } else {
                    self.pending[k].push(t);
                }
            }
        }
        tracks.sort_by_key(|t| (t.t_first(), t.t_last()));
        for t in tracks {
            self.map_track(t);
        }
    }

    fn map_track(&mut self, mut track: Track) {
        track.id = self.out.tracks.len() as u64;
        let stats = &mut self.out.stats;
        stats.tracks += 1;
        match triangulate(&track, self.poses, self.intr, &self.cfg.triangulation) {
            Ok(mut lm) => {
                lm.id = track.id;
                stats.landmarks += 1;
                self.out.landmarks.push(lm);
                self.out.map.insert(lm);
            }
            Err(Error::DegenerateGeometry | Error::TooShort { .. }) => stats.degenerate += 1,
            Err(Error::BehindCamera) => stats.behind_camera += 1,
            Err(Error::OutOfRange { .. } | Error::EmptyInput(_)) => stats.outside_poses += 1,
            Err(_) => stats.degenerate += 1,
        }
        self.out.tracks.push(track);
    }
}

/// Feeds the tracker with the detections of one timestamp, minus side lobes.
fn flush(tracker: &mut Tracker, batch: &mut Vec<Detection>, cfg: &PipelineConfig) -> Result<()> {
    for d in &suppress_side_lobes(batch, cfg.tracker.reference_row, cfg.batch_suppress_dx) {
        tracker.ingest_detection(d)?;
    }
    batch.clear();
    Ok(())
}

/// Runs the whole pipeline over a time-ordered event stream.
pub fn run_pipeline(
    events: &[Event],
    poses: &PoseLog<f64>,
    intr: &CameraIntrinsics<f64>,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    intr.validate()?;
    let lut = build_undistortion_lut(intr);
    let mut detector = Detector::new(cfg.hough.clone())?;
    let mut tracker = Tracker::new(cfg.tracker.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut m = Mapper {
        cfg,
        poses,
        intr,
        pending: [Vec::new(), Vec::new()],
        out: PipelineOutput {
            detections: Vec::new(),
            polarity_tracks: Vec::new(),
            tracks: Vec::new(),
            landmarks: Vec::new(),
            map: LandmarkMap::new(cfg.merge_radius),
            stats: PipelineStats::default(),
        },
    };
    let mut fresh = Vec::new();
    let mut batch: Vec<Detection> = Vec::new();
    let mut next_extract = events.first().map_or(0, |e| e.t + cfg.extract_interval);
    let mut previous = None;
    for (i, &e) in events.iter().enumerate() {
        if let Some(p) = previous {
            if e.t < p {
                return Err(Error::Order {
                    record: i + 1,
                    t: e.t,
                    previous: p,
                });
            }
        }
        previous = Some(e.t);
        m.out.stats.events += 1;
        if batch.first().is_some_and(|d| d.t != e.t) {
            flush(&mut tracker, &mut batch, cfg)?;
        }
        if e.t >= next_extract {
            let found = tracker.extract_tracks(e.t);
            m.absorb(found, e.t);
            next_extract = e.t + cfg.extract_interval;
        }
        if cfg.subsample > 0.0 && (cfg.subsample >= 1.0 || rng.random::<f64>() < cfg.subsample) {
            m.out.stats.dropped_subsample += 1;
            continue;
        }
        let Some(u) = undistort_event(e, &lut) else {
            m.out.stats.dropped_undistort += 1;
            continue;
        };
        fresh.clear();
        detector.detect_step(u, &mut fresh);
        batch.extend_from_slice(&fresh);
        m.out.detections.extend_from_slice(&fresh);
    }
    flush(&mut tracker, &mut batch, cfg)?;
    let last = previous.unwrap_or(0);
    let found = tracker.finish();
    m.absorb(found, last);
    let leftover = m.pending[0].len() + m.pending[1].len();
    m.out.stats.unpaired += leftover;
    m.out.stats.detections = m.out.detections.len();
    Ok(m.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate, Pole, Scene, SensorConfig, VelocityProfile};
    use crate::triangulate::match_and_rmse;

    fn scene(n: usize) -> Scene {
        Scene {
            poles: (0..n)
                .map(|k| Pole {
                    x: 10.0 + 10.0 * k as f64,
                    y: 6.0 + (k % 3) as f64 * 3.0,
                    width: 0.3,
                })
                .collect(),
            ..Default::default()
        }
    }

    fn run(n: usize, noise: f64, cfg: &PipelineConfig) -> (crate::sim::SimOutput, PipelineOutput) {
        let prof = VelocityProfile::constant(10.0, (n as u64 + 2) * 1_000_000).unwrap();
        let sensor = SensorConfig {
            noise_rate: noise,
            seed: 1,
            ..Default::default()
        };
        let sim = simulate(&scene(n), &prof, &sensor).unwrap();
        let out = run_pipeline(&sim.events, &sim.poses, &sensor.intrinsics, cfg).unwrap();
        (sim, out)
    }

    #[test]
    fn empty_stream() {
        let poses = PoseLog::new(vec![]).unwrap();
        let out = run_pipeline(&[], &poses, &CameraIntrinsics::davis240(), &PipelineConfig::default()).unwrap();
        assert!(out.map.is_empty() && out.detections.is_empty());
    }

    #[test]
    fn maps_a_few_poles() {
        let (sim, out) = run(3, 0.0, &PipelineConfig::default());
        assert_eq!(out.map.len(), 3, "{:?}", out.stats);
        let r = match_and_rmse(&out.map, &sim.ground_truth, 4.0, Some(&sim.poses)).unwrap();
        assert_eq!(r.true_positives, 3);
        assert!(r.rmse < 0.2, "rmse {}", r.rmse);
    }

    #[test]
    fn subsample_extremes() {
        let all = PipelineConfig {
            subsample: 1.0,
            ..Default::default()
        };
        let (_, out) = run(1, 0.0, &all);
        assert!(out.detections.is_empty());
        let (_, a) = run(1, 0.0, &PipelineConfig::default());
        let (_, b) = run(
            1,
            0.0,
            &PipelineConfig {
                subsample: 0.0,
                seed: 77,
                ..Default::default()
            },
        );
        assert_eq!(a.detections, b.detections);
    }

    #[test]
    fn rejects_unordered_events() {
        let ev = [
            Event {
                t: 5,
                x: 1,
                y: 1,
                polarity: Polarity::Positive,
            },
            Event {
                t: 4,
                x: 1,
                y: 1,
                polarity: Polarity::Positive,
            },
        ];
        let poses = PoseLog::new(vec![]).unwrap();
        let r = run_pipeline(&ev, &poses, &CameraIntrinsics::davis240(), &PipelineConfig::default());
        assert!(matches!(r, Err(Error::Order { record: 2, .. })));
    }
}
