use std::fmt::Write as _;

use super::space::{CellUpdateSet, HoughState};
use super::HoughConfig;
use crate::error::{Error, Result};
use crate::event::{Event, Polarity};

/// A line detection: position `r` of a near-vertical line at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub t: u64,
    /// Pixels, at the bin center.
    pub r: f64,
    /// Degrees.
    pub theta: f64,
    pub polarity: Polarity,
    pub votes: u32,
}

/// Streaming detector: iterative Hough update and suppression per event,
/// emitting the current maxima of the event's polarity every `emit_stride`
/// events of that polarity.
#[derive(Debug, Clone)]
pub struct Detector {
    state: HoughState,
    upd: CellUpdateSet,
    counts: [usize; 2],
}

impl Detector {
    pub fn new(cfg: HoughConfig) -> Result<Self> {
        Ok(Detector {
            state: HoughState::new(cfg)?,
            upd: CellUpdateSet::default(),
            counts: [0; 2],
        })
    }

    pub fn state(&self) -> &HoughState {
        &self.state
    }

    /// Processes one undistorted event and appends any emitted detections.
    pub fn detect_step(&mut self, e: Event, out: &mut Vec<Detection>) {
        self.state.step(e, &mut self.upd);
        let k = e.polarity.index();
        self.counts[k] += 1;
        let cfg = self.state.config();
        if !self.counts[k].is_multiple_of(cfg.emit_stride) {
            return;
        }
        for &c in self.state.maxima(e.polarity) {
            out.push(Detection {
                t: e.t,
                r: cfg.r_px(c.r),
                theta: cfg.theta_deg(c.theta),
                polarity: e.polarity,
                votes: self.state.votes(e.polarity, c),
            });
        }
    }
}

pub fn detections_to_csv(detections: &[Detection]) -> String {
    let mut s = String::new();
    for d in detections {
        let _ = writeln!(s, "{},{},{},{},{}", d.t, d.r, d.theta, d.polarity.bit(), d.votes);
    }
    s
}

/// Parses `t_us,r_px,theta_deg,polarity,votes` rows.
pub fn parse_detections_csv(text: &str) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::parse(i + 1, format!("invalid {what}"));
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 5 {
            return Err(Error::parse(i + 1, "detection rows need 5 fields"));
        }
        out.push(Detection {
            t: f[0].parse().map_err(|_| bad("t_us"))?,
            r: f[1].parse().map_err(|_| bad("r_px"))?,
            theta: f[2].parse().map_err(|_| bad("theta_deg"))?,
            polarity: f[3]
                .parse::<u8>()
                .ok()
                .and_then(Polarity::from_bit)
                .ok_or_else(|| bad("polarity"))?,
            votes: f[4].parse().map_err(|_| bad("votes"))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_events(n: usize, x: u16, p: Polarity) -> Vec<Event> {
        (0..n)
            .map(|i| Event::new(i as u64, x, (i * 37 % 180) as u16, p))
            .collect()
    }

    #[test]
    fn too_few_events_emit_nothing() {
        let mut d = Detector::new(HoughConfig {
            emit_stride: 1,
            ..Default::default()
        })
        .unwrap();
        let mut out = Vec::new();
        for e in column_events(14, 50, Polarity::Positive) {
            d.detect_step(e, &mut out);
        }
        assert!(out.is_empty());
    }

    #[test]
    fn unit_stride_reports_every_maxima_set() {
        let cfg = HoughConfig {
            emit_stride: 1,
            ..Default::default()
        };
        let mut d = Detector::new(cfg.clone()).unwrap();
        let mut reference = HoughState::new(cfg).unwrap();
        let mut upd = CellUpdateSet::default();
        for e in column_events(60, 80, Polarity::Negative) {
            let mut out = Vec::new();
            d.detect_step(e, &mut out);
            let maxima = reference.step(e, &mut upd);
            assert_eq!(out.len(), maxima.len());
            for (det, c) in out.iter().zip(maxima) {
                assert_eq!(det.t, e.t);
                assert_eq!(det.r, c.r as f64);
                assert_eq!(det.theta, c.theta as f64 - 10.0);
            }
        }
    }

    #[test]
    fn stride_decimates_per_polarity() {
        let mut d = Detector::new(HoughConfig {
            emit_stride: 30,
            ..Default::default()
        })
        .unwrap();
        let mut out = Vec::new();
        for e in column_events(300, 120, Polarity::Positive) {
            d.detect_step(e, &mut out);
        }
        let mut times: Vec<u64> = out.iter().map(|d| d.t).collect();
        times.dedup();
        assert_eq!(times, (1..=10).map(|k| 30 * k - 1).collect::<Vec<u64>>());
        for t in times {
            // strongest maximum comes first
            let first = out.iter().find(|d| d.t == t).unwrap();
            assert_eq!((first.r, first.theta), (120.0, 0.0));
        }
    }

    #[test]
    fn csv_round_trip() {
        let d = vec![Detection {
            t: 5,
            r: 12.0,
            theta: -3.0,
            polarity: Polarity::Positive,
            votes: 40,
        }];
        assert_eq!(parse_detections_csv(&detections_to_csv(&d)).unwrap(), d);
        assert!(parse_detections_csv("1,2,3").is_err());
    }
}
