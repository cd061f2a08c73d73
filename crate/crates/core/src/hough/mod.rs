//! Sliding-window Hough transform over `(r, theta)` with incremental
//! non-maxima suppression.
//!
//! Each polarity owns an independent accumulator and event window. After
//! every event the set of global maxima is updated from the cells the event
//! touched ([`HoughState::iterative_nms`]); [`HoughState::full_nms_oracle`]
//! recomputes the same set from scratch and is used to check it.

mod detect;
mod nms;
mod space;

pub use detect::{detections_to_csv, parse_detections_csv, Detection, Detector};
pub use nms::NmsStats;
pub use space::{CellUpdateSet, HoughState};

use crate::error::{Error, Result};
use crate::scalar::round_half_up;

/// Metric used to decide whether two maxima suppress each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMetric {
    #[default]
    Euclidean,
    Chebyshev,
}

impl std::str::FromStr for DistanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(DistanceMetric::Euclidean),
            "chebyshev" => Ok(DistanceMetric::Chebyshev),
            other => Err(Error::Config(format!("unknown distance metric {other:?}"))),
        }
    }
}

impl std::fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DistanceMetric::Euclidean => "euclidean",
            DistanceMetric::Chebyshev => "chebyshev",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoughConfig {
    /// Degrees.
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_step: f64,
    /// Pixels.
    pub r_min: f64,
    pub r_max: f64,
    pub r_step: f64,
    /// Events per polarity window.
    pub window_size: usize,
    /// Minimum votes for a local maximum.
    pub threshold: u32,
    /// Suppression radius in cells.
    pub suppression_radius: u32,
    pub metric: DistanceMetric,
    /// Detections are emitted once every `emit_stride` events of a polarity.
    pub emit_stride: usize,
}

impl Default for HoughConfig {
    fn default() -> Self {
        HoughConfig {
            theta_min: -10.0,
            theta_max: 10.0,
            theta_step: 1.0,
            r_min: 0.0,
            r_max: 260.0,
            r_step: 1.0,
            window_size: 300,
            threshold: 15,
            suppression_radius: 10,
            metric: DistanceMetric::Euclidean,
            emit_stride: 30,
        }
    }
}

impl HoughConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.theta_min < self.theta_max) || !(self.theta_step > 0.0) {
            return fail("theta range must be increasing with a positive step");
        }
        if !(self.r_min < self.r_max) || !(self.r_step > 0.0) {
            return fail("r range must be increasing with a positive step");
        }
        if self.window_size == 0 || self.window_size > u16::MAX as usize {
            return fail("window_size must be in 1..=65535");
        }
        if self.threshold == 0 {
            return fail("threshold must be at least 1");
        }
        if self.suppression_radius == 0 {
            return fail("suppression_radius must be at least 1");
        }
        if self.emit_stride == 0 {
            return fail("emit_stride must be at least 1");
        }
        if self.theta_bins() > u16::MAX as usize || self.r_bins() > u16::MAX as usize {
            return fail("Hough space too large");
        }
        Ok(())
    }

    /// Number of angle bins (M).
    pub fn theta_bins(&self) -> usize {
        ((self.theta_max - self.theta_min) / self.theta_step).round() as usize + 1
    }

    /// Number of distance bins (N).
    pub fn r_bins(&self) -> usize {
        ((self.r_max - self.r_min) / self.r_step).round() as usize + 1
    }

    pub fn theta_deg(&self, bin: u16) -> f64 {
        self.theta_min + bin as f64 * self.theta_step
    }

    pub fn r_px(&self, bin: u16) -> f64 {
        self.r_min + bin as f64 * self.r_step
    }
}

/// One accumulator cell, indexed by angle bin and distance bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub theta: u16,
    pub r: u16,
}

impl Cell {
    pub fn new(theta: u16, r: u16) -> Self {
        Cell { theta, r }
    }
}

/// Precomputed angle tables for the line equation `r = u cos(theta) + v sin(theta)`.
#[derive(Debug, Clone)]
pub(crate) struct LineTable {
    cos: Vec<f64>,
    sin: Vec<f64>,
    r_min: f64,
    r_step: f64,
    r_bins: usize,
}

impl LineTable {
    pub(crate) fn new(cfg: &HoughConfig) -> Self {
        let m = cfg.theta_bins();
        let (sin, cos) = (0..m).map(|k| cfg.theta_deg(k as u16).to_radians().sin_cos()).unzip();
        LineTable {
            cos,
            sin,
            r_min: cfg.r_min,
            r_step: cfg.r_step,
            r_bins: cfg.r_bins(),
        }
    }

    #[inline]
    pub(crate) fn cells_into(&self, u: f64, v: f64, out: &mut Vec<Cell>) {
        out.clear();
        for (k, (c, s)) in self.cos.iter().zip(&self.sin).enumerate() {
            let r = u * c + v * s;
            let bin = round_half_up((r - self.r_min) / self.r_step);
            if bin >= 0.0 && bin < self.r_bins as f64 {
                out.push(Cell::new(k as u16, bin as u16));
            }
        }
    }
}

/// Hypothesis cells of pixel `(u, v)`: at most one per angle bin, with
/// out-of-range distances dropped.
pub fn hypothesis_cells(u: u32, v: u32, cfg: &HoughConfig) -> Vec<Cell> {
    let mut out = Vec::with_capacity(cfg.theta_bins());
    LineTable::new(cfg).cells_into(u as f64, v as f64, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dimensions() {
        let c = HoughConfig::default();
        assert_eq!(c.theta_bins(), 21);
        assert_eq!(c.r_bins(), 261);
        assert_eq!(c.theta_deg(0), -10.0);
        assert_eq!(c.theta_deg(20), 10.0);
        c.validate().unwrap();
    }

    #[test]
    fn origin_votes_r_zero_everywhere() {
        let cells = hypothesis_cells(0, 0, &HoughConfig::default());
        assert_eq!(cells.len(), 21);
        assert!(cells.iter().all(|c| c.r == 0));
    }

    #[test]
    fn horizontal_offset_at_zero_angle() {
        let cells = hypothesis_cells(100, 0, &HoughConfig::default());
        assert!(cells.contains(&Cell::new(10, 100)));
    }

    #[test]
    fn tilted_hypothesis() {
        // 120 cos 10deg + 90 sin 10deg = 133.8053 (30-digit evaluation)
        let cells = hypothesis_cells(120, 90, &HoughConfig::default());
        assert_eq!(cells.iter().find(|c| c.theta == 20).unwrap().r, 134);
    }

    #[test]
    fn negative_r_dropped() {
        // at -10 deg, r = 0 cos - 100 sin(10deg) < 0
        let cells = hypothesis_cells(0, 100, &HoughConfig::default());
        assert!(cells.iter().all(|c| c.theta >= 10));
        assert!(cells.len() <= 21);
    }

    #[test]
    fn config_validation() {
        let mut c = HoughConfig::default();
        c.theta_max = c.theta_min;
        assert!(c.validate().is_err());
        let c = HoughConfig {
            window_size: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = HoughConfig {
            threshold: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = HoughConfig {
            suppression_radius: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
