//! Pipeline configuration as a flat `key=value` file. Every key is optional
//! and unknown keys are rejected.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hough::HoughConfig;
use crate::kv::{self, Entry};
use crate::pose::Pose2;
use crate::track::TrackerConfig;
use crate::triangulate::TriangulationConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub hough: HoughConfig,
    pub tracker: TrackerConfig,
    pub triangulation: TriangulationConfig<f64>,
    /// Meters.
    pub merge_radius: f64,
    /// Meters, used by evaluation.
    pub reject_radius: f64,
    /// Microseconds between track extractions.
    pub extract_interval: u64,
    /// Pixels. Weaker detections sharing a timestamp with a stronger one
    /// that crosses the reference row this close are not tracked; 0 disables.
    pub batch_suppress_dx: f64,
    /// Probability of dropping each event before detection.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            hough: HoughConfig::default(),
            tracker: TrackerConfig::default(),
            triangulation: TriangulationConfig::default(),
            merge_radius: 1.0,
            reject_radius: 4.0,
            extract_interval: 50_000,
            batch_suppress_dx: 12.0,
            subsample: 0.0,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.hough.validate()?;
        self.tracker.validate()?;
        let t = &self.triangulation;
        if t.max_samples < 2 {
            return Err(Error::Config("max_samples must be at least 2".into()));
        }
        if !t.min_depth.is_finite() || !(self.merge_radius >= 0.0) || !(self.reject_radius > 0.0) {
            return Err(Error::Config(
                "min_depth, merge_radius and reject_radius must be finite and sane".into(),
            ));
        }
        if self.extract_interval == 0 {
            return Err(Error::Config("extract_interval must be positive".into()));
        }
        if !(self.batch_suppress_dx >= 0.0) || !self.batch_suppress_dx.is_finite() {
            return Err(Error::Config(
                "batch_suppress_dx must be finite and non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.subsample) {
            return Err(Error::Config("subsample must be within [0, 1]".into()));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = PipelineConfig::default();
        for e in kv::parse(text)? {
            c.set(&e)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn set(&mut self, e: &Entry) -> Result<()> {
        let (h, t) = (&mut self.hough, &mut self.tracker);
        match e.key.as_str() {
            "theta_min" => h.theta_min = kv::value(e)?,
            "theta_max" => h.theta_max = kv::value(e)?,
            "theta_step" => h.theta_step = kv::value(e)?,
            "r_min" => h.r_min = kv::value(e)?,
            "r_max" => h.r_max = kv::value(e)?,
            "r_step" => h.r_step = kv::value(e)?,
            "window_size" => h.window_size = kv::value(e)?,
            "threshold" => h.threshold = kv::value(e)?,
            "suppression_radius" => h.suppression_radius = kv::value(e)?,
            "metric" => h.metric = kv::value(e)?,
            "emit_stride" => h.emit_stride = kv::value(e)?,
            "window_duration" => t.window_duration = kv::value(e)?,
            "time_bins" => t.time_bins = kv::value(e)?,
            "rho_bins" => t.rho_bins = kv::value(e)?,
            "phi_min" => t.phi_min = kv::value(e)?,
            "phi_max" => t.phi_max = kv::value(e)?,
            "phi_step" => t.phi_step = kv::value(e)?,
            "direction" => t.direction = kv::value(e)?,
            "track_threshold" => t.track_threshold = kv::value(e)?,
            "assoc_tolerance" => t.assoc_tolerance = kv::value(e)?,
            "min_track_span" => t.min_track_span = kv::value(e)?,
            "pair_max_dx" => t.pair_max_dx = kv::value(e)?,
            "pair_max_dphi" => t.pair_max_dphi = kv::value(e)?,
            "xpos_min" => t.xpos_min = kv::value(e)?,
            "xpos_max" => t.xpos_max = kv::value(e)?,
            "completion_gap" => t.completion_gap = kv::value(e)?,
            "reference_row" => t.reference_row = kv::value(e)?,
            "max_samples" => self.triangulation.max_samples = kv::value(e)?,
            "min_depth" => self.triangulation.min_depth = kv::value(e)?,
            "extrinsic" => {
                let v: Vec<f64> = kv::list(e, 3)?;
                self.triangulation.extrinsic = Pose2::new(0, v[0], v[1], v[2]);
            }
            "merge_radius" => self.merge_radius = kv::value(e)?,
            "reject_radius" => self.reject_radius = kv::value(e)?,
            "extract_interval" => self.extract_interval = kv::value(e)?,
            "batch_suppress_dx" => self.batch_suppress_dx = kv::value(e)?,
            "subsample" => self.subsample = kv::value(e)?,
            "seed" => self.seed = kv::value(e)?,
            other => return Err(Error::parse(e.line, format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let (h, t, g) = (&self.hough, &self.tracker, &self.triangulation);
        let mut s = String::new();
        let _ = writeln!(s, "# line detection");
        let _ = writeln!(
            s,
            "theta_min={}\ntheta_max={}\ntheta_step={}",
            h.theta_min, h.theta_max, h.theta_step
        );
        let _ = writeln!(s, "r_min={}\nr_max={}\nr_step={}", h.r_min, h.r_max, h.r_step);
        let _ = writeln!(s, "window_size={}\nthreshold={}", h.window_size, h.threshold);
        let _ = writeln!(
            s,
            "suppression_radius={}\nmetric={}\nemit_stride={}",
            h.suppression_radius, h.metric, h.emit_stride
        );
        let _ = writeln!(s, "# tracking");
        let _ = writeln!(
            s,
            "window_duration={}\ntime_bins={}\nrho_bins={}",
            t.window_duration, t.time_bins, t.rho_bins
        );
        let _ = writeln!(
            s,
            "phi_min={}\nphi_max={}\nphi_step={}",
            t.phi_min, t.phi_max, t.phi_step
        );
        let _ = writeln!(
            s,
            "direction={}\ntrack_threshold={}\nassoc_tolerance={}",
            t.direction, t.track_threshold, t.assoc_tolerance
        );
        let _ = writeln!(
            s,
            "min_track_span={}\npair_max_dx={}\npair_max_dphi={}",
            t.min_track_span, t.pair_max_dx, t.pair_max_dphi
        );
        let _ = writeln!(s, "xpos_min={}\nxpos_max={}", t.xpos_min, t.xpos_max);
        let _ = writeln!(
            s,
            "completion_gap={}\nreference_row={}",
            t.completion_gap, t.reference_row
        );
        let _ = writeln!(
            s,
            "extract_interval={}\nbatch_suppress_dx={}",
            self.extract_interval, self.batch_suppress_dx
        );
        let _ = writeln!(s, "# mapping");
        let _ = writeln!(s, "max_samples={}\nmin_depth={}", g.max_samples, g.min_depth);
        let _ = writeln!(s, "extrinsic={},{},{}", g.extrinsic.x, g.extrinsic.y, g.extrinsic.theta);
        let _ = writeln!(
            s,
            "merge_radius={}\nreject_radius={}",
            self.merge_radius, self.reject_radius
        );
        let _ = writeln!(s, "subsample={}\nseed={}", self.subsample, self.seed);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hough::DistanceMetric;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(PipelineConfig::parse("# nothing\n").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn round_trip() {
        let mut c = PipelineConfig::default();
        c.hough.metric = DistanceMetric::Chebyshev;
        c.tracker.assoc_tolerance = 2.5;
        c.triangulation.extrinsic = Pose2::new(0, 0.1, -0.2, 0.05);
        c.subsample = 0.25;
        c.batch_suppress_dx = 7.5;
        assert_eq!(PipelineConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn overrides_and_errors() {
        let c = PipelineConfig::parse("threshold = 20 # stricter\nmerge_radius=2").unwrap();
        assert_eq!((c.hough.threshold, c.merge_radius), (20, 2.0));
        assert!(matches!(
            PipelineConfig::parse("treshold=20"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            PipelineConfig::parse("threshold=abc"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(PipelineConfig::parse("subsample=1.5"), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::parse("window_size=0"), Err(Error::Config(_))));
    }
}
