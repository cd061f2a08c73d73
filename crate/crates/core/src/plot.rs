//! Minimal SVG figures: detections in the position/time plane and the
//! landmark map against ground truth.

use std::fmt::Write as _;

use crate::event::Polarity;
use crate::hough::Detection;
use crate::pose::PoseLog;
use crate::track::Track;
use crate::triangulate::{GroundTruthPole, LandmarkMap};

const W: f64 = 900.0;
const H: f64 = 320.0;
const PAD: f64 = 40.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    top: f64,
    height: f64,
}

impl Frame {
    fn new(
        xs: impl Iterator<Item = f64> + Clone,
        ys: impl Iterator<Item = f64> + Clone,
        top: f64,
        height: f64,
    ) -> Frame {
        let range = |v: &mut dyn Iterator<Item = f64>| {
            v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
        };
        let (mut x0, mut x1) = range(&mut xs.clone());
        let (mut y0, mut y1) = range(&mut ys.clone());
        if !(x0 < x1) {
            (x0, x1) = (x0.min(0.0), x0.max(0.0) + 1.0);
        }
        if !(y0 < y1) {
            (y0, y1) = (y0.min(0.0), y0.max(0.0) + 1.0);
        }
        Frame {
            x0,
            x1,
            y0,
            y1,
            top,
            height,
        }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.height - PAD - (y - self.y0) / (self.y1 - self.y0) * (self.height - 2.0 * PAD)
    }

    fn axes(&self, s: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (l, r) = (PAD, W - PAD);
        let (t, b) = (self.top + PAD, self.top + self.height - PAD);
        let _ = writeln!(
            s,
            r##"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
            r - l,
            b - t
        );
        let _ = writeln!(s, r#"<text x="{l}" y="{}" font-size="13">{title}</text>"#, t - 8.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{xlabel} [{:.2} .. {:.2}]</text>"#,
            r,
            b + 16.0,
            self.x0,
            self.x1
        );
        let _ = writeln!(
            s,
            r#"<text x="{l}" y="{}" font-size="11">{ylabel} [{:.1} .. {:.1}]</text>"#,
            b + 16.0,
            self.y0,
            self.y1
        );
    }
}

fn header(height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{height}\" viewBox=\"0 0 {W} {height}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// One panel per polarity with detections as dots and paired tracks as lines.
pub fn xt_svg(detections: &[Detection], tracks: &[Track]) -> String {
    let t0 = detections.iter().map(|d| d.t).min().unwrap_or(0);
    let secs = |t: u64| (t - t0.min(t)) as f64 * 1e-6;
    let mut s = header(2.0 * H);
    for (k, pol) in [Polarity::Negative, Polarity::Positive].into_iter().enumerate() {
        let ds: Vec<&Detection> = detections.iter().filter(|d| d.polarity == pol).collect();
        let f = Frame::new(
            detections.iter().map(|d| secs(d.t)),
            detections.iter().map(|d| d.r),
            k as f64 * H,
            H,
        );
        let name = if pol == Polarity::Positive {
            "positive"
        } else {
            "negative"
        };
        f.axes(&mut s, &format!("{name} detections"), "t [s]", "x [px]");
        let colour = if pol == Polarity::Positive {
            "#c0392b"
        } else {
            "#2c3e91"
        };
        for d in ds {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="1" fill="{colour}"/>"#,
                f.px(secs(d.t)),
                f.py(d.r)
            );
        }
        for tr in tracks {
            let pts: Vec<String> = tr
                .samples
                .iter()
                .map(|&(t, x)| format!("{:.1},{:.1}", f.px(secs(t)), f.py(x)))
                .collect();
            let _ = writeln!(
                s,
                r##"<polyline points="{}" fill="none" stroke="#27ae60" stroke-width="1.5"/>"##,
                pts.join(" ")
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Trajectory, ground-truth poles (circles) and mapped landmarks (crosses).
pub fn map_svg(map: &LandmarkMap<f64>, gt: &[GroundTruthPole<f64>], poses: Option<&PoseLog<f64>>) -> String {
    let traj: Vec<(f64, f64)> = poses
        .map(|p| p.poses().iter().map(|q| (q.x, q.y)).collect())
        .unwrap_or_default();
    let pts: Vec<(f64, f64)> = map
        .landmarks
        .iter()
        .map(|l| (l.x, l.y))
        .chain(gt.iter().map(|g| (g.x, g.y)))
        .chain(traj.iter().copied())
        .collect();
    let f = Frame::new(pts.iter().map(|p| p.0), pts.iter().map(|p| p.1), 0.0, 1.5 * H);
    let mut s = header(1.5 * H);
    f.axes(&mut s, "map", "x [m]", "y [m]");
    if traj.len() > 1 {
        let line: Vec<String> = traj
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", f.px(x), f.py(y)))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#888" stroke-width="1"/>"##,
            line.join(" ")
        );
    }
    for g in gt {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.1}" cy="{:.1}" r="5" fill="none" stroke="#2c3e91"/>"##,
            f.px(g.x),
            f.py(g.y)
        );
    }
    for l in &map.landmarks {
        let (x, y) = (f.px(l.x), f.py(l.y));
        let _ = writeln!(
            s,
            r##"<path d="M{:.1} {:.1}L{:.1} {:.1}M{:.1} {:.1}L{:.1} {:.1}" stroke="#c0392b" stroke-width="1.5"/>"##,
            x - 4.0,
            y - 4.0,
            x + 4.0,
            y + 4.0,
            x - 4.0,
            y + 4.0,
            x + 4.0,
            y - 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triangulate::Landmark;

    #[test]
    fn empty_inputs_still_render() {
        let s = xt_svg(&[], &[]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        let m = map_svg(&LandmarkMap::new(1.0), &[], None);
        assert!(m.contains("</svg>") && !m.contains("NaN"));
    }

    #[test]
    fn map_marks() {
        let mut map = LandmarkMap::new(1.0);
        map.insert(Landmark {
            id: 0,
            x: 1.0,
            y: 5.0,
            n_obs: 3,
            t_first: 0,
            t_last: 9,
            residual: 0.0,
        });
        let gt = [
            GroundTruthPole { id: 0, x: 1.2, y: 5.1 },
            GroundTruthPole { id: 1, x: 9.0, y: 7.0 },
        ];
        let m = map_svg(&map, &gt, None);
        assert_eq!(m.matches("<circle").count(), 2);
        assert_eq!(m.matches("<path").count(), 1);
    }
}
