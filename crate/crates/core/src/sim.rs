//! Synthetic scenes of vertical poles seen by a side-facing event camera on
//! a vehicle travelling along the world x axis.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::event::{Event, Polarity};
use crate::kv;
use crate::pose::{Pose2, PoseLog};
use crate::triangulate::GroundTruthPole;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub x: f64,
    /// Distance from the camera path, meters.
    pub y: f64,
    pub width: f64,
}

/// Dark poles on a bright background covering image rows `v_top..=v_bot`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub poles: Vec<Pole>,
    pub v_top: u16,
    pub v_bot: u16,
}

impl Default for Scene {
    fn default() -> Self {
        Scene {
            poles: Vec::new(),
            v_top: 20,
            v_bot: 160,
        }
    }
}

/// Piecewise-linear speed over time; the camera starts at x = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityProfile {
    knots: Vec<(u64, f64)>,
    /// Distance travelled up to each knot.
    cumulative: Vec<f64>,
}

impl VelocityProfile {
    pub fn new(knots: Vec<(u64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Config("velocity profile needs at least two knots".into()));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config("velocity knots must have increasing times".into()));
        }
        if knots.iter().any(|k| !(k.1 >= 0.0 && k.1.is_finite())) {
            return Err(Error::Config("speeds must be finite and non-negative".into()));
        }
        let mut cumulative = vec![0.0];
        for w in knots.windows(2) {
            let dt = (w[1].0 - w[0].0) as f64 * 1e-6;
            cumulative.push(cumulative[cumulative.len() - 1] + 0.5 * (w[0].1 + w[1].1) * dt);
        }
        Ok(VelocityProfile { knots, cumulative })
    }

    pub fn constant(speed: f64, duration_us: u64) -> Result<Self> {
        Self::new(vec![(0, speed), (duration_us, speed)])
    }

    pub fn knots(&self) -> &[(u64, f64)] {
        &self.knots
    }

    pub fn span(&self) -> (u64, u64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }
}

/// Position and speed at `t`, integrating the speed exactly.
pub fn profile_eval(profile: &VelocityProfile, t: u64) -> Result<(f64, f64)> {
    let (start, end) = profile.span();
    if t < start || t > end {
        return Err(Error::OutOfRange { t, start, end });
    }
    let k = &profile.knots;
    let i = k.partition_point(|p| p.0 <= t).min(k.len() - 1).max(1) - 1;
    let (t0, v0) = k[i];
    let (t1, v1) = k[i + 1];
    let dt = (t - t0) as f64 * 1e-6;
    let a = (v1 - v0) / ((t1 - t0) as f64 * 1e-6);
    Ok((profile.cumulative[i] + v0 * dt + 0.5 * a * dt * dt, v0 + a * dt))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorConfig {
    pub intrinsics: CameraIntrinsics<f64>,
    /// Noise events per second over the whole sensor.
    pub noise_rate: f64,
    pub sim_step: u64,
    pub seed: u64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            intrinsics: CameraIntrinsics::davis240(),
            noise_rate: 0.0,
            sim_step: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub events: Vec<Event>,
    pub poses: PoseLog<f64>,
    pub ground_truth: Vec<GroundTruthPole<f64>>,
    /// Events caused by pole edges, excluding noise.
    pub signal_events: usize,
}

const POSE_PERIOD: u64 = 10_000;

#[derive(Clone, Copy)]
struct Tagged {
    t: u64,
    kind: u8,
    edge: u32,
    row: u16,
    seq: u32,
    x: u16,
    polarity: Polarity,
}

fn validate(scene: &Scene, sensor: &SensorConfig) -> Result<()> {
    sensor.intrinsics.validate()?;
    if sensor.sim_step == 0 {
        return Err(Error::Config("sim_step must be positive".into()));
    }
    if !(sensor.noise_rate >= 0.0 && sensor.noise_rate.is_finite()) {
        return Err(Error::Config("noise_rate must be finite and non-negative".into()));
    }
    if !(scene.v_top < scene.v_bot && u32::from(scene.v_bot) < sensor.intrinsics.height) {
        return Err(Error::Config("need v_top < v_bot < sensor height".into()));
    }
    for (i, p) in scene.poles.iter().enumerate() {
        if !(p.y > 0.0 && p.y.is_finite()) {
            return Err(Error::Config(format!(
                "pole {i} is not in front of the camera (y = {})",
                p.y
            )));
        }
        if !(p.width > 0.0 && p.x.is_finite()) {
            return Err(Error::Config(format!("pole {i} needs a positive width and finite x")));
        }
    }
    Ok(())
}

/// Renders the scene into an event stream, a pose log sampled every 10 ms
/// and the ground-truth pole centers.
///
/// Every time a pole edge moves into a new image column, one event is
/// emitted per covered row of that column. The leading edge darkens pixels
/// (negative events) and the trailing edge brightens them (positive).
pub fn simulate(scene: &Scene, profile: &VelocityProfile, sensor: &SensorConfig) -> Result<SimOutput> {
    validate(scene, sensor)?;
    let intr = &sensor.intrinsics;
    let (start, end) = profile.span();
    let mut tagged: Vec<Tagged> = Vec::new();

    // edge 2i is the left (leading) side of pole i, 2i + 1 the right side
    let edges: Vec<(f64, f64, Polarity)> = scene
        .poles
        .iter()
        .flat_map(|p| {
            [
                (p.x - 0.5 * p.width, p.y, Polarity::Negative),
                (p.x + 0.5 * p.width, p.y, Polarity::Positive),
            ]
        })
        .collect();
    let rows: Vec<u16> = (scene.v_top..=scene.v_bot).collect();
    let distorted = !intr.dist.is_zero();
    // per edge, per row (one shared entry without distortion): current column coordinate
    let lanes = if distorted { rows.len() } else { 1 };
    let column = |edge: &(f64, f64, Polarity), x_cam: f64, lane: usize| -> (f64, u16) {
        let xn = (edge.0 - x_cam) / edge.1;
        if distorted {
            let yn = (f64::from(rows[lane]) - intr.v0) / intr.alpha_y;
            let (xd, yd) = intr.dist.invert(xn, yn);
            let (u, v) = intr.to_pixel(xd, yd);
            (u, (v + 0.5).floor().clamp(0.0, f64::from(intr.height - 1)) as u16)
        } else {
            (intr.u0 + intr.alpha_x * xn, 0)
        }
    };
    let half_fov = 1.5 * (intr.u0.max(f64::from(intr.width) - intr.u0) + 2.0) / intr.alpha_x;
    let col_of = |u: f64| (u + 0.5).floor() as i64;

    let x_start = profile_eval(profile, start)?.0;
    let mut prev: Vec<Vec<f64>> = edges
        .iter()
        .map(|edge| (0..lanes).map(|lane| column(edge, x_start, lane).0).collect())
        .collect();
    let mut t_prev = start;
    let mut seq = 0u32;
    while t_prev < end {
        let t_next = (t_prev + sensor.sim_step).min(end);
        let x_cam = profile_eval(profile, t_next)?.0;
        let dt = (t_next - t_prev) as f64;
        for (e, edge) in edges.iter().enumerate() {
            if distorted && ((edge.0 - x_cam) / edge.1).abs() > half_fov {
                prev[e].fill(f64::NAN);
                continue;
            }
            for (lane, slot) in prev[e].iter_mut().enumerate() {
                let (u_b, v_row) = column(edge, x_cam, lane);
                let u_a = std::mem::replace(slot, u_b);
                if u_a.is_nan() {
                    continue;
                }
                let (ca, cb) = (col_of(u_a), col_of(u_b));
                // columns entered in order of entry, with the boundary crossed for each
                let entered: Vec<(i64, f64)> = if cb < ca {
                    (cb..ca).rev().map(|c| (c, c as f64 + 0.5)).collect()
                } else {
                    (ca + 1..=cb).map(|c| (c, c as f64 - 0.5)).collect()
                };
                for (col, boundary) in entered {
                    if col < 0 || col >= i64::from(intr.width) {
                        continue;
                    }
                    let t = t_prev + ((u_a - boundary) / (u_a - u_b) * dt).floor() as u64;
                    let emit: &[u16] = if distorted { std::slice::from_ref(&v_row) } else { &rows };
                    for &row in emit {
                        tagged.push(Tagged {
                            t,
                            kind: 0,
                            edge: e as u32,
                            row,
                            seq,
                            x: col as u16,
                            polarity: edge.2,
                        });
                        seq += 1;
                    }
                }
            }
        }
        t_prev = t_next;
    }
    let signal_events = tagged.len();

    if sensor.noise_rate > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(sensor.seed);
        let gap = Exp::new(sensor.noise_rate * 1e-6).map_err(|e| Error::Config(e.to_string()))?;
        let mut t = start as f64;
        loop {
            t += gap.sample(&mut rng);
            if t > end as f64 {
                break;
            }
            let x = rng.random_range(0..intr.width) as u16;
            let row = rng.random_range(0..intr.height) as u16;
            let polarity = if rng.random_bool(0.5) {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            tagged.push(Tagged {
                t: t as u64,
                kind: 1,
                edge: 0,
                row,
                seq,
                x,
                polarity,
            });
            seq += 1;
        }
    }

    tagged.sort_by_key(|e| (e.t, e.kind, e.edge, e.row, e.seq));
    let events = tagged
        .iter()
        .map(|e| Event {
            t: e.t,
            x: e.x,
            y: e.row,
            polarity: e.polarity,
        })
        .collect();

    let mut poses = Vec::new();
    let mut t = start;
    loop {
        poses.push(Pose2::new(t, profile_eval(profile, t)?.0, 0.0, 0.0));
        if t == end {
            break;
        }
        t = (t + POSE_PERIOD).min(end);
    }

    let ground_truth = scene
        .poles
        .iter()
        .enumerate()
        .map(|(i, p)| GroundTruthPole {
            id: i as u64,
            x: p.x,
            y: p.y,
        })
        .collect();
    Ok(SimOutput {
        events,
        poses: PoseLog::new(poses)?,
        ground_truth,
        signal_events,
    })
}

/// Contents of a scene file: `v_top`, `v_bot`, repeated `pole=x,y,width`
/// and `knot=t_us,speed_mps` lines, plus optional `noise_rate`, `sim_step`
/// and `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneFile {
    pub scene: Scene,
    pub profile: VelocityProfile,
    pub noise_rate: f64,
    pub sim_step: u64,
    pub seed: u64,
}

impl SceneFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut scene = Scene::default();
        let mut knots = Vec::new();
        let defaults = SensorConfig::default();
        let (mut noise_rate, mut sim_step, mut seed) = (defaults.noise_rate, defaults.sim_step, defaults.seed);
        for e in kv::parse(text)? {
            match e.key.as_str() {
                "pole" => {
                    let v: Vec<f64> = kv::list(&e, 3)?;
                    scene.poles.push(Pole {
                        x: v[0],
                        y: v[1],
                        width: v[2],
                    });
                }
                "knot" => {
                    let v: Vec<f64> = kv::list(&e, 2)?;
                    if !(v[0] >= 0.0 && v[0].fract() == 0.0) {
                        return Err(Error::parse(e.line, "knot time must be a whole number of microseconds"));
                    }
                    knots.push((v[0] as u64, v[1]));
                }
                "v_top" => scene.v_top = kv::value(&e)?,
                "v_bot" => scene.v_bot = kv::value(&e)?,
                "noise_rate" => noise_rate = kv::value(&e)?,
                "sim_step" => sim_step = kv::value(&e)?,
                "seed" => seed = kv::value(&e)?,
                other => return Err(Error::parse(e.line, format!("unknown key {other:?}"))),
            }
        }
        Ok(SceneFile {
            scene,
            profile: VelocityProfile::new(knots)?,
            noise_rate,
            sim_step,
            seed,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "v_top={}\nv_bot={}", self.scene.v_top, self.scene.v_bot);
        let _ = writeln!(
            s,
            "noise_rate={}\nsim_step={}\nseed={}",
            self.noise_rate, self.sim_step, self.seed
        );
        for (t, v) in self.profile.knots() {
            let _ = writeln!(s, "knot={t},{v}");
        }
        for p in &self.scene.poles {
            let _ = writeln!(s, "pole={},{},{}", p.x, p.y, p.width);
        }
        s
    }

    pub fn sensor(&self, intrinsics: CameraIntrinsics<f64>) -> SensorConfig {
        SensorConfig {
            intrinsics,
            noise_rate: self.noise_rate,
            sim_step: self.sim_step,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::events_to_csv;

    fn one_pole(x: f64, y: f64, width: f64) -> Scene {
        Scene {
            poles: vec![Pole { x, y, width }],
            ..Default::default()
        }
    }

    #[test]
    fn profile_examples() {
        let c = VelocityProfile::constant(10.0, 1_000_000).unwrap();
        assert_eq!(profile_eval(&c, 500_000).unwrap(), (5.0, 10.0));
        let ramp = VelocityProfile::new(vec![(0, 0.0), (1_000_000, 10.0)]).unwrap();
        assert_eq!(profile_eval(&ramp, 1_000_000).unwrap(), (5.0, 10.0));
        // trapezoids: 0.5 * (4 + 8) * 2 + 0.5 * (8 + 2) * 1 = 17
        let three = VelocityProfile::new(vec![(0, 4.0), (2_000_000, 8.0), (3_000_000, 2.0)]).unwrap();
        assert_eq!(profile_eval(&three, 2_000_000).unwrap(), (12.0, 8.0));
        assert_eq!(profile_eval(&three, 3_000_000).unwrap(), (17.0, 2.0));
        assert!(matches!(profile_eval(&three, 3_000_001), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn profile_validation() {
        assert!(VelocityProfile::new(vec![(0, 1.0)]).is_err());
        assert!(VelocityProfile::new(vec![(5, 1.0), (5, 1.0)]).is_err());
        assert!(VelocityProfile::new(vec![(0, -1.0), (5, 1.0)]).is_err());
    }

    #[test]
    fn empty_scene() {
        let out = simulate(
            &Scene::default(),
            &VelocityProfile::constant(10.0, 1_000_000).unwrap(),
            &SensorConfig::default(),
        )
        .unwrap();
        assert!(out.events.is_empty());
        assert_eq!(out.poses.poses().len(), 101);
        assert_eq!(out.poses.poses()[100].x, 10.0);
    }

    #[test]
    fn invalid_scenes() {
        let prof = VelocityProfile::constant(10.0, 1_000_000).unwrap();
        let s = SensorConfig::default();
        assert!(matches!(
            simulate(&one_pole(0.0, 0.0, 0.3), &prof, &s),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            simulate(&one_pole(0.0, -2.0, 0.3), &prof, &s),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            simulate(&one_pole(0.0, 5.0, 0.0), &prof, &s),
            Err(Error::Config(_))
        ));
        let rows = Scene {
            v_top: 100,
            v_bot: 100,
            ..one_pole(0.0, 5.0, 0.3)
        };
        assert!(matches!(simulate(&rows, &prof, &s), Err(Error::Config(_))));
        let step = SensorConfig {
            sim_step: 0,
            ..Default::default()
        };
        assert!(matches!(
            simulate(&one_pole(0.0, 5.0, 0.3), &prof, &step),
            Err(Error::Config(_))
        ));
    }

    fn traverse() -> (Scene, VelocityProfile, SimOutput) {
        let scene = one_pole(10.0, 8.0, 0.3);
        let prof = VelocityProfile::constant(10.0, 2_000_000).unwrap();
        let out = simulate(&scene, &prof, &SensorConfig::default()).unwrap();
        (scene, prof, out)
    }

    #[test]
    fn full_traverse_counts() {
        let (scene, _, out) = traverse();
        let rows = usize::from(scene.v_bot - scene.v_top + 1);
        assert_eq!(out.signal_events, out.events.len());
        for pol in Polarity::BOTH {
            let n = out.events.iter().filter(|e| e.polarity == pol).count();
            assert_eq!(n, 240 * rows, "{pol:?}");
        }
    }

    #[test]
    fn crossings_follow_projection() {
        let (scene, _, out) = traverse();
        let i = CameraIntrinsics::<f64>::davis240();
        let p = scene.poles[0];
        for (pol, edge_x) in [
            (Polarity::Negative, p.x - 0.5 * p.width),
            (Polarity::Positive, p.x + 0.5 * p.width),
        ] {
            let mut last_col = i64::MAX;
            let mut last_t = 0;
            for e in out.events.iter().filter(|e| e.polarity == pol && e.y == scene.v_top) {
                assert!(
                    i64::from(e.x) < last_col && e.t >= last_t,
                    "columns must move left over time"
                );
                last_col = i64::from(e.x);
                last_t = e.t;
                // edge sits on the column's right boundary at the event time
                let x_cam = 10.0 * e.t as f64 * 1e-6;
                let u = i.u0 + i.alpha_x * (edge_x - x_cam) / p.y;
                assert!((u - (f64::from(e.x) + 0.5)).abs() < 1e-3, "u {u} at column {}", e.x);
            }
        }
    }

    #[test]
    fn events_inside_visibility_window() {
        let (scene, _, out) = traverse();
        let i = CameraIntrinsics::<f64>::davis240();
        let p = scene.poles[0];
        // camera position where the right edge is at u = width - 0.5 and the left edge at u = -0.5
        let enter = (p.x - 0.5 * p.width) - (239.5 - i.u0) * p.y / i.alpha_x;
        let exit = (p.x + 0.5 * p.width) - (-0.5 - i.u0) * p.y / i.alpha_x;
        let (t0, t1) = ((enter / 10.0 * 1e6) as u64, (exit / 10.0 * 1e6).ceil() as u64);
        assert!(out.events.iter().all(|e| e.t >= t0 && e.t <= t1));
    }

    #[test]
    fn deterministic_with_noise() {
        let scene = Scene {
            poles: vec![
                Pole {
                    x: 5.0,
                    y: 6.0,
                    width: 0.2,
                },
                Pole {
                    x: 12.0,
                    y: 11.0,
                    width: 0.4,
                },
            ],
            ..Default::default()
        };
        let prof = VelocityProfile::new(vec![(0, 3.0), (700_000, 12.0), (1_500_000, 9.0)]).unwrap();
        let sensor = SensorConfig {
            noise_rate: 20_000.0,
            seed: 9,
            ..Default::default()
        };
        let a = simulate(&scene, &prof, &sensor).unwrap();
        let b = simulate(&scene, &prof, &sensor).unwrap();
        assert_eq!(events_to_csv(&a.events), events_to_csv(&b.events));
        assert_eq!(a.poses.to_csv(), b.poses.to_csv());
        assert!(a.events.len() > a.signal_events);
        assert!(a.events.windows(2).all(|w| w[0].t <= w[1].t));
        let c = simulate(&scene, &prof, &SensorConfig { seed: 10, ..sensor }).unwrap();
        assert_ne!(events_to_csv(&a.events), events_to_csv(&c.events));
        let noise = (a.events.len() - a.signal_events) as f64;
        assert!((noise - 30_000.0).abs() < 5.0 * 30_000f64.sqrt(), "noise count {noise}");
    }

    #[test]
    fn polarity_balance() {
        let scene = Scene {
            poles: (0..4)
                .map(|k| Pole {
                    x: 4.0 + 3.0 * k as f64,
                    y: 5.0 + k as f64,
                    width: 0.25,
                })
                .collect(),
            ..Default::default()
        };
        let prof = VelocityProfile::constant(8.0, 3_000_000).unwrap();
        let out = simulate(&scene, &prof, &SensorConfig::default()).unwrap();
        let pos = out.events.iter().filter(|e| e.polarity == Polarity::Positive).count();
        assert_eq!(pos * 2, out.events.len());
    }

    #[test]
    fn distorted_rendering_undistorts_to_lines() {
        use crate::camera::{build_undistortion_lut, undistort_event, Distortion};
        let mut intrinsics = CameraIntrinsics::<f64>::davis240();
        intrinsics.dist = Distortion {
            k1: -0.15,
            k2: 0.02,
            p1: 0.0,
            p2: 0.0,
        };
        let scene = one_pole(3.0, 6.0, 0.3);
        let prof = VelocityProfile::constant(10.0, 400_000).unwrap();
        let sensor = SensorConfig {
            intrinsics,
            ..Default::default()
        };
        let out = simulate(&scene, &prof, &sensor).unwrap();
        assert!(!out.events.is_empty());
        // raw rows bend towards the center, after undistortion the edge is straight
        let lut = build_undistortion_lut(&intrinsics);
        let t_mid = 300_000;
        let near: Vec<_> = out
            .events
            .iter()
            .filter(|e| e.polarity == Polarity::Negative && e.t.abs_diff(t_mid) < 2_000)
            .filter_map(|&e| undistort_event(e, &lut))
            .collect();
        assert!(near.len() > 50);
        let xs: Vec<u16> = near.iter().map(|e| e.x).collect();
        let (lo, hi) = (xs.iter().min().unwrap(), xs.iter().max().unwrap());
        assert!(hi - lo <= 4, "undistorted columns spread {lo}..{hi}");
    }

    #[test]
    fn scene_file_round_trip() {
        let text = "# two poles\nv_top=10\nv_bot=150\nnoise_rate=500\nseed=3\nknot=0,10\nknot=2000000,10\npole=5,8,0.3\npole=15,12,0.2\n";
        let f = SceneFile::parse(text).unwrap();
        assert_eq!(f.scene.poles.len(), 2);
        assert_eq!((f.scene.v_top, f.seed, f.sim_step), (10, 3, 100));
        assert_eq!(SceneFile::parse(&f.to_text()).unwrap(), f);
        assert!(SceneFile::parse("pole=1,2\nknot=0,1\nknot=5,1").is_err());
        assert!(SceneFile::parse("colour=red\nknot=0,1\nknot=5,1").is_err());
    }
}
