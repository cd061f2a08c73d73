//! Planar DLT triangulation of tracks, landmark map assembly and evaluation
//! against a ground-truth map.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::pose::{Pose2, PoseLog};
use crate::scalar::Scalar;
use crate::track::Track;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangulationConfig<T> {
    pub max_samples: usize,
    /// Meters. Landmarks closer than this to most camera positions are rejected.
    pub min_depth: T,
    /// Camera pose in the vehicle frame.
    pub extrinsic: Pose2<T>,
}

impl<T: Scalar> Default for TriangulationConfig<T> {
    fn default() -> Self {
        TriangulationConfig {
            max_samples: 50,
            min_depth: T::one(),
            extrinsic: Pose2::identity(0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmark<T> {
    pub id: u64,
    pub x: T,
    pub y: T,
    pub n_obs: usize,
    pub t_first: u64,
    pub t_last: u64,
    /// Smallest singular value of the DLT matrix in the solving frame.
    pub residual: T,
}

/// Singular value decomposition of a `k x 3` matrix by one-sided Jacobi
/// rotations. Returns singular values (descending) and the matching right
/// singular vectors.
pub fn svd3<T: Scalar>(a: &[[T; 3]]) -> ([T; 3], [[T; 3]; 3]) {
    let mut u: Vec<[T; 3]> = a.to_vec();
    let mut v = [[T::zero(); 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..2 {
            for q in p + 1..3 {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for r in &u {
                    alpha = alpha + r[p] * r[p];
                    beta = beta + r[q] * r[q];
                    gamma = gamma + r[p] * r[q];
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for r in u.iter_mut() {
                    let (x, y) = (r[p], r[q]);
                    r[p] = c * x - s * y;
                    r[q] = s * x + c * y;
                }
                for r in v.iter_mut() {
                    let (x, y) = (r[p], r[q]);
                    r[p] = c * x - s * y;
                    r[q] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv = [T::zero(); 3];
    for (j, s) in sv.iter_mut().enumerate() {
        *s = u.iter().fold(T::zero(), |acc, r| acc + r[j] * r[j]).sqrt();
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = [sv[order[0]], sv[order[1]], sv[order[2]]];
    let mut vectors = [[T::zero(); 3]; 3];
    for (k, &j) in order.iter().enumerate() {
        for i in 0..3 {
            vectors[k][i] = v[i][j];
        }
    }
    (values, vectors)
}

/// Indices of `m` samples spread evenly over `0..k`.
fn spread(k: usize, m: usize) -> Vec<usize> {
    if k <= m {
        return (0..k).collect();
    }
    (0..m).map(|i| (i * (k - 1) + (m - 1) / 2) / (m - 1)).collect()
}

/// Camera poses in the world for the used samples, with their positions.
fn camera_poses<T: Scalar>(
    track: &Track<T>,
    poses: &PoseLog<T>,
    cfg: &TriangulationConfig<T>,
) -> Result<Vec<(T, Pose2<T>)>> {
    if track.samples.len() < 2 {
        return Err(Error::TooShort {
            samples: track.samples.len(),
        });
    }
    spread(track.samples.len(), cfg.max_samples.max(2))
        .into_iter()
        .map(|i| {
            let (t, d) = track.samples[i];
            Ok((d, poses.interpolate(t)?.compose(&cfg.extrinsic)))
        })
        .collect()
}

fn dlt_rows<T: Scalar>(cams: &[(T, Pose2<T>)], frame: &Pose2<T>, intr: &CameraIntrinsics<T>) -> Vec<[T; 3]> {
    let to_frame = frame.inverse();
    cams.iter()
        .map(|(d, cam)| {
            let p = to_frame.compose(cam).inverse_matrix();
            let s = (*d - intr.u0) / intr.alpha_x;
            [s * p[1][0] - p[0][0], s * p[1][1] - p[0][1], s * p[1][2] - p[0][2]]
        })
        .collect()
}

/// Rows `s_i * P_i[1] - P_i[0]` with `s_i = (D_i - u0) / alpha_x`, where
/// `P_i` maps world points into the camera frame at the sample time.
pub fn build_dlt_matrix<T: Scalar>(
    track: &Track<T>,
    poses: &PoseLog<T>,
    intr: &CameraIntrinsics<T>,
    cfg: &TriangulationConfig<T>,
) -> Result<Vec<[T; 3]>> {
    Ok(dlt_rows(&camera_poses(track, poses, cfg)?, &Pose2::identity(0), intr))
}

/// Triangulates a track. The system is solved in a frame centered on the
/// observing cameras and mapped back, so the result does not depend on the
/// placement of the world origin.
pub fn triangulate<T: Scalar>(
    track: &Track<T>,
    poses: &PoseLog<T>,
    intr: &CameraIntrinsics<T>,
    cfg: &TriangulationConfig<T>,
) -> Result<Landmark<T>> {
    let cams = camera_poses(track, poses, cfg)?;
    let n = T::of(cams.len() as f64);
    let (sx, sy) = cams
        .iter()
        .fold((T::zero(), T::zero()), |(x, y), (_, c)| (x + c.x, y + c.y));
    let frame = Pose2::new(0, sx / n, sy / n, cams[0].1.theta);
    let a = dlt_rows(&cams, &frame, intr);
    let (sv, vecs) = svd3(&a);
    if !(sv[1] > sv[0] * T::epsilon().sqrt()) {
        return Err(Error::DegenerateGeometry);
    }
    let h = vecs[2];
    let norm = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
    if !(h[2].abs() / norm >= T::of(1e-9)) {
        return Err(Error::DegenerateGeometry);
    }
    let [x, y] = frame.transform_point([h[0] / h[2], h[1] / h[2]]);
    if !(x.is_finite() && y.is_finite()) {
        return Err(Error::DegenerateGeometry);
    }
    let shallow = cams
        .iter()
        .filter(|(_, c)| {
            let p = c.inverse_matrix();
            p[1][0] * x + p[1][1] * y + p[1][2] < cfg.min_depth
        })
        .count();
    if 2 * shallow > cams.len() {
        return Err(Error::BehindCamera);
    }
    Ok(Landmark {
        id: 0,
        x,
        y,
        n_obs: cams.len(),
        t_first: track.samples[0].0,
        t_last: track.samples[track.samples.len() - 1].0,
        residual: sv[2],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkMap<T> {
    pub landmarks: Vec<Landmark<T>>,
    pub merge_radius: T,
}

impl<T: Scalar> LandmarkMap<T> {
    pub fn new(merge_radius: T) -> Self {
        LandmarkMap {
            landmarks: Vec::new(),
            merge_radius,
        }
    }

    /// Adds a landmark, merging it with any existing one within the radius.
    pub fn insert(&mut self, lm: Landmark<T>) {
        let mut cur = lm;
        loop {
            let near = self
                .landmarks
                .iter()
                .enumerate()
                .map(|(i, l)| (i, dist(l.x, l.y, cur.x, cur.y)))
                .filter(|&(_, d)| d <= self.merge_radius)
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
            let Some((i, _)) = near else { break };
            let old = self.landmarks.remove(i);
            let (wa, wb) = (T::of(old.n_obs as f64), T::of(cur.n_obs as f64));
            cur = Landmark {
                id: old.id,
                x: (old.x * wa + cur.x * wb) / (wa + wb),
                y: (old.y * wa + cur.y * wb) / (wa + wb),
                n_obs: old.n_obs + cur.n_obs,
                t_first: old.t_first.min(cur.t_first),
                t_last: old.t_last.max(cur.t_last),
                residual: old.residual.max(cur.residual),
            };
        }
        let pos = self.landmarks.partition_point(|l| l.id < cur.id);
        self.landmarks.insert(pos, cur);
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    /// `id,x_m,y_m,n_obs,t_first_us,t_last_us` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for l in &self.landmarks {
            let _ = writeln!(s, "{},{},{},{},{},{}", l.id, l.x, l.y, l.n_obs, l.t_first, l.t_last);
        }
        s
    }

    pub fn parse_csv(text: &str, merge_radius: T) -> Result<Self> {
        let mut landmarks = Vec::new();
        for (i, line) in data_lines(text) {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 6 {
                return Err(Error::parse(i, "map rows need id,x_m,y_m,n_obs,t_first_us,t_last_us"));
            }
            landmarks.push(Landmark {
                id: field(&f, 0, i)?,
                x: T::of(finite(&f, 1, i)?),
                y: T::of(finite(&f, 2, i)?),
                n_obs: field(&f, 3, i)?,
                t_first: field(&f, 4, i)?,
                t_last: field(&f, 5, i)?,
                residual: T::zero(),
            });
        }
        Ok(LandmarkMap {
            landmarks,
            merge_radius,
        })
    }

    pub fn load(path: impl AsRef<Path>, merge_radius: T) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, merge_radius)
    }
}

pub fn accumulate_map<T: Scalar>(landmarks: impl IntoIterator<Item = Landmark<T>>, merge_radius: T) -> LandmarkMap<T> {
    let mut map = LandmarkMap::new(merge_radius);
    for l in landmarks {
        map.insert(l);
    }
    map
}

fn dist<T: Scalar>(ax: T, ay: T, bx: T, by: T) -> T {
    ((ax - bx) * (ax - bx) + (ay - by) * (ay - by)).sqrt()
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn field<F: std::str::FromStr>(f: &[&str], k: usize, line: usize) -> Result<F> {
    f[k].parse()
        .map_err(|_| Error::parse(line, format!("invalid field {:?}", f[k])))
}

fn finite(f: &[&str], k: usize, line: usize) -> Result<f64> {
    let v: f64 = field(f, k, line)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::parse(line, "non-finite coordinate"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthPole<T> {
    pub id: u64,
    pub x: T,
    pub y: T,
}

pub fn parse_ground_truth<T: Scalar>(text: &str) -> Result<Vec<GroundTruthPole<T>>> {
    data_lines(text)
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(Error::parse(i, "ground truth rows need id,x_m,y_m"));
            }
            Ok(GroundTruthPole {
                id: field(&f, 0, i)?,
                x: T::of(finite(&f, 1, i)?),
                y: T::of(finite(&f, 2, i)?),
            })
        })
        .collect()
}

pub fn load_ground_truth<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<GroundTruthPole<T>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ground_truth(&text)
}

pub fn ground_truth_to_csv<T: Scalar>(gt: &[GroundTruthPole<T>]) -> String {
    let mut s = String::new();
    for g in gt {
        let _ = writeln!(s, "{},{},{}", g.id, g.x, g.y);
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub ground_truth: usize,
    pub true_positives: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
    /// Meters; NaN without matches.
    pub rmse: f64,
    pub longitudinal_mean: f64,
    pub lateral_mean: f64,
    /// `(landmark index, ground truth index, distance)`.
    pub matches: Vec<(usize, usize, f64)>,
}

impl EvalReport {
    pub fn to_kv(&self) -> String {
        format!(
            "ground_truth={}\ntrue_positives={}\nfalse_negatives={}\nfalse_positives={}\nrmse_m={}\nlongitudinal_m={}\nlateral_m={}\n",
            self.ground_truth,
            self.true_positives,
            self.false_negatives,
            self.false_positives,
            self.rmse,
            self.longitudinal_mean,
            self.lateral_mean
        )
    }

    pub fn to_table(&self) -> String {
        let pct = |n: usize| {
            if self.ground_truth == 0 {
                0.0
            } else {
                100.0 * n as f64 / self.ground_truth as f64
            }
        };
        let mut s = String::new();
        let _ = writeln!(s, "{:<22}{:>8}{:>10}", "", "count", "% of GT");
        let _ = writeln!(s, "{:<22}{:>8}{:>10}", "ground truth poles", self.ground_truth, "");
        let _ = writeln!(
            s,
            "{:<22}{:>8}{:>9.1}%",
            "true positives",
            self.true_positives,
            pct(self.true_positives)
        );
        let _ = writeln!(
            s,
            "{:<22}{:>8}{:>9.1}%",
            "false negatives",
            self.false_negatives,
            pct(self.false_negatives)
        );
        let _ = writeln!(
            s,
            "{:<22}{:>8}{:>9.1}%",
            "false positives",
            self.false_positives,
            pct(self.false_positives)
        );
        let _ = writeln!(s, "rmse            {:.4} m", self.rmse);
        let _ = writeln!(s, "longitudinal    {:.4} m", self.longitudinal_mean);
        let _ = writeln!(s, "lateral         {:.4} m", self.lateral_mean);
        s
    }
}

/// Greedy closest-pair matching within `reject_radius`. Errors are split
/// along the direction of travel at each landmark's mid observation time,
/// taken from `poses` when available and `+x` otherwise.
pub fn match_and_rmse<T: Scalar>(
    map: &LandmarkMap<T>,
    gt: &[GroundTruthPole<T>],
    reject_radius: f64,
    poses: Option<&PoseLog<T>>,
) -> Result<EvalReport> {
    if gt.is_empty() {
        return Err(Error::EmptyInput("ground truth map"));
    }
    if !(reject_radius > 0.0) {
        return Err(Error::Config("reject radius must be positive".into()));
    }
    let lms = &map.landmarks;
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, l) in lms.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            let d = dist(l.x, l.y, g.x, g.y).to_f64_lossy();
            if d <= reject_radius {
                pairs.push((d, i, j));
            }
        }
    }
    // ties resolved by coordinates so the result does not depend on input order
    let key = |i: usize, j: usize| {
        (
            lms[i].x.to_f64_lossy(),
            lms[i].y.to_f64_lossy(),
            gt[j].x.to_f64_lossy(),
            gt[j].y.to_f64_lossy(),
        )
    };
    pairs.sort_by(|a, b| {
        a.0.total_cmp(&b.0).then_with(|| {
            let (p, q) = (key(a.1, a.2), key(b.1, b.2));
            p.0.total_cmp(&q.0)
                .then(p.1.total_cmp(&q.1))
                .then(p.2.total_cmp(&q.2))
                .then(p.3.total_cmp(&q.3))
        })
    });
    let (mut lm_used, mut gt_used) = (vec![false; lms.len()], vec![false; gt.len()]);
    let mut matches = Vec::new();
    for (d, i, j) in pairs {
        if !lm_used[i] && !gt_used[j] {
            lm_used[i] = true;
            gt_used[j] = true;
            matches.push((i, j, d));
        }
    }
    let n = matches.len();
    let (mut sq, mut lon, mut lat) = (0.0, 0.0, 0.0);
    for &(i, j, d) in &matches {
        let l = &lms[i];
        let dir = poses
            .and_then(|p| {
                p.motion_direction(l.t_first / 2 + l.t_last / 2 + (l.t_first % 2 + l.t_last % 2) / 2)
                    .ok()
            })
            .map(|d| [d[0].to_f64_lossy(), d[1].to_f64_lossy()])
            .unwrap_or([1.0, 0.0]);
        let (ex, ey) = ((l.x - gt[j].x).to_f64_lossy(), (l.y - gt[j].y).to_f64_lossy());
        sq += d * d;
        lon += (ex * dir[0] + ey * dir[1]).abs();
        lat += (-ex * dir[1] + ey * dir[0]).abs();
    }
    let mean = |v: f64| if n == 0 { f64::NAN } else { v / n as f64 };
    Ok(EvalReport {
        ground_truth: gt.len(),
        true_positives: n,
        false_negatives: gt.len() - n,
        false_positives: lms.len() - n,
        rmse: mean(sq).sqrt(),
        longitudinal_mean: mean(lon),
        lateral_mean: mean(lat),
        matches,
    })
}
