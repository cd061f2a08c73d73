//! Planar poses, pose logs and time interpolation.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{wrap_angle, Scalar};

/// Timestamped SE(2) pose. `theta` is kept in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2<T> {
    pub t: u64,
    pub x: T,
    pub y: T,
    pub theta: T,
}

impl<T: Scalar> Pose2<T> {
    pub fn new(t: u64, x: T, y: T, theta: T) -> Self {
        Pose2 {
            t,
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn identity(t: u64) -> Self {
        Pose2 {
            t,
            x: T::zero(),
            y: T::zero(),
            theta: T::zero(),
        }
    }

    /// `self * other`: applies `other` in the frame of `self`. The result keeps `self.t`.
    pub fn compose(&self, other: &Pose2<T>) -> Pose2<T> {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(
            self.t,
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )
    }

    pub fn inverse(&self) -> Pose2<T> {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(self.t, -(c * self.x + s * self.y), s * self.x - c * self.y, -self.theta)
    }

    pub fn transform_point(&self, p: [T; 2]) -> [T; 2] {
        let (s, c) = self.theta.sin_cos();
        [self.x + c * p[0] - s * p[1], self.y + s * p[0] + c * p[1]]
    }

    /// Inverse of this pose as a 2x3 matrix `[R^T | -R^T t]`. Applied to a
    /// homogeneous world point it yields frame coordinates (row 0: frame x, row 1: frame y).
    pub fn inverse_matrix(&self) -> [[T; 3]; 2] {
        let (s, c) = self.theta.sin_cos();
        [[c, s, -(c * self.x + s * self.y)], [-s, c, s * self.x - c * self.y]]
    }
}

/// Time-ordered pose samples with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseLog<T> {
    poses: Vec<Pose2<T>>,
}

impl<T: Scalar> PoseLog<T> {
    pub fn new(poses: Vec<Pose2<T>>) -> Result<Self> {
        for (i, w) in poses.windows(2).enumerate() {
            if w[1].t <= w[0].t {
                return Err(Error::Order {
                    record: i + 2,
                    t: w[1].t,
                    previous: w[0].t,
                });
            }
        }
        Ok(PoseLog { poses })
    }

    pub fn poses(&self) -> &[Pose2<T>] {
        &self.poses
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn span(&self) -> Option<(u64, u64)> {
        Some((self.poses.first()?.t, self.poses.last()?.t))
    }

    pub fn interpolate(&self, t: u64) -> Result<Pose2<T>> {
        let (start, end) = self.span().ok_or(Error::EmptyInput("pose log"))?;
        if t < start || t > end {
            return Err(Error::OutOfRange { t, start, end });
        }
        let i = self.poses.partition_point(|p| p.t <= t);
        let a = self.poses[i - 1];
        if a.t == t || i == self.poses.len() {
            return Ok(a);
        }
        let b = self.poses[i];
        let f = T::of((t - a.t) as f64 / (b.t - a.t) as f64);
        let dtheta = wrap_angle(b.theta - a.theta);
        Ok(Pose2::new(
            t,
            a.x + (b.x - a.x) * f,
            a.y + (b.y - a.y) * f,
            a.theta + dtheta * f,
        ))
    }

    /// Unit direction of travel at `t`, from the displacement across the
    /// bracketing samples. Falls back to the heading when stationary.
    pub fn motion_direction(&self, t: u64) -> Result<[T; 2]> {
        let p = self.interpolate(t)?;
        let i = self.poses.partition_point(|q| q.t <= t);
        let lo = self.poses[i.saturating_sub(1).min(self.poses.len() - 1)];
        let hi = self.poses[i.min(self.poses.len() - 1)];
        let (a, b) = if lo.t == hi.t {
            let j = i.saturating_sub(2);
            (self.poses[j], lo)
        } else {
            (lo, hi)
        };
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let n = (dx * dx + dy * dy).sqrt();
        if n > T::epsilon() {
            Ok([dx / n, dy / n])
        } else {
            Ok([p.theta.cos(), p.theta.sin()])
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }

    /// Parses `t_us,x_m,y_m,theta_rad` rows.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut poses = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(Error::parse(i + 1, "pose rows need t_us,x_m,y_m,theta_rad"));
            }
            let t: u64 = f[0].parse().map_err(|_| Error::parse(i + 1, "invalid t_us"))?;
            let mut v = [0.0f64; 3];
            for (k, s) in f[1..].iter().enumerate() {
                v[k] = s
                    .parse()
                    .map_err(|_| Error::parse(i + 1, format!("invalid number {s:?}")))?;
                if !v[k].is_finite() {
                    return Err(Error::parse(i + 1, "non-finite pose value"));
                }
            }
            if let Some(prev) = poses.last().map(|p: &Pose2<T>| p.t) {
                if t <= prev {
                    return Err(Error::Order {
                        record: poses.len() + 1,
                        t,
                        previous: prev,
                    });
                }
            }
            poses.push(Pose2::new(t, T::of(v[0]), T::of(v[1]), T::of(v[2])));
        }
        Ok(PoseLog { poses })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for p in &self.poses {
            let _ = writeln!(s, "{},{},{},{}", p.t, p.x, p.y, p.theta);
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}
