//! Pinhole intrinsics, the 4-coefficient radial-tangential model and the
//! per-pixel undistortion lookup table.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::event::{Event, SensorSize};
use crate::kv;
use crate::scalar::{round_half_up, Scalar};

/// Radial-tangential coefficients `(k1, k2, p1, p2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Distortion<T> {
    pub k1: T,
    pub k2: T,
    pub p1: T,
    pub p2: T,
}

impl<T: Scalar> Distortion<T> {
    pub fn is_zero(&self) -> bool {
        self.k1.is_zero() && self.k2.is_zero() && self.p1.is_zero() && self.p2.is_zero()
    }

    /// Closed-form model on a normalized image point. The lookup table maps raw
    /// sensor pixels through this function.
    pub fn apply(&self, x: T, y: T) -> (T, T) {
        let two = T::one() + T::one();
        let r2 = x * x + y * y;
        let radial = T::one() + self.k1 * r2 + self.k2 * r2 * r2;
        let xd = x * radial + two * self.p1 * x * y + self.p2 * (r2 + two * x * x);
        let yd = y * radial + self.p1 * (r2 + two * y * y) + two * self.p2 * x * y;
        (xd, yd)
    }

    /// Numerical inverse of [`Distortion::apply`] by fixed-point iteration.
    pub fn invert(&self, x: T, y: T) -> (T, T) {
        let two = T::one() + T::one();
        let (mut xi, mut yi) = (x, y);
        for _ in 0..50 {
            let r2 = xi * xi + yi * yi;
            let radial = T::one() + self.k1 * r2 + self.k2 * r2 * r2;
            let dx = two * self.p1 * xi * yi + self.p2 * (r2 + two * xi * xi);
            let dy = self.p1 * (r2 + two * yi * yi) + two * self.p2 * xi * yi;
            let nx = (x - dx) / radial;
            let ny = (y - dy) / radial;
            let done = (nx - xi).abs() < T::epsilon() && (ny - yi).abs() < T::epsilon();
            xi = nx;
            yi = ny;
            if done {
                break;
            }
        }
        (xi, yi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics<T> {
    pub width: u32,
    pub height: u32,
    pub alpha_x: T,
    pub alpha_y: T,
    pub u0: T,
    pub v0: T,
    pub dist: Distortion<T>,
}

impl<T: Scalar> CameraIntrinsics<T> {
    /// 240x180 sensor with roughly 56 degrees of horizontal field of view.
    pub fn davis240() -> Self {
        CameraIntrinsics {
            width: 240,
            height: 180,
            alpha_x: T::of(225.7),
            alpha_y: T::of(225.7),
            u0: T::of(119.5),
            v0: T::of(89.5),
            dist: Distortion::default(),
        }
    }

    pub fn sensor(&self) -> SensorSize {
        SensorSize {
            width: self.width,
            height: self.height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.width > u16::MAX as u32 || self.height > u16::MAX as u32 {
            return Err(Error::Config(format!(
                "invalid sensor size {}x{}",
                self.width, self.height
            )));
        }
        if !(self.alpha_x > T::zero()) || !(self.alpha_y > T::zero()) {
            return Err(Error::Config("focal lengths must be positive".into()));
        }
        if !(self.u0 >= T::zero() && self.u0 < T::of(self.width as f64)) {
            return Err(Error::Config(format!("u0 {} outside [0, {})", self.u0, self.width)));
        }
        if !self.v0.is_finite() {
            return Err(Error::Config("v0 must be finite".into()));
        }
        Ok(())
    }

    pub fn to_normalized(&self, u: T, v: T) -> (T, T) {
        ((u - self.u0) / self.alpha_x, (v - self.v0) / self.alpha_y)
    }

    pub fn to_pixel(&self, x: T, y: T) -> (T, T) {
        (x * self.alpha_x + self.u0, y * self.alpha_y + self.v0)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses a flat `key=value` calibration file. All ten keys are required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut vals: [Option<f64>; 8] = [None; 8];
        let mut size: [Option<u32>; 2] = [None; 2];
        const KEYS: [&str; 8] = ["alpha_x", "alpha_y", "u0", "v0", "k1", "k2", "p1", "p2"];
        for entry in kv::parse(text)? {
            match entry.key.as_str() {
                "width" => size[0] = Some(kv::value(&entry)?),
                "height" => size[1] = Some(kv::value(&entry)?),
                k => {
                    let idx = KEYS
                        .iter()
                        .position(|&name| name == k)
                        .ok_or_else(|| Error::parse(entry.line, format!("unknown calibration key {k:?}")))?;
                    vals[idx] = Some(kv::value(&entry)?);
                }
            }
        }
        let need = |v: Option<f64>, k: &str| v.ok_or_else(|| Error::Config(format!("calibration missing {k}")));
        let intr = CameraIntrinsics {
            width: size[0].ok_or_else(|| Error::Config("calibration missing width".into()))?,
            height: size[1].ok_or_else(|| Error::Config("calibration missing height".into()))?,
            alpha_x: T::of(need(vals[0], KEYS[0])?),
            alpha_y: T::of(need(vals[1], KEYS[1])?),
            u0: T::of(need(vals[2], KEYS[2])?),
            v0: T::of(need(vals[3], KEYS[3])?),
            dist: Distortion {
                k1: T::of(need(vals[4], KEYS[4])?),
                k2: T::of(need(vals[5], KEYS[5])?),
                p1: T::of(need(vals[6], KEYS[6])?),
                p2: T::of(need(vals[7], KEYS[7])?),
            },
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn to_text(&self) -> String {
        format!(
            "width={}\nheight={}\nalpha_x={}\nalpha_y={}\nu0={}\nv0={}\nk1={}\nk2={}\np1={}\np2={}\n",
            self.width,
            self.height,
            self.alpha_x,
            self.alpha_y,
            self.u0,
            self.v0,
            self.dist.k1,
            self.dist.k2,
            self.dist.p1,
            self.dist.p2
        )
    }
}

/// Per-pixel map from raw sensor pixels to rectified integer pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct UndistortionLut {
    width: u32,
    height: u32,
    // packed (x, y); u32::MAX marks an invalid cell
    cells: Vec<u32>,
}

const INVALID: u32 = u32::MAX;

impl UndistortionLut {
    pub fn identity(width: u32, height: u32) -> Self {
        let cells = (0..height).flat_map(|y| (0..width).map(move |x| pack(x, y))).collect();
        UndistortionLut { width, height, cells }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> Option<(u16, u16)> {
        if x >= self.width || y >= self.height {
            return None;
        }
        let c = self.cells[(y * self.width + x) as usize];
        (c != INVALID).then_some(((c & 0xffff) as u16, (c >> 16) as u16))
    }

    pub fn is_identity(&self) -> bool {
        self.cells
            .iter()
            .enumerate()
            .all(|(i, &c)| c == pack(i as u32 % self.width, i as u32 / self.width))
    }

    pub fn invalid_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c == INVALID).count()
    }
}

fn pack(x: u32, y: u32) -> u32 {
    x | (y << 16)
}

pub fn build_undistortion_lut<T: Scalar>(intr: &CameraIntrinsics<T>) -> UndistortionLut {
    let (w, h) = (intr.width, intr.height);
    let mut cells = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let (xn, yn) = intr.to_normalized(T::of(x as f64), T::of(y as f64));
            let (xu, yu) = intr.dist.apply(xn, yn);
            let (u, v) = intr.to_pixel(xu, yu);
            let u = round_half_up(u.to_f64_lossy());
            let v = round_half_up(v.to_f64_lossy());
            let valid = u >= 0.0 && v >= 0.0 && u < w as f64 && v < h as f64;
            cells.push(if valid { pack(u as u32, v as u32) } else { INVALID });
        }
    }
    UndistortionLut {
        width: w,
        height: h,
        cells,
    }
}

/// Remaps the event pixel; `None` when the pixel has no valid rectified target.
pub fn undistort_event(e: Event, lut: &UndistortionLut) -> Option<Event> {
    lut.get(e.x as u32, e.y as u32).map(|(x, y)| Event { x, y, ..e })
}
