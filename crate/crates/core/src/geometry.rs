//! Pinhole camera model and the coordinate conventions every other module uses.
//!
//! Camera frame: `x` points right, `y` points down, `z` points forward, all in
//! meters. Locations are also expressed in spherical form `(d, beta, psi)`:
//!
//! * `d` is the radial distance from the optical center,
//! * `beta = atan2(x, z)` is the azimuth, measured from the optical axis toward `+x`,
//! * `psi = acos(-y / d)` is the polar angle, measured from the "up" direction `-y`.
//!
//! A person standing straight ahead at eye height therefore has `beta = 0` and
//! `psi = pi / 2`. Body yaw `theta` lives in the ground (`x`-`z`) plane: a person
//! with yaw `theta` faces the direction `(cos theta, sin theta)` in `(x, z)`.
//! The viewpoint angle seen by the camera is `alpha = theta + beta`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Intrinsic parameters of a zero-skew pinhole camera, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntrinsics")]
pub struct CameraIntrinsics {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
}

#[derive(Deserialize)]
struct RawIntrinsics {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
}

impl TryFrom<RawIntrinsics> for CameraIntrinsics {
    type Error = Error;

    fn try_from(raw: RawIntrinsics) -> Result<Self> {
        CameraIntrinsics::new(raw.fx, raw.fy, raw.cx, raw.cy)
    }
}

impl CameraIntrinsics {
    /// Builds intrinsics, rejecting non-positive or non-finite focal lengths.
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx.is_finite() && fy.is_finite() && cx.is_finite() && cy.is_finite()) {
            return Err(Error::InvalidIntrinsics("non-finite parameter".into()));
        }
        if fx <= 0.0 || fy <= 0.0 {
            return Err(Error::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx = {fx}, fy = {fy})"
            )));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    /// Identity intrinsics: pixel coordinates equal normalized coordinates.
    pub fn identity() -> Self {
        Self {
            fx: 1.0,
            fy: 1.0,
            cx: 0.0,
            cy: 0.0,
        }
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }

    pub fn fy(&self) -> f64 {
        self.fy
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    /// The 3x3 calibration matrix `K`, row-major.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.fx, 0.0, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ]
    }

    /// Scales focal lengths and principal point together, as happens when an
    /// image is resized by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.fx * factor,
            self.fy * factor,
            self.cx * factor,
            self.cy * factor,
        )
    }

    /// Back-projects a pixel into normalized image coordinates, i.e. the first
    /// two components of `K^-1 [u, v, 1]^T`.
    pub fn back_project(&self, u: f64, v: f64) -> (f64, f64) {
        ((u - self.cx) / self.fx, (v - self.cy) / self.fy)
    }

    /// Projects a camera-frame point to pixel coordinates.
    pub fn project(&self, p: &CartesianLocation) -> Result<(f64, f64)> {
        if !(p.z > 0.0) {
            return Err(Error::BehindCamera { z: p.z });
        }
        Ok((
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }
}

/// Free-function form of [`CameraIntrinsics::back_project`].
pub fn back_project(uv: (f64, f64), k: &CameraIntrinsics) -> (f64, f64) {
    k.back_project(uv.0, uv.1)
}

/// Free-function form of [`CameraIntrinsics::project`].
pub fn project(p: &CartesianLocation, k: &CameraIntrinsics) -> Result<(f64, f64)> {
    k.project(p)
}

/// A point in the camera frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartesianLocation {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CartesianLocation {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Spherical form of a camera-frame location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalLocation {
    pub d: f64,
    pub beta: f64,
    pub psi: f64,
}

pub fn spherical_from_cartesian(p: &CartesianLocation) -> Result<SphericalLocation> {
    let d = p.norm();
    if !(d > 0.0) {
        return Err(Error::Degenerate(
            "spherical coordinates are undefined at the origin".into(),
        ));
    }
    let beta = p.x.atan2(p.z);
    let psi = (-p.y / d).clamp(-1.0, 1.0).acos();
    Ok(SphericalLocation { d, beta, psi })
}

pub fn cartesian_from_spherical(s: &SphericalLocation) -> CartesianLocation {
    let (sin_psi, cos_psi) = s.psi.sin_cos();
    let (sin_beta, cos_beta) = s.beta.sin_cos();
    CartesianLocation {
        x: s.d * sin_psi * sin_beta,
        y: -s.d * cos_psi,
        z: s.d * sin_psi * cos_beta,
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Smallest signed difference `a - b`, wrapped into `(-pi, pi]`.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

/// Viewpoint angle `alpha = wrap(theta + beta)`.
pub fn viewpoint_from_orientation(theta: f64, beta: f64) -> f64 {
    wrap_angle(theta + beta)
}

/// Inverse of [`viewpoint_from_orientation`]: `theta = wrap(alpha - beta)`.
pub fn orientation_from_viewpoint(alpha: f64, beta: f64) -> f64 {
    wrap_angle(alpha - beta)
}

/// Body yaw plus its viewpoint encoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub theta: f64,
    pub sin_alpha: f64,
    pub cos_alpha: f64,
}

impl Orientation {
    /// Encodes yaw `theta` observed at azimuth `beta`.
    pub fn from_yaw(theta: f64, beta: f64) -> Self {
        let theta = wrap_angle(theta);
        let (sin_alpha, cos_alpha) = encode_angle(viewpoint_from_orientation(theta, beta));
        Self {
            theta,
            sin_alpha,
            cos_alpha,
        }
    }

    /// Decodes a (possibly unnormalized) `[sin alpha, cos alpha]` pair.
    pub fn from_encoding(sin_alpha: f64, cos_alpha: f64, beta: f64) -> Self {
        let (sin_alpha, cos_alpha) = renormalize(sin_alpha, cos_alpha);
        let alpha = decode_angle(sin_alpha, cos_alpha);
        Self {
            theta: orientation_from_viewpoint(alpha, beta),
            sin_alpha,
            cos_alpha,
        }
    }

    pub fn alpha(&self) -> f64 {
        decode_angle(self.sin_alpha, self.cos_alpha)
    }
}

pub fn encode_angle(alpha: f64) -> (f64, f64) {
    alpha.sin_cos()
}

/// `atan2` of a renormalized encoding; a zero vector decodes to 0.
pub fn decode_angle(sin_alpha: f64, cos_alpha: f64) -> f64 {
    let (s, c) = renormalize(sin_alpha, cos_alpha);
    wrap_angle(s.atan2(c))
}

fn renormalize(s: f64, c: f64) -> (f64, f64) {
    let n = s.hypot(c);
    if n > 0.0 && n.is_finite() {
        (s / n, c / n)
    } else {
        (0.0, 1.0)
    }
}
