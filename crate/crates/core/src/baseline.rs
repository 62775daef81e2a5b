//! Closed-form distance from one calibrated vertical body segment.
//!
//! A segment of known length `dy` whose end points project to rows `v1`
//! (upper) and `v2` (lower) at column `u` fixes depth by similar triangles.
//! Writing the segment midpoint as `(X, Y, Z)`, the pinhole constraints are
//!
//! ```text
//! fx X - (u - cx) Z = 0               (upper end)
//! fx X - (u - cx) Z = 0               (lower end)
//! fy Y - (v1 - cy) Z =  fy dy / 2
//! fy Y - (v2 - cy) Z = -fy dy / 2
//! ```
//!
//! solved in the least-squares sense. Flipping the sign of `dy` gives the
//! mirrored root with `Z < 0`; only the root in front of the camera is kept.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, CartesianLocation};
use crate::keypoints::{joint, Pose2D, PoseRecord};

/// Fewest labeled records accepted for calibration.
pub const MIN_CALIBRATION_RECORDS: usize = 30;

/// Segments whose relative spread is within this fraction of the best one
/// count as tied.
pub const CV_TIE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    HeadShoulder,
    ShoulderHip,
    HipKnee,
    KneeAnkle,
    HipAnkle,
}

impl Segment {
    pub const ALL: [Segment; 5] = [
        Segment::HeadShoulder,
        Segment::ShoulderHip,
        Segment::HipKnee,
        Segment::KneeAnkle,
        Segment::HipAnkle,
    ];

    /// Tie-break order when several segments are equally stable. The torso
    /// moves least with gait and gestures.
    pub const PREFERENCE: [Segment; 5] = [
        Segment::ShoulderHip,
        Segment::HipAnkle,
        Segment::HeadShoulder,
        Segment::HipKnee,
        Segment::KneeAnkle,
    ];

    /// `((upper left, upper right), (lower left, lower right))`.
    pub fn joints(self) -> ((usize, usize), (usize, usize)) {
        let ears = (joint::LEFT_EAR, joint::RIGHT_EAR);
        let shoulders = (joint::LEFT_SHOULDER, joint::RIGHT_SHOULDER);
        let hips = (joint::LEFT_HIP, joint::RIGHT_HIP);
        let knees = (joint::LEFT_KNEE, joint::RIGHT_KNEE);
        let ankles = (joint::LEFT_ANKLE, joint::RIGHT_ANKLE);
        match self {
            Segment::HeadShoulder => (ears, shoulders),
            Segment::ShoulderHip => (shoulders, hips),
            Segment::HipKnee => (hips, knees),
            Segment::KneeAnkle => (knees, ankles),
            Segment::HipAnkle => (hips, ankles),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Segment::HeadShoulder => "head-shoulder",
            Segment::ShoulderHip => "shoulder-hip",
            Segment::HipKnee => "hip-knee",
            Segment::KneeAnkle => "knee-ankle",
            Segment::HipAnkle => "hip-ankle",
        }
    }

    /// Average image position of a left/right joint pair; `None` unless both
    /// are visible.
    fn pair_pixel(pose: &Pose2D, (l, r): (usize, usize)) -> Option<(f64, f64)> {
        let (a, b) = (pose.keypoints[l], pose.keypoints[r]);
        (a.visible() && b.visible()).then(|| (0.5 * (a.u + b.u), 0.5 * (a.v + b.v)))
    }

    /// `(u_upper, v_upper, u_lower, v_lower)` in pixels.
    pub fn endpoints(self, pose: &Pose2D) -> Option<(f64, f64, f64, f64)> {
        let (upper, lower) = self.joints();
        let (u1, v1) = Self::pair_pixel(pose, upper)?;
        let (u2, v2) = Self::pair_pixel(pose, lower)?;
        Some((u1, v1, u2, v2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentCalibration {
    pub segment: Segment,
    pub mean_m: f64,
    pub std_m: f64,
    pub count: usize,
}

impl SegmentCalibration {
    /// Relative spread `std / mean`; the relative depth error it induces.
    pub fn cv(&self) -> f64 {
        self.std_m / self.mean_m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Calibrated segments, most stable first.
    pub segments: Vec<SegmentCalibration>,
    pub selected: Segment,
}

impl Calibration {
    pub fn get(&self, s: Segment) -> Option<&SegmentCalibration> {
        self.segments.iter().find(|c| c.segment == s)
    }

    pub fn selected(&self) -> &SegmentCalibration {
        self.get(self.selected).expect("selected segment is calibrated")
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Measures every candidate segment on labeled records by back-projecting
/// its end points at the ground-truth depth, then selects the segment with
/// the smallest spread.
pub fn calibrate_segments(records: &[PoseRecord]) -> Result<Calibration> {
    let labeled: Vec<_> = records.iter().filter(|r| r.gt.is_some()).collect();
    if labeled.len() < MIN_CALIBRATION_RECORDS {
        return Err(Error::NotEnoughRecords { got: labeled.len(), need: MIN_CALIBRATION_RECORDS });
    }
    let mut segments = Vec::new();
    for s in Segment::ALL {
        let lengths: Vec<f64> = labeled
            .iter()
            .filter_map(|r| {
                let z = r.gt.as_ref().expect("filtered").xyz[2];
                let (_, v1, _, v2) = s.endpoints(&r.pose)?;
                Some((v2 - v1) / r.intrinsics.fy() * z)
            })
            .collect();
        if lengths.len() < MIN_CALIBRATION_RECORDS {
            continue;
        }
        let n = lengths.len() as f64;
        let mean = lengths.iter().sum::<f64>() / n;
        let var = lengths.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / n;
        segments.push(SegmentCalibration { segment: s, mean_m: mean, std_m: var.sqrt(), count: lengths.len() });
    }
    if segments.is_empty() {
        return Err(Error::NotEnoughRecords { got: 0, need: MIN_CALIBRATION_RECORDS });
    }
    segments.sort_by(|a, b| a.cv().total_cmp(&b.cv()));
    let best = segments[0].cv();
    let selected = Segment::PREFERENCE
        .into_iter()
        .find(|s| segments.iter().any(|c| c.segment == *s && c.cv() <= best * (1.0 + CV_TIE)))
        .expect("the best segment is in the preference list");
    Ok(Calibration { segments, selected })
}

/// Least-squares solution of a small overdetermined system `A x = b` by the
/// normal equations.
fn least_squares3(rows: &[([f64; 3], f64)]) -> Option<[f64; 3]> {
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (a, b) in rows {
        for i in 0..3 {
            atb[i] += a[i] * b;
            for j in 0..3 {
                ata[i][j] += a[i] * a[j];
            }
        }
    }
    solve3(ata, atb)
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for c in 0..3 {
        let p = (c..3).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))?;
        if m[p][c].abs() < 1e-300 {
            return None;
        }
        m.swap(c, p);
        r.swap(c, p);
        for i in c + 1..3 {
            let f = m[i][c] / m[c][c];
            for j in c..3 {
                m[i][j] -= f * m[c][j];
            }
            r[i] -= f * r[c];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|j| m[i][j] * x[j]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}

/// Location of the lower end of a vertical segment of length `dy` whose end
/// points project to rows `v1`, `v2` at column `u`.
pub fn distance_from_segment(v1: f64, v2: f64, u: f64, dy: f64, k: &CameraIntrinsics) -> Result<CartesianLocation> {
    if v1 == v2 {
        return Err(Error::Degenerate("segment end points share an image row".into()));
    }
    if !(dy > 0.0) {
        return Err(Error::InvalidArgument(format!("segment length must be positive, got {dy}")));
    }
    let (fx, fy, cx, cy) = (k.fx(), k.fy(), k.cx(), k.cy());
    for sign in [1.0, -1.0] {
        let h = sign * dy;
        let rows = [
            ([fx, 0.0, -(u - cx)], 0.0),
            ([fx, 0.0, -(u - cx)], 0.0),
            ([0.0, fy, -(v1 - cy)], fy * h / 2.0),
            ([0.0, fy, -(v2 - cy)], -fy * h / 2.0),
        ];
        let Some([x, y, z]) = least_squares3(&rows) else {
            continue;
        };
        if z > 0.0 {
            return Ok(CartesianLocation::new(x, y + h / 2.0, z));
        }
    }
    Err(Error::BehindCamera { z: 0.0 })
}

/// Localizes the mid-hip with the selected segment, or failing that the most
/// stable calibrated segment visible in `pose`. All joints of an upright person share one depth, so the hip pair
/// is back-projected at the segment's depth; without visible hips the lower
/// end of the segment stands in.
pub fn localize(pose: &Pose2D, k: &CameraIntrinsics, cal: &Calibration) -> Result<CartesianLocation> {
    let order = std::iter::once(cal.selected()).chain(cal.segments.iter().filter(|c| c.segment != cal.selected));
    for c in order {
        let Some((u1, v1, u2, v2)) = c.segment.endpoints(pose) else {
            continue;
        };
        if v1 == v2 {
            continue;
        }
        let lower = distance_from_segment(v1, v2, 0.5 * (u1 + u2), c.mean_m, k)?;
        let hips = (joint::LEFT_HIP, joint::RIGHT_HIP);
        return Ok(match Segment::pair_pixel(pose, hips) {
            Some((u, v)) => {
                let (xn, yn) = k.back_project(u, v);
                CartesianLocation::new(xn * lower.z, yn * lower.z, lower.z)
            }
            None => lower,
        });
    }
    Err(Error::TooFewJoints { visible: pose.visible_count(), required: 4 })
}
