//! COCO-17 poses, the JSON-lines record format, network input vectors,
//! horizontal-flip augmentation and IoU matching against ground truth.
//!
//! One record per line:
//!
//! ```text
//! {"pose": [[u, v, c] x 17], "K": {"fx", "fy", "cx", "cy"},
//!  "gt": {"xyz": [x, y, z], "theta", "height", "dims": [w, h, l]},
//!  "scene": 0, "seed": 42}
//! ```
//!
//! `gt`, `scene` and `seed` are optional; inference inputs omit `gt`.
//! Records sharing a `scene` index come from the same image.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CameraIntrinsics;

pub const NUM_JOINTS: usize = 17;
/// 34 normalized coordinates followed by 17 visibility flags.
pub const INPUT_DIM: usize = 3 * NUM_JOINTS;
pub const MIN_VISIBLE_JOINTS: usize = 3;

/// Joint names in COCO order.
pub const COCO_JOINTS: [&str; NUM_JOINTS] = [
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
];

/// Index of the mirror-image joint (left <-> right); the nose maps to itself.
pub const COCO_FLIP: [usize; NUM_JOINTS] = [0, 2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 12, 11, 14, 13, 16, 15];

pub mod joint {
    pub const NOSE: usize = 0;
    pub const LEFT_EYE: usize = 1;
    pub const RIGHT_EYE: usize = 2;
    pub const LEFT_EAR: usize = 3;
    pub const RIGHT_EAR: usize = 4;
    pub const LEFT_SHOULDER: usize = 5;
    pub const RIGHT_SHOULDER: usize = 6;
    pub const LEFT_ELBOW: usize = 7;
    pub const RIGHT_ELBOW: usize = 8;
    pub const LEFT_WRIST: usize = 9;
    pub const RIGHT_WRIST: usize = 10;
    pub const LEFT_HIP: usize = 11;
    pub const RIGHT_HIP: usize = 12;
    pub const LEFT_KNEE: usize = 13;
    pub const RIGHT_KNEE: usize = 14;
    pub const LEFT_ANKLE: usize = 15;
    pub const RIGHT_ANKLE: usize = 16;
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Keypoint {
    pub u: f64,
    pub v: f64,
    /// Detector confidence in `[0, 1]`; zero means not visible.
    pub c: f64,
}

impl Keypoint {
    pub fn new(u: f64, v: f64, c: f64) -> Self {
        Self { u, v, c }
    }

    pub fn visible(&self) -> bool {
        self.c > 0.0
    }
}

/// A 2D human pose in COCO-17 order, pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 3]>", into = "Vec<[f64; 3]>")]
pub struct Pose2D {
    pub keypoints: [Keypoint; NUM_JOINTS],
}

impl TryFrom<Vec<[f64; 3]>> for Pose2D {
    type Error = String;

    fn try_from(raw: Vec<[f64; 3]>) -> std::result::Result<Self, String> {
        if raw.len() != NUM_JOINTS {
            return Err(format!("expected {NUM_JOINTS} joints, got {}", raw.len()));
        }
        let mut keypoints = [Keypoint::default(); NUM_JOINTS];
        for (i, [u, v, c]) in raw.into_iter().enumerate() {
            if !(u.is_finite() && v.is_finite()) {
                return Err(format!("joint {i} has non-finite coordinates"));
            }
            if !(0.0..=1.0).contains(&c) {
                return Err(format!("joint {i} confidence {c} outside [0, 1]"));
            }
            keypoints[i] = Keypoint { u, v, c };
        }
        Ok(Pose2D { keypoints })
    }
}

impl From<Pose2D> for Vec<[f64; 3]> {
    fn from(p: Pose2D) -> Self {
        p.keypoints.iter().map(|k| [k.u, k.v, k.c]).collect()
    }
}

impl Pose2D {
    pub fn new(keypoints: [Keypoint; NUM_JOINTS]) -> Self {
        Self { keypoints }
    }

    pub fn visible_count(&self) -> usize {
        self.keypoints.iter().filter(|k| k.visible()).count()
    }

    pub fn is_usable(&self) -> bool {
        self.visible_count() >= MIN_VISIBLE_JOINTS
    }

    /// Axis-aligned box around the visible joints.
    pub fn bounding_box(&self) -> Option<BoundingBox> {
        let mut vis = self.keypoints.iter().filter(|k| k.visible());
        let first = vis.next()?;
        let mut b = BoundingBox {
            x0: first.u,
            y0: first.v,
            x1: first.u,
            y1: first.v,
        };
        for k in vis {
            b.x0 = b.x0.min(k.u);
            b.y0 = b.y0.min(k.v);
            b.x1 = b.x1.max(k.u);
            b.y1 = b.y1.max(k.v);
        }
        Some(b)
    }
}

/// Ground truth attached to a record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Mid-hip location in the camera frame, meters.
    pub xyz: [f64; 3],
    /// Body yaw, radians.
    pub theta: f64,
    /// Stature, meters.
    pub height: f64,
    /// Box width, height, length, meters.
    pub dims: [f64; 3],
}

/// One line of a pose file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub pose: Pose2D,
    #[serde(rename = "K")]
    pub intrinsics: CameraIntrinsics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt: Option<GroundTruth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Parses JSON-lines pose records. Blank lines are skipped; any malformed
/// line fails the whole parse with its 1-based line number.
pub fn parse_poses<R: BufRead>(reader: R) -> Result<Vec<PoseRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PoseRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_poses(path: impl AsRef<Path>) -> Result<Vec<PoseRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_poses(BufReader::new(file))
}

pub fn write_poses(path: impl AsRef<Path>, records: &[PoseRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Camera-independent network input: normalized coordinates plus a
/// visibility mask. Invisible joints contribute exact zeros.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputVector(pub [f64; INPUT_DIM]);

impl InputVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn coordinates(&self, joint: usize) -> (f64, f64) {
        (self.0[2 * joint], self.0[2 * joint + 1])
    }

    pub fn visible(&self, joint: usize) -> bool {
        self.0[2 * NUM_JOINTS + joint] > 0.0
    }
}

pub fn normalize_pose(p: &Pose2D, k: &CameraIntrinsics) -> Result<InputVector> {
    let visible = p.visible_count();
    if visible < MIN_VISIBLE_JOINTS {
        return Err(Error::TooFewJoints {
            visible,
            required: MIN_VISIBLE_JOINTS,
        });
    }
    let mut v = [0.0; INPUT_DIM];
    for (j, kp) in p.keypoints.iter().enumerate() {
        if kp.visible() {
            let (x, y) = k.back_project(kp.u, kp.v);
            v[2 * j] = x;
            v[2 * j + 1] = y;
            v[2 * NUM_JOINTS + j] = 1.0;
        }
    }
    Ok(InputVector(v))
}

/// Mirrors a pose about the vertical image axis: `u <- width - 1 - u` and
/// left/right joint labels swapped. Invisible joints stay untouched.
pub fn horizontal_flip(p: &Pose2D, image_width: f64) -> Pose2D {
    let mut out = [Keypoint::default(); NUM_JOINTS];
    for (j, kp) in p.keypoints.iter().enumerate() {
        let mut k = *kp;
        if k.visible() {
            k.u = image_width - 1.0 - k.u;
        }
        out[COCO_FLIP[j]] = k;
    }
    Pose2D { keypoints: out }
}

/// Image width whose flip axis passes through the principal point.
pub fn mirror_width(k: &CameraIntrinsics) -> f64 {
    2.0 * k.cx() + 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BoundingBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        (self.x1 - self.x0).max(0.0)
    }

    pub fn height(&self) -> f64 {
        (self.y1 - self.y0).max(0.0)
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let ix = (self.x1.min(other.x1) - self.x0.max(other.x0)).max(0.0);
        let iy = (self.y1.min(other.y1) - self.y0.max(other.y0)).max(0.0);
        let inter = ix * iy;
        let union = self.area() + other.area() - inter;
        if union > 0.0 {
            inter / union
        } else if self == other {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub detection: usize,
    pub ground_truth: usize,
    pub iou: f64,
}

/// Greedy one-to-one matching in descending IoU order. Ties go to the lower
/// detection index, then the lower ground-truth index.
pub fn match_boxes(detections: &[BoundingBox], gts: &[BoundingBox], iou_threshold: f64) -> Result<Vec<Match>> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "IoU threshold must be in (0, 1], got {iou_threshold}"
        )));
    }
    let mut candidates = Vec::new();
    for (i, d) in detections.iter().enumerate() {
        for (j, g) in gts.iter().enumerate() {
            let iou = d.iou(g);
            if iou >= iou_threshold {
                candidates.push(Match {
                    detection: i,
                    ground_truth: j,
                    iou,
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.iou
            .total_cmp(&a.iou)
            .then(a.detection.cmp(&b.detection))
            .then(a.ground_truth.cmp(&b.ground_truth))
    });
    let mut det_used = vec![false; detections.len()];
    let mut gt_used = vec![false; gts.len()];
    let mut out = Vec::new();
    for c in candidates {
        if !det_used[c.detection] && !gt_used[c.ground_truth] {
            det_used[c.detection] = true;
            gt_used[c.ground_truth] = true;
            out.push(c);
        }
    }
    Ok(out)
}

/// Matches detected poses to ground-truth poses by keypoint boxes. Poses
/// without visible joints never match.
pub fn match_detections(poses: &[Pose2D], gts: &[Pose2D], iou_threshold: f64) -> Result<Vec<Match>> {
    // unmatched placeholders keep indices aligned
    let empty = BoundingBox::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN);
    let boxes = |ps: &[Pose2D]| -> Vec<BoundingBox> {
        ps.iter().map(|p| p.bounding_box().unwrap_or(empty)).collect()
    };
    let dets = boxes(poses);
    let truth = boxes(gts);
    Ok(match_boxes(&dets, &truth, iou_threshold)?
        .into_iter()
        .filter(|m| m.iou.is_finite())
        .collect())
}
