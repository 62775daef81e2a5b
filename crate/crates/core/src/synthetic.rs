//! Synthetic ground truth: upright pedestrians with mixture-distributed
//! stature, an anthropometric COCO-17 skeleton, and pinhole rendering to 2D
//! keypoints.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, CartesianLocation};
use crate::height_model::HeightDistribution;
use crate::keypoints::{self, GroundTruth, Keypoint, Pose2D, PoseRecord, COCO_FLIP, NUM_JOINTS};

/// Box width and length of every synthetic pedestrian, meters.
pub const PERSON_WIDTH: f64 = 0.6;
pub const PERSON_LENGTH: f64 = 0.5;

/// Gap between shoulder and hip joints as a fraction of stature.
pub const SHOULDER_HIP_FRACTION: f64 = 0.288;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Person3D {
    /// Mid-hip.
    pub location: CartesianLocation,
    pub theta: f64,
    pub height_m: f64,
    /// Width, height, length.
    pub dims: [f64; 3],
}

impl Person3D {
    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            xyz: self.location.to_array(),
            theta: self.theta,
            height: self.height_m,
            dims: self.dims,
        }
    }

    pub fn from_ground_truth(gt: &GroundTruth) -> Self {
        Self {
            location: CartesianLocation::from_array(gt.xyz),
            theta: gt.theta,
            height_m: gt.height,
            dims: gt.dims,
        }
    }
}

/// Joint placement as fractions of stature.
///
/// `vertical[j]` is the height of joint `j` above the ground; `lateral[j]` is
/// its distance from the body's vertical axis, toward the person's own left
/// for left joints and right for right joints. Default vertical fractions
/// follow Drillis' segment proportions (head 0.936, shoulder 0.818,
/// hip 0.530, knee 0.285, ankle 0.039), with the nose a little under the eye
/// line and hanging arms (elbow 0.630, wrist 0.485).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonModel {
    vertical: [f64; NUM_JOINTS],
    lateral: [f64; NUM_JOINTS],
}

impl Default for SkeletonModel {
    fn default() -> Self {
        let vertical = [
            0.920, // nose
            0.936, 0.936, // eyes
            0.936, 0.936, // ears
            0.818, 0.818, // shoulders
            0.630, 0.630, // elbows
            0.485, 0.485, // wrists
            0.530, 0.530, // hips
            0.285, 0.285, // knees
            0.039, 0.039, // ankles
        ];
        let lateral = [
            0.0, //
            0.018, 0.018, //
            0.045, 0.045, //
            0.129, 0.129, //
            0.150, 0.150, //
            0.140, 0.140, //
            0.055, 0.055, //
            0.055, 0.055, //
            0.055, 0.055,
        ];
        Self { vertical, lateral }
    }
}

impl SkeletonModel {
    pub fn new(vertical: [f64; NUM_JOINTS], lateral: [f64; NUM_JOINTS]) -> Result<Self> {
        for j in 0..NUM_JOINTS {
            if !(vertical[j] > 0.0 && vertical[j] < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "vertical fraction of joint {j} must lie in (0, 1), got {}",
                    vertical[j]
                )));
            }
            if !(lateral[j] >= 0.0 && lateral[j] < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "lateral fraction of joint {j} must lie in [0, 1), got {}",
                    lateral[j]
                )));
            }
            let m = COCO_FLIP[j];
            if vertical[j] != vertical[m] || lateral[j] != lateral[m] {
                return Err(Error::InvalidArgument(format!(
                    "joints {j} and {m} must be mirror-symmetric"
                )));
            }
        }
        let gap = vertical[keypoints::joint::LEFT_SHOULDER] - vertical[keypoints::joint::LEFT_HIP];
        if (gap - SHOULDER_HIP_FRACTION).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "shoulder-hip fraction must be {SHOULDER_HIP_FRACTION}, got {gap}"
            )));
        }
        Ok(Self { vertical, lateral })
    }

    pub fn vertical(&self) -> &[f64; NUM_JOINTS] {
        &self.vertical
    }

    pub fn lateral(&self) -> &[f64; NUM_JOINTS] {
        &self.lateral
    }

    /// Height of the mid-hip above the ground, as a fraction of stature.
    pub fn hip_fraction(&self) -> f64 {
        0.5 * (self.vertical[keypoints::joint::LEFT_HIP] + self.vertical[keypoints::joint::RIGHT_HIP])
    }
}

/// Which side of the body a joint is on: +1 left, -1 right, 0 midline.
fn side(j: usize) -> f64 {
    match COCO_FLIP[j].cmp(&j) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Less => -1.0,
        std::cmp::Ordering::Equal => 0.0,
    }
}

/// Places the 17 joints of an upright person. The skeleton lies in the
/// vertical plane through the mid-hip that is perpendicular to the facing
/// direction `(cos theta, sin theta)`; the person's left is
/// `(-sin theta, 0, cos theta)`.
pub fn skeleton_from_person(p: &Person3D, model: &SkeletonModel) -> [CartesianLocation; NUM_JOINTS] {
    let h = p.height_m;
    let hip = model.hip_fraction();
    let (s, c) = p.theta.sin_cos();
    let left = (-s, c);
    let mut out = [CartesianLocation::default(); NUM_JOINTS];
    for (j, joint) in out.iter_mut().enumerate() {
        let up = (model.vertical[j] - hip) * h;
        let lat = side(j) * model.lateral[j] * h;
        *joint = CartesianLocation {
            x: p.location.x + lat * left.0,
            y: p.location.y - up,
            z: p.location.z + lat * left.1,
        };
    }
    out
}

/// Camera plus the slab of space people are placed in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frustum {
    pub intrinsics: CameraIntrinsics,
    pub image_width: f64,
    pub image_height: f64,
    /// Depth range of mid-hips, meters.
    pub z_min: f64,
    pub z_max: f64,
    /// Fraction of the horizontal field of view people are placed in.
    pub lateral_fraction: f64,
    pub ground: GroundPlacement,
}

/// Where each person's feet rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GroundPlacement {
    /// One flat ground plane at `y` (the camera height above the ground).
    Plane { y: f64 },
    /// Every person stands on their own level ground, chosen so the mid-hip
    /// falls uniformly in the central `fraction` of the vertical field of
    /// view. The image position of the body then says nothing about depth,
    /// as with a moving camera or sloped terrain.
    PerPerson { fraction: f64 },
}

impl Default for Frustum {
    /// 1242x375 image, 720 px focal, principal point at the image center,
    /// per-person ground planes.
    fn default() -> Self {
        Self {
            intrinsics: CameraIntrinsics::new(720.0, 720.0, 620.5, 187.0).expect("valid"),
            image_width: 1242.0,
            image_height: 375.0,
            z_min: 2.0,
            z_max: 40.0,
            lateral_fraction: 0.9,
            ground: GroundPlacement::PerPerson { fraction: 0.9 },
        }
    }
}

impl Frustum {
    pub fn validate(&self) -> Result<()> {
        if !(self.z_min > 0.0) {
            return Err(Error::InvalidRegion(format!(
                "region must lie in front of the camera (z_min = {})",
                self.z_min
            )));
        }
        if !(self.z_max > self.z_min) {
            return Err(Error::InvalidRegion(format!(
                "empty depth range [{}, {}]",
                self.z_min, self.z_max
            )));
        }
        if !(self.lateral_fraction > 0.0 && self.lateral_fraction <= 1.0) {
            return Err(Error::InvalidRegion(format!(
                "lateral fraction must be in (0, 1], got {}",
                self.lateral_fraction
            )));
        }
        if !(self.image_width > 0.0 && self.image_height > 0.0) {
            return Err(Error::InvalidRegion("image size must be positive".into()));
        }
        match self.ground {
            GroundPlacement::Plane { y } if !y.is_finite() => {
                Err(Error::InvalidRegion(format!("ground plane at y = {y}")))
            }
            GroundPlacement::PerPerson { fraction } if !(fraction >= 0.0 && fraction <= 1.0) => Err(
                Error::InvalidRegion(format!("vertical fraction must be in [0, 1], got {fraction}")),
            ),
            _ => Ok(()),
        }
    }

    /// Horizontal extent `[x_lo, x_hi]` at depth `z`.
    pub fn lateral_bounds(&self, z: f64) -> (f64, f64) {
        let k = &self.intrinsics;
        let lo = -k.cx() / k.fx() * z * self.lateral_fraction;
        let hi = (self.image_width - 1.0 - k.cx()) / k.fx() * z * self.lateral_fraction;
        (lo, hi)
    }

    /// Vertical extent `[y_lo, y_hi]` of mid-hips at depth `z` under
    /// per-person placement.
    pub fn vertical_bounds(&self, z: f64, fraction: f64) -> (f64, f64) {
        let k = &self.intrinsics;
        let lo = -k.cy() / k.fy() * z * fraction;
        let hi = (self.image_height - 1.0 - k.cy()) / k.fy() * z * fraction;
        (lo, hi)
    }

    pub fn contains_pixel(&self, u: f64, v: f64) -> bool {
        (0.0..=self.image_width - 1.0).contains(&u) && (0.0..=self.image_height - 1.0).contains(&v)
    }
}

/// Samples one upright person: stature from `dist`, depth uniform in
/// `[z_min, z_max]`, lateral position uniform across the field of view at
/// that depth, feet on the ground (see [`GroundPlacement`]), yaw uniform in
/// `(-pi, pi]`.
pub fn sample_person<R: Rng + ?Sized>(
    dist: &HeightDistribution,
    region: &Frustum,
    model: &SkeletonModel,
    rng: &mut R,
) -> Result<Person3D> {
    region.validate()?;
    let height_m = dist.sample(rng);
    let z = region.z_min + (region.z_max - region.z_min) * rng.random::<f64>();
    let (x_lo, x_hi) = region.lateral_bounds(z);
    let x = x_lo + (x_hi - x_lo) * rng.random::<f64>();
    let y = match region.ground {
        GroundPlacement::Plane { y } => y - model.hip_fraction() * height_m,
        GroundPlacement::PerPerson { fraction } => {
            let (lo, hi) = region.vertical_bounds(z, fraction);
            lo + (hi - lo) * rng.random::<f64>()
        }
    };
    let theta = std::f64::consts::PI - 2.0 * std::f64::consts::PI * rng.random::<f64>();
    Ok(Person3D {
        location: CartesianLocation::new(x, y, z),
        theta,
        height_m,
        dims: [PERSON_WIDTH, height_m, PERSON_LENGTH],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub people: Vec<Person3D>,
    pub frustum: Frustum,
    pub seed: u64,
}

/// Projects one person's skeleton, adding i.i.d. Gaussian pixel noise.
/// Joints behind the camera or outside the image are marked invisible and
/// stored as `(0, 0, 0)`.
pub fn render_person<R: Rng + ?Sized>(
    person: &Person3D,
    frustum: &Frustum,
    model: &SkeletonModel,
    noise: Option<&Normal<f64>>,
    rng: &mut R,
) -> Pose2D {
    let joints = skeleton_from_person(person, model);
    let mut kps = [Keypoint::default(); NUM_JOINTS];
    for (kp, joint) in kps.iter_mut().zip(joints.iter()) {
        let Ok((mut u, mut v)) = frustum.intrinsics.project(joint) else {
            continue;
        };
        if let Some(n) = noise {
            u += n.sample(rng);
            v += n.sample(rng);
        }
        if frustum.contains_pixel(u, v) {
            *kp = Keypoint::new(u, v, 1.0);
        }
    }
    Pose2D::new(kps)
}

pub fn render_scene<R: Rng + ?Sized>(
    scene: &Scene,
    model: &SkeletonModel,
    pixel_noise_std: f64,
    rng: &mut R,
) -> Result<Vec<(Pose2D, Person3D)>> {
    let noise = pixel_noise(pixel_noise_std)?;
    Ok(scene
        .people
        .iter()
        .map(|p| (render_person(p, &scene.frustum, model, noise.as_ref(), rng), *p))
        .collect())
}

fn pixel_noise(std: f64) -> Result<Option<Normal<f64>>> {
    if !(std >= 0.0) || !std.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "pixel noise must be a non-negative number, got {std}"
        )));
    }
    Ok(if std > 0.0 {
        Some(Normal::new(0.0, std).expect("checked"))
    } else {
        None
    })
}

/// Everything that shapes a synthetic dataset besides its size and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub frustum: Frustum,
    pub heights: HeightDistribution,
    pub skeleton: SkeletonModel,
    pub pixel_noise_std: f64,
    pub people_per_scene: usize,
    /// Attempts to place a person with enough visible joints before giving up.
    pub max_attempts: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            frustum: Frustum::default(),
            heights: HeightDistribution::adults(),
            skeleton: SkeletonModel::default(),
            pixel_noise_std: 0.0,
            people_per_scene: 1,
            max_attempts: 1000,
        }
    }
}

/// Generates `n` labeled records, `people_per_scene` per image. Every person
/// is redrawn until at least three of its joints are visible.
pub fn generate_records(n: usize, config: &SceneConfig, seed: u64) -> Result<Vec<PoseRecord>> {
    if n == 0 {
        return Err(Error::InvalidArgument("dataset size must be positive".into()));
    }
    if config.people_per_scene == 0 {
        return Err(Error::InvalidArgument("people_per_scene must be positive".into()));
    }
    config.frustum.validate()?;
    let noise = pixel_noise(config.pixel_noise_std)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let scene = (i / config.people_per_scene) as u64;
        let mut attempts = 0;
        let (pose, person) = loop {
            attempts += 1;
            let person = sample_person(&config.heights, &config.frustum, &config.skeleton, &mut rng)?;
            let pose = render_person(&person, &config.frustum, &config.skeleton, noise.as_ref(), &mut rng);
            if pose.is_usable() {
                break (pose, person);
            }
            if attempts >= config.max_attempts {
                return Err(Error::InvalidRegion(format!(
                    "no visible person after {attempts} attempts"
                )));
            }
        };
        out.push(PoseRecord {
            pose,
            intrinsics: config.frustum.intrinsics,
            gt: Some(person.ground_truth()),
            scene: Some(scene),
            seed: Some(seed),
        });
    }
    Ok(out)
}

/// Generates and writes a JSON-lines dataset.
pub fn generate_dataset(n: usize, config: &SceneConfig, seed: u64, path: impl AsRef<Path>) -> Result<Vec<PoseRecord>> {
    let records = generate_records(n, config, seed)?;
    keypoints::write_poses(path, &records)?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::height_model::{mean_height, HeightDistribution};
    use crate::keypoints::joint;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn person(x: f64, z: f64, theta: f64, h: f64) -> Person3D {
        let model = SkeletonModel::default();
        Person3D {
            location: CartesianLocation::new(x, 1.65 - model.hip_fraction() * h, z),
            theta,
            height_m: h,
            dims: [PERSON_WIDTH, h, PERSON_LENGTH],
        }
    }

    #[test]
    fn default_skeleton_is_valid() {
        let m = SkeletonModel::default();
        let again = SkeletonModel::new(*m.vertical(), *m.lateral()).unwrap();
        assert_eq!(again, m);
        let mut bad = *m.vertical();
        bad[joint::LEFT_SHOULDER] = 0.83;
        bad[joint::RIGHT_SHOULDER] = 0.83;
        assert!(SkeletonModel::new(bad, *m.lateral()).is_err());
        let mut asym = *m.lateral();
        asym[joint::LEFT_EAR] = 0.05;
        assert!(SkeletonModel::new(*m.vertical(), asym).is_err());
    }

    #[test]
    fn shoulder_hip_gap() {
        let p = person(0.0, 10.0, 0.3, 1.715);
        let j = skeleton_from_person(&p, &SkeletonModel::default());
        let gap = j[joint::LEFT_HIP].y - j[joint::LEFT_SHOULDER].y;
        assert_abs_diff_eq!(gap, 0.288 * 1.715, epsilon = 1e-12);
        assert_abs_diff_eq!(gap, 0.493_92, epsilon = 1e-9);
    }

    #[test]
    fn mid_hip_is_anchored() {
        let p = person(1.3, 12.0, 2.1, 1.8);
        let j = skeleton_from_person(&p, &SkeletonModel::default());
        let l = j[joint::LEFT_HIP];
        let r = j[joint::RIGHT_HIP];
        assert_abs_diff_eq!(0.5 * (l.x + r.x), p.location.x, epsilon = 1e-12);
        assert_abs_diff_eq!(0.5 * (l.y + r.y), p.location.y, epsilon = 1e-12);
        assert_abs_diff_eq!(0.5 * (l.z + r.z), p.location.z, epsilon = 1e-12);
    }

    #[test]
    fn turning_around_swaps_sides() {
        // Facing the camera (theta = -pi/2) the person's left is at +x.
        let model = SkeletonModel::default();
        let front = skeleton_from_person(&person(0.0, 10.0, -PI / 2.0, 1.7), &model);
        let back = skeleton_from_person(&person(0.0, 10.0, PI / 2.0, 1.7), &model);
        for (l, r) in [(joint::LEFT_SHOULDER, joint::RIGHT_SHOULDER), (joint::LEFT_HIP, joint::RIGHT_HIP)] {
            assert!(front[l].x > 0.0 && front[r].x < 0.0);
            assert_abs_diff_eq!(front[l].x, back[r].x, epsilon = 1e-12);
            assert_abs_diff_eq!(front[r].x, back[l].x, epsilon = 1e-12);
        }
        // theta = 0 vs pi mirrors the lateral (depth) offsets instead
        let a = skeleton_from_person(&person(0.0, 10.0, 0.0, 1.7), &model);
        let b = skeleton_from_person(&person(0.0, 10.0, PI, 1.7), &model);
        assert_abs_diff_eq!(a[joint::LEFT_SHOULDER].z, b[joint::RIGHT_SHOULDER].z, epsilon = 1e-12);
        assert!(a[joint::LEFT_SHOULDER].z > 10.0);
    }

    #[test]
    fn sampling_degenerate_heights_and_determinism() {
        let dist = HeightDistribution::single(1.715, 1e-12).unwrap();
        let region = Frustum { ground: GroundPlacement::Plane { y: 1.65 }, ..Frustum::default() };
        let model = SkeletonModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = sample_person(&dist, &region, &model, &mut rng).unwrap();
            assert_abs_diff_eq!(p.height_m, 1.715, epsilon = 1e-9);
            assert!(p.location.z >= region.z_min && p.location.z <= region.z_max);
            assert!(p.theta > -PI && p.theta <= PI);
            // feet on the ground
            assert_abs_diff_eq!(p.location.y + model.hip_fraction() * p.height_m, 1.65, epsilon = 1e-12);
        }
        let a = sample_person(&dist, &region, &model, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = sample_person(&dist, &region, &model, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn per_person_ground_spreads_mid_hips_over_the_view() {
        let region = Frustum::default();
        let model = SkeletonModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let k = region.intrinsics;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..2000 {
            let p = sample_person(&HeightDistribution::adults(), &region, &model, &mut rng).unwrap();
            let (_, v) = k.project(&p.location).unwrap();
            assert!(v >= k.cy() - 0.9 * k.cy() - 1e-9 && v <= k.cy() + 0.9 * (374.0 - k.cy()) + 1e-9);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(lo < 40.0 && hi > 330.0, "{lo} {hi}");
    }

    #[test]
    fn empty_region_rejected() {
        let dist = HeightDistribution::adults();
        let model = SkeletonModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bad = Frustum { z_min: 10.0, z_max: 10.0, ..Frustum::default() };
        assert!(sample_person(&dist, &bad, &model, &mut rng).is_err());
        let behind = Frustum { z_min: -1.0, ..Frustum::default() };
        assert!(sample_person(&dist, &behind, &model, &mut rng).is_err());
    }

    #[test]
    fn sample_mean_height_matches_mixture() {
        let dist = HeightDistribution::adults();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean = (0..n).map(|_| dist.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - mean_height(&dist)).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn noiseless_render_back_projects_onto_skeleton() {
        let frustum = Frustum::default();
        let model = SkeletonModel::default();
        let p = person(1.0, 15.0, 0.7, 1.75);
        let scene = Scene { people: vec![p], frustum, seed: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rendered = render_scene(&scene, &model, 0.0, &mut rng).unwrap();
        let joints = skeleton_from_person(&p, &model);
        let pose = rendered[0].0;
        assert_eq!(pose.visible_count(), NUM_JOINTS);
        for (kp, j) in pose.keypoints.iter().zip(joints.iter()) {
            let (xn, yn) = frustum.intrinsics.back_project(kp.u, kp.v);
            assert_abs_diff_eq!(xn * j.z, j.x, epsilon = 1e-9);
            assert_abs_diff_eq!(yn * j.z, j.y, epsilon = 1e-9);
        }
    }

    #[test]
    fn image_height_halves_with_double_distance() {
        let frustum = Frustum { image_height: 4000.0, intrinsics: CameraIntrinsics::new(720.0, 720.0, 620.5, 2000.0).unwrap(), ..Frustum::default() };
        let model = SkeletonModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let near = render_person(&person(0.0, 8.0, -PI / 2.0, 1.7), &frustum, &model, None, &mut rng);
        let far = render_person(&person(0.0, 16.0, -PI / 2.0, 1.7), &frustum, &model, None, &mut rng);
        let span = |p: &Pose2D| p.keypoints[joint::LEFT_ANKLE].v - p.keypoints[joint::LEFT_EYE].v;
        // facing the camera: every joint sits at the same depth
        assert_abs_diff_eq!(span(&near) / span(&far), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn pixel_noise_has_requested_spread() {
        let frustum = Frustum { image_width: 1e6, image_height: 1e6, intrinsics: CameraIntrinsics::new(720.0, 720.0, 5e5, 5e5).unwrap(), ..Frustum::default() };
        let model = SkeletonModel::default();
        let p = person(0.0, 10.0, 0.4, 1.7);
        let clean = render_person(&p, &frustum, &model, None, &mut ChaCha8Rng::seed_from_u64(0));
        let noise = Normal::new(0.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut residuals = Vec::new();
        while residuals.len() < 10_000 {
            let noisy = render_person(&p, &frustum, &model, Some(&noise), &mut rng);
            for (a, b) in noisy.keypoints.iter().zip(clean.keypoints.iter()) {
                residuals.push(a.u - b.u);
                residuals.push(a.v - b.v);
            }
        }
        let n = residuals.len() as f64;
        let mean = residuals.iter().sum::<f64>() / n;
        let std = (residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((std - 2.0).abs() < 0.05, "std {std}");
    }

    #[test]
    fn generated_records_are_deterministic_and_in_frame() {
        let cfg = SceneConfig { pixel_noise_std: 1.0, people_per_scene: 3, ..SceneConfig::default() };
        let a = generate_records(50, &cfg, 7).unwrap();
        let b = generate_records(50, &cfg, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        assert_eq!(a[5].scene, Some(1));
        for r in &a {
            assert!(r.pose.is_usable());
            for k in r.pose.keypoints.iter().filter(|k| k.visible()) {
                assert!(cfg.frustum.contains_pixel(k.u, k.v));
            }
        }
        assert!(generate_records(0, &cfg, 7).is_err());
    }
}
