//! F-formations on the ground plane: o-space construction, the three
//! formation conditions, pairwise voting under distance uncertainty, and
//! social-distancing verdicts.
//!
//! A person at `(x, z)` with yaw `theta` faces `(cos theta, sin theta)`. For a
//! candidate radius `r` their o-space guess is `mu = (x + r cos theta,
//! z + r sin theta)`. Two people form an F-formation when
//!
//! - (a) they stand at most `d_max` apart,
//! - (b) nobody else stands strictly inside their o-space, and
//! - (c) their guesses `mu0`, `mu1` are at most `r_max` apart.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::keypoints::GroundTruth;
use crate::regressor::uncertainty::sample_laplace;
use crate::regressor::LocalizationEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundPose {
    pub x: f64,
    pub z: f64,
    pub theta: f64,
    /// Laplace spread of the radial distance, meters; 0 means exact.
    pub b: f64,
}

impl GroundPose {
    pub fn new(x: f64, z: f64, theta: f64, b: f64) -> Result<Self> {
        if !(x.is_finite() && z.is_finite() && theta.is_finite()) || !(b >= 0.0) || !b.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid ground pose ({x}, {z}, {theta}, b = {b})")));
        }
        Ok(Self { x, z, theta, b })
    }

    pub fn exact(x: f64, z: f64, theta: f64) -> Self {
        Self { x, z, theta, b: 0.0 }
    }

    /// Drops height; `b` is the estimate's spread in meters (0 if absent).
    pub fn from_estimate(e: &LocalizationEstimate) -> Self {
        let p = e.xyz();
        Self { x: p.x, z: p.z, theta: e.theta, b: e.spread_m().unwrap_or(0.0) }
    }

    pub fn from_ground_truth(gt: &GroundTruth) -> Self {
        Self::exact(gt.xyz[0], gt.xyz[2], gt.theta)
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.z)
    }

    /// Candidate o-space center at radius `r`.
    pub fn candidate_center(&self, r: f64) -> (f64, f64) {
        (self.x + r * self.theta.cos(), self.z + r * self.theta.sin())
    }

    /// Same bearing from the camera, radial distance `rho`.
    fn at_radius(&self, rho: f64) -> Self {
        let norm = self.x.hypot(self.z);
        if norm == 0.0 {
            return *self;
        }
        let k = rho / norm;
        Self { x: self.x * k, z: self.z * k, ..*self }
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OSpace {
    pub center: (f64, f64),
    pub radius: f64,
    pub candidate_radius: f64,
}

/// O-space of a pair: centered between the two candidate centers, reaching
/// the nearer person.
pub fn o_space(p0: &GroundPose, p1: &GroundPose, r: f64) -> OSpace {
    let m0 = p0.candidate_center(r);
    let m1 = p1.candidate_center(r);
    let center = (0.5 * (m0.0 + m1.0), 0.5 * (m0.1 + m1.1));
    let radius = dist(center, p0.position()).min(dist(center, p1.position()));
    OSpace { center, radius, candidate_radius: r }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SocialMode {
    /// `r_max = r_o`.
    #[default]
    Interaction,
    /// `r_max = 2 r_o`.
    Distancing,
}

impl SocialMode {
    pub fn r_max(self, r_o: f64) -> f64 {
        match self {
            SocialMode::Interaction => r_o,
            SocialMode::Distancing => 2.0 * r_o,
        }
    }
}

impl FromStr for SocialMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interaction" => Ok(SocialMode::Interaction),
            "distancing" => Ok(SocialMode::Distancing),
            other => Err(Error::InvalidArgument(format!(
                "unknown mode '{other}', expected interaction or distancing"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SocialConfig {
    pub d_max: f64,
    /// Intimate, personal and social o-space radii.
    pub radii: Vec<f64>,
    pub mode: SocialMode,
    pub n_samples: usize,
    /// Fraction of samples that must vote for a formation.
    pub threshold: f64,
    pub seed: u64,
    /// Condition (c); turning it off keeps only proximity and intrusion.
    pub use_orientation: bool,
}

impl Default for SocialConfig {
    fn default() -> Self {
        Self {
            d_max: 2.0,
            radii: vec![0.3, 0.5, 1.0],
            mode: SocialMode::Interaction,
            n_samples: 100,
            threshold: 0.25,
            seed: 0,
            use_orientation: true,
        }
    }
}

impl SocialConfig {
    pub fn distancing() -> Self {
        Self { mode: SocialMode::Distancing, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() || self.radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::InvalidArgument("candidate radii must be positive".into()));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::InvalidArgument(format!("threshold must be in (0, 1], got {}", self.threshold)));
        }
        if !(self.d_max >= 0.0) || self.n_samples == 0 {
            return Err(Error::InvalidArgument("d_max must be non-negative and n_samples positive".into()));
        }
        Ok(())
    }
}

/// Outcome of each formation condition for one pair and radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormationCheck {
    pub o_space: OSpace,
    pub proximity: bool,
    pub no_intrusion: bool,
    pub facing: bool,
}

impl FormationCheck {
    pub fn passed(&self) -> bool {
        self.proximity && self.no_intrusion && self.facing
    }
}

/// Conditions (a)-(c) for one candidate radius. `r_max = None` drops (c).
pub fn f_formation_check(
    p0: &GroundPose,
    p1: &GroundPose,
    others: &[GroundPose],
    r: f64,
    d_max: f64,
    r_max: Option<f64>,
) -> FormationCheck {
    let os = o_space(p0, p1, r);
    let proximity = dist(p0.position(), p1.position()) <= d_max;
    let no_intrusion = others.iter().all(|o| dist(o.position(), os.center) >= os.radius);
    let facing = match r_max {
        Some(r_max) => dist(p0.candidate_center(r), p1.candidate_center(r)) <= r_max,
        None => true,
    };
    FormationCheck { o_space: os, proximity, no_intrusion, facing }
}

/// Whether any candidate radius certifies a formation.
fn any_radius(p0: &GroundPose, p1: &GroundPose, others: &[GroundPose], cfg: &SocialConfig) -> bool {
    cfg.radii.iter().any(|&r| {
        let r_max = cfg.use_orientation.then(|| cfg.mode.r_max(o_space(p0, p1, r).radius));
        f_formation_check(p0, p1, others, r, cfg.d_max, r_max).passed()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub i: usize,
    pub j: usize,
    pub vote_fraction: f64,
    pub interacting: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialReport {
    pub pairs: Vec<PairVerdict>,
    /// People in at least one positive pair, ascending.
    pub at_risk: Vec<usize>,
}

impl SocialReport {
    /// Per-person flags.
    pub fn flags(&self, n: usize) -> Vec<bool> {
        let mut f = vec![false; n];
        for &i in &self.at_risk {
            f[i] = true;
        }
        f
    }

    pub fn positive_pairs(&self) -> impl Iterator<Item = &PairVerdict> {
        self.pairs.iter().filter(|p| p.interacting)
    }
}

/// Vote fraction for pair `(i, j)`, `i < j`. Each sample moves both people
/// along their camera rays by Laplace noise of their spread; everyone else
/// stays at the estimate. The generator is stream `(i, j)` of `seed`, so the
/// result does not depend on which pairs are evaluated or in which order.
pub fn pair_vote(people: &[GroundPose], i: usize, j: usize, cfg: &SocialConfig) -> f64 {
    let (i, j) = (i.min(j), i.max(j));
    let others: Vec<GroundPose> =
        people.iter().enumerate().filter(|&(k, _)| k != i && k != j).map(|(_, p)| *p).collect();
    let (p0, p1) = (people[i], people[j]);
    if p0.b == 0.0 && p1.b == 0.0 {
        return if any_radius(&p0, &p1, &others, cfg) { 1.0 } else { 0.0 };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(((i as u64) << 32) | j as u64);
    let rho0 = p0.x.hypot(p0.z);
    let rho1 = p1.x.hypot(p1.z);
    let mut votes = 0usize;
    for _ in 0..cfg.n_samples {
        let s0 = p0.at_radius(sample_laplace(rho0, p0.b, &mut rng).max(0.0));
        let s1 = p1.at_radius(sample_laplace(rho1, p1.b, &mut rng).max(0.0));
        if any_radius(&s0, &s1, &others, cfg) {
            votes += 1;
        }
    }
    votes as f64 / cfg.n_samples as f64
}

/// All-vs-all pair verdicts under `cfg.mode`.
pub fn analyze(people: &[GroundPose], cfg: &SocialConfig) -> Result<SocialReport> {
    cfg.validate()?;
    let n = people.len();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    let mut flagged = vec![false; n];
    for i in 0..n {
        for j in i + 1..n {
            let vote_fraction = pair_vote(people, i, j, cfg);
            let interacting = vote_fraction >= cfg.threshold;
            if interacting {
                flagged[i] = true;
                flagged[j] = true;
            }
            pairs.push(PairVerdict { i, j, vote_fraction, interacting });
        }
    }
    let at_risk = (0..n).filter(|&k| flagged[k]).collect();
    Ok(SocialReport { pairs, at_risk })
}

pub fn detect_interactions(people: &[GroundPose], cfg: &SocialConfig) -> Result<SocialReport> {
    analyze(people, &SocialConfig { mode: SocialMode::Interaction, ..cfg.clone() })
}

pub fn social_distancing_check(people: &[GroundPose], cfg: &SocialConfig) -> Result<SocialReport> {
    analyze(people, &SocialConfig { mode: SocialMode::Distancing, ..cfg.clone() })
}

/// Per-person distancing labels from exact ground truth.
pub fn augment_labels(gt_people: &[GroundPose], cfg: &SocialConfig) -> Result<Vec<bool>> {
    let exact: Vec<GroundPose> = gt_people.iter().map(|p| GroundPose { b: 0.0, ..*p }).collect();
    Ok(social_distancing_check(&exact, cfg)?.flags(exact.len()))
}
