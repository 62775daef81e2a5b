//! Human stature model and the irreducible error of monocular localization.
//!
//! Assuming everybody has the mean height `h_mean`, a person of true height
//! `h` at true distance `d` is placed at `d * h_mean / h`, an error of
//! `d * |1 - h_mean / h|`. Averaging over a stature distribution `P(H)` gives
//! the expected task error
//!
//! ```text
//! e(d) = d * E_{h ~ P(H)} |1 - h_mean / h|
//! ```
//!
//! which is exactly linear in `d`. The expectation is evaluated with
//! fixed-node Gauss-Legendre quadrature over `+-6 sigma` of every mixture
//! component, split at the kink `h = h_mean` so each piece is smooth.

use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Nodes per smooth sub-interval.
pub const QUADRATURE_NODES: usize = 96;
const SIGMA_SPAN: f64 = 6.0;

/// One Gaussian stature component, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightComponent {
    pub mean_m: f64,
    pub std_m: f64,
    pub weight: f64,
}

/// Gaussian mixture over human stature, in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<HeightComponent>", into = "Vec<HeightComponent>")]
pub struct HeightDistribution {
    components: Vec<HeightComponent>,
}

impl TryFrom<Vec<HeightComponent>> for HeightDistribution {
    type Error = Error;

    fn try_from(components: Vec<HeightComponent>) -> Result<Self> {
        Self::new(components)
    }
}

impl From<HeightDistribution> for Vec<HeightComponent> {
    fn from(d: HeightDistribution) -> Self {
        d.components
    }
}

impl HeightDistribution {
    pub fn new(components: Vec<HeightComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidDistribution("no components".into()));
        }
        for c in &components {
            if !(c.weight > 0.0) || !c.weight.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "weights must be positive, got {}",
                    c.weight
                )));
            }
            if !(c.std_m > 0.0) || !c.std_m.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "standard deviations must be positive, got {}",
                    c.std_m
                )));
            }
            if !(c.mean_m > 0.0) || !c.mean_m.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "mean heights must be positive, got {}",
                    c.mean_m
                )));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { components })
    }

    /// Single Gaussian.
    pub fn single(mean_m: f64, std_m: f64) -> Result<Self> {
        Self::new(vec![HeightComponent {
            mean_m,
            std_m,
            weight: 1.0,
        }])
    }

    /// European adults: 1.78 m (men) and 1.65 m (women), 7 cm spread each,
    /// equal weights.
    pub fn adults() -> Self {
        Self {
            components: vec![
                HeightComponent {
                    mean_m: 1.78,
                    std_m: 0.07,
                    weight: 0.5,
                },
                HeightComponent {
                    mean_m: 1.65,
                    std_m: 0.07,
                    weight: 0.5,
                },
            ],
        }
    }

    /// Adults plus people down to 14 years old.
    ///
    /// The extra 7.9 % (men) and 5.6 % (women) variation is modeled as an
    /// independent relative spread about each mean, added in quadrature:
    /// `std = sqrt(0.07^2 + (cv * mean)^2)`. Means are left unchanged.
    pub fn adults_and_teens() -> Self {
        let inflate = |mean: f64, cv: f64| (0.07f64.powi(2) + (cv * mean).powi(2)).sqrt();
        Self {
            components: vec![
                HeightComponent {
                    mean_m: 1.78,
                    std_m: inflate(1.78, 0.079),
                    weight: 0.5,
                },
                HeightComponent {
                    mean_m: 1.65,
                    std_m: inflate(1.65, 0.056),
                    weight: 0.5,
                },
            ],
        }
    }

    pub fn components(&self) -> &[HeightComponent] {
        &self.components
    }

    /// Draws one height. Draws at or below 0.3 m are rejected and redrawn.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = self.components[self.components.len() - 1];
            for c in &self.components {
                acc += c.weight;
                if u < acc {
                    chosen = *c;
                    break;
                }
            }
            let normal = Normal::new(chosen.mean_m, chosen.std_m).expect("validated std");
            let h = normal.sample(rng);
            if h > 0.3 {
                return h;
            }
        }
    }
}

/// Named presets reachable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeightPreset {
    #[serde(rename = "adults")]
    Adults,
    #[serde(rename = "adults+teens")]
    AdultsAndTeens,
}

impl HeightPreset {
    pub fn distribution(self) -> HeightDistribution {
        match self {
            HeightPreset::Adults => HeightDistribution::adults(),
            HeightPreset::AdultsAndTeens => HeightDistribution::adults_and_teens(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HeightPreset::Adults => "adults",
            HeightPreset::AdultsAndTeens => "adults+teens",
        }
    }
}

impl FromStr for HeightPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adults" => Ok(HeightPreset::Adults),
            "adults+teens" => Ok(HeightPreset::AdultsAndTeens),
            other => Err(Error::InvalidArgument(format!(
                "unknown height preset '{other}' (expected 'adults' or 'adults+teens')"
            ))),
        }
    }
}

/// Mixture mean `sum w_i * mean_i`.
pub fn mean_height(dist: &HeightDistribution) -> f64 {
    dist.components.iter().map(|c| c.weight * c.mean_m).sum()
}

/// `E_{h ~ P(H)} |1 - h_mean / h|`, the task error per meter of distance.
pub fn relative_task_error(dist: &HeightDistribution) -> f64 {
    let h_mean = mean_height(dist);
    let rule = GaussLegendre::new(QUADRATURE_NODES);
    dist.components
        .iter()
        .map(|c| {
            let lo = (c.mean_m - SIGMA_SPAN * c.std_m).max(1e-6);
            let hi = c.mean_m + SIGMA_SPAN * c.std_m;
            let integrand = |h: f64| gaussian_pdf(h, c.mean_m, c.std_m) * (1.0 - h_mean / h).abs();
            let mass = if lo < h_mean && h_mean < hi {
                rule.integrate(lo, h_mean, integrand) + rule.integrate(h_mean, hi, integrand)
            } else {
                rule.integrate(lo, hi, integrand)
            };
            c.weight * mass
        })
        .sum()
}

/// Expected task error at ground-truth distance `d_gt` (meters).
pub fn task_error(dist: &HeightDistribution, d_gt: f64) -> f64 {
    d_gt * relative_task_error(dist)
}

/// Tabulates `(d, e(d))` for `d = 0, step, 2 step, ...` up to `d_max`
/// inclusive (within a small tolerance for accumulated rounding).
pub fn task_error_curve(dist: &HeightDistribution, d_max: f64, step: f64) -> Result<Vec<(f64, f64)>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    if !(d_max >= 0.0) || !d_max.is_finite() {
        return Err(Error::InvalidArgument(format!("d_max must be non-negative, got {d_max}")));
    }
    let slope = relative_task_error(dist);
    let n = (d_max / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| {
            let d = i as f64 * step;
            (d, d * slope)
        })
        .collect())
}

fn gaussian_pdf(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
}
