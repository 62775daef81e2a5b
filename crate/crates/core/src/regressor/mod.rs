//! Keypoints-to-3D regressor: network, losses, training, uncertainty and
//! weight files.

pub mod loss;
pub mod network;
pub mod train;
pub mod uncertainty;
pub mod weights;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    cartesian_from_spherical, spherical_from_cartesian, viewpoint_from_orientation, CartesianLocation,
    SphericalLocation,
};
use crate::keypoints::{normalize_pose, InputVector, PoseRecord, INPUT_DIM, NUM_JOINTS};

pub use loss::{
    dropout_regularizer, gaussian_loss, l1_relative_loss, laplace_loss, total_loss, LossKind, Target, MIN_DISTANCE,
};
pub use network::{Architecture, Mode, NetworkParams, OUTPUT_DIM};
pub use train::{train, EpochStats, TrainingConfig};
pub use uncertainty::McConfig;
pub use weights::{load_weights, save_weights, FORMAT_VERSION};

/// A trained network plus what is needed to decode its outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: NetworkParams,
    /// Mean (width, height, length) of the training set; the network
    /// regresses offsets from it.
    pub dim_mean: [f64; 3],
    pub loss: LossKind,
    pub scaler: InputScaler,
}

impl Model {
    /// Standardized network inputs, one row each.
    pub fn input_matrix(&self, inputs: &[InputVector]) -> Array2<f64> {
        self.scaler.transform(inputs)
    }
}

/// Per-feature standardization fitted on the training inputs and applied
/// before the first layer. Features that never vary are only centered.
#[derive(Debug, Clone, PartialEq)]
pub struct InputScaler {
    pub mean: Array1<f64>,
    /// Multiplier, `1 / std`.
    pub scale: Array1<f64>,
}

fn mask_column(dim: usize, c: usize) -> Option<usize> {
    (dim == INPUT_DIM && c < 2 * NUM_JOINTS).then_some(2 * NUM_JOINTS + c / 2)
}

impl InputScaler {
    pub fn identity(dim: usize) -> Self {
        Self { mean: Array1::zeros(dim), scale: Array1::ones(dim) }
    }

    /// Fits per-column mean and 1/std. Coordinate columns of a full pose
    /// vector are fitted on visible joints only.
    pub fn fit(x: &Array2<f64>) -> Self {
        let dim = x.ncols();
        let mut mean = Array1::zeros(dim);
        let mut scale = Array1::ones(dim);
        for c in 0..dim {
            let mask = mask_column(dim, c);
            let vals: Vec<f64> = x
                .rows()
                .into_iter()
                .filter(|r| mask.is_none_or(|m| r[m] > 0.5))
                .map(|r| r[c])
                .collect();
            if vals.is_empty() {
                continue;
            }
            let n = vals.len() as f64;
            let mu = vals.iter().sum::<f64>() / n;
            let sd = (vals.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n).sqrt();
            mean[c] = mu;
            if sd > 1e-6 {
                scale[c] = 1.0 / sd;
            }
        }
        Self { mean, scale }
    }

    /// Standardizes in place; missing joints land on the column mean (zero).
    pub fn apply(&self, x: &mut Array2<f64>) {
        let dim = x.ncols();
        for mut row in x.rows_mut() {
            let missing: Vec<bool> = (0..NUM_JOINTS)
                .map(|j| dim == INPUT_DIM && row[2 * NUM_JOINTS + j] <= 0.5)
                .collect();
            row -= &self.mean;
            row *= &self.scale;
            for (j, _) in missing.iter().enumerate().filter(|(_, m)| **m) {
                row[2 * j] = 0.0;
                row[2 * j + 1] = 0.0;
            }
        }
    }

    pub fn transform(&self, inputs: &[InputVector]) -> Array2<f64> {
        let mut x = input_matrix(inputs);
        self.apply(&mut x);
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationEstimate {
    /// Radial distance, meters.
    pub d: f64,
    /// Relative Laplace spread; absent for models trained without a spread.
    pub b: Option<f64>,
    pub beta: f64,
    pub psi: f64,
    pub theta: f64,
    pub dims: [f64; 3],
    /// Combined MC-dropout uncertainty, meters.
    pub sigma: Option<f64>,
}

impl LocalizationEstimate {
    /// Spread in meters, `b * d`.
    pub fn spread_m(&self) -> Option<f64> {
        self.b.map(|b| b * self.d)
    }

    pub fn spherical(&self) -> SphericalLocation {
        SphericalLocation { d: self.d, beta: self.beta, psi: self.psi }
    }

    pub fn xyz(&self) -> CartesianLocation {
        cartesian_from_spherical(&self.spherical())
    }
}

/// Raw (unstandardized) inputs, one row each.
pub fn input_matrix(inputs: &[InputVector]) -> Array2<f64> {
    let mut m = Array2::zeros((inputs.len(), crate::keypoints::INPUT_DIM));
    for (mut row, x) in m.rows_mut().into_iter().zip(inputs) {
        row.assign(&ndarray::ArrayView1::from(x.as_slice()));
    }
    m
}

/// Inputs and regression targets of labeled records.
pub fn prepare_dataset(records: &[PoseRecord], dim_mean: [f64; 3]) -> Result<(Vec<InputVector>, Vec<Target>)> {
    let mut inputs = Vec::with_capacity(records.len());
    let mut targets = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let gt = r
            .gt
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("record {i} has no ground truth")))?;
        inputs.push(normalize_pose(&r.pose, &r.intrinsics)?);
        let s = spherical_from_cartesian(&CartesianLocation::from_array(gt.xyz))?;
        let alpha = viewpoint_from_orientation(gt.theta, s.beta);
        targets.push(Target {
            distance: s.d,
            beta: s.beta,
            psi: s.psi,
            sin_alpha: alpha.sin(),
            cos_alpha: alpha.cos(),
            dims_offset: [gt.dims[0] - dim_mean[0], gt.dims[1] - dim_mean[1], gt.dims[2] - dim_mean[2]],
        });
    }
    Ok((inputs, targets))
}

/// Mean ground-truth dimensions.
pub fn mean_dimensions(records: &[PoseRecord]) -> Result<[f64; 3]> {
    let mut acc = [0.0; 3];
    let mut n = 0usize;
    for r in records {
        if let Some(gt) = &r.gt {
            for k in 0..3 {
                acc[k] += gt.dims[k];
            }
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::InvalidArgument("no labeled records".into()));
    }
    Ok(acc.map(|a| a / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaler_standardizes_training_columns() {
        let x = Array2::from_shape_fn((40, 3), |(i, j)| if j == 2 { 1.0 } else { (i * (j + 1)) as f64 * 0.01 });
        let s = InputScaler::fit(&x);
        let mut y = x.clone();
        s.apply(&mut y);
        for j in 0..2 {
            let col = y.column(j);
            let mean = col.mean().unwrap();
            let var = col.mapv(|v| (v - mean) * (v - mean)).mean().unwrap();
            assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
        }
        // constant feature is centered, not blown up
        assert_eq!(s.scale[2], 1.0);
        assert!(y.column(2).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn missing_joints_sit_at_the_visible_mean() {
        let mut rows = Vec::new();
        for i in 0..10 {
            let mut v = [0.0; INPUT_DIM];
            // joint 0 visible in even rows only, at x = 1 + i
            if i % 2 == 0 {
                v[0] = 1.0 + i as f64;
                v[1] = 0.5;
                v[2 * NUM_JOINTS] = 1.0;
            }
            rows.push(InputVector(v));
        }
        let x = input_matrix(&rows);
        let s = InputScaler::fit(&x);
        assert_eq!(s.mean[0], 5.0);
        let y = s.transform(&rows);
        for i in (1..10).step_by(2) {
            assert_eq!((y[[i, 0]], y[[i, 1]]), (0.0, 0.0));
        }
        assert!(y[[0, 0]] < 0.0 && y[[8, 0]] > 0.0);
    }
}
