//! Distance losses and the multi-task objective.
//!
//! The distance head predicts `d` and `s = log b`; losses are on the relative
//! error `1 - d/x`, so `b` is a relative spread.

use serde::{Deserialize, Serialize};
use std::str::FromStr;

use super::network::{NetworkParams, OUTPUT_DIM};
use crate::error::Error;

/// Smallest distance the head can output, meters.
pub const MIN_DISTANCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    #[default]
    Laplace,
    L1,
    Gaussian,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Laplace => "laplace",
            LossKind::L1 => "l1",
            LossKind::Gaussian => "gaussian",
        }
    }

    /// Whether the spread head is trained.
    pub fn has_spread(self) -> bool {
        self != LossKind::L1
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "laplace" => Ok(LossKind::Laplace),
            "l1" => Ok(LossKind::L1),
            "gaussian" => Ok(LossKind::Gaussian),
            other => Err(Error::InvalidArgument(format!(
                "unknown loss '{other}', expected laplace, l1 or gaussian"
            ))),
        }
    }
}

/// Regression targets for one person.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    /// Ground-truth radial distance, meters.
    pub distance: f64,
    pub beta: f64,
    pub psi: f64,
    pub sin_alpha: f64,
    pub cos_alpha: f64,
    /// Dimensions minus the training-set mean.
    pub dims_offset: [f64; 3],
}

pub fn laplace_loss(x: f64, d: f64, b: f64) -> f64 {
    (1.0 - d / x).abs() / b + (2.0 * b).ln()
}

pub fn l1_relative_loss(x: f64, d: f64) -> f64 {
    (1.0 - d / x).abs()
}

pub fn gaussian_loss(x: f64, d: f64, sigma: f64) -> f64 {
    let r = 1.0 - d / x;
    r * r / (2.0 * sigma * sigma) + 0.5 * (sigma * sigma).ln()
}

/// `(1 - p) / (2N) * sum of squared weights`.
pub fn dropout_regularizer(params: &NetworkParams, p_drop: f64, n: usize) -> f64 {
    let sq: f64 = params.weight_matrices().map(|w| w.iter().map(|v| v * v).sum::<f64>()).sum();
    regularizer_coefficient(p_drop, n) * sq
}

pub(crate) fn regularizer_coefficient(p_drop: f64, n: usize) -> f64 {
    (1.0 - p_drop) / (2.0 * n as f64)
}

pub fn softplus(v: f64) -> f64 {
    if v > 30.0 {
        v
    } else {
        v.exp().ln_1p()
    }
}

pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

pub fn inverse_softplus(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

/// Distance head activation.
pub fn distance_from_raw(raw: f64) -> f64 {
    MIN_DISTANCE + softplus(raw)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Unweighted sum of the distance loss and L1 terms on angles, viewpoint
/// encoding and dimension offsets.
pub fn total_loss(raw: &[f64; OUTPUT_DIM], t: &Target, kind: LossKind) -> f64 {
    total_loss_and_grad(raw, t, kind).0
}

/// Loss and its gradient with respect to the raw outputs.
pub fn total_loss_and_grad(raw: &[f64; OUTPUT_DIM], t: &Target, kind: LossKind) -> (f64, [f64; OUTPUT_DIM]) {
    let mut g = [0.0; OUTPUT_DIM];
    let x = t.distance;
    let d = distance_from_raw(raw[0]);
    let dd_draw = sigmoid(raw[0]);
    let s = raw[1];
    let r = 1.0 - d / x;
    let mut loss = match kind {
        LossKind::Laplace => {
            let inv_b = (-s).exp();
            g[0] = -sign(r) / x * inv_b * dd_draw;
            g[1] = 1.0 - r.abs() * inv_b;
            r.abs() * inv_b + std::f64::consts::LN_2 + s
        }
        LossKind::L1 => {
            g[0] = -sign(r) / x * dd_draw;
            r.abs()
        }
        LossKind::Gaussian => {
            let inv_var = (-2.0 * s).exp();
            g[0] = -r / x * inv_var * dd_draw;
            g[1] = 1.0 - r * r * inv_var;
            0.5 * r * r * inv_var + s
        }
    };
    let rest = [t.beta, t.psi, t.sin_alpha, t.cos_alpha, t.dims_offset[0], t.dims_offset[1], t.dims_offset[2]];
    for (k, target) in rest.iter().enumerate() {
        let e = raw[2 + k] - target;
        loss += e.abs();
        g[2 + k] = sign(e);
    }
    (loss, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn target() -> Target {
        Target {
            distance: 12.0,
            beta: 0.1,
            psi: 1.4,
            sin_alpha: 0.6,
            cos_alpha: -0.8,
            dims_offset: [0.01, -0.05, 0.0],
        }
    }

    fn perfect_raw(t: &Target, b: f64) -> [f64; OUTPUT_DIM] {
        [
            inverse_softplus(t.distance - MIN_DISTANCE),
            b.ln(),
            t.beta,
            t.psi,
            t.sin_alpha,
            t.cos_alpha,
            t.dims_offset[0],
            t.dims_offset[1],
            t.dims_offset[2],
        ]
    }

    #[test]
    fn laplace_examples() {
        assert_abs_diff_eq!(laplace_loss(7.0, 7.0, 0.5), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(laplace_loss(10.0, 8.0, 0.2), 1.0 + 0.4f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(laplace_loss(10.0, 8.0, 0.2), 0.083_709, epsilon = 1e-6);
    }

    #[test]
    fn laplace_minimizer_over_b() {
        // golden-section search on log b
        let (x, d) = (10.0, 8.0);
        let f = |lb: f64| laplace_loss(x, d, lb.exp());
        let (mut a, mut c) = (-10.0f64, 5.0f64);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        while c - a > 1e-12 {
            let m1 = c - phi * (c - a);
            let m2 = a + phi * (c - a);
            if f(m1) < f(m2) {
                c = m2;
            } else {
                a = m1;
            }
        }
        assert_abs_diff_eq!((0.5 * (a + c)).exp(), 0.2, epsilon = 1e-6);
    }

    #[test]
    fn l1_and_gaussian_examples() {
        assert_eq!(l1_relative_loss(4.0, 4.0), 0.0);
        assert_abs_diff_eq!(gaussian_loss(3.0, 3.0, 0.3), 0.5 * 0.09f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(gaussian_loss(10.0, 8.0, 0.2), 0.5 + 0.5 * 0.04f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(gaussian_loss(10.0, 8.0, 0.2), -1.109_438, epsilon = 1e-6);
        assert_abs_diff_eq!(l1_relative_loss(10.0, 8.0), l1_relative_loss(10.0, 12.0), epsilon = 1e-15);
    }

    #[test]
    fn regularizer_examples() {
        use super::super::network::{Architecture, NetworkParams};
        let arch = Architecture { input_dim: 1, width: 1, hidden_layers: 1, residual_blocks: 0 };
        let mut p = NetworkParams::zeros(arch, 0.2).unwrap();
        assert_eq!(dropout_regularizer(&p, 0.2, 10), 0.0);
        p.hidden[0].linear.w[[0, 0]] = 3.0;
        assert_abs_diff_eq!(dropout_regularizer(&p, 0.2, 10), 0.36, epsilon = 1e-15);
        assert_eq!(dropout_regularizer(&p, 1.0, 10), 0.0);
    }

    #[test]
    fn perfect_prediction_has_zero_loss() {
        let t = target();
        let raw = perfect_raw(&t, 0.5);
        assert_abs_diff_eq!(total_loss(&raw, &t, LossKind::Laplace), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn only_distance_wrong() {
        let t = target();
        let mut raw = perfect_raw(&t, 0.3);
        raw[0] = inverse_softplus(9.0 - MIN_DISTANCE);
        let expected = laplace_loss(t.distance, 9.0, 0.3);
        assert_abs_diff_eq!(total_loss(&raw, &t, LossKind::Laplace), expected, epsilon = 1e-12);
    }

    #[test]
    fn random_case_matches_term_by_term_sum() {
        let t = target();
        let raw = [0.7, -1.1, 0.4, 1.0, 0.1, 0.2, 0.3, -0.3, 0.05];
        let d = (0.7f64.exp() + 1.0).ln() + 0.5;
        let b = (-1.1f64).exp();
        let terms = [
            laplace_loss(12.0, d, b),
            (0.4f64 - 0.1).abs(),
            (1.0f64 - 1.4).abs(),
            (0.1f64 - 0.6).abs() + (0.2f64 + 0.8).abs(),
            (0.3f64 - 0.01).abs() + (-0.3f64 + 0.05).abs() + 0.05,
        ];
        assert_abs_diff_eq!(total_loss(&raw, &t, LossKind::Laplace), terms.iter().sum::<f64>(), epsilon = 1e-12);
        let g = [l1_relative_loss(12.0, d), gaussian_loss(12.0, d, b)];
        let rest: f64 = terms[1..].iter().sum();
        assert_abs_diff_eq!(total_loss(&raw, &t, LossKind::L1), g[0] + rest, epsilon = 1e-12);
        assert_abs_diff_eq!(total_loss(&raw, &t, LossKind::Gaussian), g[1] + rest, epsilon = 1e-12);
    }

    #[test]
    fn softplus_round_trip() {
        for y in [1e-6, 0.3, 5.0, 40.0] {
            assert_abs_diff_eq!(softplus(inverse_softplus(y)), y, epsilon = 1e-9 * y.max(1.0));
        }
    }

    proptest! {
        #[test]
        fn laplace_floor(x in 1.0f64..50.0, d in 0.5f64..60.0, lb in -6.0f64..2.0) {
            prop_assume!((1.0 - d / x).abs() > 1e-9);
            let floor = 1.0 + (2.0 * (1.0 - d / x).abs()).ln();
            prop_assert!(laplace_loss(x, d, lb.exp()) >= floor - 1e-12);
            prop_assert!((laplace_loss(x, d, (1.0 - d / x).abs()) - floor).abs() < 1e-12);
        }

        #[test]
        fn raw_gradient_matches_finite_differences(
            raw in proptest::array::uniform9(-2.0f64..2.0),
            kind in prop_oneof![Just(LossKind::Laplace), Just(LossKind::L1), Just(LossKind::Gaussian)],
        ) {
            let t = target();
            let (_, g) = total_loss_and_grad(&raw, &t, kind);
            let h = 1e-6;
            for k in 0..2 {
                let mut up = raw;
                let mut down = raw;
                up[k] += h;
                down[k] -= h;
                let fd = (total_loss(&up, &t, kind) - total_loss(&down, &t, kind)) / (2.0 * h);
                // kinks of |.| are measure-zero; skip them
                let r = 1.0 - distance_from_raw(raw[0]) / t.distance;
                prop_assume!(r.abs() > 1e-4);
                prop_assert!((fd - g[k]).abs() < 1e-5 * fd.abs().max(1.0), "k={} fd={} g={}", k, fd, g[k]);
            }
        }
    }
}
