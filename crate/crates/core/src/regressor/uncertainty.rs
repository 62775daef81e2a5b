//! Deterministic prediction and MC-dropout uncertainty.

use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::distance_from_raw;
use super::network::Mode;
use super::{LocalizationEstimate, Model};
use crate::error::{Error, Result};
use crate::geometry::{decode_angle, wrap_angle};
use crate::keypoints::InputVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    /// Stochastic forward passes.
    pub passes: usize,
    /// Laplace samples drawn per pass.
    pub samples: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { passes: 50, samples: 100 }
    }
}

/// Draws from `Laplace(mu, scale)` by inverting its CDF.
pub fn sample_laplace<R: Rng + ?Sized>(mu: f64, scale: f64, rng: &mut R) -> f64 {
    // u in (-1/2, 1/2]; 1 - 2|u| in [0, 1), so flip to (0, 1]
    let u: f64 = 0.5 - rng.random::<f64>();
    let tail = 1.0 - 2.0 * u.abs();
    mu - scale * u.signum() * tail.max(f64::MIN_POSITIVE).ln()
}

impl Model {
    /// Decodes one row of raw outputs.
    pub fn decode(&self, raw: ArrayView1<f64>) -> LocalizationEstimate {
        let beta = raw[2];
        let alpha = decode_angle(raw[4], raw[5]);
        LocalizationEstimate {
            d: distance_from_raw(raw[0]),
            b: self.loss.has_spread().then(|| raw[1].exp()),
            beta,
            psi: raw[3],
            theta: wrap_angle(alpha - beta),
            dims: [
                self.dim_mean[0] + raw[6],
                self.dim_mean[1] + raw[7],
                self.dim_mean[2] + raw[8],
            ],
            sigma: None,
        }
    }

    /// Single deterministic pass per input.
    pub fn predict_batch(&self, inputs: &[InputVector]) -> Result<Vec<LocalizationEstimate>> {
        if inputs.is_empty() {
            return Ok(Vec::new());
        }
        let out = self.params.forward_eval(self.input_matrix(inputs).view())?;
        Ok(out.rows().into_iter().map(|r| self.decode(r)).collect())
    }

    pub fn predict(&self, input: &InputVector) -> Result<LocalizationEstimate> {
        Ok(self.predict_batch(std::slice::from_ref(input))?.remove(0))
    }

    /// MC-dropout inference. Pass `t` draws its dropout masks and Laplace
    /// samples from stream `t` of a ChaCha generator keyed by `seed`, so
    /// results do not depend on the order passes run in. Every row gets `T*I`
    /// distance samples; `sigma` is their population standard deviation.
    /// Every other output is the mean over passes: `d` and `b` after
    /// decoding, angles and dimensions on the raw head.
    pub fn predict_mc_batch(&self, inputs: &[InputVector], mc: McConfig, seed: u64) -> Result<Vec<LocalizationEstimate>> {
        if mc.passes == 0 || mc.samples == 0 {
            return Err(Error::InvalidArgument("MC inference needs at least one pass and one sample".into()));
        }
        if inputs.is_empty() {
            return Ok(Vec::new());
        }
        let x = self.input_matrix(inputs);
        let n = inputs.len();
        let mut raw_sum: Option<Array2<f64>> = None;
        let mut d_sum = vec![0.0; n];
        let mut b_sum = vec![0.0; n];
        // all T*I samples per row, for a two-pass variance
        let mut draws: Array2<f64> = Array2::zeros((n, mc.passes * mc.samples));
        for t in 0..mc.passes {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let out = self.params.forward(x.view(), Mode::McDropout, &mut rng)?;
            for (i, row) in out.rows().into_iter().enumerate() {
                let d = distance_from_raw(row[0]);
                d_sum[i] += d;
                let b = if self.loss.has_spread() { row[1].exp() } else { 0.0 };
                b_sum[i] += b;
                for k in 0..mc.samples {
                    draws[[i, t * mc.samples + k]] = sample_laplace(d, b * d, &mut rng);
                }
            }
            match raw_sum.as_mut() {
                Some(acc) => *acc += &out,
                None => raw_sum = Some(out),
            }
        }
        let passes = mc.passes as f64;
        let raw_mean = raw_sum.expect("at least one pass") / passes;
        let mut estimates = Vec::with_capacity(n);
        for (i, raw) in raw_mean.rows().into_iter().enumerate() {
            let mut e = self.decode(raw);
            e.d = d_sum[i] / passes;
            e.b = e.b.map(|_| b_sum[i] / passes);
            let row = draws.row(i);
            let mean = row.mean().expect("nonempty");
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / row.len() as f64;
            e.sigma = Some(var.sqrt());
            estimates.push(e);
        }
        Ok(estimates)
    }

    pub fn predict_mc(&self, input: &InputVector, mc: McConfig, seed: u64) -> Result<LocalizationEstimate> {
        Ok(self.predict_mc_batch(std::slice::from_ref(input), mc, seed)?.remove(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regressor::loss::{inverse_softplus, LossKind, MIN_DISTANCE};
    use crate::regressor::network::{Architecture, NetworkParams};
    use crate::regressor::InputScaler;
    use approx::assert_abs_diff_eq;
    use rand_chacha::ChaCha8Rng;

    fn head_model(raw: [f64; 9], p_drop: f64) -> Model {
        let arch = Architecture { width: 4, hidden_layers: 1, residual_blocks: 0, ..Architecture::default() };
        let mut params = NetworkParams::zeros(arch, p_drop).unwrap();
        for (k, v) in raw.iter().enumerate() {
            params.output.b[k] = *v;
        }
        Model { params, dim_mean: [0.6, 1.7, 0.5], loss: LossKind::Laplace, scaler: InputScaler::identity(51) }
    }

    fn input() -> InputVector {
        InputVector([0.1; 51])
    }

    #[test]
    fn decodes_head() {
        let m = head_model([inverse_softplus(9.5), 0.0, 0.0, 1.5, 0.6, 0.8, 0.0, 0.1, 0.0], 0.0);
        let e = m.predict(&input()).unwrap();
        assert_abs_diff_eq!(e.d, 10.0, epsilon = 1e-12);
        assert_eq!(e.b, Some(1.0));
        assert_abs_diff_eq!(e.theta, 0.6435, epsilon = 1e-4);
        assert_abs_diff_eq!(e.theta, 0.6f64.atan2(0.8), epsilon = 1e-15);
        assert_abs_diff_eq!(e.dims[1], 1.8, epsilon = 1e-15);
        assert!(e.sigma.is_none());
    }

    #[test]
    fn distance_floor() {
        let m = head_model([-50.0, 0.0, 0.0, 1.5, 0.0, 1.0, 0.0, 0.0, 0.0], 0.0);
        assert!(m.predict(&input()).unwrap().d >= MIN_DISTANCE);
    }

    #[test]
    fn single_sample_has_zero_sigma() {
        let m = head_model([inverse_softplus(9.5), -1.0, 0.0, 1.5, 0.0, 1.0, 0.0, 0.0, 0.0], 0.2);
        let e = m.predict_mc(&input(), McConfig { passes: 1, samples: 1 }, 0).unwrap();
        assert_eq!(e.sigma, Some(0.0));
    }

    #[test]
    fn mc_without_dropout_matches_eval_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let arch = Architecture { width: 8, hidden_layers: 3, residual_blocks: 1, ..Architecture::default() };
        let params = NetworkParams::new(arch, 0.0, &mut rng).unwrap();
        let m = Model { params, dim_mean: [0.6, 1.7, 0.5], loss: LossKind::Laplace, scaler: InputScaler::identity(51) };
        let x = input();
        let det = m.predict(&x).unwrap();
        for t in [1, 7] {
            let mc = m.predict_mc(&x, McConfig { passes: t, samples: 3 }, 5).unwrap();
            assert_abs_diff_eq!(mc.d, det.d, epsilon = 1e-12);
        }
    }

    #[test]
    fn laplace_variance_converges() {
        let b: f64 = 0.5;
        let m = head_model([inverse_softplus(1.0 - MIN_DISTANCE), b.ln(), 0.0, 1.5, 0.0, 1.0, 0.0, 0.0, 0.0], 0.0);
        let e = m.predict_mc(&input(), McConfig { passes: 50, samples: 100 }, 3).unwrap();
        assert_abs_diff_eq!(e.d, 1.0, epsilon = 1e-12);
        // d = 1 so the metric spread equals b
        let var = e.sigma.unwrap().powi(2);
        assert!((var / (2.0 * b * b) - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn mc_is_seeded() {
        let m = head_model([inverse_softplus(9.5), -1.0, 0.0, 1.5, 0.0, 1.0, 0.0, 0.0, 0.0], 0.3);
        let a = m.predict_mc(&input(), McConfig::default(), 4).unwrap();
        let b = m.predict_mc(&input(), McConfig::default(), 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn laplace_sampler_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_laplace(2.0, 0.7, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let mad = xs.iter().map(|x| (x - 2.0).abs()).sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 0.01);
        assert!((mad - 0.7).abs() < 0.01);
        let inside = xs.iter().filter(|x| (*x - 2.0).abs() <= 0.7).count() as f64 / n as f64;
        assert!((inside - (1.0 - (-1.0f64).exp())).abs() < 0.005);
    }
}
