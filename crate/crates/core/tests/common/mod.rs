#![allow(dead_code)]

use ndarray::Array2;
use pedloc::regressor::loss::{LossKind, Target};
use pedloc::regressor::network::{Architecture, NetworkParams};
use pedloc::regressor::train::batch_objective;
use pedloc::social::GroundPose;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub fn random_target<R: Rng>(rng: &mut R) -> Target {
    let alpha: f64 = rng.random_range(-PI..PI);
    Target {
        distance: rng.random_range(2.0..40.0),
        beta: rng.random_range(-0.6..0.6),
        psi: rng.random_range(1.3..1.8),
        sin_alpha: alpha.sin(),
        cos_alpha: alpha.cos(),
        dims_offset: [rng.random_range(-0.1..0.1), rng.random_range(-0.2..0.2), rng.random_range(-0.1..0.1)],
    }
}

pub const GRAD_FLOOR: f64 = 1e-4;

/// Largest relative gap between backpropagated gradients and central finite
/// differences of the full objective (data + regularizer) over every
/// trainable parameter. Dropout masks are pinned by reseeding the generator
/// before each evaluation. Gradients below `GRAD_FLOOR` are compared on an
/// absolute scale: pre-BN biases have an exactly zero gradient, and there the
/// finite difference is pure rounding noise of order eps·|f|/h.
pub fn gradient_check(seed: u64, h: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hidden_layers = rng.random_range(1..=5);
    let arch = Architecture {
        input_dim: rng.random_range(2..=6),
        width: rng.random_range(3..=7),
        hidden_layers,
        residual_blocks: rng.random_range(0..=(hidden_layers - 1) / 2),
    };
    let p_drop = if rng.random::<bool>() { 0.0 } else { 0.3 };
    let mut params = NetworkParams::new(arch, p_drop, &mut rng).unwrap();
    // move BN away from the identity so its parameters matter
    for layer in &mut params.hidden {
        layer.gamma.mapv_inplace(|_| rng.random_range(0.5..1.5));
        layer.beta.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    let n = rng.random_range(3..=6);
    let x = Array2::from_shape_fn((n, arch.input_dim), |_| rng.random_range(-1.0..1.0));
    let targets: Vec<Target> = (0..n).map(|_| random_target(&mut rng)).collect();
    let t: Vec<&Target> = targets.iter().collect();
    let loss = [LossKind::Laplace, LossKind::L1, LossKind::Gaussian][rng.random_range(0..3)];
    let reg = rng.random::<bool>().then_some(0.01);
    let mask_seed: u64 = rng.random();

    let objective = |p: &NetworkParams| {
        let mut r = ChaCha8Rng::seed_from_u64(mask_seed);
        let (d, g, _, _) = batch_objective(p, &x, &t, loss, reg, &mut r).unwrap();
        d + g
    };
    let mut r = ChaCha8Rng::seed_from_u64(mask_seed);
    let (_, _, grads, _) = batch_objective(&params, &x, &t, loss, reg, &mut r).unwrap();
    let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();

    let mut worst: f64 = 0.0;
    let sizes: Vec<usize> = params.trainable_mut().iter().map(|s| s.len()).collect();
    for (k, &len) in sizes.iter().enumerate() {
        for i in 0..len {
            let orig = params.trainable_mut()[k][i];
            params.trainable_mut()[k][i] = orig + h;
            let up = objective(&params);
            params.trainable_mut()[k][i] = orig - h;
            let down = objective(&params);
            params.trainable_mut()[k][i] = orig;
            let fd = (up - down) / (2.0 * h);
            let a = analytic[k][i];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(GRAD_FLOOR);
            worst = worst.max(rel);
        }
    }
    worst
}

/// Independent F-formation enumerator written from the textual definition:
/// for each candidate radius, build both guesses, the midpoint and the
/// radius to the nearer person, then test proximity, intrusion by any third
/// person and (optionally) mutual facing.
pub fn brute_force_pair(
    people: &[(f64, f64, f64)],
    i: usize,
    j: usize,
    radii: &[f64],
    d_max: f64,
    r_max_factor: Option<f64>,
) -> bool {
    let (xi, zi, ti) = people[i];
    let (xj, zj, tj) = people[j];
    let gap = ((xi - xj).powi(2) + (zi - zj).powi(2)).sqrt();
    if gap > d_max {
        return false;
    }
    for &r in radii {
        let gi = (xi + r * ti.cos(), zi + r * ti.sin());
        let gj = (xj + r * tj.cos(), zj + r * tj.sin());
        let c = ((gi.0 + gj.0) / 2.0, (gi.1 + gj.1) / 2.0);
        let ri = ((c.0 - xi).powi(2) + (c.1 - zi).powi(2)).sqrt();
        let rj = ((c.0 - xj).powi(2) + (c.1 - zj).powi(2)).sqrt();
        let ro = if ri < rj { ri } else { rj };
        let mut intruded = false;
        for (k, &(xk, zk, _)) in people.iter().enumerate() {
            if k == i || k == j {
                continue;
            }
            if ((xk - c.0).powi(2) + (zk - c.1).powi(2)).sqrt() < ro {
                intruded = true;
            }
        }
        if intruded {
            continue;
        }
        let facing = match r_max_factor {
            None => true,
            Some(f) => ((gi.0 - gj.0).powi(2) + (gi.1 - gj.1).powi(2)).sqrt() <= f * ro,
        };
        if facing {
            return true;
        }
    }
    false
}

/// A random scene of up to `max_people` people in front of the camera,
/// some of them arranged around shared o-spaces.
pub fn random_social_scene<R: Rng>(rng: &mut R, max_people: usize) -> Vec<GroundPose> {
    social_scene(rng, max_people, 0.6)
}

/// Like [`random_social_scene`], with each new slot starting a group with
/// probability `group_p`.
pub fn social_scene<R: Rng>(rng: &mut R, max_people: usize, group_p: f64) -> Vec<GroundPose> {
    let n = rng.random_range(2..=max_people);
    let mut people = Vec::with_capacity(n);
    let cx = rng.random_range(-4.0..4.0);
    let cz = rng.random_range(6.0..20.0);
    while people.len() < n {
        if rng.random::<f64>() < group_p && n - people.len() >= 2 {
            // a small group facing a common center
            let k = rng.random_range(2..=3.min(n - people.len()));
            let gx = cx + rng.random_range(-3.0..3.0);
            let gz = cz + rng.random_range(-3.0..3.0);
            let r = [0.3, 0.5, 1.0][rng.random_range(0..3)] * rng.random_range(0.8..1.2);
            let phase: f64 = rng.random_range(-PI..PI);
            for m in 0..k {
                let a = phase + 2.0 * PI * m as f64 / k as f64 + rng.random_range(-0.3..0.3);
                let x = gx + r * a.cos();
                let z = gz + r * a.sin();
                let theta = pedloc::geometry::wrap_angle(a + PI + rng.random_range(-0.3..0.3));
                people.push(GroundPose::exact(x, z, theta));
            }
        } else {
            people.push(GroundPose::exact(
                cx + rng.random_range(-3.0..3.0),
                cz + rng.random_range(-3.0..3.0),
                rng.random_range(-PI..PI),
            ));
        }
    }
    people
}

/// Moves every person along their camera ray by Laplace noise of scale
/// `rel * d` and reports that spread alongside.
pub fn perturb_radially<R: Rng>(people: &[GroundPose], rel: f64, rng: &mut R) -> Vec<GroundPose> {
    people
        .iter()
        .map(|p| {
            let d = p.x.hypot(p.z);
            let noisy = pedloc::regressor::uncertainty::sample_laplace(d, rel * d, rng).max(0.1);
            let k = noisy / d;
            GroundPose { x: p.x * k, z: p.z * k, theta: p.theta, b: rel * noisy }
        })
        .collect()
}
