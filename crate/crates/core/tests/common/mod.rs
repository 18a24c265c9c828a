//! Test-only oracles. Nothing here calls into the solver under test.
#![allow(dead_code)]

use oomd_core::{ActiveSet, ExpertId, WeightMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct RandomInstance {
    pub prior: WeightMatrix,
    pub cost: Vec<f64>,
    pub active: ActiveSet,
    pub floor: f64,
    pub eta: Vec<f64>,
}

pub fn ids(n: usize) -> Vec<ExpertId> {
    (0..n as u64).map(ExpertId).collect()
}

/// Random well-conditioned instance with K, M <= 3.
pub fn random_instance(seed: u64) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(1..=3);
    let m = rng.gen_range(1..=3);
    let prior: Vec<f64> = (0..k * m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let cost: Vec<f64> = (0..k * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let eta: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..4.0)).collect();
    let mut mask: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.75)).collect();
    if !mask.iter().any(|&a| a) {
        let c = rng.gen_range(0..m);
        mask[c] = true;
    }
    let floor = rng.gen_range(0.005..0.02);
    RandomInstance {
        prior: WeightMatrix::new(ids(k), m, prior).unwrap(),
        cost,
        active: ActiveSet::from_mask(mask),
        floor,
        eta,
    }
}

/// Euclidean projection of `v` onto `{y >= 0, sum y = radius}`.
fn project_simplex(v: &[f64], radius: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - radius) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Projected gradient descent on `<c, w> + D_psi(w, prior)` over the truncated
/// simplex, with exact Euclidean feasibility projection and slowly
/// diminishing steps.
pub fn projected_gradient_oracle(inst: &RandomInstance, iterations: usize) -> Vec<f64> {
    let m = inst.prior.cols();
    let n = inst.prior.len();
    let prior = inst.prior.as_slice();
    let act: Vec<usize> = (0..n).filter(|&k| inst.active.contains(k % m)).collect();
    let radius = 1.0 - inst.floor * n as f64;

    let eta_min = act
        .iter()
        .map(|&k| inst.eta[k % m])
        .fold(f64::INFINITY, f64::min);
    let lipschitz = 1.0 / (eta_min * inst.floor);

    let mut x: Vec<f64> = {
        let start = radius / act.len() as f64;
        act.iter().map(|_| inst.floor + start).collect()
    };
    for it in 0..iterations {
        let step = 1.0 / (lipschitz * (1.0 + it as f64 * 1e-5));
        let shifted: Vec<f64> = act
            .iter()
            .zip(&x)
            .map(|(&k, &xv)| {
                let e = inst.eta[k % m];
                let grad = inst.cost[k] + (xv / prior[k]).ln() / e;
                xv - step * grad - inst.floor
            })
            .collect();
        let y = project_simplex(&shifted, radius);
        let mut moved: f64 = 0.0;
        for (xv, yv) in x.iter_mut().zip(y) {
            moved = moved.max((*xv - yv - inst.floor).abs());
            *xv = yv + inst.floor;
        }
        if moved == 0.0 {
            break;
        }
    }
    let mut out = vec![inst.floor; n];
    for (&k, &xv) in act.iter().zip(&x) {
        out[k] = xv;
    }
    out
}
