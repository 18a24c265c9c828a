use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use oomd_core::simplex::solve_truncated_omd;
use oomd_core::{ActiveSet, ExpertId, LearningRateGrid, OmdProblem, WeightMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bench_solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_truncated_omd");
    for &k in &[16usize, 100, 512] {
        let grid = LearningRateGrid::new(400, Some(40)).unwrap();
        let m = grid.len();
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let ids: Vec<ExpertId> = (0..k as u64).map(ExpertId).collect();
        let prior = WeightMatrix::from_fn(ids, m, |_, _| rng.gen_range(0.1..1.0));
        let total = prior.total();
        let prior = WeightMatrix::new(
            prior.ids().to_vec(),
            m,
            prior.as_slice().iter().map(|w| w / total).collect(),
        )
        .unwrap();
        let cost: Vec<f64> = (0..k * m).map(|_| rng.gen_range(0.0..1.0)).collect();
        let active = ActiveSet::from_members(m, &(0..30).collect::<Vec<_>>());
        let floor = 1.0 / (k as f64 * m as f64 * 400f64.powi(3));
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            let problem = OmdProblem {
                prior: &prior,
                cost: &cost,
                active: &active,
                floor,
                eta: grid.etas(),
            };
            b.iter(|| solve_truncated_omd(black_box(&problem)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_solver);
criterion_main!(benches);
