//! Sequential vs. rayon execution of the data-parallel loops.
//!
//! Build without default features to confirm the sequential fallback:
//! `cargo bench -p som-atlas-core --no-default-features`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use som_atlas::analysis::{kmeans_codebook_with, KMeansParams};
use som_atlas::som::{train_with, TrainingSchedule};
use som_atlas::{AttributeSpec, Execution, HexGrid, NormalizedTable, SomModel};

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn table(rows: usize, dim: usize, seed: u64) -> NormalizedTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = (0..dim)
        .map(|i| AttributeSpec::new(format!("a{i}"), i, 0.0, 1.0).unwrap())
        .collect();
    let values = (0..rows * dim).map(|_| rng.random::<f64>()).collect();
    NormalizedTable::from_normalized(schema, values).unwrap()
}

fn bmu_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("find_bmu");
    let x: Vec<f64> = vec![0.5; 27];
    for side in [20usize, 60, 120] {
        let model = SomModel::init_codebook(HexGrid::new(side, side).unwrap(), 27, 1).unwrap();
        for exec in MODES {
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), side), &model, |b, m| {
                b.iter(|| m.find_bmu_with(black_box(&x), None, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn quantization_error(c: &mut Criterion) {
    let mut group = c.benchmark_group("quantization_error");
    let t = table(2000, 27, 3);
    let model = SomModel::init_codebook(HexGrid::new(20, 20).unwrap(), 27, 1).unwrap();
    for exec in MODES {
        group.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| model.quantization_error_with(black_box(&t), exec).unwrap())
        });
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let mut group = c.benchmark_group("train_2_epochs");
    group.sample_size(10);
    let t = table(500, 27, 5);
    for side in [20usize, 60] {
        let grid = HexGrid::new(side, side).unwrap();
        let schedule = TrainingSchedule {
            epochs: 2,
            ..TrainingSchedule::for_grid(&grid)
        };
        for exec in MODES {
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), side), &grid, |b, g| {
                b.iter(|| train_with(&t, *g, &schedule, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn clustering(c: &mut Criterion) {
    let mut group = c.benchmark_group("kmeans_codebook");
    group.sample_size(20);
    let model = SomModel::init_codebook(HexGrid::new(40, 40).unwrap(), 27, 9).unwrap();
    let params = KMeansParams::new(8);
    for exec in MODES {
        group.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| kmeans_codebook_with(&model, &params, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bmu_search, quantization_error, training, clustering);
criterion_main!(benches);
