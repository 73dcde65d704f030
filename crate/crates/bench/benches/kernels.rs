use criterion::{black_box, criterion_group, criterion_main, Criterion};

use freqlab_bench::{half_disk, half_disk_2xy};
use freqlab_core::cantor::{cantor_intervals, CantorSpec};
use freqlab_core::combinatorics::{binomial_tail, simulate_recursion, TreeParams};
use freqlab_core::frequency::{frequency_profile, FrequencyCfg};
use freqlab_core::nodal::box_counting_dimension;
use freqlab_core::solver::{Mesh, MeshOptions};
use freqlab_core::{CoefficientField, Vec2};

fn mesh_and_solve(c: &mut Criterion) {
    let d = half_disk();
    c.bench_function("mesh half-disk h=1/128", |b| b.iter(|| Mesh::generate(&d, &MeshOptions::uniform(1.0 / 128.0)).unwrap()));
    c.bench_function("dirichlet half-disk h=1/128", |b| {
        b.iter(|| freqlab_core::solver::solve_dirichlet(&d, &CoefficientField::identity(), |p| p.y, 1.0 / 128.0).unwrap())
    });
}

fn frequency(c: &mut Criterion) {
    let (d, u) = half_disk_2xy(1.0 / 128.0);
    let cfg = FrequencyCfg::default();
    c.bench_function("frequency profile 8 radii", |b| {
        b.iter(|| frequency_profile(&u, &d, Vec2::zeros(), 0.05, 0.4, 8, &cfg).unwrap())
    });
}

fn combinatorics(c: &mut Criterion) {
    c.bench_function("binomial_tail j=1000", |b| b.iter(|| binomial_tail(black_box(1000), 0.25, 0.5).unwrap()));
    let p = TreeParams::default();
    c.bench_function("simulate 60 generations 1e4 trials", |b| b.iter(|| simulate_recursion(&p, 60, 10_000, 7).unwrap()));
}

fn box_counting(c: &mut Criterion) {
    let spec = CantorSpec::new(1, 10, 1.0).unwrap();
    let pts: Vec<Vec2> = cantor_intervals(&spec, 10)
        .unwrap()
        .iter()
        .flat_map(|&(l, r)| [Vec2::new(l, 0.0), Vec2::new(r, 0.0)])
        .collect();
    c.bench_function("box counting 2^11 points", |b| b.iter(|| box_counting_dimension(&pts, 12).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = mesh_and_solve, frequency, combinatorics, box_counting
}
criterion_main!(benches);
