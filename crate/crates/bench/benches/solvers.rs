use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DVector;
use vibronic_bench::molecule;
use vibronic_core::bopes::{self, BoSurface};
use vibronic_core::fock::{self, build_fock_matrix, FockOptions, Frame};
use vibronic_core::Preset;

fn fock(c: &mut Criterion) {
    let model = molecule(Preset::Triangle, -0.6, -0.05, 0.3).model();
    let opts = FockOptions {
        cutoff: 6,
        frame: Frame::Displaced,
        max_dim: 1 << 22,
    };
    c.bench_function("triangle build M=6", |b| {
        b.iter(|| build_fock_matrix(black_box(&model), &opts).unwrap())
    });
    let op = build_fock_matrix(&model, &opts).unwrap();
    c.bench_function("triangle ground state M=6", |b| {
        b.iter(|| fock::ground_state(black_box(&op), 1e-10).unwrap())
    });
    let dumbbell = molecule(Preset::Dumbbell, 0.4, -0.1, 0.2).model();
    c.bench_function("dumbbell converge", |b| {
        b.iter(|| fock::converge_model(black_box(&dumbbell), Frame::Displaced, 1e-8, 256, 1 << 20).unwrap())
    });
}

fn surfaces(c: &mut Criterion) {
    let s = BoSurface::from_molecule(&molecule(Preset::Triangle, -0.6, -0.05, 0.3));
    let q = DVector::from_element(s.dim(), 0.3);
    c.bench_function("triangle BO energy", |b| b.iter(|| s.energy(black_box(&q)).unwrap()));
    let mut g = c.benchmark_group("minimize");
    g.sample_size(10);
    g.bench_function("triangle BO minima", |b| b.iter(|| bopes::minimize_bo(&s, 32).unwrap()));
    g.finish();
}

criterion_group!(benches, fock, surfaces);
criterion_main!(benches);
