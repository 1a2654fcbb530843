use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use smectic_bench::{cell_fixture, smooth_field, unit_jump};
use smectic_core::stencil::DiffOps;
use smectic_core::{discrete_energy_gradient, energy_eps, jump_cost, solve_profile, JumpSpec};

fn stencils(c: &mut Criterion) {
    let mut group = c.benchmark_group("stencil");
    for n in [128, 512] {
        let u = smooth_field(n).unwrap();
        let ops = DiffOps::new(u.grid());
        group.bench_with_input(BenchmarkId::new("dx", n), &u, |b, u| {
            b.iter(|| ops.dx(black_box(u.values()), 0.0).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("dxx", n), &u, |b, u| {
            b.iter(|| ops.dxx(black_box(u.values()), 0.0).unwrap())
        });
    }
    group.finish();
}

fn energy(c: &mut Criterion) {
    let mut group = c.benchmark_group("energy");
    for n in [128, 512] {
        let u = smooth_field(n).unwrap();
        group.bench_with_input(BenchmarkId::new("energy_eps", n), &u, |b, u| {
            b.iter(|| energy_eps(black_box(u), 0.05).unwrap())
        });
    }
    let (cp, u) = cell_fixture(0.05, 16).unwrap();
    group.bench_function("cell_gradient_eps0.05", |b| {
        b.iter(|| discrete_energy_gradient(black_box(&u), cp.eps, &cp).unwrap())
    });
    group.finish();
}

fn profile(c: &mut Criterion) {
    let j = unit_jump();
    c.bench_function("profile/solve_unit", |b| {
        b.iter(|| solve_profile(black_box(&j), 30.0, 1e-3).unwrap())
    });
}

fn cost(c: &mut Criterion) {
    let jumps: Vec<JumpSpec> = (1..=64)
        .map(|k| JumpSpec::new(-0.05 * k as f64, 0.03 * k as f64).unwrap())
        .collect();
    c.bench_function("jump_cost/64", |b| {
        b.iter(|| jumps.iter().map(|j| jump_cost(black_box(j)).unwrap().cost).sum::<f64>())
    });
}

criterion_group!(benches, stencils, energy, profile, cost);
criterion_main!(benches);
