use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use soret_bench::{isolated_params, smooth_state};
use soret_core::evolution::{evolve, rhs, StepControl};
use soret_core::spectral::{eigenvalues_transcendental, fd_spectrum, CouplingMatrix};
use soret_core::stationary::{driven_example, theta_from_potential};
use soret_core::{fluxes, Grid1D, PotentialSpec};

fn currents(c: &mut Criterion) {
    let params = isolated_params();
    let mut g = c.benchmark_group("fluxes");
    for n in [101, 401, 1601] {
        let s = smooth_state(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| fluxes(black_box(s), &params))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("rhs");
    for n in [101, 401, 1601] {
        let s = smooth_state(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| rhs(black_box(s), &params, 0.0))
        });
    }
    g.finish();
}

fn evolution(c: &mut Criterion) {
    let params = isolated_params();
    let s = smooth_state(41);
    let ctl = StepControl::until(0.05);
    c.bench_function("evolve_n41_t0.05", |b| {
        b.iter(|| evolve(black_box(&s), &params, &ctl).unwrap())
    });
}

fn stationary(c: &mut Criterion) {
    let grid = Grid1D::new(401).unwrap();
    c.bench_function("driven_example_n401", |b| {
        b.iter(|| driven_example(1.0, black_box(&grid)).unwrap())
    });
    let grid = Grid1D::new(101).unwrap();
    let v = PotentialSpec::Tabulated(grid.sample(|x| x + 0.5 * x * x));
    c.bench_function("theta_from_potential_n101", |b| {
        b.iter(|| theta_from_potential(black_box(&v), 1.0, 4.0, &grid).unwrap())
    });
}

fn spectra(c: &mut Criterion) {
    let m = CouplingMatrix::physical(1.0, 0.5, 1.0).unwrap();
    c.bench_function("transcendental_20_roots", |b| {
        b.iter(|| eigenvalues_transcendental(black_box(&m), 20, 3000.0).unwrap())
    });
    let mut g = c.benchmark_group("fd_spectrum");
    g.sample_size(10);
    for n in [50, 100, 200] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| fd_spectrum(n, &m).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, currents, evolution, stationary, spectra);
criterion_main!(benches);
