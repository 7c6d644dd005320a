use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;

use ilw_core::ensemble::{ensemble_field, log_det_Z};
use ilw_core::mtp::{psi_fundamental, Nu};
use ilw_core::pde::{Field, SplitStep};
use ilw_core::scattering::{modified_data, weyl_density};
use ilw_core::specfun::lambert_w;
use ilw_core::{build_profile, ProfileSpec};

fn special_functions(c: &mut Criterion) {
    let z = Complex64::new(-0.3, 0.2);
    c.bench_function("lambert_w/branches -3..3", |b| {
        b.iter(|| (-3..=3).map(|n| lambert_w(n, black_box(z)).unwrap()).sum::<Complex64>())
    });
}

fn scattering(c: &mut Criterion) {
    let p = build_profile(&ProfileSpec::sech2()).unwrap();
    c.bench_function("weyl_density/sech2 kappa=0.4", |b| {
        b.iter(|| weyl_density(&p, black_box(0.4), 0.5).unwrap())
    });
    c.bench_function("modified_data/N=16", |b| b.iter(|| modified_data(&p, black_box(16), 0.5).unwrap()));
}

fn determinant(c: &mut Criterion) {
    let p = build_profile(&ProfileSpec::sech2()).unwrap();
    let mut g = c.benchmark_group("ensemble");
    for n in [8, 16, 32] {
        let d = modified_data(&p, n, 0.5).unwrap();
        let z = Complex64::new(0.3, 0.5 * d.delta * d.eps);
        g.bench_function(format!("log_det_Z/N={n}/256 bits"), |b| {
            b.iter(|| log_det_Z(&d, black_box(z), 0.1, 256).unwrap())
        });
    }
    let d = modified_data(&p, 16, 0.5).unwrap();
    let xs: Vec<f64> = (0..32).map(|j| -2.0 + 0.125 * j as f64).collect();
    g.bench_function("ensemble_field/N=16/32 points", |b| {
        b.iter(|| ensemble_field(&d, black_box(&xs), 0.1, 256).unwrap())
    });
    g.finish();
}

fn split_step(c: &mut Criterion) {
    let p = build_profile(&ProfileSpec::sech2()).unwrap();
    let field = Field::from_profile(&p, 12.0, 2000, 0.05, 1.0).unwrap();
    let mut solver = SplitStep::for_field(&field);
    c.bench_function("split_step/n=2000/10 steps", |b| {
        b.iter_batched(
            || field.clone(),
            |mut f| {
                solver.advance(&mut f, 1e-4, 10).unwrap();
                f
            },
            criterion::BatchSize::SmallInput,
        )
    });
}

fn mtp(c: &mut Criterion) {
    let z = Complex64::new(0.1, 0.0);
    let mut g = c.benchmark_group("psi_fundamental");
    for (name, nu) in [("nu=-inf", Nu::NegInfinity), ("nu=-1/2", Nu::Finite(0))] {
        g.bench_function(format!("{name}/eps=0.05"), |b| {
            b.iter(|| psi_fundamental(nu, black_box(z), 0.05, 1.0).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, special_functions, scattering, determinant, split_step, mtp);
criterion_main!(benches);
