use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cryamabe_core::ode::{MassTerm, ReducedOde, SolveOptions};
use cryamabe_core::rng::SeedStream;
use cryamabe_core::singular::{calibrate_kappa, verify_pde, SampleOptions, SingularSolution};
use cryamabe_core::spectrum::{
    assemble_second_variation, bifurcation_values, mode_eigenvalues, monte_carlo_diagonal, ScanOptions,
};
use cryamabe_core::Execution;

fn strategies(c: &mut Criterion) {
    let seeds = SeedStream::new(0);
    let ode = ReducedOde::build(1, 100, MassTerm::QuarterNSquared).unwrap();
    let profile = ode.solve(&SolveOptions::default()).unwrap();
    let samples = SampleOptions::default();
    let cal = calibrate_kappa(&profile, &samples, &seeds, Execution::Parallel).unwrap();
    let sol = SingularSolution::new(profile.clone(), cal.kappa).unwrap();
    let form = assemble_second_variation(&profile, &seeds).unwrap();
    let spec = mode_eigenvalues(&form).unwrap();
    let scan = ScanOptions {
        m_max: 8,
        ..ScanOptions::default()
    };

    let mut group = c.benchmark_group("execution");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let name = format!("{exec:?}");
        group.bench_with_input(BenchmarkId::new("verify_pde", &name), &exec, |b, &e| {
            b.iter(|| verify_pde(&sol, &samples, &seeds, e).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("monte_carlo", &name), &exec, |b, &e| {
            b.iter(|| monte_carlo_diagonal(&sol, 2.0, 1, 20_000, &seeds, e))
        });
        group.bench_with_input(BenchmarkId::new("crossings", &name), &exec, |b, &e| {
            b.iter(|| bifurcation_values(&form, &spec, &scan, e).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, strategies);
criterion_main!(benches);
