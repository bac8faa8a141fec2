use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use linproc_bench::{ar1, ma2};
use linproc_core::lsd::{EquationVariant, LsdGrid, LsdSolution, SolverConfig, StieltjesSolver};
use linproc_core::matrix::{gram, simulate_x, MatrixShape};
use linproc_core::process::spectral_density;
use linproc_core::spectra::symmetric_eigenvalues;
use linproc_core::Complex64;

fn simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate_x");
    for &(p, n) in &[(128, 128), (256, 512)] {
        g.bench_with_input(BenchmarkId::new("ar1", format!("{p}x{n}")), &(p, n), |b, &(p, n)| {
            let shape = MatrixShape::new(p, n).unwrap();
            let spec = ar1(7);
            b.iter(|| simulate_x(black_box(&spec), shape).unwrap());
        });
    }
    g.finish();
}

fn eigensolver(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigenvalues");
    g.sample_size(10);
    for &p in &[128, 256] {
        let s = gram(&simulate_x(&ma2(3), MatrixShape::new(p, p).unwrap()).unwrap());
        g.bench_with_input(BenchmarkId::from_parameter(p), &s, |b, s| {
            b.iter(|| symmetric_eigenvalues(black_box(s)).unwrap());
        });
    }
    g.finish();
}

fn stieltjes(c: &mut Criterion) {
    let f = spectral_density(&ma2(0)).unwrap();
    let solver = StieltjesSolver::new(&f, 0.5, EquationVariant::default(), SolverConfig::default()).unwrap();
    c.bench_function("stieltjes/near_axis", |b| {
        b.iter(|| solver.solve(black_box(Complex64::new(1.3, 1e-6))).unwrap());
    });
    c.bench_function("stieltjes/off_axis", |b| {
        b.iter(|| solver.solve(black_box(Complex64::new(1.3, 0.5))).unwrap());
    });
}

fn lsd(c: &mut Criterion) {
    let f = spectral_density(&ma2(0)).unwrap();
    let mut g = c.benchmark_group("lsd");
    g.sample_size(10);
    for &points in &[300, 1200] {
        let grid = LsdGrid { points, x_max: None };
        g.bench_with_input(BenchmarkId::from_parameter(points), &grid, |b, grid| {
            b.iter(|| LsdSolution::compute(&f, 0.5, EquationVariant::default(), &SolverConfig::default(), grid).unwrap());
        });
    }
    g.finish();
}

criterion_group!(benches, simulation, eigensolver, stieltjes, lsd);
criterion_main!(benches);
