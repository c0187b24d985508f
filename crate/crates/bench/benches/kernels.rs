use std::hint::black_box;

use bose_genfun_bench::{cube_kernel, two_pair_kernel};
use bose_genfun_core::fockoracle::{build_bogoliubov_generator, expm_action, mgf_oracle, FockSpace};
use bose_genfun_core::genfun::{log_mgf, log_mgf_closed};
use bose_genfun_core::linalg::c64;
use bose_genfun_core::observable::{solve_f, NodeKernels};
use bose_genfun_core::{CMat, KernelForm, ObservableKernel, QuadratureSpec, SolveMethod, SolveOptions};
use criterion::{criterion_group, criterion_main, Criterion};

fn genfun(c: &mut Criterion) {
    let k = cube_kernel(10);
    let quad = QuadratureSpec::default();
    let lambda = 0.5 * k.lambda0();
    c.bench_function("log_mgf quadrature m=10", |b| b.iter(|| log_mgf(&k, black_box(lambda), &quad).unwrap()));
    c.bench_function("log_mgf closed m=10", |b| b.iter(|| log_mgf_closed(&k, black_box(lambda)).unwrap()));
}

fn observable(c: &mut Criterion) {
    let k = cube_kernel(1);
    let o = ObservableKernel::random(k.lattice(), 1, 4).unwrap();
    for form in [KernelForm::Conjugate, KernelForm::Printed] {
        c.bench_function(&format!("node kernels {form:?} m=1"), |b| {
            b.iter(|| NodeKernels::build(&k, &o, black_box(0.3), form).unwrap())
        });
    }
    let opts = SolveOptions::default();
    c.bench_function("neumann solve m=1", |b| {
        b.iter(|| solve_f(&k, &o, black_box(0.3), 1.0, SolveMethod::Neumann, &opts).unwrap())
    });
}

fn fock(c: &mut Criterion) {
    let k = two_pair_kernel();
    let nus = k.nu_by_pair();
    let one = FockSpace::build(1, 40).unwrap();
    c.bench_function("mgf oracle one pair n_max=40", |b| {
        b.iter(|| mgf_oracle(&one, &nus[..1], &CMat::identity(2, 2), black_box(0.1)).unwrap())
    });
    let two = FockSpace::build(2, 10).unwrap();
    let gen = build_bogoliubov_generator(&two, &[-0.25, -0.15]).unwrap();
    let vac = two.vacuum();
    c.bench_function("expm action two pairs n_max=10", |b| {
        b.iter(|| expm_action(&gen, c64(1.0, 0.0), black_box(&vac)).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = genfun, observable, fock
}
criterion_main!(benches);
