//! The limiting formulas against the truncated Fock-space oracle.

use bose_genfun_core::fockoracle::{
    bch_check, bogoliubov_action_defect, depletion_distribution, distribution_central_moments, f_matrix_oracle,
    fock_modes, mgf_oracle, mgf_oracle_with, FockSpace,
};
use bose_genfun_core::genfun::{cumulants, fourth_moment_report, log_mgf, log_mgf_closed};
use bose_genfun_core::linalg::c64;
use bose_genfun_core::observable::{
    certified_domain, log_mgf_general, observable_mean, solve_f, GeneralOptions, ObservableKernel, SolveMethod,
    SolveOptions,
};
use bose_genfun_core::tails::nonconcentration_witness;
use bose_genfun_core::{CMat, KernelForm, Lattice, OracleOptions, QuadratureSpec, SpectrumKernel};

/// Two pairs with `tanh²ν = 0.3` and `0.1`.
fn two_pair_kernel() -> SpectrumKernel {
    let l = Lattice::from_pair_representatives(&[[1, 0, 0], [0, 1, 0]]).unwrap();
    let nus = [-(0.3f64.sqrt()).atanh(), -(0.1f64.sqrt()).atanh()];
    SpectrumKernel::from_pair_nu(l, &nus).unwrap()
}

/// Two pairs with small angles so a full two-pair Fock space converges.
fn small_two_pair_kernel() -> SpectrumKernel {
    let l = Lattice::from_pair_representatives(&[[1, 0, 0], [0, 1, 0]]).unwrap();
    SpectrumKernel::from_pair_nu(l, &[-0.25, -0.15]).unwrap()
}

#[test]
fn product_of_pair_oracles_matches_generating_function() {
    let k = two_pair_kernel();
    let space = FockSpace::build(1, 40).unwrap();
    let quad = QuadratureSpec::default();
    let l0 = k.lambda0();
    for &frac in &[-0.8, -0.3, 0.2, 0.5] {
        let lambda = frac * l0;
        let log_oracle: f64 = k
            .nu_by_pair()
            .iter()
            .map(|&nu| mgf_oracle(&space, &[nu], &CMat::identity(2, 2), lambda).unwrap().value.ln())
            .sum();
        assert!((log_mgf(&k, lambda, &quad).unwrap().value - log_oracle).abs() < 1e-10);
        assert!((log_mgf_closed(&k, lambda).unwrap().value - log_oracle).abs() < 1e-10);
    }
}

#[test]
fn full_two_pair_space_matches_generating_function() {
    let k = small_two_pair_kernel();
    let space = FockSpace::build(2, 10).unwrap();
    let lambda = 0.3;
    let got = mgf_oracle(&space, &k.nu_by_pair(), &CMat::identity(4, 4), lambda).unwrap();
    assert!((got.norm - 1.0).abs() < 1e-12);
    assert!((got.value.ln() - log_mgf_closed(&k, lambda).unwrap().value).abs() < 1e-9);
}

#[test]
fn fourth_central_moment_matches_exact_law() {
    let k = two_pair_kernel();
    let law = depletion_distribution(&k.nu_by_pair(), 40).unwrap();
    let central = distribution_central_moments(&law, 4);
    let c = cumulants(&k, 4).unwrap();
    assert!((central[2] - c.central(2)).abs() < 1e-10);
    assert!((central[3] - c.central(3)).abs() < 1e-9);
    assert!((central[4] - c.central(4)).abs() < 1e-8);
    let report = fourth_moment_report(&k).unwrap();
    assert!(report.flagged);
    assert!((report.printed_form - central[4]).abs() > 1.0);
}

#[test]
fn truncation_defect_decays_at_the_geometric_rate() {
    let nu = -(0.3f64.sqrt()).atanh();
    let lambda = 0.1f64;
    let exact = 1.0 / (nu.cosh().powi(2) - (2.0 * lambda).exp() * nu.sinh().powi(2));
    let rate = (2.0 * lambda).exp() * nu.tanh().powi(2);
    let loose = OracleOptions { truncation_threshold: 1.0 };
    let defect = |n: usize| {
        let space = FockSpace::build(1, n).unwrap();
        (mgf_oracle_with(&space, &[nu], &CMat::identity(2, 2), lambda, &loose).unwrap().value - exact).abs()
    };
    for n in [10, 14, 18] {
        let ratio = defect(n + 1) / defect(n);
        assert!((ratio / rate - 1.0).abs() < 0.2, "n={n} ratio={ratio} rate={rate}");
    }
    let space = FockSpace::build(1, 40).unwrap();
    let converged = mgf_oracle(&space, &[nu], &CMat::identity(2, 2), lambda).unwrap().value;
    assert!((converged - exact).abs() < 1e-10);
}

fn fock_observable(k: &SpectrumKernel, o: &ObservableKernel) -> CMat {
    o.restrict(&fock_modes(k.lattice(), 2).unwrap())
}

#[test]
fn general_observable_matches_oracle() {
    let k = small_two_pair_kernel();
    let o = ObservableKernel::random(k.lattice(), 2024, 2).unwrap();
    let space = FockSpace::build(2, 10).unwrap();
    let dom = certified_domain(&k, &o, &SolveOptions::default()).unwrap();
    let opts = GeneralOptions { domain: Some(dom), ..Default::default() };
    let quad = QuadratureSpec::default();
    let small = fock_observable(&k, &o);
    for &lambda in &[0.02, -0.5 * dom, 0.5 * dom] {
        let oracle = mgf_oracle(&space, &k.nu_by_pair(), &small, lambda).unwrap();
        assert!(oracle.imag.abs() < 1e-12);
        let got = log_mgf_general(&k, &o, lambda, &quad, &opts).unwrap();
        assert!((got.value - oracle.value.ln()).abs() < 1e-6, "lambda={lambda}");
    }
}

#[test]
fn fixed_point_matches_oracle_matrix() {
    let k = small_two_pair_kernel();
    let o = ObservableKernel::random(k.lattice(), 99, 2).unwrap();
    let space = FockSpace::build(2, 10).unwrap();
    let modes = fock_modes(k.lattice(), 2).unwrap();
    let kappa = 0.1;
    let (f_oracle, _) = f_matrix_oracle(&space, &k.nu_by_pair(), &fock_observable(&k, &o), kappa).unwrap();
    let sol = solve_f(&k, &o, kappa, 1.0, SolveMethod::Neumann, &SolveOptions::default()).unwrap();
    for a in 0..4 {
        for b in 0..4 {
            assert!((sol.f[(modes[a], modes[b])] - f_oracle[(a, b)]).norm() < 1e-9);
        }
    }
}

#[test]
fn printed_kernel_disagrees_with_oracle_for_generic_observable() {
    let k = small_two_pair_kernel();
    let o = ObservableKernel::random(k.lattice(), 99, 2).unwrap();
    let space = FockSpace::build(2, 10).unwrap();
    let modes = fock_modes(k.lattice(), 2).unwrap();
    let kappa = 0.1;
    let (f_oracle, _) = f_matrix_oracle(&space, &k.nu_by_pair(), &fock_observable(&k, &o), kappa).unwrap();
    let opts = SolveOptions { form: KernelForm::Printed, ..Default::default() };
    let sol = solve_f(&k, &o, kappa, 1.0, SolveMethod::Dense, &opts).unwrap();
    let worst = (0..4)
        .flat_map(|a| (0..4).map(move |b| (a, b)))
        .map(|(a, b)| (sol.f[(modes[a], modes[b])] - f_oracle[(a, b)]).norm())
        .fold(0.0, f64::max);
    assert!(worst > 1e-4);
}

#[test]
fn exact_fixed_point_breaks_the_pointwise_symmetry() {
    // The relation c_q s_p F_{p,q} = c_p s_q conj(F_{q,p}) holds for diagonal O
    // only. For generic O the exact matrix violates it by far more than the
    // solver tolerance.
    let k = small_two_pair_kernel();
    let o = ObservableKernel::random(k.lattice(), 99, 2).unwrap();
    let sol = solve_f(&k, &o, 0.1, 1.0, SolveMethod::Neumann, &SolveOptions::default()).unwrap();
    assert!(sol.symmetry_residual > 1e-6);
    let d = ObservableKernel::diagonal(k.lattice(), &[0.3, -0.7, -0.7, 0.3]).unwrap();
    let sol = solve_f(&k, &d, 0.1, 1.0, SolveMethod::Neumann, &SolveOptions::default()).unwrap();
    assert!(sol.symmetry_residual < 1e-12);
}

#[test]
fn observable_mean_matches_oracle_two_point_function() {
    let k = small_two_pair_kernel();
    let o = ObservableKernel::random(k.lattice(), 5, 2).unwrap();
    let space = FockSpace::build(2, 10).unwrap();
    let small = fock_observable(&k, &o);
    let h = 1e-4;
    let up = mgf_oracle(&space, &k.nu_by_pair(), &small, h).unwrap().value.ln();
    let dn = mgf_oracle(&space, &k.nu_by_pair(), &small, -h).unwrap().value.ln();
    assert!(((up - dn) / (2.0 * h) - observable_mean(&k, &o).unwrap()).abs() < 1e-7);
}

#[test]
fn witness_is_certified_by_the_exact_law() {
    let k = two_pair_kernel();
    let law = depletion_distribution(&k.nu_by_pair(), 40).unwrap();
    let c = cumulants(&k, 4).unwrap();
    let w = nonconcentration_witness(&k, c.central(4)).unwrap();
    let mu = k.depletion_mean();
    let outside: f64 = law.iter().enumerate().filter(|(j, _)| (*j as f64 - mu).abs() > w.n).map(|(_, p)| p).sum();
    assert!(outside >= w.epsilon);
    let window: f64 = law
        .iter()
        .enumerate()
        .filter(|(j, _)| {
            let d = (*j as f64 - mu).abs();
            d > w.n && d <= w.n + w.m
        })
        .map(|(_, p)| p)
        .sum();
    assert!(window >= w.epsilon);
}

fn random_small_hermitian(seed: u64, modes: usize) -> CMat {
    let l = Lattice::from_pair_representatives(&[[1, 0, 0], [0, 1, 0]]).unwrap();
    let o = ObservableKernel::random(&l, seed, modes / 2).unwrap();
    let idx = fock_modes(&l, modes / 2).unwrap();
    o.restrict(&idx)
}

#[test]
fn bch_defect_is_small() {
    let space = FockSpace::build(1, 20).unwrap();
    for seed in 0..3 {
        let o = random_small_hermitian(seed, 2);
        for p in 0..2 {
            assert!(bch_check(&space, &o, p).unwrap() <= 1e-8);
        }
    }
    let space = FockSpace::build(2, 6).unwrap();
    let o = random_small_hermitian(7, 4);
    assert!(bch_check(&space, &o, 3).unwrap() <= 1e-8);
    assert_eq!(bch_check(&space, &CMat::zeros(4, 4), 1).unwrap(), 0.0);
}

#[test]
fn bogoliubov_action_defect_decays_with_cutoff() {
    let nu = [-0.25];
    let mut last = f64::INFINITY;
    for n in [20, 30, 40] {
        let space = FockSpace::build(1, n).unwrap();
        let d = bogoliubov_action_defect(&space, &nu, 0).unwrap();
        assert!(d < last);
        last = d;
    }
    let space = FockSpace::build(1, 40).unwrap();
    for p in 0..2 {
        assert!(bogoliubov_action_defect(&space, &[-0.1], p).unwrap() <= 1e-8);
    }
    // lowest shell of the m = 10 cube at a = 0.01
    let lowest = SpectrumKernel::build(Lattice::cube(1).unwrap(), 16.0 * std::f64::consts::PI * 0.01).unwrap();
    let nu_min = lowest.nu().iter().fold(0.0f64, |m, &x| m.min(x));
    let space = FockSpace::build(1, 20).unwrap();
    assert!(bogoliubov_action_defect(&space, &[nu_min], 0).unwrap() <= 1e-8);
    let space = FockSpace::build(1, 10).unwrap();
    assert!(bogoliubov_action_defect(&space, &[0.0], 0).unwrap() == 0.0);
}

#[test]
fn complex_observable_on_one_pair() {
    // Off-diagonal coupling between p and −p keeps the generating function real.
    let l = Lattice::from_pair_representatives(&[[1, 0, 0]]).unwrap();
    let k = SpectrumKernel::from_pair_nu(l, &[-0.3]).unwrap();
    let mut m = CMat::zeros(2, 2);
    m[(0, 0)] = c64(0.4, 0.0);
    m[(1, 1)] = c64(-0.2, 0.0);
    m[(0, 1)] = c64(0.3, 0.5);
    m[(1, 0)] = c64(0.3, -0.5);
    let o = ObservableKernel::new(k.lattice(), m).unwrap();
    let space = FockSpace::build(1, 40).unwrap();
    let small = o.restrict(&fock_modes(k.lattice(), 1).unwrap());
    let dom = certified_domain(&k, &o, &SolveOptions::default()).unwrap();
    let opts = GeneralOptions { domain: Some(dom), ..Default::default() };
    let lambda = 0.4 * dom;
    let oracle = mgf_oracle(&space, &k.nu_by_pair(), &small, lambda).unwrap().value.ln();
    let got = log_mgf_general(&k, &o, lambda, &QuadratureSpec::default(), &opts).unwrap();
    assert!((got.value - oracle).abs() < 1e-8);
}
