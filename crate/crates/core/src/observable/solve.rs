use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{contract, observable_mean, KernelForm, NodeKernels, ObservableKernel, SeparableMap};
use crate::error::{invalid, Error, Result};
use crate::linalg::{c64, CMat};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::spectrum::SpectrumKernel;
use crate::sum::ksum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Neumann,
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub form: KernelForm,
    /// Neumann stops once a term falls below `tol · (1 − q)`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Largest lattice size for the dense `(I − D)` factorization.
    pub dense_cap: usize,
    /// Largest lattice size for which the exact operator norm is computed.
    pub exact_norm_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            form: KernelForm::Conjugate,
            tol: 1e-14,
            max_iterations: 10_000,
            dense_cap: 32,
            exact_norm_cap: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FixedPointSolution {
    pub kappa: f64,
    pub f: CMat,
    /// `‖F − (A·G + D[F])‖_F`.
    pub residual: f64,
    pub iterations: usize,
    pub method: SolveMethod,
    /// `max |c_q s_p F_{p,q} − c_p s_q conj(F_{q,p})|` over modes with `s ≠ 0`.
    pub symmetry_residual: f64,
    pub norm_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormReport {
    /// `Σ ‖L_i‖₂‖R_i‖₂` over the separable pieces.
    pub separable: f64,
    /// Power-iteration estimate of the true norm (a lower estimate).
    pub power_estimate: f64,
    /// Largest singular value of the materialized map, for small lattices.
    pub exact: Option<f64>,
    /// Smallest guaranteed upper bound above.
    pub certified: f64,
}

fn frob(m: &CMat) -> f64 {
    m.norm()
}

fn power_estimate(d: &SeparableMap) -> f64 {
    let n = d.dim();
    let mut x = CMat::from_fn(n, n, |i, j| c64(1.0 + 0.1 * i as f64, 0.5 - 0.07 * j as f64));
    let norm = frob(&x);
    if norm == 0.0 {
        return 0.0;
    }
    x /= c64(norm, 0.0);
    let mut est = 0.0;
    for _ in 0..200 {
        let y = d.apply_adjoint(&d.apply_unchecked(&x));
        let ny = frob(&y);
        if ny == 0.0 {
            return 0.0;
        }
        let next = ny.sqrt();
        x = y / c64(ny, 0.0);
        if (next - est).abs() <= 1e-13 * next {
            return next;
        }
        est = next;
    }
    est
}

fn norm_report_for(d: &SeparableMap, opts: &SolveOptions) -> NormReport {
    let separable = d.factor_bound();
    if separable == 0.0 {
        return NormReport { separable, power_estimate: 0.0, exact: Some(0.0), certified: 0.0 };
    }
    let exact = (d.dim() <= opts.exact_norm_cap).then(|| {
        d.materialize().singular_values().iter().fold(0.0f64, |a, &b| a.max(b))
    });
    let certified = exact.map_or(separable, |e| e.min(separable));
    NormReport { separable, power_estimate: power_estimate(d), exact, certified }
}

pub fn d_norm_report(
    k: &SpectrumKernel,
    obs: &ObservableKernel,
    kappa: f64,
    opts: &SolveOptions,
) -> Result<NormReport> {
    let nk = NodeKernels::build(k, obs, kappa, opts.form)?;
    Ok(norm_report_for(nk.d(), opts))
}

/// Certified upper bound on the operator norm of `D(κ)`.
pub fn d_norm_bound(k: &SpectrumKernel, obs: &ObservableKernel, kappa: f64, opts: &SolveOptions) -> Result<f64> {
    Ok(d_norm_report(k, obs, kappa, opts)?.certified)
}

fn certified_only(d: &SeparableMap, opts: &SolveOptions) -> f64 {
    let separable = d.factor_bound();
    if separable < 1.0 || d.dim() > opts.exact_norm_cap {
        return separable;
    }
    let exact = d.materialize().singular_values().iter().fold(0.0f64, |a, &b| a.max(b));
    exact.min(separable)
}

pub fn symmetry_residual(k: &SpectrumKernel, f: &CMat) -> f64 {
    let (s, c) = (k.s(), k.c());
    let mut worst = 0.0f64;
    for p in 0..k.len() {
        for q in 0..k.len() {
            if s[p] == 0.0 || s[q] == 0.0 {
                continue;
            }
            let d = f[(p, q)] * (c[q] * s[p]) - f[(q, p)].conj() * (c[p] * s[q]);
            worst = worst.max(d.norm());
        }
    }
    worst
}

fn vec_real(f: &CMat) -> DVector<f64> {
    let n2 = f.len();
    let mut v = DVector::zeros(2 * n2);
    for (m, z) in f.iter().enumerate() {
        v[m] = z.re;
        v[n2 + m] = z.im;
    }
    v
}

fn unvec_real(v: &DVector<f64>, n: usize) -> CMat {
    let n2 = n * n;
    CMat::from_fn(n, n, |i, j| {
        let m = j * n + i;
        Complex64::new(v[m], v[n2 + m])
    })
}

pub(crate) fn solve_node(
    k: &SpectrumKernel,
    nk: &NodeKernels,
    g: f64,
    method: SolveMethod,
    opts: &SolveOptions,
) -> Result<FixedPointSolution> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(invalid("G must be positive"));
    }
    let n = k.len();
    let rhs = nk.a() * c64(g, 0.0);
    let d = nk.d();
    let (f, iterations, q) = match method {
        SolveMethod::Neumann => {
            let q = certified_only(d, opts);
            if q >= 1.0 {
                return Err(Error::NotContraction { kappa: nk.kappa(), bound: q });
            }
            let stop = opts.tol * (1.0 - q);
            let mut f = rhs.clone();
            let mut term = rhs.clone();
            let mut it = 0;
            while frob(&term) >= stop {
                if it == opts.max_iterations {
                    return Err(Error::NotConverged(format!(
                        "Neumann series at kappa = {} after {it} terms",
                        nk.kappa()
                    )));
                }
                term = d.apply_unchecked(&term);
                f += &term;
                it += 1;
            }
            (f, it, q)
        }
        SolveMethod::Dense => {
            if n > opts.dense_cap {
                return Err(Error::DimensionCap { dim: 2 * n * n, cap: 2 * opts.dense_cap * opts.dense_cap });
            }
            let t = d.materialize();
            let m = nalgebra::DMatrix::<f64>::identity(2 * n * n, 2 * n * n) - t;
            let x = m
                .lu()
                .solve(&vec_real(&rhs))
                .ok_or_else(|| Error::NotConverged("singular (I - D) system".into()))?;
            (unvec_real(&x, n), 0, certified_only(d, opts))
        }
    };
    let residual = frob(&(&f - (&rhs + d.apply_unchecked(&f))));
    Ok(FixedPointSolution {
        kappa: nk.kappa(),
        symmetry_residual: symmetry_residual(k, &f),
        f,
        residual,
        iterations,
        method,
        norm_bound: q,
    })
}

pub fn solve_f(
    k: &SpectrumKernel,
    obs: &ObservableKernel,
    kappa: f64,
    g: f64,
    method: SolveMethod,
    opts: &SolveOptions,
) -> Result<FixedPointSolution> {
    let nk = NodeKernels::build(k, obs, kappa, opts.form)?;
    solve_node(k, &nk, g, method, opts)
}

/// Largest `κ` such that `D(±κ')` has certified norm below 1 for all
/// `|κ'| ≤ κ`, capped by `λ₀`.
pub fn certified_domain(k: &SpectrumKernel, obs: &ObservableKernel, opts: &SolveOptions) -> Result<f64> {
    obs.check_against(k)?;
    let lambda0 = k.lambda0();
    let cap = if lambda0.is_finite() { lambda0 } else { 100.0 };
    let ok = |x: f64| -> Result<bool> {
        for sign in [1.0, -1.0] {
            let nk = NodeKernels::build(k, obs, sign * x, opts.form)?;
            if certified_only(nk.d(), opts) >= 1.0 {
                return Ok(false);
            }
        }
        Ok(true)
    };
    const SCAN: usize = 64;
    let mut lo = 0.0;
    for i in 1..=SCAN {
        let x = cap * i as f64 / SCAN as f64;
        if !ok(x)? {
            let mut hi = x;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if ok(mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(lo);
        }
        lo = x;
    }
    Ok(lambda0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralOptions {
    pub solve: SolveOptions,
    pub method: SolveMethod,
    /// Reuse a previously computed certified domain.
    pub domain: Option<f64>,
}

impl Default for GeneralOptions {
    fn default() -> Self {
        Self { solve: SolveOptions::default(), method: SolveMethod::Neumann, domain: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralSample {
    pub lambda: f64,
    pub value: f64,
    /// Imaginary part of the integral; zero up to rounding for Hermitian `O`.
    pub imag: f64,
    pub mean: f64,
    pub domain: f64,
    pub error_estimate: f64,
    pub nodes: usize,
    pub max_residual: f64,
    pub max_symmetry_residual: f64,
    pub max_norm_bound: f64,
}

pub fn log_mgf_general(
    k: &SpectrumKernel,
    obs: &ObservableKernel,
    lambda: f64,
    quad: &QuadratureSpec,
    opts: &GeneralOptions,
) -> Result<GeneralSample> {
    obs.check_against(k)?;
    let domain = match opts.domain {
        Some(d) => d,
        None => certified_domain(k, obs, &opts.solve)?,
    };
    if !lambda.is_finite() || lambda.abs() >= domain {
        return Err(Error::Domain { lambda, bound: domain });
    }
    let mean = observable_mean(k, obs)?;
    let mut nodes = 0;
    let mut max_residual = 0.0f64;
    let mut max_sym = 0.0f64;
    let mut max_q = 0.0f64;
    let q = integrate(
        |kappa| -> Result<Complex64> {
            let nk = NodeKernels::build(k, obs, kappa, opts.solve.form)?;
            let sol = solve_node(k, &nk, 1.0, opts.method, &opts.solve)?;
            nodes += 1;
            max_residual = max_residual.max(sol.residual);
            max_sym = max_sym.max(sol.symmetry_residual);
            max_q = max_q.max(sol.norm_bound);
            Ok(contract(k, obs, &sol.f))
        },
        0.0,
        lambda,
        quad,
    )?;
    Ok(GeneralSample {
        lambda,
        value: q.value.re + lambda * mean,
        imag: q.value.im,
        mean,
        domain,
        error_estimate: q.error,
        nodes,
        max_residual,
        max_symmetry_residual: max_sym,
        max_norm_bound: max_q,
    })
}

fn check_sequence(k: &SpectrumKernel, tau: &[f64]) -> Result<()> {
    if tau.len() != k.len() {
        return Err(Error::ShapeMismatch { expected: k.len().to_string(), found: tau.len().to_string() });
    }
    if tau.iter().any(|x| !x.is_finite()) {
        return Err(invalid("tau must be finite"));
    }
    let neg = k.lattice().neg_index();
    if (0..tau.len()).any(|p| tau[p] != tau[neg[p]]) {
        return Err(invalid("tau must be even under p -> -p for the diagonal formula"));
    }
    Ok(())
}

fn sequence_condition(k: &SpectrumKernel, tau: &[f64], lambda: f64) -> Result<()> {
    for ((&s, &c), &t) in k.s().iter().zip(k.c()).zip(tau) {
        if s == 0.0 {
            continue;
        }
        // cosh(2λτ) − 1 = 2 sinh²(λτ)
        let lhs = 2.0 * (lambda * t).sinh().powi(2);
        if !(lhs < 1.0 / (2.0 * s * s * c * c)) {
            return Err(Error::Domain { lambda, bound: f64::NAN });
        }
    }
    Ok(())
}

/// `Λ̃(λ)` for `Σ_p τ_p a_p^† a_p` with an even sequence `τ`, by quadrature of
/// the diagonal integrand with arguments `κτ_p`.
pub fn log_mgf_diagonal_sequence(
    k: &SpectrumKernel,
    tau: &[f64],
    lambda: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_sequence(k, tau)?;
    sequence_condition(k, tau, lambda)?;
    let integrand = |kappa: f64| -> Result<f64> {
        Ok(ksum((0..k.len()).map(|p| {
            let (s, c, t) = (k.s()[p], k.c()[p], tau[p]);
            let (c2, s2) = (c * c, s * s);
            let sh2 = (kappa * t).sinh().powi(2);
            t * c2 * s2 * (4.0 * c2 * sh2 - (-2.0 * kappa * t).exp_m1()) / (1.0 - 4.0 * c2 * s2 * sh2)
        })))
    };
    let q = integrate(integrand, 0.0, lambda, quad)?;
    let linear = ksum((0..k.len()).map(|p| tau[p] * k.s()[p] * k.s()[p]));
    Ok(q.value + lambda * linear)
}

/// Per-mode closed form `−½ Σ_p log(c_p² − e^{2λτ_p} s_p²)`.
pub fn log_mgf_diagonal_sequence_closed(k: &SpectrumKernel, tau: &[f64], lambda: f64) -> Result<f64> {
    check_sequence(k, tau)?;
    let mut terms = Vec::with_capacity(k.len());
    for (&s, &t) in k.s().iter().zip(tau) {
        let s2 = s * s;
        let arg = -s2 * (2.0 * lambda * t).exp_m1();
        if !(arg > -1.0) {
            return Err(Error::Domain { lambda, bound: f64::NAN });
        }
        terms.push(-0.5 * arg.ln_1p());
    }
    Ok(ksum(terms))
}
