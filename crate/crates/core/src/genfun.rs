//! Limiting log-MGF `Λ(λ)` of the depletion number and its cumulants.
//!
//! Two evaluations are provided. The integral form integrates
//!
//! ```text
//! Σ_p c²s² [2c²(cosh 2κ − 1) − e^{−2κ} + 1] / [1 − 2c²s²(cosh 2κ − 1)]
//! ```
//!
//! from 0 to λ and adds `λμ`. The product form is
//! `Λ(λ) = −½ Σ_p log(c_p² − e^{2λ} s_p²)`, the log-MGF of independent
//! two-mode squeezed pairs. Per mode the integrand equals
//! `e^{2κ}s²/(c² − e^{2κ}s²) − s²` because
//! `t − c²s²(t−1)² = (c²t − s²)(c² − ts²)` with `t = e^{2κ}`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::spectrum::SpectrumKernel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    ClosedForm,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenFunSample {
    pub lambda: f64,
    pub value: f64,
    pub integrand_value: f64,
    pub method: Method,
    /// Quadrature error estimate; zero for the closed form.
    pub error_estimate: f64,
}

pub const MAX_CUMULANT_ORDER: usize = 12;

/// Cumulants, raw moments and central moments of orders `1..=order`.
///
/// Vectors are 0-based: `kappa[0]` is the first cumulant.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulantSet {
    pub order: usize,
    pub kappa: Vec<f64>,
    pub moments: Vec<f64>,
    pub central: Vec<f64>,
}

impl CumulantSet {
    pub fn kappa(&self, j: usize) -> f64 {
        self.kappa[j - 1]
    }
    pub fn moment(&self, j: usize) -> f64 {
        self.moments[j - 1]
    }
    pub fn central(&self, j: usize) -> f64 {
        self.central[j - 1]
    }
}

fn check_domain(k: &SpectrumKernel, lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda.abs() >= k.lambda0() {
        return Err(Error::Domain { lambda, bound: k.lambda0() });
    }
    Ok(())
}

/// The `κ`-integrand of the integral form, summed over the lattice.
pub fn integrand_diagonal(k: &SpectrumKernel, kappa: f64) -> Result<f64> {
    check_domain(k, kappa)?;
    let sh2 = kappa.sinh().powi(2);
    let em = (-2.0 * kappa).exp_m1();
    Ok(k.level_sum(|l| {
        let (c2, s2) = (l.c * l.c, l.s * l.s);
        // cosh 2κ − 1 = 2 sinh²κ, 1 − e^{−2κ} = −expm1(−2κ)
        c2 * s2 * (4.0 * c2 * sh2 - em) / (1.0 - 4.0 * c2 * s2 * sh2)
    }))
}

/// Right-hand form of the per-mode identity, `Σ_p [t s²/(c² − t s²) − s²]`.
pub fn integrand_product_form(k: &SpectrumKernel, kappa: f64) -> Result<f64> {
    check_domain(k, kappa)?;
    let tm1 = (2.0 * kappa).exp_m1();
    Ok(k.level_sum(|l| {
        let s2 = l.s * l.s;
        // t s²/(c² − t s²) − s² = s² c² (t−1) / (c² − t s²)
        s2 * l.c * l.c * tm1 / (1.0 - s2 * tm1)
    }))
}

pub fn log_mgf(k: &SpectrumKernel, lambda: f64, quad: &QuadratureSpec) -> Result<GenFunSample> {
    check_domain(k, lambda)?;
    let q = integrate(|x| integrand_diagonal(k, x), 0.0, lambda, quad)?;
    Ok(GenFunSample {
        lambda,
        value: q.value + lambda * k.depletion_mean(),
        integrand_value: integrand_diagonal(k, lambda)?,
        method: Method::Quadrature,
        error_estimate: q.error,
    })
}

pub fn log_mgf_closed(k: &SpectrumKernel, lambda: f64) -> Result<GenFunSample> {
    check_domain(k, lambda)?;
    let tm1 = (2.0 * lambda).exp_m1();
    // c² − e^{2λ}s² = 1 − s²(e^{2λ} − 1)
    if k.levels().iter().any(|l| 1.0 - l.s * l.s * tm1 <= 0.0) {
        return Err(Error::Domain { lambda, bound: k.lambda0() });
    }
    let value = k.level_sum(|l| -0.5 * (-(l.s * l.s) * tm1).ln_1p());
    Ok(GenFunSample {
        lambda,
        value,
        integrand_value: integrand_diagonal(k, lambda)?,
        method: Method::ClosedForm,
        error_estimate: 0.0,
    })
}

/// Coefficients of `P_m` where `P_0(x) = x`, `P_{m+1} = P_m'(x)·(2x + 2x²)`.
///
/// `P_m(s²)` is the `m`-th derivative at 0 of `g(λ) = e^{2λ}s²/(c² − e^{2λ}s²)`,
/// which obeys `g' = 2g + 2g²`.
fn derivative_polynomials(order: usize) -> Vec<Vec<f64>> {
    let mut polys = vec![vec![0.0, 1.0]];
    for _ in 1..order {
        let p = polys.last().unwrap();
        let mut next = vec![0.0; p.len() + 1];
        for (d, &a) in p.iter().enumerate().skip(1) {
            let da = a * d as f64;
            // x^{d-1} · (2x + 2x²)
            next[d] += 2.0 * da;
            next[d + 1] += 2.0 * da;
        }
        polys.push(next);
    }
    polys
}

fn horner(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Raw moments from cumulants via the complete Bell polynomial recursion.
pub fn moments_from_cumulants(kappa: &[f64]) -> Vec<f64> {
    let mut m = vec![1.0];
    for n in 1..=kappa.len() {
        let v = (1..=n)
            .map(|j| binomial(n - 1, j - 1) * kappa[j - 1] * m[n - j])
            .sum();
        m.push(v);
    }
    m.remove(0);
    m
}

pub fn cumulants(k: &SpectrumKernel, order: usize) -> Result<CumulantSet> {
    if order == 0 {
        return Err(invalid("cumulant order must be at least 1"));
    }
    if order > MAX_CUMULANT_ORDER {
        return Err(invalid(format!(
            "cumulant order {order} above cap {MAX_CUMULANT_ORDER}"
        )));
    }
    let polys = derivative_polynomials(order);
    let kappa: Vec<f64> = polys
        .iter()
        .map(|p| k.level_sum(|l| horner(p, l.s * l.s)))
        .collect();
    let moments = moments_from_cumulants(&kappa);
    let mu = kappa[0];
    let central = (1..=order)
        .map(|n| {
            (0..=n)
                .map(|j| {
                    let mj = if j == 0 { 1.0 } else { moments[j - 1] };
                    binomial(n, j) * mj * (-mu).powi((n - j) as i32)
                })
                .sum()
        })
        .collect();
    Ok(CumulantSet { order, kappa, moments, central })
}

/// Fourth central moment from the cumulants next to the printed closed form
/// `12σ⁴ + 8σ² + 48 Σ c⁴s⁴`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourthMomentReport {
    pub from_cumulants: f64,
    /// `3σ⁴ + 4σ² + 48 Σ c⁴s⁴`, the value the cumulants reduce to.
    pub reduced_form: f64,
    pub printed_form: f64,
    pub discrepancy: f64,
    pub flagged: bool,
}

pub fn fourth_moment_report(k: &SpectrumKernel) -> Result<FourthMomentReport> {
    let set = cumulants(k, 4)?;
    let sigma2 = k.depletion_variance();
    let quartic = k.level_sum(|l| 48.0 * (l.c * l.s).powi(4));
    let from_cumulants = set.central(4);
    let printed_form = 12.0 * sigma2 * sigma2 + 8.0 * sigma2 + quartic;
    let discrepancy = printed_form - from_cumulants;
    let scale = from_cumulants.abs().max(f64::MIN_POSITIVE);
    Ok(FourthMomentReport {
        from_cumulants,
        reduced_form: 3.0 * sigma2 * sigma2 + 4.0 * sigma2 + quartic,
        printed_form,
        discrepancy,
        flagged: discrepancy.abs() > 1e-12 * scale,
    })
}

pub const DEFAULT_FD_STEP: f64 = 1e-2;

/// `d^j/dλ^j e^{Λ(λ)}` by central differences of the closed form, with two
/// Richardson levels (steps `h`, `2h`, `4h`).
pub fn mgf_derivative_check(k: &SpectrumKernel, lambda: f64, j: usize) -> Result<f64> {
    mgf_derivative_check_with_step(k, lambda, j, DEFAULT_FD_STEP)
}

pub fn mgf_derivative_check_with_step(
    k: &SpectrumKernel,
    lambda: f64,
    j: usize,
    h: f64,
) -> Result<f64> {
    if !(1..=4).contains(&j) {
        return Err(invalid("derivative order must be between 1 and 4"));
    }
    if !(h > 0.0) {
        return Err(invalid("finite-difference step must be positive"));
    }
    check_domain(k, lambda)?;
    let reach = if j <= 2 { 4.0 * h } else { 8.0 * h };
    if lambda.abs() + reach >= k.lambda0() {
        return Err(invalid(format!(
            "finite-difference stencil of half-width {reach} exits the domain at lambda = {lambda}"
        )));
    }
    // e^Λ − 1 keeps the rounding relative to Λ; the constant drops out of every stencil.
    let f = |x: f64| log_mgf_closed(k, lambda + x).map(|g| g.value.exp_m1());
    let d = |h: f64| -> Result<f64> {
        Ok(match j {
            1 => (f(h)? - f(-h)?) / (2.0 * h),
            2 => (f(h)? - 2.0 * f(0.0)? + f(-h)?) / (h * h),
            3 => (f(2.0 * h)? - 2.0 * f(h)? + 2.0 * f(-h)? - f(-2.0 * h)?) / (2.0 * h.powi(3)),
            _ => {
                (f(2.0 * h)? - 4.0 * f(h)? + 6.0 * f(0.0)? - 4.0 * f(-h)? + f(-2.0 * h)?)
                    / h.powi(4)
            }
        })
    };
    let (d1, d2, d4) = (d(h)?, d(2.0 * h)?, d(4.0 * h)?);
    let r1 = (4.0 * d1 - d2) / 3.0;
    let r2 = (4.0 * d2 - d4) / 3.0;
    Ok((16.0 * r1 - r2) / 15.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn pair_kernel(nus: &[f64]) -> SpectrumKernel {
        let reps: Vec<[i32; 3]> = (0..nus.len() as i32).map(|i| [1, i, 0]).collect();
        SpectrumKernel::from_pair_nu(Lattice::from_pair_representatives(&reps).unwrap(), nus).unwrap()
    }

    fn generic() -> SpectrumKernel {
        SpectrumKernel::build(Lattice::cube(3).unwrap(), 16.0 * PI * 0.4).unwrap()
    }

    #[test]
    fn zero_at_origin() {
        let k = generic();
        assert_eq!(integrand_diagonal(&k, 0.0).unwrap(), 0.0);
        assert_eq!(log_mgf(&k, 0.0, &QuadratureSpec::default()).unwrap().value, 0.0);
        assert_eq!(log_mgf_closed(&k, 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn vanishing_angles() {
        let k = SpectrumKernel::build(Lattice::cube(2).unwrap(), 0.0).unwrap();
        for &x in &[-3.0, -0.2, 0.7, 12.0] {
            assert_eq!(integrand_diagonal(&k, x).unwrap(), 0.0);
            assert_eq!(log_mgf(&k, x, &QuadratureSpec::default()).unwrap().value, 0.0);
            assert_eq!(log_mgf_closed(&k, x).unwrap().value, 0.0);
        }
    }

    #[test]
    fn arranged_single_pair() {
        // tanh²ν = ¼, e^{2λ} = 2: Λ = log(3/2)
        let k = pair_kernel(&[-(0.5f64).atanh()]);
        let g = log_mgf_closed(&k, 0.5 * 2f64.ln()).unwrap();
        assert!((g.value - 1.5f64.ln()).abs() < 1e-15);
        assert_eq!(g.method, Method::ClosedForm);
    }

    #[test]
    fn quadrature_matches_closed_form_at_half_domain() {
        let k = generic();
        let l = 0.5 * k.lambda0();
        let q = log_mgf(&k, l, &QuadratureSpec::default()).unwrap();
        let c = log_mgf_closed(&k, l).unwrap();
        assert!((q.value - c.value).abs() < 1e-8);
        assert_eq!(q.method, Method::Quadrature);
        let q = log_mgf(&k, -l, &QuadratureSpec::default()).unwrap();
        let c = log_mgf_closed(&k, -l).unwrap();
        assert!((q.value - c.value).abs() < 1e-8);
    }

    #[test]
    fn domain_errors() {
        let k = generic();
        let l0 = k.lambda0();
        assert!(matches!(integrand_diagonal(&k, l0), Err(Error::Domain { .. })));
        assert!(log_mgf_closed(&k, -l0).is_err());
        assert!(log_mgf(&k, 1.01 * l0, &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn blows_up_at_domain_edge() {
        let k = generic();
        let near = log_mgf_closed(&k, k.lambda0() * (1.0 - 1e-9)).unwrap().value;
        let mid = log_mgf_closed(&k, 0.5 * k.lambda0()).unwrap().value;
        assert!(near > mid + 8.0);
    }

    #[test]
    fn convex_on_grid() {
        let k = generic();
        let l0 = k.lambda0();
        let xs: Vec<f64> = (0..101).map(|i| -0.9 * l0 + 1.8 * l0 * i as f64 / 100.0).collect();
        let v: Vec<f64> = xs.iter().map(|&x| log_mgf_closed(&k, x).unwrap().value).collect();
        for w in v.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-10);
        }
    }

    #[test]
    fn derivative_polynomials_low_orders() {
        let p = derivative_polynomials(4);
        assert_eq!(p[1], vec![0.0, 2.0, 2.0]);
        assert_eq!(p[2], vec![0.0, 4.0, 12.0, 8.0]);
        assert_eq!(p[3], vec![0.0, 8.0, 56.0, 96.0, 48.0]);
    }

    #[test]
    fn first_cumulants_are_mean_and_variance() {
        let k = generic();
        let c = cumulants(&k, 4).unwrap();
        assert!((c.kappa(1) / k.depletion_mean() - 1.0).abs() < 1e-14);
        assert!((c.kappa(2) / k.depletion_variance() - 1.0).abs() < 1e-14);
        assert!((c.central(2) / k.depletion_variance() - 1.0).abs() < 1e-10);
        assert!(c.central(1).abs() < 1e-18);
        assert!(cumulants(&k, 0).is_err());
        assert!(cumulants(&k, 13).is_err());
        assert!(cumulants(&k, 12).is_ok());
    }

    #[test]
    fn single_pair_geometric_law() {
        // pair occupation n has probability (1−τ²)τ^{2n}; N₊ = 2n
        let tau2 = 0.3f64;
        let k = pair_kernel(&[-tau2.sqrt().atanh()]);
        let c = cumulants(&k, 6).unwrap();
        let mut raw = [0.0f64; 6];
        for n in 0..2000 {
            let p = (1.0 - tau2) * tau2.powi(n);
            for (j, r) in raw.iter_mut().enumerate() {
                *r += p * (2.0 * n as f64).powi(j as i32 + 1);
            }
        }
        for (j, (m, r)) in c.moments.iter().zip(&raw).enumerate() {
            assert!((m / r - 1.0).abs() < 1e-12, "order {}", j + 1);
        }
    }

    #[test]
    fn fourth_moment_discrepancy_is_flagged() {
        let k = pair_kernel(&[-0.4, -0.2]);
        let r = fourth_moment_report(&k).unwrap();
        assert!((r.from_cumulants - r.reduced_form).abs() < 1e-12 * r.reduced_form);
        assert!(r.flagged);
        let s2 = k.depletion_variance();
        assert!((r.discrepancy - (9.0 * s2 * s2 + 4.0 * s2)).abs() < 1e-12 * r.printed_form);
    }

    #[test]
    fn finite_differences_reproduce_moments() {
        let k = pair_kernel(&[-(0.3f64.sqrt()).atanh(), -0.3]);
        let c = cumulants(&k, 4).unwrap();
        let mu = k.depletion_mean();
        let s2 = k.depletion_variance();
        let m1 = mgf_derivative_check(&k, 0.0, 1).unwrap();
        assert!((m1 - mu).abs() < 1e-7 * mu, "{m1} vs {mu}");
        assert!((mgf_derivative_check(&k, 0.0, 2).unwrap() - (s2 + mu * mu)).abs() < 1e-7 * s2);
        for j in 1..=4 {
            let fd = mgf_derivative_check(&k, 0.0, j).unwrap();
            assert!((fd / c.moment(j) - 1.0).abs() < 1e-6, "j={j} fd={fd} m={}", c.moment(j));
        }
        assert!(mgf_derivative_check(&k, 0.0, 5).is_err());
        assert!(mgf_derivative_check(&k, k.lambda0() - 0.01, 4).is_err());
    }

    #[test]
    fn finite_differences_on_a_dilute_kernel() {
        let k = SpectrumKernel::build(Lattice::cube(4).unwrap(), 16.0 * PI * 0.01).unwrap();
        let c = cumulants(&k, 4).unwrap();
        for j in 1..=4 {
            let fd = mgf_derivative_check(&k, 0.0, j).unwrap();
            assert!((fd / c.moment(j) - 1.0).abs() < 1e-6, "j={j}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn per_mode_identity(nu in -2.0f64..0.0, frac in -0.99f64..0.99) {
            let k = pair_kernel(&[nu]);
            let kappa = frac * k.lambda0().min(20.0);
            let a = integrand_diagonal(&k, kappa).unwrap();
            let b = integrand_product_form(&k, kappa).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }

        #[test]
        fn bell_recursion_inverts(k1 in -2.0f64..2.0, k2 in 0.0f64..2.0, k3 in -2.0f64..2.0, k4 in 0.0f64..2.0) {
            let m = moments_from_cumulants(&[k1, k2, k3, k4]);
            prop_assert!((m[1] - (k2 + k1 * k1)).abs() < 1e-12);
            prop_assert!((m[2] - (k3 + 3.0 * k2 * k1 + k1.powi(3))).abs() < 1e-12);
            let m4 = k4 + 4.0 * k3 * k1 + 3.0 * k2 * k2 + 6.0 * k2 * k1 * k1 + k1.powi(4);
            prop_assert!((m[3] - m4).abs() < 1e-11);
        }

        #[test]
        fn quadrature_tracks_closed_form(a in 0.5f64..30.0, frac in -0.9f64..0.9) {
            let k = SpectrumKernel::build(Lattice::cube(2).unwrap(), a).unwrap();
            let l = frac * k.lambda0();
            let q = log_mgf(&k, l, &QuadratureSpec::default()).unwrap().value;
            let c = log_mgf_closed(&k, l).unwrap().value;
            prop_assert!((q - c).abs() < 1e-8);
        }
    }
}
