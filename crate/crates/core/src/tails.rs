//! Chernoff upper tail bounds for the depletion number, the quadratic
//! small-deviation bound and a non-concentration witness.
//!
//! A threshold `n` is compared with `N₊`, whose mean is `μ = Λ′(0)`. The
//! default exponent is
//!
//! ```text
//! g(λ) = −(n − μ)λ + [Λ(λ) − μλ] = −nλ + Λ(λ)
//! ```
//!
//! which is Markov's inequality for `e^{λ(N₊ − μ)}` and bounds `P[N₊ ≥ n]`.
//! Its second-order expansion is the quadratic bound. [`ExponentForm::AsPrinted`]
//! keeps `Λ(λ)` uncentred instead.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::genfun::{fourth_moment_report, log_mgf_closed};
use crate::spectrum::SpectrumKernel;

/// Inner margin kept from both ends of the search interval `(0, λ₀)`.
pub const ENDPOINT_MARGIN: f64 = 1e-12;
pub const DEFAULT_LAMBDA_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentForm {
    /// `−(n − μ)λ + Λ(λ) − μλ`.
    #[default]
    Centered,
    /// `−(n − μ)λ + Λ(λ)`.
    AsPrinted,
}

/// Where the infimum over the search interval was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    Interior,
    /// Approached as `λ → 0⁺`.
    Lower,
    /// Approached as `λ` tends to the upper end of the interval.
    Upper,
    /// `g` is unbounded below (`ν ≡ 0` with no search cap).
    Unbounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub n: f64,
    pub lambda_star: f64,
    pub exponent: f64,
    pub bound: f64,
    pub binding: Binding,
    pub form: ExponentForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailOptions {
    pub form: ExponentForm,
    pub lambda_tol: f64,
    /// Upper end of the search when `λ₀ = ∞`.
    pub search_cap: Option<f64>,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self { form: ExponentForm::Centered, lambda_tol: DEFAULT_LAMBDA_TOL, search_cap: None }
    }
}

/// `g(λ)` for threshold `n`.
pub fn tail_exponent(k: &SpectrumKernel, n: f64, lambda: f64, form: ExponentForm) -> Result<f64> {
    let mu = k.depletion_mean();
    let big = log_mgf_closed(k, lambda)?.value;
    Ok(match form {
        ExponentForm::Centered => -(n - mu) * lambda + (big - mu * lambda),
        ExponentForm::AsPrinted => -(n - mu) * lambda + big,
    })
}

pub fn chernoff_bound(k: &SpectrumKernel, n: f64) -> Result<TailBound> {
    chernoff_bound_with(k, n, &TailOptions::default())
}

pub fn chernoff_bound_with(k: &SpectrumKernel, n: f64, opts: &TailOptions) -> Result<TailBound> {
    if !n.is_finite() {
        return Err(invalid("threshold must be finite"));
    }
    if !(opts.lambda_tol > 0.0) {
        return Err(invalid("lambda tolerance must be positive"));
    }
    let lambda0 = k.lambda0();
    let upper = match (lambda0.is_finite(), opts.search_cap) {
        (_, Some(cap)) if !(cap > 0.0) => return Err(invalid("search cap must be positive")),
        (true, Some(cap)) => cap.min(lambda0 - ENDPOINT_MARGIN),
        (true, None) => lambda0 - ENDPOINT_MARGIN,
        (false, Some(cap)) => cap,
        (false, None) => {
            // Λ ≡ 0: g is linear in λ.
            let slope = match opts.form {
                ExponentForm::Centered => -n,
                ExponentForm::AsPrinted => -(n - k.depletion_mean()),
            };
            return Ok(if slope < 0.0 {
                TailBound {
                    n,
                    lambda_star: f64::INFINITY,
                    exponent: f64::NEG_INFINITY,
                    bound: 0.0,
                    binding: Binding::Unbounded,
                    form: opts.form,
                }
            } else {
                TailBound { n, lambda_star: 0.0, exponent: 0.0, bound: 1.0, binding: Binding::Lower, form: opts.form }
            });
        }
    };
    let lower = ENDPOINT_MARGIN;
    if upper <= lower {
        return Err(invalid("search interval is empty"));
    }
    let g = |l: f64| tail_exponent(k, n, l, opts.form);
    let (lambda_star, value) = golden_section(&g, lower, upper, opts.lambda_tol)?;
    let (g_lo, g_hi) = (g(lower)?, g(upper)?);
    let (lambda_star, exponent, binding) = if g_lo <= value && g_lo <= g_hi {
        (lower, g_lo, Binding::Lower)
    } else if g_hi <= value {
        (upper, g_hi, Binding::Upper)
    } else if lambda_star - lower <= opts.lambda_tol {
        (lambda_star, value, Binding::Lower)
    } else if upper - lambda_star <= opts.lambda_tol {
        (lambda_star, value, Binding::Upper)
    } else {
        (lambda_star, value, Binding::Interior)
    };
    Ok(TailBound { n, lambda_star, exponent, bound: exponent.exp(), binding, form: opts.form })
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
fn golden_section(g: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (g(x1)?, g(x2)?);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = g(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = g(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticBound {
    pub n: f64,
    pub lambda_star: f64,
    pub exponent: f64,
    pub bound: f64,
    pub clipped: bool,
}

/// `exp inf_{λ ∈ (0, λ₀]} [−(n − μ)λ + λ²σ²/2]`.
pub fn quadratic_bound(k: &SpectrumKernel, n: f64) -> Result<f64> {
    Ok(quadratic_bound_report(k, n)?.bound)
}

pub fn quadratic_bound_report(k: &SpectrumKernel, n: f64) -> Result<QuadraticBound> {
    let mu = k.depletion_mean();
    let s2 = k.depletion_variance();
    let dev = n - mu;
    if !n.is_finite() || dev < 0.0 {
        return Err(invalid("quadratic bound needs a finite threshold n >= mu"));
    }
    if dev == 0.0 {
        return Ok(QuadraticBound { n, lambda_star: 0.0, exponent: 0.0, bound: 1.0, clipped: false });
    }
    if s2 == 0.0 {
        return Ok(QuadraticBound { n, lambda_star: f64::INFINITY, exponent: f64::NEG_INFINITY, bound: 0.0, clipped: false });
    }
    let free = dev / s2;
    let lambda0 = k.lambda0();
    let (lambda_star, clipped) = if free > lambda0 { (lambda0, true) } else { (free, false) };
    let exponent = if clipped { -dev * lambda_star + 0.5 * lambda_star * lambda_star * s2 } else { -0.5 * dev * dev / s2 };
    Ok(QuadraticBound { n, lambda_star, exponent, bound: exponent.exp(), clipped })
}

/// Window `n < |N₊ − μ| ≤ n + m` and the probability lower bound `ε` obtained
/// from the second and fourth central moments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonConcentrationWitness {
    pub n: f64,
    pub m: f64,
    pub epsilon: f64,
    pub second_moment: f64,
    pub fourth_moment: f64,
    /// The closed form `12σ⁴ + 8σ² + 48Σc⁴s⁴`, reported alongside.
    pub printed_fourth_moment: f64,
}

pub fn nonconcentration_witness(k: &SpectrumKernel, fourth_central: f64) -> Result<NonConcentrationWitness> {
    let second = k.depletion_variance();
    if !(second > 0.0) {
        return Err(Error::InvalidInput("non-concentration witness needs sigma^2 > 0".into()));
    }
    let mut w = witness_from_moments(second, fourth_central)?;
    w.printed_fourth_moment = fourth_moment_report(k)?.printed_form;
    Ok(w)
}

/// `n² = σ²/4`, `(n + m)² = 4·fourth/σ²`, `ε = σ⁴/(8·fourth)`.
pub fn witness_from_moments(second: f64, fourth: f64) -> Result<NonConcentrationWitness> {
    if !(second > 0.0) || !second.is_finite() {
        return Err(invalid("second moment must be positive"));
    }
    if !(fourth >= second * second) || !fourth.is_finite() {
        return Err(invalid("fourth moment must be at least the squared second moment"));
    }
    let n = (second / 4.0).sqrt();
    let m = (4.0 * fourth / second).sqrt() - n;
    let epsilon = second * second / (8.0 * fourth);
    Ok(NonConcentrationWitness { n, m, epsilon, second_moment: second, fourth_moment: fourth, printed_fourth_moment: f64::NAN })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genfun::{cumulants, log_mgf_closed};
    use crate::lattice::Lattice;
    use proptest::prelude::*;

    fn pair_kernel(nus: &[f64]) -> SpectrumKernel {
        let reps: Vec<[i32; 3]> = (0..nus.len() as i32).map(|i| [1, i, 0]).collect();
        SpectrumKernel::from_pair_nu(Lattice::from_pair_representatives(&reps).unwrap(), nus).unwrap()
    }

    fn generic() -> SpectrumKernel {
        pair_kernel(&[-0.5, -0.3, -0.1])
    }

    fn grid_min(k: &SpectrumKernel, n: f64, points: usize) -> f64 {
        let (a, b) = (ENDPOINT_MARGIN, k.lambda0() - ENDPOINT_MARGIN);
        (0..points)
            .map(|i| a + (b - a) * i as f64 / (points - 1) as f64)
            .map(|l| tail_exponent(k, n, l, ExponentForm::Centered).unwrap())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn bound_is_one_at_the_mean() {
        let k = generic();
        let t = chernoff_bound(&k, k.depletion_mean()).unwrap();
        assert!((t.bound - 1.0).abs() < 1e-8);
        assert_eq!(t.binding, Binding::Lower);
    }

    #[test]
    fn zero_kernel() {
        let k = pair_kernel(&[0.0, 0.0]);
        let t = chernoff_bound(&k, 0.5).unwrap();
        assert_eq!(t.bound, 0.0);
        assert_eq!(t.binding, Binding::Unbounded);
        let capped = chernoff_bound_with(&k, 0.5, &TailOptions { search_cap: Some(2.0), ..Default::default() }).unwrap();
        assert!((capped.exponent + 1.0).abs() < 1e-9);
        assert_eq!(quadratic_bound(&k, 0.5).unwrap(), 0.0);
        assert!(nonconcentration_witness(&k, 0.0).is_err());
    }

    #[test]
    fn matches_grid_search() {
        let k = generic();
        let n = k.depletion_mean() + k.depletion_variance().sqrt();
        let t = chernoff_bound(&k, n).unwrap();
        assert_eq!(t.binding, Binding::Interior);
        assert!((t.exponent - grid_min(&k, n, 200_001)).abs() < 1e-8);
    }

    #[test]
    fn large_deviation_stays_inside_the_domain() {
        let k = generic();
        let far = k.depletion_mean() + 200.0;
        let t = chernoff_bound(&k, far).unwrap();
        assert!(t.lambda_star < k.lambda0() && t.exponent < -50.0);
    }

    #[test]
    fn quadratic_examples() {
        let k = generic();
        let (mu, s2) = (k.depletion_mean(), k.depletion_variance());
        let n = mu + 0.3;
        let q = quadratic_bound_report(&k, n).unwrap();
        assert!(!q.clipped);
        assert_eq!(q.bound, (-(0.3f64 * 0.3) / (2.0 * s2)).exp());
        let l0 = k.lambda0();
        let dev = 2.0 * s2 * l0;
        let q = quadratic_bound_report(&k, mu + dev).unwrap();
        assert!(q.clipped && q.lambda_star == l0);
        assert_eq!(q.bound, (-dev * l0 + l0 * l0 * s2 / 2.0).exp());
        assert!(quadratic_bound(&k, mu - 0.1).is_err());
        assert_eq!(quadratic_bound(&k, mu).unwrap(), 1.0);
    }

    #[test]
    fn quadratic_regime() {
        let k = generic();
        let (mu, s2) = (k.depletion_mean(), k.depletion_variance());
        let mut last = f64::INFINITY;
        for &d in &[1e-1, 1e-2, 1e-3] {
            let ratio = chernoff_bound(&k, mu + d).unwrap().exponent / (-d * d / (2.0 * s2));
            let gap = (ratio - 1.0).abs();
            assert!(gap < last);
            last = gap;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn chernoff_within_cubic_remainder_of_quadratic() {
        let k = generic();
        let (mu, s2) = (k.depletion_mean(), k.depletion_variance());
        // Every cumulant is positive, so R(λ)/λ³ with R = Λ − μλ − σ²λ²/2 is
        // increasing and its value at the window end bounds it on the window.
        let edge = k.lambda0() / 2.0;
        let r_edge = log_mgf_closed(&k, edge).unwrap().value - mu * edge - s2 * edge * edge / 2.0;
        let c = r_edge / edge.powi(3);
        assert!(c > 0.0);
        for i in 1..=20 {
            let d = s2 * edge * i as f64 / 20.0;
            let chern = chernoff_bound(&k, mu + d).unwrap();
            let quad = quadratic_bound_report(&k, mu + d).unwrap();
            assert!(!quad.clipped);
            let l = quad.lambda_star;
            assert!(chern.bound <= quad.bound * (c * l.powi(3)).exp() * (1.0 + 1e-12), "d={d}");
        }
    }

    #[test]
    fn printed_form_differs_from_centered() {
        let k = generic();
        let mu = k.depletion_mean();
        let opts = TailOptions { form: ExponentForm::AsPrinted, ..Default::default() };
        let printed = chernoff_bound_with(&k, mu + 0.3, &opts).unwrap();
        let centered = chernoff_bound(&k, mu + 0.3).unwrap();
        assert!(printed.bound > centered.bound);
        // the printed form has slope μ at the origin and no quadratic regime
        assert!((chernoff_bound_with(&k, mu + 1e-3, &opts).unwrap().bound - 1.0).abs() < 1e-12);
    }

    #[test]
    fn witness_arithmetic() {
        let w = witness_from_moments(4.0, 48.0).unwrap();
        assert_eq!(w.n, 1.0);
        assert!(((w.n + w.m).powi(2) - 48.0).abs() < 1e-12);
        assert!((w.epsilon - 1.0 / 24.0).abs() < 1e-15);
        assert!(witness_from_moments(4.0, 15.0).is_err());
        let k = generic();
        let c = cumulants(&k, 4).unwrap();
        let w = nonconcentration_witness(&k, c.central(4)).unwrap();
        assert!(w.epsilon > 0.0 && w.epsilon <= 0.125);
        assert!(w.printed_fourth_moment > w.fourth_moment);
    }

    proptest! {
        #[test]
        fn golden_section_agrees_with_grid(a in -1.2f64..-0.05, b in -1.2f64..-0.05, z in 0.0f64..3.0) {
            let k = pair_kernel(&[a, b]);
            let n = k.depletion_mean() + z * k.depletion_variance().sqrt();
            let t = chernoff_bound(&k, n).unwrap();
            let grid = grid_min(&k, n, 20_001);
            prop_assert!(t.exponent <= grid + 1e-8);
            prop_assert!(t.exponent >= grid - 1e-4);
        }

        #[test]
        fn bound_nonincreasing(a in -1.2f64..-0.05, d1 in 0.0f64..2.0, d2 in 0.0f64..2.0) {
            let k = pair_kernel(&[a, -0.2]);
            let mu = k.depletion_mean();
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let b1 = chernoff_bound(&k, mu + lo).unwrap().bound;
            let b2 = chernoff_bound(&k, mu + hi).unwrap().bound;
            prop_assert!(b2 <= b1 * (1.0 + 1e-12));
            prop_assert!(b1 > 0.0 && b1 <= 1.0 + 1e-12);
        }

        #[test]
        fn witness_epsilon_at_most_an_eighth(s2 in 1e-3f64..10.0, extra in 0.0f64..20.0) {
            let w = witness_from_moments(s2, s2 * s2 * (1.0 + extra)).unwrap();
            prop_assert!(w.epsilon > 0.0 && w.epsilon <= 0.125);
        }
    }
}
