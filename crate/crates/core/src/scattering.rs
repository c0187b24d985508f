//! Zero-energy radial scattering problem `u'' = ½ V(r) u`, `u(0) = 0`.
//!
//! Outside the support `u` is exactly linear, `u ∝ r − a_std`. The solution
//! is normalized so that `f = u/r → 1`, which gives
//! `∫ V f dx = 4π ∫ V u r dr = 8π a_std`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    SquareWell { height: f64, radius: f64 },
    /// `amplitude · exp(−r²/width²)` cut off at `support_radius`.
    GaussianTruncated { amplitude: f64, width: f64, support_radius: f64 },
    /// Scattering length supplied directly; no solve.
    Direct { a: f64 },
}

/// Which number feeds `16π𝔞` in the Bogoliubov angles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `𝔞 = ∫ V f dx` taken literally.
    #[default]
    Paper,
    /// `𝔞 = a_std`, the asymptotic intercept of `u`.
    Standard,
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite();
        match *self {
            Self::Zero => Ok(()),
            Self::SquareWell { height, radius } => {
                if !ok(height) || height < 0.0 {
                    return Err(invalid("square well height must be finite and nonnegative"));
                }
                if !ok(radius) || radius <= 0.0 {
                    return Err(invalid("square well radius must be positive"));
                }
                Ok(())
            }
            Self::GaussianTruncated { amplitude, width, support_radius } => {
                if !ok(amplitude) || amplitude < 0.0 {
                    return Err(invalid("gaussian amplitude must be finite and nonnegative"));
                }
                if !ok(width) || width <= 0.0 {
                    return Err(invalid("gaussian width must be positive"));
                }
                if !ok(support_radius) || support_radius <= 0.0 {
                    return Err(invalid("gaussian support radius must be positive"));
                }
                Ok(())
            }
            Self::Direct { a } => {
                if ok(a) {
                    Ok(())
                } else {
                    Err(invalid("direct scattering length must be finite"))
                }
            }
        }
    }

    /// Radius beyond which `V = 0`; zero for the zero potential.
    pub fn support_radius(&self) -> f64 {
        match *self {
            Self::Zero | Self::Direct { .. } => 0.0,
            Self::SquareWell { radius, .. } => radius,
            Self::GaussianTruncated { support_radius, .. } => support_radius,
        }
    }

    fn vanishes(&self) -> bool {
        match *self {
            Self::Zero => true,
            Self::SquareWell { height, .. } => height == 0.0,
            Self::GaussianTruncated { amplitude, .. } => amplitude == 0.0,
            Self::Direct { .. } => false,
        }
    }

    /// `V(r)` for `r` inside the support, without the cutoff step.
    fn inner(&self, r: f64) -> f64 {
        match *self {
            Self::SquareWell { height, .. } => height,
            Self::GaussianTruncated { amplitude, width, .. } => {
                amplitude * (-(r * r) / (width * width)).exp()
            }
            Self::Zero | Self::Direct { .. } => 0.0,
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.support_radius() {
            self.inner(r)
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringSolution {
    pub radii: Vec<f64>,
    /// `u(r)` normalized so that `u(r) = r − a_std` outside the support.
    pub profile: Vec<f64>,
    pub a_std: f64,
    pub a_paper: f64,
    /// Step-doubling estimate of the integration error relative to `max |u|`.
    pub residual: f64,
    pub n_grid: usize,
}

impl ScatteringSolution {
    pub fn f(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.radii
            .iter()
            .zip(&self.profile)
            .skip(1)
            .map(|(&r, &u)| (r, u / r))
    }

    pub fn scattering_length(&self, convention: Convention) -> f64 {
        match convention {
            Convention::Paper => self.a_paper,
            Convention::Standard => self.a_std,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_refinements: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_refinements: 6 }
    }
}

pub const DEFAULT_N_GRID: usize = 4096;
pub const DEFAULT_RMAX_FACTOR: f64 = 4.0;

/// Raw RK4 grid: radii, `u`, and the accumulated `4π ∫ V u r dr`.
struct Grid {
    radii: Vec<f64>,
    u: Vec<f64>,
    vol: Vec<f64>,
}

fn integrate_grid(pot: &PotentialSpec, r_max: f64, n_grid: usize) -> Grid {
    let big_r = pot.support_radius();
    // Put a node exactly on the support edge so no step straddles the jump.
    let n_in = ((n_grid as f64 * big_r / r_max).round() as usize).clamp(1, n_grid - 1);
    let n_out = n_grid - n_in;
    let mut radii = Vec::with_capacity(n_grid + 1);
    let mut u = Vec::with_capacity(n_grid + 1);
    let mut vol = Vec::with_capacity(n_grid + 1);
    let mut y = [0.0, 1.0, 0.0];
    let mut r = 0.0;
    radii.push(r);
    u.push(y[0]);
    vol.push(y[2]);

    let rhs = |r: f64, y: &[f64; 3], inside: bool| -> [f64; 3] {
        let v = if inside { pot.inner(r) } else { 0.0 };
        [y[1], 0.5 * v * y[0], 4.0 * PI * v * y[0] * r]
    };
    let axpy = |y: &[f64; 3], h: f64, k: &[f64; 3]| [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]];

    for (steps, end, inside) in [(n_in, big_r, true), (n_out, r_max, false)] {
        let start = r;
        let h = (end - start) / steps as f64;
        for i in 0..steps {
            let k1 = rhs(r, &y, inside);
            let k2 = rhs(r + 0.5 * h, &axpy(&y, 0.5 * h, &k1), inside);
            let k3 = rhs(r + 0.5 * h, &axpy(&y, 0.5 * h, &k2), inside);
            let k4 = rhs(r + h, &axpy(&y, h, &k3), inside);
            for j in 0..3 {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            r = if i + 1 == steps { end } else { start + (i + 1) as f64 * h };
            radii.push(r);
            u.push(y[0]);
            vol.push(y[2]);
        }
    }
    Grid { radii, u, vol }
}

/// Least-squares line `u = α r + β` through the nodes with `r ≥ r_from`.
fn fit_line(radii: &[f64], u: &[f64], r_from: f64) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(u)
        .filter(|(r, _)| **r >= r_from)
        .map(|(&r, &u)| (r, u))
        .collect();
    let n = pts.len() as f64;
    let mr = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mu = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mr) * (p.1 - mu)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mr).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, mu - slope * mr)
}

fn finish(pot: &PotentialSpec, g: &Grid, residual: f64) -> ScatteringSolution {
    let (slope, intercept) = fit_line(&g.radii, &g.u, pot.support_radius());
    let profile: Vec<f64> = g.u.iter().map(|x| x / slope).collect();
    ScatteringSolution {
        a_std: -intercept / slope,
        a_paper: g.vol.last().copied().unwrap_or(0.0) / slope,
        radii: g.radii.clone(),
        profile,
        residual,
        n_grid: g.radii.len() - 1,
    }
}

pub fn solve_scattering(pot: &PotentialSpec, r_max: f64, n_grid: usize) -> Result<ScatteringSolution> {
    solve_scattering_with(pot, r_max, n_grid, &SolverOptions::default())
}

pub fn solve_scattering_with(
    pot: &PotentialSpec,
    r_max: f64,
    n_grid: usize,
    opts: &SolverOptions,
) -> Result<ScatteringSolution> {
    pot.validate()?;
    if let PotentialSpec::Direct { .. } = pot {
        return Err(invalid("direct scattering length has no radial problem"));
    }
    if n_grid < 64 {
        return Err(invalid("n_grid must be at least 64"));
    }
    let big_r = pot.support_radius();
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(invalid("r_max must be positive"));
    }
    if pot.vanishes() {
        let radii: Vec<f64> = (0..=n_grid).map(|i| r_max * i as f64 / n_grid as f64).collect();
        return Ok(ScatteringSolution {
            profile: radii.clone(),
            radii,
            a_std: 0.0,
            a_paper: 0.0,
            residual: 0.0,
            n_grid,
        });
    }
    if r_max < 2.0 * big_r {
        return Err(invalid(format!(
            "r_max = {r_max} smaller than twice the support radius {big_r}"
        )));
    }

    let mut n = n_grid;
    let mut coarse = integrate_grid(pot, r_max, n);
    for _ in 0..=opts.max_refinements {
        let fine = integrate_grid(pot, r_max, 2 * n);
        let scale = fine.u.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        // Coarse node i coincides with fine node 2i; RK4 error drops by 16 per halving.
        let residual = coarse
            .u
            .iter()
            .enumerate()
            .map(|(i, x)| (x - fine.u[2 * i]).abs())
            .fold(0.0f64, f64::max)
            / (15.0 * scale);
        if residual <= opts.tol {
            return Ok(finish(pot, &coarse, residual));
        }
        n *= 2;
        coarse = fine;
    }
    Err(Error::NotConverged(format!(
        "radial solve residual above {:e} after {} refinements",
        opts.tol, opts.max_refinements
    )))
}

/// Scattering length under the chosen convention. Uses `r_max = 4R` and
/// 4096 steps for non-direct potentials.
pub fn scattering_length(pot: &PotentialSpec, convention: Convention) -> Result<f64> {
    pot.validate()?;
    match *pot {
        PotentialSpec::Direct { a } => Ok(a),
        _ if pot.vanishes() => Ok(0.0),
        _ => {
            let r_max = DEFAULT_RMAX_FACTOR * pot.support_radius();
            let sol = solve_scattering(pot, r_max, DEFAULT_N_GRID)?;
            Ok(sol.scattering_length(convention))
        }
    }
}

/// `16π𝔞` for the angle formula.
pub fn a16pi(pot: &PotentialSpec, convention: Convention) -> Result<f64> {
    Ok(16.0 * PI * scattering_length(pot, convention)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn well_closed_form(v: f64, r: f64) -> f64 {
        let k = (0.5 * v).sqrt();
        r - (k * r).tanh() / k
    }

    // mpmath, 40 digits, v = 1, R = 0.1
    const A_STD_V1: f64 = 1.663_340_065_724_290_6e-4;
    const A_PAPER_V1: f64 = 4.180_429_544_720_796_2e-3;
    const A_STD_V1000: f64 = 5.628_879_598_389_263_9e-2;

    #[test]
    fn zero_potential() {
        let s = solve_scattering(&PotentialSpec::Zero, 1.0, 128).unwrap();
        assert_eq!((s.a_std, s.a_paper), (0.0, 0.0));
        assert_eq!(scattering_length(&PotentialSpec::Zero, Convention::Paper).unwrap(), 0.0);
        let flat = PotentialSpec::SquareWell { height: 0.0, radius: 0.3 };
        assert_eq!(scattering_length(&flat, Convention::Standard).unwrap(), 0.0);
    }

    #[test]
    fn direct_passes_through() {
        let p = PotentialSpec::Direct { a: 0.01 };
        assert_eq!(scattering_length(&p, Convention::Paper).unwrap(), 0.01);
        assert_eq!(scattering_length(&p, Convention::Standard).unwrap(), 0.01);
        assert!(solve_scattering(&p, 1.0, 128).is_err());
    }

    #[test]
    fn square_well_matches_closed_form() {
        let p = PotentialSpec::SquareWell { height: 1.0, radius: 0.1 };
        let s = solve_scattering(&p, 0.4, 4096).unwrap();
        assert!((s.a_std / A_STD_V1 - 1.0).abs() < 1e-8);
        assert!((s.a_std / well_closed_form(1.0, 0.1) - 1.0).abs() < 1e-8);
        assert!((s.a_paper / A_PAPER_V1 - 1.0).abs() < 1e-8);
        assert!((scattering_length(&p, Convention::Paper).unwrap() / A_PAPER_V1 - 1.0).abs() < 1e-8);
        assert!(s.residual <= 1e-10);
    }

    #[test]
    fn strong_square_well() {
        let p = PotentialSpec::SquareWell { height: 1000.0, radius: 0.1 };
        let s = solve_scattering(&p, 0.4, 4096).unwrap();
        assert!((s.a_std / A_STD_V1000 - 1.0).abs() < 1e-8);
        assert!((s.a_paper / (8.0 * PI * s.a_std) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn born_limit() {
        let (v, r) = (1e-4, 0.2);
        let p = PotentialSpec::SquareWell { height: v, radius: r };
        let s = solve_scattering(&p, 4.0 * r, 4096).unwrap();
        let born = 4.0 * PI / 3.0 * v * r.powi(3);
        assert!((s.a_paper / born - 1.0).abs() < 0.01);
    }

    #[test]
    fn profile_shape() {
        let p = PotentialSpec::GaussianTruncated { amplitude: 50.0, width: 0.05, support_radius: 0.15 };
        let s = solve_scattering(&p, 0.6, 2048).unwrap();
        for (r, f) in s.f() {
            assert!(f > 0.0 && f <= 1.0 + 1e-12, "f({r}) = {f}");
        }
        let edge = s.radii.iter().position(|&r| r >= 0.15).unwrap();
        let f_edge = s.profile[edge] / s.radii[edge];
        assert!((f_edge - (1.0 - s.a_std / s.radii[edge])).abs() < 1e-10);
        assert!((s.a_paper / (8.0 * PI * s.a_std) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn support_edge_is_a_node() {
        let p = PotentialSpec::SquareWell { height: 3.0, radius: 0.123 };
        let s = solve_scattering(&p, 0.5, 512).unwrap();
        assert!(s.radii.contains(&0.123));
    }

    #[test]
    fn input_errors() {
        let p = PotentialSpec::SquareWell { height: 1.0, radius: 0.1 };
        assert!(solve_scattering(&p, 0.15, 4096).is_err());
        assert!(solve_scattering(&p, 0.4, 32).is_err());
        assert!(PotentialSpec::SquareWell { height: -1.0, radius: 0.1 }.validate().is_err());
        assert!(PotentialSpec::SquareWell { height: 1.0, radius: 0.0 }.validate().is_err());
        assert!(PotentialSpec::Direct { a: f64::NAN }.validate().is_err());
    }

    #[test]
    fn refinement_failure_is_reported() {
        let p = PotentialSpec::SquareWell { height: 1e6, radius: 0.1 };
        let opts = SolverOptions { tol: 1e-16, max_refinements: 0 };
        assert!(matches!(solve_scattering_with(&p, 0.4, 64, &opts), Err(Error::NotConverged(_))));
    }

    #[test]
    fn step_halving_converges_at_fourth_order() {
        let p = PotentialSpec::GaussianTruncated { amplitude: 200.0, width: 0.08, support_radius: 0.2 };
        let opts = SolverOptions { tol: 1.0, max_refinements: 0 };
        let a = |n| solve_scattering_with(&p, 0.8, n, &opts).unwrap().a_std;
        let (a1, a2, a3) = (a(128), a(256), a(512));
        let ratio = (a1 - a2) / (a2 - a3);
        assert!(ratio > 10.0, "ratio {ratio}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn square_well_monotone_in_height(v in 0.1f64..500.0, dv in 0.1f64..50.0, r in 0.05f64..0.3) {
            let a = |v| solve_scattering(&PotentialSpec::SquareWell { height: v, radius: r }, 4.0 * r, 1024)
                .unwrap()
                .a_std;
            prop_assert!(a(v + dv) > a(v));
        }

        #[test]
        fn volume_integral_is_eight_pi_a(v in 0.1f64..500.0, r in 0.05f64..0.3) {
            let s = solve_scattering(&PotentialSpec::SquareWell { height: v, radius: r }, 4.0 * r, 4096).unwrap();
            prop_assert!((s.a_paper / (8.0 * PI * s.a_std) - 1.0).abs() < 1e-6);
            prop_assert!((s.a_std / well_closed_form(v, r) - 1.0).abs() < 1e-8);
        }
    }
}
