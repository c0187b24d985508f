//! Globally adaptive Gauss–Kronrod (7/15) integration.
//!
//! The panel with the largest error estimate is bisected until the summed
//! estimate drops below the absolute tolerance.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { tol: 1e-10, max_panels: 200 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
}

/// Values the integrator can accumulate.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

fn gk15<T: QuadValue, F>(f: &mut F, a: f64, b: f64) -> Result<Panel<T>>
where
    F: FnMut(f64) -> Result<T>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx)? + f(center + dx)?;
        kron = kron + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).magnitude();
    Ok(Panel { a, b, value, error })
}

/// `∫_a^b f`, with `a > b` allowed (sign flips).
pub fn integrate<T: QuadValue, F>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Quadrature<T>>
where
    F: FnMut(f64) -> Result<T>,
{
    if !(spec.tol > 0.0) || spec.max_panels == 0 {
        return Err(crate::error::invalid("quadrature needs tol > 0 and max_panels >= 1"));
    }
    if a == b {
        return Ok(Quadrature { value: T::zero(), error: 0.0, panels: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut panels = vec![gk15(&mut f, lo, hi)?];
    loop {
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if error <= spec.tol {
            break;
        }
        if panels.len() >= spec.max_panels {
            return Err(Error::QuadratureFailed {
                tol: spec.tol,
                panels: panels.len(),
                estimate: error,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(gk15(&mut f, p.a, mid)?);
        panels.push(gk15(&mut f, mid, p.b)?);
    }
    // Sum in left-to-right order so the result does not depend on refinement history.
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = T::zero();
    let mut error = 0.0;
    for p in &panels {
        value = value + p.value;
        error += p.error;
    }
    Ok(Quadrature { value: value * sign, error, panels: panels.len() })
}
