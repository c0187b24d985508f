//! Bogoliubov angles `ν_p = ¼ log(p² / (p² + 16π𝔞))` and derived statistics.

use crate::error::{invalid, Result};
use crate::lattice::Lattice;
use crate::sum::ksum;

/// A group of lattice modes sharing one value of `ν`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Level {
    pub nu: f64,
    pub s: f64,
    pub c: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug)]
pub struct SpectrumKernel {
    lattice: Lattice,
    a16pi: Option<f64>,
    nu: Vec<f64>,
    s: Vec<f64>,
    c: Vec<f64>,
    t: Vec<f64>,
    lambda0: f64,
    levels: Vec<Level>,
}

/// `¼ log(p²/(p²+a16pi))`, evaluated as `-¼ log1p(a16pi/p²)`.
pub fn nu_of(p_squared: f64, a16pi: f64) -> Result<f64> {
    if !(p_squared > 0.0) || !p_squared.is_finite() {
        return Err(invalid(format!("p_squared must be positive, got {p_squared}")));
    }
    if !(a16pi >= 0.0) || !a16pi.is_finite() {
        return Err(invalid(format!("a16pi must be nonnegative, got {a16pi}")));
    }
    Ok(-0.25 * (a16pi / p_squared).ln_1p())
}

impl SpectrumKernel {
    pub fn build(lattice: Lattice, a16pi: f64) -> Result<Self> {
        if !(a16pi >= 0.0) || !a16pi.is_finite() {
            return Err(invalid(format!("a16pi must be nonnegative, got {a16pi}")));
        }
        let nu = (0..lattice.len())
            .map(|i| nu_of(lattice.p_squared(i), a16pi))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(lattice, Some(a16pi), nu))
    }

    /// Kernel with one prescribed angle per pair (in `lattice.pairs()` order).
    pub fn from_pair_nu(lattice: Lattice, nu_by_pair: &[f64]) -> Result<Self> {
        if nu_by_pair.len() != lattice.pairs().len() {
            return Err(invalid(format!(
                "expected {} angles, got {}",
                lattice.pairs().len(),
                nu_by_pair.len()
            )));
        }
        if nu_by_pair.iter().any(|x| !x.is_finite()) {
            return Err(invalid("angles must be finite"));
        }
        let mut nu = vec![0.0; lattice.len()];
        for (&(i, j), &v) in lattice.pairs().iter().zip(nu_by_pair) {
            nu[i] = v;
            nu[j] = v;
        }
        Ok(Self::assemble(lattice, None, nu))
    }

    fn assemble(lattice: Lattice, a16pi: Option<f64>, nu: Vec<f64>) -> Self {
        let s: Vec<f64> = nu.iter().map(|x| x.sinh()).collect();
        let c: Vec<f64> = nu.iter().map(|x| x.cosh()).collect();
        let t: Vec<f64> = nu.iter().map(|x| x.tanh()).collect();
        let lambda0 = t
            .iter()
            .filter(|x| **x != 0.0)
            .map(|x| -x.abs().ln())
            .fold(f64::INFINITY, f64::min);

        let mut order: Vec<usize> = (0..nu.len()).collect();
        order.sort_by(|&a, &b| nu[a].total_cmp(&nu[b]));
        let mut levels: Vec<Level> = Vec::new();
        for i in order {
            match levels.last_mut() {
                Some(l) if l.nu.to_bits() == nu[i].to_bits() => l.multiplicity += 1,
                _ => levels.push(Level { nu: nu[i], s: s[i], c: c[i], multiplicity: 1 }),
            }
        }
        Self { lattice, a16pi, nu, s, c, t, lambda0, levels }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// `16π𝔞`, or `None` when the angles were prescribed directly.
    pub fn a16pi(&self) -> Option<f64> {
        self.a16pi
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    /// Distinct angles with multiplicities, sorted by `ν`.
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Angle of each pair, in `lattice.pairs()` order.
    pub fn nu_by_pair(&self) -> Vec<f64> {
        self.lattice.pairs().iter().map(|&(i, _)| self.nu[i]).collect()
    }

    /// `min_p -log|tanh ν_p|`; infinite when every angle vanishes.
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// Sum of `f(s, c)` over all modes, grouped by level.
    pub fn level_sum(&self, f: impl Fn(&Level) -> f64) -> f64 {
        ksum(self.levels.iter().map(|l| l.multiplicity as f64 * f(l)))
    }

    /// `μ = Σ_p s_p²`.
    pub fn depletion_mean(&self) -> f64 {
        self.level_sum(|l| l.s * l.s)
    }

    /// `σ² = 2 Σ_p s_p² c_p²`.
    pub fn depletion_variance(&self) -> f64 {
        self.level_sum(|l| 2.0 * (l.s * l.c).powi(2))
    }
}

/// Denominator `1 - 2c²s²(cosh 2λ - 1)` of the diagonal integrand for one mode.
pub fn diagonal_denominator(s: f64, c: f64, lambda: f64) -> f64 {
    let sh = lambda.sinh();
    1.0 - 4.0 * c * c * s * s * sh * sh
}

/// Richardson estimate of the infinite-cutoff limit from cutoffs `M` and `2M`,
/// assuming an `O(1/M)` leading error.
pub fn richardson_limit(at_m: f64, at_2m: f64) -> f64 {
    2.0 * at_2m - at_m
}
