//! Generating functions of general one-particle observables `dΓ(O)`.
//!
//! For a Hermitian `O` on the lattice modes, `Λ_O(λ)` is obtained by
//! integrating
//!
//! ```text
//! d/dκ Λ_O(κ) = Σ_{p,q} s_p c_q O_{p,q} F̂_{p,q}(κ) + Σ_p O_{p,p} s_p²
//! ```
//!
//! where `F̂ = A + D[F̂]` is solved at every quadrature node. `A` and `D` are
//! assembled from `M = e^{κO}`, `N = e^{−κO}`, the negation permutation `R`
//! and `C = diag(c)`, `S = diag(s)`. Every term is bilinear in a pair of
//! exponentials, so it is expanded around `M = N = I`; the pieces that
//! cancel analytically are never formed, which makes `O = 0` and `κ = 0`
//! give exact zeros.
//!
//! Two kernel forms are available, see [`KernelForm`].

mod kernels;
mod solve;

use std::io::Read;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{c64, hermitian_defect, CMat, HermitianExp};
use crate::spectrum::SpectrumKernel;
use crate::sum::ksum;

pub use kernels::{NodeKernels, SeparableMap};
pub use solve::{
    certified_domain, d_norm_bound, d_norm_report, log_mgf_diagonal_sequence,
    log_mgf_diagonal_sequence_closed, log_mgf_general, solve_f, symmetry_residual,
    FixedPointSolution, GeneralOptions, GeneralSample, NormReport, SolveMethod, SolveOptions,
};

/// Which fixed-point equation for `F̂` is used.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelForm {
    /// `F̂ = A + Σ_i L_i F̂^H R_i`. Derived without assuming the pointwise
    /// relation `c_q s_p F_{p,q} = c_p s_q conj(F_{q,p})`, which the exact
    /// quasi-free `F` does not satisfy for non-diagonal `O`. Agrees with the
    /// Fock-space oracle.
    #[default]
    Conjugate,
    /// The complex-linear `A`/`D` kernels transcribed term by term, with the
    /// index and conjugation pattern exactly as printed.
    Printed,
}

#[derive(Clone, Debug)]
pub struct ObservableKernel {
    matrix: CMat,
    hermitian: bool,
    eig: HermitianExp,
}

const HERMITIAN_TOL: f64 = 1e-12;

impl ObservableKernel {
    /// Wraps a Hermitian matrix indexed like `lattice`. The input is
    /// symmetrized after the hermiticity check.
    pub fn new(lattice: &Lattice, matrix: CMat) -> Result<Self> {
        let n = lattice.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n}x{n}"),
                found: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("observable has non-finite entries"));
        }
        let scale = matrix.iter().fold(1.0f64, |m, z| m.max(z.norm()));
        if hermitian_defect(&matrix) > HERMITIAN_TOL * scale {
            return Err(invalid("observable must be Hermitian"));
        }
        let matrix = (&matrix + matrix.adjoint()) * c64(0.5, 0.0);
        let eig = HermitianExp::new(&matrix);
        Ok(Self { matrix, hermitian: true, eig })
    }

    pub fn zero(lattice: &Lattice) -> Self {
        let n = lattice.len();
        Self::new(lattice, CMat::zeros(n, n)).expect("zero matrix is Hermitian")
    }

    pub fn identity(lattice: &Lattice) -> Self {
        let n = lattice.len();
        Self::new(lattice, CMat::identity(n, n)).expect("identity is Hermitian")
    }

    pub fn diagonal(lattice: &Lattice, values: &[f64]) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::ShapeMismatch {
                expected: lattice.len().to_string(),
                found: values.len().to_string(),
            });
        }
        let d = DVector::from_iterator(values.len(), values.iter().map(|&x| c64(x, 0.0)));
        Self::new(lattice, CMat::from_diagonal(&d))
    }

    /// Seeded random Hermitian matrix supported on the modes of the first
    /// `pairs` pairs, scaled to spectral norm 1.
    pub fn random(lattice: &Lattice, seed: u64, pairs: usize) -> Result<Self> {
        if pairs == 0 || pairs > lattice.pairs().len() {
            return Err(invalid(format!(
                "random observable needs 1..={} pairs, got {pairs}",
                lattice.pairs().len()
            )));
        }
        let modes: Vec<usize> = lattice.pairs()[..pairs]
            .iter()
            .flat_map(|&(i, j)| [i, j])
            .collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = lattice.len();
        let mut h = CMat::zeros(n, n);
        for &p in &modes {
            for &q in &modes {
                h[(p, q)] = c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
        let h = (&h + h.adjoint()) * c64(0.5, 0.0);
        let norm = HermitianExp::new(&h).spectral_norm();
        let h = if norm > 0.0 { h * c64(1.0 / norm, 0.0) } else { h };
        Self::new(lattice, h)
    }

    /// Reads rows `p, q, re, im` (lattice indices). Lines starting with `#`
    /// are comments and a non-numeric first row is treated as a header.
    /// An entry whose transpose is absent is mirrored as its conjugate.
    pub fn from_csv<R: Read>(lattice: &Lattice, reader: R) -> Result<Self> {
        let n = lattice.len();
        let mut m = CMat::zeros(n, n);
        let mut seen = vec![false; n * n];
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(false)
            .from_reader(reader);
        let mut entries = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
            if rec.len() != 4 {
                return Err(Error::Csv(format!("row {row}: expected 4 fields, found {}", rec.len())));
            }
            let p = match rec[0].parse::<usize>() {
                Ok(p) => p,
                Err(_) if row == 0 => continue,
                Err(e) => return Err(Error::Csv(format!("row {row}: p index: {e}"))),
            };
            let field = |i: usize| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|e| Error::Csv(format!("row {row}: field {i}: {e}")))
            };
            let q = rec[1].parse::<usize>().map_err(|e| Error::Csv(format!("row {row}: q index: {e}")))?;
            if p >= n || q >= n {
                return Err(Error::Csv(format!("row {row}: index out of range for {n} modes")));
            }
            entries.push((p, q, c64(field(2)?, field(3)?)));
        }
        for &(p, q, z) in &entries {
            m[(p, q)] = z;
            seen[p * n + q] = true;
        }
        for &(p, q, z) in &entries {
            if !seen[q * n + p] {
                m[(q, p)] = z.conj();
            }
        }
        Self::new(lattice, m)
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// `e^{κO}`, from the cached eigendecomposition.
    pub fn exp(&self, kappa: f64) -> CMat {
        self.eig.exp(kappa)
    }

    /// `e^{κO} − I`.
    pub fn exp_m1(&self, kappa: f64) -> CMat {
        self.eig.exp_m1(kappa)
    }

    pub fn spectral_norm(&self) -> f64 {
        self.eig.spectral_norm()
    }

    /// Sub-matrix on the given modes, in the given order.
    pub fn restrict(&self, modes: &[usize]) -> CMat {
        CMat::from_fn(modes.len(), modes.len(), |i, j| self.matrix[(modes[i], modes[j])])
    }

    pub(crate) fn check_against(&self, k: &SpectrumKernel) -> Result<()> {
        if self.len() != k.len() {
            return Err(Error::ShapeMismatch {
                expected: k.len().to_string(),
                found: self.len().to_string(),
            });
        }
        Ok(())
    }
}

/// `e^{κO}`.
pub fn exp_of_o(obs: &ObservableKernel, kappa: f64) -> Result<CMat> {
    if !kappa.is_finite() {
        return Err(invalid("kappa must be finite"));
    }
    Ok(obs.exp(kappa))
}

/// `μ_O = Σ_p O_{p,p} s_p²`.
pub fn observable_mean(k: &SpectrumKernel, obs: &ObservableKernel) -> Result<f64> {
    obs.check_against(k)?;
    Ok(ksum((0..k.len()).map(|p| obs.matrix[(p, p)].re * k.s()[p] * k.s()[p])))
}

/// `Σ_{p,q} s_p c_q O_{p,q} F_{p,q}`.
pub(crate) fn contract(k: &SpectrumKernel, obs: &ObservableKernel, f: &CMat) -> Complex64 {
    let n = k.len();
    let (mut re, mut im) = (crate::sum::KahanSum::new(), crate::sum::KahanSum::new());
    for q in 0..n {
        for p in 0..n {
            let z = obs.matrix[(p, q)] * f[(p, q)] * (k.s()[p] * k.c()[q]);
            re.add(z.re);
            im.add(z.im);
        }
    }
    Complex64::new(re.value(), im.value())
}

/// `A(κ)` in the requested form.
pub fn kernel_a(k: &SpectrumKernel, obs: &ObservableKernel, kappa: f64, form: KernelForm) -> Result<CMat> {
    Ok(NodeKernels::build(k, obs, kappa, form)?.a().clone())
}

/// `D(κ)[F]` in the requested form.
pub fn apply_d(
    k: &SpectrumKernel,
    obs: &ObservableKernel,
    kappa: f64,
    f: &CMat,
    form: KernelForm,
) -> Result<CMat> {
    NodeKernels::build(k, obs, kappa, form)?.d().apply(f)
}
