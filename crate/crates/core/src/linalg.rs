//! Small dense complex linear-algebra helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Unitary diagonalization `O = U diag(w) U^H`, reused for every `κ`.
#[derive(Clone, Debug)]
pub struct HermitianExp {
    values: DVector<f64>,
    vectors: CMat,
}

impl HermitianExp {
    pub fn new(o: &CMat) -> Self {
        let eig = SymmetricEigen::new(o.clone());
        Self { values: eig.eigenvalues, vectors: eig.eigenvectors }
    }

    fn spectral(&self, g: impl Fn(f64) -> f64) -> CMat {
        let mut scaled = self.vectors.clone();
        for (j, &w) in self.values.iter().enumerate() {
            let f = g(w);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= f);
        }
        &scaled * self.vectors.adjoint()
    }

    /// `e^{κO}`.
    pub fn exp(&self, kappa: f64) -> CMat {
        self.spectral(|w| (kappa * w).exp())
    }

    /// `e^{κO} − I`, accurate for small `κ`.
    pub fn exp_m1(&self, kappa: f64) -> CMat {
        self.spectral(|w| (kappa * w).exp_m1())
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn spectral_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, w| m.max(w.abs()))
    }
}

/// Largest singular value.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().fold(0.0, |a, &b| a.max(b))
}

/// `diag(d) · X`.
pub fn scale_rows(d: &[f64], x: &CMat) -> CMat {
    let mut y = x.clone();
    for (i, mut row) in y.row_iter_mut().enumerate() {
        row *= Complex64::from(d[i]);
    }
    y
}

/// `X · diag(d)`.
pub fn scale_cols(x: &CMat, d: &[f64]) -> CMat {
    let mut y = x.clone();
    for (j, mut col) in y.column_iter_mut().enumerate() {
        col *= Complex64::from(d[j]);
    }
    y
}

/// `R X` for an involutive permutation `R`: row `i` is taken from row `perm[i]`.
pub fn permute_rows(perm: &[usize], x: &CMat) -> CMat {
    CMat::from_fn(x.nrows(), x.ncols(), |i, j| x[(perm[i], j)])
}

/// `X R` for an involutive permutation `R`: column `j` is taken from column `perm[j]`.
pub fn permute_cols(x: &CMat, perm: &[usize]) -> CMat {
    CMat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, perm[j])])
}

/// Hermiticity defect `max |O − O^H|`.
pub fn hermitian_defect(m: &CMat) -> f64 {
    (m - m.adjoint()).iter().fold(0.0, |a, z| a.max(z.norm()))
}
