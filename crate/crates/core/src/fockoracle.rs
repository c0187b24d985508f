//! Truncated bosonic Fock space on one or two momentum pairs.
//!
//! Modes `2i` and `2i + 1` form pair `i` and are each other's negation. Basis
//! vectors are occupation tuples in lexicographic order, the first mode being
//! the most significant digit, so the vacuum is index 0. Operators are stored
//! sparse and exponentials are only ever applied to vectors, by a Taylor
//! series with scaling.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{c64, CMat};

pub const DEFAULT_DIM_CAP: usize = 20_000;
pub const MAX_PAIRS: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockSpace {
    pairs: usize,
    n_max: usize,
    dim: usize,
    strides: Vec<usize>,
}

impl FockSpace {
    pub fn build(pairs: usize, n_max: usize) -> Result<Self> {
        Self::build_with_cap(pairs, n_max, DEFAULT_DIM_CAP)
    }

    pub fn build_with_cap(pairs: usize, n_max: usize, cap: usize) -> Result<Self> {
        if !(1..=MAX_PAIRS).contains(&pairs) {
            return Err(invalid(format!("the Fock oracle supports 1 or 2 pairs, got {pairs}")));
        }
        if n_max < 2 {
            return Err(invalid("n_max must be at least 2"));
        }
        let modes = 2 * pairs;
        let dim = (n_max + 1)
            .checked_pow(modes as u32)
            .ok_or(Error::DimensionCap { dim: usize::MAX, cap })?;
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        let strides = (0..modes).map(|m| (n_max + 1).pow((modes - 1 - m) as u32)).collect();
        Ok(Self { pairs, n_max, dim, strides })
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn modes(&self) -> usize {
        2 * self.pairs
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Mode paired with `mode` under `p → −p`.
    pub fn neg(mode: usize) -> usize {
        mode ^ 1
    }

    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        (index / self.strides[mode]) % (self.n_max + 1)
    }

    pub fn occupations(&self, index: usize) -> Vec<usize> {
        (0..self.modes()).map(|m| self.occupation(index, m)).collect()
    }

    pub fn index_of(&self, occ: &[usize]) -> Result<usize> {
        if occ.len() != self.modes() || occ.iter().any(|&n| n > self.n_max) {
            return Err(invalid("occupation tuple outside the truncated space"));
        }
        Ok(occ.iter().zip(&self.strides).map(|(n, s)| n * s).sum())
    }

    pub fn total_occupation(&self, index: usize) -> usize {
        (0..self.modes()).map(|m| self.occupation(index, m)).sum()
    }

    pub fn max_occupation(&self, index: usize) -> usize {
        (0..self.modes()).map(|m| self.occupation(index, m)).max().unwrap_or(0)
    }

    /// Some mode sits at the cutoff.
    pub fn on_top_shell(&self, index: usize) -> bool {
        self.max_occupation(index) == self.n_max
    }

    pub fn vacuum(&self) -> Vec<Complex64> {
        let mut v = vec![c64(0.0, 0.0); self.dim];
        v[0] = c64(1.0, 0.0);
        v
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes() {
            return Err(invalid(format!("mode {mode} out of range for {} modes", self.modes())));
        }
        Ok(())
    }
}

/// Lattice indices of the Fock modes: pair `i` of the lattice becomes modes
/// `2i` (the representative) and `2i + 1` (its negation).
pub fn fock_modes(lattice: &Lattice, pairs: usize) -> Result<Vec<usize>> {
    if pairs > lattice.pairs().len() {
        return Err(invalid(format!("lattice has only {} pairs", lattice.pairs().len())));
    }
    Ok(lattice.pairs()[..pairs].iter().flat_map(|&(i, j)| [i, j]).collect())
}

/// Sparse operator in compressed-row form.
#[derive(Clone, Debug)]
pub struct FockOperator {
    label: String,
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl FockOperator {
    /// Builds from `(row, col, value)` triplets, summing duplicates and
    /// dropping exact zeros.
    pub fn from_triplets(label: impl Into<String>, dim: usize, triplets: Vec<(usize, usize, Complex64)>) -> Self {
        let mut rows: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in triplets {
            *rows[r].entry(c).or_insert(c64(0.0, 0.0)) += v;
        }
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v != c64(0.0, 0.0) {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { label: label.into(), dim, indptr, indices, values }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let range = self.indptr[row]..self.indptr[row + 1];
        match self.indices[range.clone()].binary_search(&col) {
            Ok(k) => self.values[range.start + k],
            Err(_) => c64(0.0, 0.0),
        }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim, "vector length does not match operator dimension");
        (0..self.dim)
            .map(|r| {
                (self.indptr[r]..self.indptr[r + 1])
                    .map(|k| self.values[k] * v[self.indices[k]])
                    .sum()
            })
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        let t = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(format!("({})^H", self.label), self.dim, t)
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= z);
        out.label = format!("{z}*{}", self.label);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let t = self.triplets().chain(other.triplets()).collect();
        Self::from_triplets(format!("{}+{}", self.label, other.label), self.dim, t)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(c64(-1.0, 0.0)))
    }

    /// Sparse product `self · other`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut t = Vec::new();
        for r in 0..self.dim {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let (mid, a) = (self.indices[k], self.values[k]);
                for j in other.indptr[mid]..other.indptr[mid + 1] {
                    t.push((r, other.indices[j], a * other.values[j]));
                }
            }
        }
        Self::from_triplets(format!("{}*{}", self.label, other.label), self.dim, t)
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut cols = vec![0.0; self.dim];
        for (_, c, v) in self.triplets() {
            cols[c] += v.norm();
        }
        cols.into_iter().fold(0.0, f64::max)
    }
}

pub fn op_annihilate(space: &FockSpace, mode: usize) -> Result<FockOperator> {
    space.check_mode(mode)?;
    let s = space.strides[mode];
    let t = (0..space.dim)
        .filter_map(|j| {
            let n = space.occupation(j, mode);
            (n > 0).then(|| (j - s, j, c64((n as f64).sqrt(), 0.0)))
        })
        .collect();
    Ok(FockOperator::from_triplets(format!("a_{mode}"), space.dim, t))
}

pub fn op_create(space: &FockSpace, mode: usize) -> Result<FockOperator> {
    space.check_mode(mode)?;
    let s = space.strides[mode];
    let t = (0..space.dim)
        .filter_map(|j| {
            let n = space.occupation(j, mode);
            (n < space.n_max).then(|| (j + s, j, c64(((n + 1) as f64).sqrt(), 0.0)))
        })
        .collect();
    Ok(FockOperator::from_triplets(format!("a+_{mode}"), space.dim, t))
}

pub fn op_number(space: &FockSpace, mode: usize) -> Result<FockOperator> {
    space.check_mode(mode)?;
    let t = (0..space.dim).map(|j| (j, j, c64(space.occupation(j, mode) as f64, 0.0))).collect();
    Ok(FockOperator::from_triplets(format!("n_{mode}"), space.dim, t))
}

/// `max |([a_p, a_q^†] − δ_{pq})_{ij}|` over columns off the top shell.
pub fn ccr_defect(space: &FockSpace, p: usize, q: usize) -> Result<f64> {
    let comm = op_annihilate(space, p)?
        .compose(&op_create(space, q)?)
        .sub(&op_create(space, q)?.compose(&op_annihilate(space, p)?));
    let mut worst = 0.0f64;
    for j in (0..space.dim).filter(|&j| !space.on_top_shell(j)) {
        for i in 0..space.dim {
            let want = if i == j && p == q { 1.0 } else { 0.0 };
            worst = worst.max((comm.get(i, j) - c64(want, 0.0)).norm());
        }
    }
    Ok(worst)
}

/// `K = Σ_i ν_i (a^†_{2i} a^†_{2i+1} − a_{2i} a_{2i+1})`, so that
/// `e^{−K} a_p e^{K} = cosh ν a_p + sinh ν a^†_{−p}`.
pub fn build_bogoliubov_generator(space: &FockSpace, nu_by_pair: &[f64]) -> Result<FockOperator> {
    if nu_by_pair.len() != space.pairs {
        return Err(Error::ShapeMismatch {
            expected: space.pairs.to_string(),
            found: nu_by_pair.len().to_string(),
        });
    }
    if nu_by_pair.iter().any(|x| !x.is_finite()) {
        return Err(invalid("nu must be finite"));
    }
    let mut t = Vec::new();
    for (i, &nu) in nu_by_pair.iter().enumerate() {
        if nu == 0.0 {
            continue;
        }
        let (p, q) = (2 * i, 2 * i + 1);
        let stride = space.strides[p] + space.strides[q];
        for j in 0..space.dim {
            let (np, nq) = (space.occupation(j, p), space.occupation(j, q));
            if np < space.n_max && nq < space.n_max {
                let amp = (((np + 1) * (nq + 1)) as f64).sqrt();
                t.push((j + stride, j, c64(nu * amp, 0.0)));
            }
            if np > 0 && nq > 0 {
                let amp = ((np * nq) as f64).sqrt();
                t.push((j - stride, j, c64(-nu * amp, 0.0)));
            }
        }
    }
    Ok(FockOperator::from_triplets("K", space.dim, t))
}

/// `dΓ(O) = Σ_{p,q} O_{p,q} a^†_p a_q` for a matrix on the Fock modes.
pub fn second_quantize(space: &FockSpace, o: &CMat) -> Result<FockOperator> {
    let n = space.modes();
    if o.nrows() != n || o.ncols() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n}x{n}"),
            found: format!("{}x{}", o.nrows(), o.ncols()),
        });
    }
    let mut t = Vec::new();
    for j in 0..space.dim {
        for q in 0..n {
            let nq = space.occupation(j, q);
            if nq == 0 {
                continue;
            }
            let lowered = j - space.strides[q];
            for p in 0..n {
                let z = o[(p, q)];
                if z == c64(0.0, 0.0) {
                    continue;
                }
                let np = space.occupation(lowered, p);
                if np < space.n_max {
                    let amp = ((nq * (np + 1)) as f64).sqrt();
                    t.push((lowered + space.strides[p], j, z * amp));
                }
            }
        }
    }
    Ok(FockOperator::from_triplets("dGamma(O)", space.dim, t))
}

const EXPM_TOL: f64 = 1e-15;
const EXPM_MAX_TERMS: usize = 200;

/// `e^{tA} v` by a Taylor series on `s` sub-steps with `‖tA/s‖₁ ≤ 1`.
pub fn expm_action(op: &FockOperator, t: Complex64, v: &[Complex64]) -> Result<Vec<Complex64>> {
    let norm = op.one_norm() * t.norm();
    if !norm.is_finite() {
        return Err(invalid("non-finite exponent"));
    }
    let steps = norm.ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let inf = |x: &[Complex64]| x.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut out = v.to_vec();
    for _ in 0..steps {
        let mut term = out.clone();
        let mut sum = out.clone();
        let mut small = 0;
        let mut k = 1;
        while small < 2 {
            if k > EXPM_MAX_TERMS {
                return Err(Error::NotConverged("Taylor series for the exponential action".into()));
            }
            let hk = h / k as f64;
            term = op.apply(&term).into_iter().map(|z| z * hk).collect();
            sum.iter_mut().zip(&term).for_each(|(s, t)| *s += t);
            let scale = inf(&sum);
            small = if inf(&term) <= EXPM_TOL * scale || scale == 0.0 { small + 1 } else { 0 };
            k += 1;
        }
        out = sum;
    }
    Ok(out)
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    /// Largest allowed norm of the quasi-free vector on the top shell.
    pub truncation_threshold: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { truncation_threshold: 1e-6 }
    }
}

/// `e^{K}Ω` together with its weight on the top shell.
#[derive(Clone, Debug)]
pub struct QuasiFreeVector {
    pub vector: Vec<Complex64>,
    pub truncation: f64,
}

pub fn quasi_free_vector(space: &FockSpace, nu_by_pair: &[f64]) -> Result<QuasiFreeVector> {
    let k = build_bogoliubov_generator(space, nu_by_pair)?;
    let vector = expm_action(&k, c64(1.0, 0.0), &space.vacuum())?;
    let truncation = (0..space.dim)
        .filter(|&j| space.on_top_shell(j))
        .map(|j| vector[j].norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(QuasiFreeVector { vector, truncation })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    pub imag: f64,
    pub truncation: f64,
    pub norm: f64,
}

/// `⟨v, e^{λ dΓ(O)} v⟩` with `v = e^{K}Ω`.
pub fn mgf_oracle(space: &FockSpace, nu_by_pair: &[f64], o: &CMat, lambda: f64) -> Result<OracleValue> {
    mgf_oracle_with(space, nu_by_pair, o, lambda, &OracleOptions::default())
}

pub fn mgf_oracle_with(
    space: &FockSpace,
    nu_by_pair: &[f64],
    o: &CMat,
    lambda: f64,
    opts: &OracleOptions,
) -> Result<OracleValue> {
    if !lambda.is_finite() {
        return Err(invalid("lambda must be finite"));
    }
    check_hermitian(o)?;
    let qf = quasi_free_vector(space, nu_by_pair)?;
    if qf.truncation > opts.truncation_threshold {
        return Err(Error::Truncation { estimate: qf.truncation, threshold: opts.truncation_threshold });
    }
    let dg = second_quantize(space, o)?;
    let w = expm_action(&dg, c64(lambda, 0.0), &qf.vector)?;
    let z = inner(&qf.vector, &w);
    Ok(OracleValue { value: z.re, imag: z.im, truncation: qf.truncation, norm: norm2(&qf.vector) })
}

fn check_hermitian(o: &CMat) -> Result<()> {
    let scale = o.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    if crate::linalg::hermitian_defect(o) > 1e-12 * scale {
        return Err(invalid("observable must be Hermitian"));
    }
    Ok(())
}

fn frobenius_on(
    space: &FockSpace,
    columns: impl Iterator<Item = usize>,
    mut defect: impl FnMut(&[Complex64]) -> Result<Vec<Complex64>>,
) -> Result<f64> {
    let mut total = 0.0;
    for j in columns {
        let mut e = vec![c64(0.0, 0.0); space.dim];
        e[j] = c64(1.0, 0.0);
        total += defect(&e)?.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    Ok(total.sqrt())
}

/// Defect of `e^{dΓ(O)} a^†_p e^{−dΓ(O)} = a^†((e^{O})_{·,p})` on the basis
/// states of total occupation at most `n_max − 2`.
///
/// The identity is checked in the equivalent intertwined form
/// `e^{dΓ(O')} a^†_p x = a^†((e^{O'})_{·,p}) e^{dΓ(O')} x` with
/// `O' = O − w_max I`, so that only the contraction `e^{dΓ(O')}` is applied.
/// The returned value is the Frobenius norm of the difference.
pub fn bch_check(space: &FockSpace, o: &CMat, p: usize) -> Result<f64> {
    check_hermitian(o)?;
    space.check_mode(p)?;
    let eig = crate::linalg::HermitianExp::new(o);
    let shift = eig.eigenvalues().iter().fold(f64::NEG_INFINITY, |m, &w| m.max(w));
    let shifted = o - CMat::identity(o.nrows(), o.ncols()) * c64(shift, 0.0);
    let dg = second_quantize(space, &shifted)?;
    let e = crate::linalg::HermitianExp::new(&shifted).exp(1.0);
    let creators: Vec<FockOperator> = (0..space.modes()).map(|q| op_create(space, q)).collect::<Result<_>>()?;
    let cols = (0..space.dim).filter(|&j| space.total_occupation(j) + 2 <= space.n_max);
    frobenius_on(space, cols, |x| {
        let mut lhs = expm_action(&dg, c64(1.0, 0.0), &creators[p].apply(x))?;
        let ex = expm_action(&dg, c64(1.0, 0.0), x)?;
        for (q, cr) in creators.iter().enumerate() {
            let rhs = cr.apply(&ex);
            lhs.iter_mut().zip(&rhs).for_each(|(l, r)| *l -= e[(q, p)] * r);
        }
        Ok(lhs)
    })
}

/// The same defect computed literally as `e^{dΓ(O)} a^†_p e^{−dΓ(O)} x`.
/// Rounding is amplified by up to `e^{N(w_max − w_min)}` on the `N`-particle
/// sector, so this is a diagnostic for small occupations only.
pub fn bch_conjugation_defect(space: &FockSpace, o: &CMat, p: usize) -> Result<f64> {
    check_hermitian(o)?;
    space.check_mode(p)?;
    let dg = second_quantize(space, o)?;
    let e = crate::linalg::HermitianExp::new(o).exp(1.0);
    let creators: Vec<FockOperator> = (0..space.modes()).map(|q| op_create(space, q)).collect::<Result<_>>()?;
    let cols = (0..space.dim).filter(|&j| space.total_occupation(j) + 2 <= space.n_max);
    frobenius_on(space, cols, |x| {
        let y = expm_action(&dg, c64(-1.0, 0.0), x)?;
        let y = creators[p].apply(&y);
        let mut lhs = expm_action(&dg, c64(1.0, 0.0), &y)?;
        for (q, cr) in creators.iter().enumerate() {
            let rhs = cr.apply(x);
            lhs.iter_mut().zip(&rhs).for_each(|(l, r)| *l -= e[(q, p)] * r);
        }
        Ok(lhs)
    })
}

/// Frobenius norm of `e^{−K} a_p e^{K} − (cosh ν a_p + sinh ν a^†_{−p})` on the
/// basis states whose largest mode occupation is at most `n_max / 2`.
pub fn bogoliubov_action_defect(space: &FockSpace, nu_by_pair: &[f64], p: usize) -> Result<f64> {
    space.check_mode(p)?;
    let k = build_bogoliubov_generator(space, nu_by_pair)?;
    let nu = nu_by_pair[p / 2];
    let a = op_annihilate(space, p)?;
    let ad = op_create(space, FockSpace::neg(p))?;
    let cols = (0..space.dim).filter(|&j| 2 * space.max_occupation(j) <= space.n_max);
    frobenius_on(space, cols, |x| {
        let y = expm_action(&k, c64(1.0, 0.0), x)?;
        let mut lhs = expm_action(&k, c64(-1.0, 0.0), &a.apply(&y))?;
        let (ax, adx) = (a.apply(x), ad.apply(x));
        for ((l, u), w) in lhs.iter_mut().zip(&ax).zip(&adx) {
            *l -= u * nu.cosh() + w * nu.sinh();
        }
        Ok(lhs)
    })
}

/// `γ_{p,q} = ⟨v, a^†_p a_q v⟩` and `α_{p,q} = ⟨v, a_p a_q v⟩`.
pub fn two_point_functions(space: &FockSpace, v: &[Complex64]) -> Result<(CMat, CMat)> {
    let n = space.modes();
    let ann: Vec<FockOperator> = (0..n).map(|m| op_annihilate(space, m)).collect::<Result<_>>()?;
    let av: Vec<Vec<Complex64>> = ann.iter().map(|a| a.apply(v)).collect();
    let gamma = CMat::from_fn(n, n, |p, q| inner(&av[p], &av[q]));
    let alpha = CMat::from_fn(n, n, |p, q| inner(v, &ann[p].apply(&av[q])));
    Ok((gamma, alpha))
}

/// `F̂_{p,q} = ⟨Ω, a_{−p} a_q e^{−K} e^{κ dΓ(O)} e^{K} Ω⟩ / G` with
/// `G = ⟨e^{K}Ω, e^{κ dΓ(O)} e^{K}Ω⟩`, the fixed point of the observable
/// solver restricted to the Fock modes.
pub fn f_matrix_oracle(space: &FockSpace, nu_by_pair: &[f64], o: &CMat, kappa: f64) -> Result<(CMat, f64)> {
    check_hermitian(o)?;
    let k = build_bogoliubov_generator(space, nu_by_pair)?;
    let v = expm_action(&k, c64(1.0, 0.0), &space.vacuum())?;
    let dg = second_quantize(space, o)?;
    let xv = expm_action(&dg, c64(kappa, 0.0), &v)?;
    let g = inner(&v, &xv).re;
    let y = expm_action(&k, c64(-1.0, 0.0), &xv)?;
    let n = space.modes();
    let ann: Vec<FockOperator> = (0..n).map(|m| op_annihilate(space, m)).collect::<Result<_>>()?;
    let f = CMat::from_fn(n, n, |p, q| ann[FockSpace::neg(p)].apply(&ann[q].apply(&y))[0] / g);
    Ok((f, g))
}

/// Law of `N₊` in the product quasi-free state, by convolving the exact
/// single-pair laws computed on one-pair Fock spaces. Entry `j` is `P[N₊ = j]`.
pub fn depletion_distribution(nu_by_pair: &[f64], n_max: usize) -> Result<Vec<f64>> {
    depletion_distribution_with(nu_by_pair, n_max, &OracleOptions::default())
}

pub fn depletion_distribution_with(nu_by_pair: &[f64], n_max: usize, opts: &OracleOptions) -> Result<Vec<f64>> {
    if nu_by_pair.is_empty() {
        return Err(invalid("need at least one pair"));
    }
    let space = FockSpace::build(1, n_max)?;
    let mut law = vec![1.0];
    for &nu in nu_by_pair {
        let qf = quasi_free_vector(&space, &[nu])?;
        if qf.truncation > opts.truncation_threshold {
            return Err(Error::Truncation { estimate: qf.truncation, threshold: opts.truncation_threshold });
        }
        let mut single = vec![0.0; 2 * n_max + 1];
        for (j, z) in qf.vector.iter().enumerate() {
            single[space.total_occupation(j)] += z.norm_sqr();
        }
        let mut next = vec![0.0; law.len() + single.len() - 1];
        for (i, &a) in law.iter().enumerate() {
            for (j, &b) in single.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        law = next;
    }
    Ok(law)
}

/// Raw moments `E[X^j]`, `j = 0..=order`, of a law on `0, 1, 2, …`.
pub fn distribution_moments(law: &[f64], order: usize) -> Vec<f64> {
    (0..=order)
        .map(|j| crate::sum::ksum(law.iter().enumerate().map(|(n, &p)| p * (n as f64).powi(j as i32))))
        .collect()
}

/// Central moments `E[(X − E X)^j]`, `j = 0..=order`.
pub fn distribution_central_moments(law: &[f64], order: usize) -> Vec<f64> {
    let mean = distribution_moments(law, 1)[1];
    (0..=order)
        .map(|j| crate::sum::ksum(law.iter().enumerate().map(|(n, &p)| p * (n as f64 - mean).powi(j as i32))))
        .collect()
}
