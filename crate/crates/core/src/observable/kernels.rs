use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{KernelForm, ObservableKernel};
use crate::error::{Error, Result};
use crate::linalg::{c64, op_norm, permute_cols, permute_rows, scale_cols, scale_rows, CMat};
use crate::spectrum::SpectrumKernel;

/// Diagonal weights and the negation permutation shared by all factors.
struct Ops {
    c: Vec<f64>,
    s: Vec<f64>,
    s2: Vec<f64>,
    cs: Vec<f64>,
    st: Vec<f64>,
    neg: Vec<usize>,
}

impl Ops {
    fn new(k: &SpectrumKernel) -> Self {
        let (c, s, t) = (k.c().to_vec(), k.s().to_vec(), k.t());
        Self {
            s2: s.iter().map(|x| x * x).collect(),
            cs: c.iter().zip(&s).map(|(a, b)| a * b).collect(),
            st: s.iter().zip(t).map(|(a, b)| a * b).collect(),
            neg: k.lattice().neg_index().to_vec(),
            c,
            s,
        }
    }
    fn dl(&self, d: &[f64], x: &CMat) -> CMat {
        scale_rows(d, x)
    }
    fn dr(&self, x: &CMat, d: &[f64]) -> CMat {
        scale_cols(x, d)
    }
    fn rp(&self, x: &CMat) -> CMat {
        permute_rows(&self.neg, x)
    }
    fn cp(&self, x: &CMat) -> CMat {
        permute_cols(x, &self.neg)
    }
}

#[derive(Clone, Copy, Debug)]
enum Arg {
    M,
    N,
    Mt,
    Nt,
    Mbar,
    MbarT,
}

type Factor = fn(&Ops, &CMat) -> CMat;

/// `sign · left(X) · [·] · right(Y)`, linear in each of `X` and `Y`.
struct Term {
    sign: f64,
    left: Factor,
    larg: Arg,
    right: Factor,
    rarg: Arg,
}

const fn term(sign: f64, left: Factor, larg: Arg, right: Factor, rarg: Arg) -> Term {
    Term { sign, left, larg, right, rarg }
}

// C R X S R
fn crxsr(o: &Ops, x: &CMat) -> CMat {
    o.cp(&o.dr(&o.dl(&o.c, &o.rp(x)), &o.s))
}
// S X C
fn sxc(o: &Ops, x: &CMat) -> CMat {
    o.dr(&o.dl(&o.s, x), &o.c)
}
// S Y C
fn syc(o: &Ops, y: &CMat) -> CMat {
    o.dr(&o.dl(&o.s, y), &o.c)
}
// R C Y R S
fn rcyrs(o: &Ops, y: &CMat) -> CMat {
    o.dr(&o.cp(&o.rp(&o.dl(&o.c, y))), &o.s)
}

fn conjugate_a_terms() -> [Term; 4] {
    [
        // C R M · C S R Mᵀ C
        term(1.0, |o, x| o.dl(&o.c, &o.rp(x)), Arg::M, |o, y| o.dr(&o.dl(&o.cs, &o.rp(y)), &o.c), Arg::Mt),
        // S Nᵀ · C S R N R S
        term(1.0, |o, x| o.dl(&o.s, x), Arg::Nt, |o, y| o.dr(&o.cp(&o.dl(&o.cs, &o.rp(y))), &o.s), Arg::N),
        // −S Nᵀ · S² Mᵀ C
        term(-1.0, |o, x| o.dl(&o.s, x), Arg::Nt, |o, y| o.dr(&o.dl(&o.s2, y), &o.c), Arg::Mt),
        // −C R M · S² N R S
        term(-1.0, |o, x| o.dl(&o.c, &o.rp(x)), Arg::M, |o, y| o.dr(&o.cp(&o.dl(&o.s2, y)), &o.s), Arg::N),
    ]
}

fn conjugate_d_terms() -> [Term; 4] {
    [
        term(1.0, crxsr, Arg::M, syc, Arg::Mt),
        term(1.0, sxc, Arg::Nt, rcyrs, Arg::N),
        term(-1.0, sxc, Arg::Nt, syc, Arg::Mt),
        term(-1.0, crxsr, Arg::M, rcyrs, Arg::N),
    ]
}

fn printed_a_terms() -> [Term; 4] {
    [
        // c_p c_q ⟨c e^{κO_{−p}}, s e^{κŌ⁻_q}⟩ = C R M̄ᵀ · C S R M̄ C
        term(1.0, |o, x| o.dl(&o.c, &o.rp(x)), Arg::MbarT, |o, y| o.dr(&o.dl(&o.cs, &o.rp(y)), &o.c), Arg::Mbar),
        // s_p s_q ⟨s e^{−κŌ⁻_{−p}}, c e^{−κO_q}⟩ = S R Nᵀ R · C S N S
        term(1.0, |o, x| o.dl(&o.s, &o.cp(&o.rp(x))), Arg::Nt, |o, y| o.dr(&o.dl(&o.cs, y), &o.s), Arg::N),
        // −s_p c_q conj⟨s e^{−κO_{−p}}, s e^{κO_{−q}}⟩ = −S R Nᵀ · S² M̄ R C
        term(-1.0, |o, x| o.dl(&o.s, &o.rp(x)), Arg::Nt, |o, y| o.dr(&o.cp(&o.dl(&o.s2, y)), &o.c), Arg::Mbar),
        // −c_p s_q conj⟨s e^{−κO_q}, s e^{κO_p}⟩ = −C M̄ᵀ · S² N S
        term(-1.0, |o, x| o.dl(&o.c, x), Arg::MbarT, |o, y| o.dr(&o.dl(&o.s2, y), &o.s), Arg::N),
    ]
}

fn printed_d_terms() -> [Term; 4] {
    // Σ_{k,ℓ} c_p c_k c_q s_ℓ τ_ℓ X_{k,p} Y_{ℓ,q} F_{k,ℓ} = [C Xᵀ C · F · S T Y C]_{p,q}
    [
        // X_{k,p} = M̄_{−k,−p}, Y_{ℓ,q} = M̄_{ℓ,q}
        term(1.0, |o, x| o.dr(&o.dl(&o.c, &o.cp(&o.rp(x))), &o.c), Arg::MbarT, |o, y| o.dr(&o.dl(&o.st, y), &o.c), Arg::Mbar),
        // X_{k,p} = N_{k,−p}, Y_{ℓ,q} = N_{−ℓ,q}
        term(1.0, |o, x| o.dr(&o.dl(&o.c, &o.rp(x)), &o.c), Arg::Nt, |o, y| o.dr(&o.dl(&o.st, &o.rp(y)), &o.c), Arg::N),
        // −X_{k,p} = N_{k,−p}, Y_{ℓ,q} = M̄_{ℓ,−q}
        term(-1.0, |o, x| o.dr(&o.dl(&o.c, &o.rp(x)), &o.c), Arg::Nt, |o, y| o.dr(&o.cp(&o.dl(&o.st, y)), &o.c), Arg::Mbar),
        // −X_{k,p} = N_{k,p}, Y_{ℓ,q} = M̄_{ℓ,q}
        term(-1.0, |o, x| o.dr(&o.dl(&o.c, x), &o.c), Arg::Nt, |o, y| o.dr(&o.dl(&o.st, y), &o.c), Arg::Mbar),
    ]
}

fn terms(form: KernelForm) -> ([Term; 4], [Term; 4], bool) {
    match form {
        KernelForm::Conjugate => (conjugate_a_terms(), conjugate_d_terms(), true),
        KernelForm::Printed => (printed_a_terms(), printed_d_terms(), false),
    }
}

/// `X ↦ Σ_i L_i op(X) R_i` with `op` the adjoint (antilinear map) or the identity.
#[derive(Clone, Debug)]
pub struct SeparableMap {
    n: usize,
    conjugate: bool,
    pieces: Vec<(CMat, CMat)>,
}

impl SeparableMap {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_antilinear(&self) -> bool {
        self.conjugate
    }

    pub fn pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn apply(&self, f: &CMat) -> Result<CMat> {
        if f.nrows() != self.n || f.ncols() != self.n {
            return Err(Error::ShapeMismatch {
                expected: format!("{0}x{0}", self.n),
                found: format!("{}x{}", f.nrows(), f.ncols()),
            });
        }
        Ok(self.apply_unchecked(f))
    }

    pub(crate) fn apply_unchecked(&self, f: &CMat) -> CMat {
        let mut out = CMat::zeros(self.n, self.n);
        let x = if self.conjugate { f.adjoint() } else { f.clone() };
        for (l, r) in &self.pieces {
            out += l * &x * r;
        }
        out
    }

    /// Adjoint with respect to the real inner product `Re tr(X^H Y)`.
    pub(crate) fn apply_adjoint(&self, z: &CMat) -> CMat {
        let mut out = CMat::zeros(self.n, self.n);
        if self.conjugate {
            let zh = z.adjoint();
            for (l, r) in &self.pieces {
                out += r * &zh * l;
            }
        } else {
            for (l, r) in &self.pieces {
                out += l.adjoint() * z * r.adjoint();
            }
        }
        out
    }

    /// `Σ_i ‖L_i‖₂ ‖R_i‖₂`.
    pub fn factor_bound(&self) -> f64 {
        self.pieces.iter().map(|(l, r)| op_norm(l) * op_norm(r)).sum()
    }

    /// Real `2n² × 2n²` matrix of the map on `(Re vec F, Im vec F)`.
    pub fn materialize(&self) -> DMatrix<f64> {
        let n2 = self.n * self.n;
        let mut t = DMatrix::<f64>::zeros(2 * n2, 2 * n2);
        let mut e = CMat::zeros(self.n, self.n);
        for col in 0..2 * n2 {
            let idx = col % n2;
            let (i, j) = (idx % self.n, idx / self.n);
            e[(i, j)] = if col < n2 { c64(1.0, 0.0) } else { c64(0.0, 1.0) };
            let y = self.apply_unchecked(&e);
            e[(i, j)] = Complex64::new(0.0, 0.0);
            for (m, z) in y.iter().enumerate() {
                t[(m, col)] = z.re;
                t[(n2 + m, col)] = z.im;
            }
        }
        t
    }
}

/// `A(κ)` and `D(κ)` at one quadrature node.
#[derive(Clone, Debug)]
pub struct NodeKernels {
    kappa: f64,
    form: KernelForm,
    a: CMat,
    d: SeparableMap,
}

struct Args {
    m: CMat,
    n: CMat,
}

impl Args {
    fn get(&self, a: Arg) -> CMat {
        match a {
            Arg::M => self.m.clone(),
            Arg::N => self.n.clone(),
            Arg::Mt => self.m.transpose(),
            Arg::Nt => self.n.transpose(),
            Arg::Mbar => self.m.conjugate(),
            Arg::MbarT => self.m.adjoint(),
        }
    }
}

fn is_zero(m: &CMat) -> bool {
    m.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

impl NodeKernels {
    pub fn build(k: &SpectrumKernel, obs: &ObservableKernel, kappa: f64, form: KernelForm) -> Result<Self> {
        obs.check_against(k)?;
        if !kappa.is_finite() {
            return Err(crate::error::invalid("kappa must be finite"));
        }
        let n = k.len();
        let ops = Ops::new(k);
        let eye = CMat::identity(n, n);
        let delta = Args { m: obs.exp_m1(kappa), n: obs.exp_m1(-kappa) };
        let (a_terms, d_terms, conjugate) = terms(form);

        let mut a = CMat::zeros(n, n);
        for t in &a_terms {
            let l0 = (t.left)(&ops, &eye) * c64(t.sign, 0.0);
            let l1 = (t.left)(&ops, &delta.get(t.larg)) * c64(t.sign, 0.0);
            let r0 = (t.right)(&ops, &eye);
            let r1 = (t.right)(&ops, &delta.get(t.rarg));
            a += &l1 * &r0 + &l0 * &r1 + &l1 * &r1;
        }

        let mut pieces = Vec::with_capacity(12);
        for t in &d_terms {
            let l0 = (t.left)(&ops, &eye) * c64(t.sign, 0.0);
            let l1 = (t.left)(&ops, &delta.get(t.larg)) * c64(t.sign, 0.0);
            let r0 = (t.right)(&ops, &eye);
            let r1 = (t.right)(&ops, &delta.get(t.rarg));
            for (l, r) in [(l1.clone(), r0), (l0, r1.clone()), (l1, r1)] {
                if !is_zero(&l) && !is_zero(&r) {
                    pieces.push((l, r));
                }
            }
        }
        Ok(Self { kappa, form, a, d: SeparableMap { n, conjugate, pieces } })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn form(&self) -> KernelForm {
        self.form
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }

    pub fn d(&self) -> &SeparableMap {
        &self.d
    }
}

/// Unexpanded kernels, with the analytically cancelling pieces kept. For tests.
#[cfg(test)]
pub(crate) fn raw_kernels(
    k: &SpectrumKernel,
    obs: &ObservableKernel,
    kappa: f64,
    form: KernelForm,
) -> (CMat, Vec<SeparableMap>) {
    let n = k.len();
    let ops = Ops::new(k);
    let full = Args { m: obs.exp(kappa), n: obs.exp(-kappa) };
    let (a_terms, d_terms, conjugate) = terms(form);
    let mut a = -CMat::from_diagonal(&nalgebra::DVector::from_iterator(n, ops.cs.iter().map(|&x| c64(x, 0.0))));
    for t in &a_terms {
        a += (t.left)(&ops, &full.get(t.larg)) * (t.right)(&ops, &full.get(t.rarg)) * c64(t.sign, 0.0);
    }
    let maps = d_terms
        .iter()
        .map(|t| SeparableMap {
            n,
            conjugate,
            pieces: vec![(
                (t.left)(&ops, &full.get(t.larg)) * c64(t.sign, 0.0),
                (t.right)(&ops, &full.get(t.rarg)),
            )],
        })
        .collect();
    (a, maps)
}
