//! Limiting generating functions of the Bogoliubov depletion number and of
//! general one-particle observables, with cumulants, Chernoff tail bounds and
//! a truncated Fock-space oracle for cross-checks.

// `!(x > 0.0)` is used on purpose so that NaN is rejected; the quadrature
// tables keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod fockoracle;
pub mod genfun;
pub mod lattice;
pub mod linalg;
pub mod observable;
pub mod quadrature;
pub mod scattering;
pub mod spectrum;
pub mod sum;
pub mod tails;

pub use error::{Error, Result};
pub use fockoracle::{FockOperator, FockSpace, OracleOptions, OracleValue};
pub use genfun::{CumulantSet, FourthMomentReport, GenFunSample, Method};
pub use lattice::{IVec3, Lattice};
pub use linalg::CMat;
pub use observable::{
    FixedPointSolution, GeneralOptions, GeneralSample, KernelForm, NormReport, ObservableKernel, SolveMethod,
    SolveOptions,
};
pub use quadrature::{Quadrature, QuadratureSpec};
pub use scattering::{Convention, PotentialSpec, ScatteringSolution, SolverOptions};
pub use spectrum::{Level, SpectrumKernel};
pub use tails::{Binding, ExponentForm, NonConcentrationWitness, QuadraticBound, TailBound, TailOptions};
