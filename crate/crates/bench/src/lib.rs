//! Fixtures shared by the benchmarks.

use bose_genfun_core::scattering::a16pi;
use bose_genfun_core::{Convention, Lattice, PotentialSpec, SpectrumKernel};

/// Cube lattice of the given cutoff at scattering length 0.01.
pub fn cube_kernel(cutoff_m: u32) -> SpectrumKernel {
    let a = a16pi(&PotentialSpec::Direct { a: 0.01 }, Convention::Paper).expect("direct scattering length");
    SpectrumKernel::build(Lattice::cube(cutoff_m).expect("cutoff"), a).expect("kernel")
}

/// Two pairs with `tanh²ν = 0.3` and `0.1`.
pub fn two_pair_kernel() -> SpectrumKernel {
    let l = Lattice::from_pair_representatives(&[[1, 0, 0], [0, 1, 0]]).expect("pairs");
    SpectrumKernel::from_pair_nu(l, &[-(0.3f64.sqrt()).atanh(), -(0.1f64.sqrt()).atanh()]).expect("kernel")
}
