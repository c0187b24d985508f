//! Truncated momentum lattice `(2πZ)^3 \ {0}` with `p <-> -p` pairing.
//!
//! Momenta are stored in lexicographic order of their integer vectors. For
//! the full cube this makes negation an index reversal, but the code always
//! goes through `neg_index` so custom mode sets work the same way.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{invalid, Result};

pub type IVec3 = [i32; 3];

#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    cutoff_m: Option<u32>,
    vectors: Vec<IVec3>,
    momenta: Vec<[f64; 3]>,
    index_of: HashMap<IVec3, usize>,
    neg_index: Vec<usize>,
    pairs: Vec<(usize, usize)>,
}

fn neg(n: IVec3) -> IVec3 {
    [-n[0], -n[1], -n[2]]
}

impl Lattice {
    /// All `n` with `0 < ||n||_inf <= cutoff_m`.
    pub fn cube(cutoff_m: u32) -> Result<Self> {
        if cutoff_m == 0 {
            return Err(invalid("cutoff_m must be at least 1"));
        }
        let m = i32::try_from(cutoff_m).map_err(|_| invalid("cutoff_m too large"))?;
        let side = 2 * m as usize + 1;
        let mut vectors = Vec::with_capacity(side * side * side - 1);
        for x in -m..=m {
            for y in -m..=m {
                for z in -m..=m {
                    if x != 0 || y != 0 || z != 0 {
                        vectors.push([x, y, z]);
                    }
                }
            }
        }
        Ok(Self::from_sorted(Some(cutoff_m), vectors))
    }

    /// Lattice made of the given vectors and their negations.
    ///
    /// Useful for small mode sets (one or two pairs) that the Fock-space
    /// oracle can handle exactly.
    pub fn from_pair_representatives(reps: &[IVec3]) -> Result<Self> {
        if reps.is_empty() {
            return Err(invalid("at least one pair representative required"));
        }
        let mut vectors = Vec::with_capacity(2 * reps.len());
        for &n in reps {
            if n == [0, 0, 0] {
                return Err(invalid("zero momentum is excluded"));
            }
            vectors.push(n);
            vectors.push(neg(n));
        }
        vectors.sort_unstable();
        if vectors.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("duplicate momentum among pair representatives"));
        }
        Ok(Self::from_sorted(None, vectors))
    }

    fn from_sorted(cutoff_m: Option<u32>, vectors: Vec<IVec3>) -> Self {
        let index_of: HashMap<IVec3, usize> =
            vectors.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let neg_index: Vec<usize> = vectors.iter().map(|&n| index_of[&neg(n)]).collect();
        let pairs = (0..vectors.len())
            .filter(|&i| i < neg_index[i])
            .map(|i| (i, neg_index[i]))
            .collect();
        let momenta = vectors
            .iter()
            .map(|n| n.map(|x| 2.0 * PI * f64::from(x)))
            .collect();
        Self { cutoff_m, vectors, momenta, index_of, neg_index, pairs }
    }

    /// `None` for lattices built from explicit representatives.
    pub fn cutoff_m(&self) -> Option<u32> {
        self.cutoff_m
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[IVec3] {
        &self.vectors
    }

    pub fn momenta(&self) -> &[[f64; 3]] {
        &self.momenta
    }

    pub fn index_of(&self, n: IVec3) -> Option<usize> {
        self.index_of.get(&n).copied()
    }

    pub fn neg_index(&self) -> &[usize] {
        &self.neg_index
    }

    pub fn neg(&self, i: usize) -> usize {
        self.neg_index[i]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Integer norm `|n|^2`.
    pub fn norm2(&self, i: usize) -> i64 {
        self.vectors[i].iter().map(|&x| i64::from(x) * i64::from(x)).sum()
    }

    /// `|p|^2 = 4π²|n|²`.
    pub fn p_squared(&self, i: usize) -> f64 {
        4.0 * PI * PI * self.norm2(i) as f64
    }
}
