use serde::{Deserialize, Serialize};

use super::sparse::SparseMatrix;
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

/// Largest supported number of fermionic modes.
pub const MAX_MODES: usize = 14;

/// Which copy of the one-particle space an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Fermionic Fock space over `d` modes, or over `d ⊕ d` modes when doubled.
///
/// Basis states are occupation bitstrings; bit `k` is mode `k`. Left modes come
/// first (`0..d`), right modes after (`d..2d`). Operators carry the
/// Jordan-Wigner sign of all lower modes, which makes left and right
/// operators anticommute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpace {
    modes: usize,
    doubled: bool,
}

impl FockSpace {
    pub fn new(modes: usize, doubled: bool) -> Result<Self> {
        let m = if doubled { 2 * modes } else { modes };
        if modes == 0 {
            return Err(Error::Fock("at least one mode is required".into()));
        }
        if m > MAX_MODES {
            return Err(Error::Fock(format!(
                "{m} modes exceed the cap of {MAX_MODES}"
            )));
        }
        Ok(FockSpace { modes, doubled })
    }

    /// One-particle dimension `d`.
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn doubled(&self) -> bool {
        self.doubled
    }

    pub fn total_modes(&self) -> usize {
        if self.doubled {
            2 * self.modes
        } else {
            self.modes
        }
    }

    pub fn dimension(&self) -> usize {
        1 << self.total_modes()
    }

    pub fn vacuum(&self) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.dimension()];
        v[0] = C64::new(1.0, 0.0);
        v
    }

    /// Global mode index of one-particle mode `k` on `side`.
    pub fn global_mode(&self, k: usize, side: Side) -> Result<usize> {
        if k >= self.modes {
            return Err(Error::Fock(format!("mode {k} out of range 0..{}", self.modes)));
        }
        match side {
            Side::Left => Ok(k),
            Side::Right if self.doubled => Ok(self.modes + k),
            Side::Right => Err(Error::Fock("right modes need a doubled space".into())),
        }
    }

    /// Bit mask of the modes on one side.
    pub fn side_mask(&self, side: Side) -> usize {
        let low = (1usize << self.modes) - 1;
        match side {
            Side::Left => low,
            Side::Right => low << self.modes,
        }
    }

    pub(crate) fn require_doubled(&self) -> Result<()> {
        if self.doubled {
            Ok(())
        } else {
            Err(Error::Fock("operation needs a doubled space".into()))
        }
    }
}

/// `a_mode |bits⟩ = sign |bits'⟩`, if the mode is occupied.
pub(crate) fn annihilate(bits: usize, mode: usize) -> Option<(f64, usize)> {
    let bit = 1usize << mode;
    if bits & bit == 0 {
        return None;
    }
    Some((jw_sign(bits, mode), bits ^ bit))
}

/// `a†_mode |bits⟩ = sign |bits'⟩`, if the mode is empty.
pub(crate) fn create(bits: usize, mode: usize) -> Option<(f64, usize)> {
    let bit = 1usize << mode;
    if bits & bit != 0 {
        return None;
    }
    Some((jw_sign(bits, mode), bits | bit))
}

fn jw_sign(bits: usize, mode: usize) -> f64 {
    if (bits & ((1usize << mode) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// A sparse operator on a Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    space: FockSpace,
    matrix: SparseMatrix,
}

impl FockOperator {
    pub fn new(space: FockSpace, matrix: SparseMatrix) -> Result<Self> {
        let dim = space.dimension();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "operator is {}x{}, space has dimension {dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(FockOperator { space, matrix })
    }

    pub(crate) fn from_parts(space: FockSpace, matrix: SparseMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), space.dimension());
        FockOperator { space, matrix }
    }

    pub fn zero(space: FockSpace) -> Self {
        let d = space.dimension();
        FockOperator::from_parts(space, SparseMatrix::zeros(d, d))
    }

    pub fn identity(space: FockSpace) -> Self {
        FockOperator::from_parts(space, SparseMatrix::identity(space.dimension()))
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        self.matrix.matvec(psi)
    }

    pub fn adjoint(&self) -> Self {
        FockOperator::from_parts(self.space, self.matrix.adjoint())
    }

    pub fn scale(&self, alpha: C64) -> Self {
        FockOperator::from_parts(self.space, self.matrix.scale(alpha))
    }

    pub fn add(&self, other: &FockOperator) -> Self {
        FockOperator::from_parts(self.space, self.matrix.add(&other.matrix))
    }

    pub fn sub(&self, other: &FockOperator) -> Self {
        FockOperator::from_parts(self.space, self.matrix.sub(&other.matrix))
    }

    pub fn add_scaled(&self, other: &FockOperator, alpha: C64) -> Self {
        FockOperator::from_parts(self.space, self.matrix.add_scaled(&other.matrix, alpha))
    }

    pub fn mul(&self, other: &FockOperator) -> Self {
        FockOperator::from_parts(self.space, self.matrix.matmul(&other.matrix))
    }

    pub fn commutator(&self, other: &FockOperator) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn anticommutator(&self, other: &FockOperator) -> Self {
        self.mul(other).add(&other.mul(self))
    }

    pub fn to_dense(&self) -> CMat {
        self.matrix.to_dense()
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.max_abs()
    }

    /// `⟨ψ, Aψ⟩`.
    pub fn expectation(&self, psi: &[C64]) -> C64 {
        crate::linalg::inner(psi, &self.apply(psi))
    }

    /// `max |A - A†|` over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        self.matrix.sub(&self.matrix.adjoint()).max_abs()
    }
}
