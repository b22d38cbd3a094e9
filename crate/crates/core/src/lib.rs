//! Mixed-state fermionic mean-field dynamics on small periodic grids.
//!
//! The crate covers one-body Hartree-Fock evolution of density matrices,
//! Weyl/Wigner phase-space transforms, Vlasov transport, and an exact
//! doubled-Fock-space model in which mixed states are vectors. The exact model
//! is used to check the one-body theory on a handful of modes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod csvfmt;
pub mod equilibrium;
pub mod error;
pub mod experiments;
pub mod fft;
pub mod fock;
pub mod grid;
pub mod hf;
pub mod linalg;
pub mod phase_space;
pub mod states;

pub use error::{Error, Result};
pub use grid::{
    apply_convolution, canonical_operators, CanonicalOperators, Grid, OneBodyOperator, Potential,
    PotentialKind,
};
pub use linalg::{CMat, C64};
pub use states::{
    commutator, make_density, make_density_clamped, operator_metrics, semiclassical_report,
    sqrt_pair, DensityMatrix, OperatorMetrics, SemiclassicalReport, SqrtPair,
};
pub use equilibrium::{
    fermi_dirac_density, solve_thomas_fermi, weyl_quantize, wigner_transform, FermiDiracParams, PhaseSpaceDensity,
    VelocityGrid,
};
pub use hf::{evolve_hf, hf_energy, hf_step, build_hf_hamiltonian, ExchangeMode, HFState, HfModel, HfOptions};
pub use phase_space::{evolve_vlasov, phase_space_distance, VlasovOptions, VlasovState};
