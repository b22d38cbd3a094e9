//! Exact fermionic model on a few modes: the doubled Fock space in which a
//! mixed state is a vector, its ladder operators, quasi-free states and
//! dynamics.

pub mod bogoliubov;
pub mod densities;
pub mod dynamics;
pub mod generator;
pub mod modes;
pub mod ops;
pub mod space;
pub mod sparse;

pub use bogoliubov::{bogoliubov_implementor, BogoliubovMap};
pub use densities::{normalize, number_distribution, number_moments, reduced_densities, wedge_power, wick_residual, ReducedDensities};
pub use dynamics::{
    evolve_many_body, fluctuation_dynamics, krylov_evolve, ManyBodyPropagator, SectorPropagator, Trajectory,
};
pub use generator::{fluctuation_generator, FluctuationGenerator};
pub use modes::ModeSpace;
pub use ops::{
    build_hamiltonian, build_liouvillian, ladder_operator, number_operator, second_quantize, smeared_annihilator,
    smeared_creator,
};
pub use space::{FockOperator, FockSpace, Side, MAX_MODES};
pub use sparse::SparseMatrix;
