//! A numerical laboratory for matrix cocycles over symbolic dynamical
//! systems.
//!
//! The crate computes Lyapunov spectra and their simplicity classification,
//! finite-horizon Oseledets splittings and diagonalizing frames, stationary
//! (Furstenberg) measures on flag spaces with properness and contraction
//! diagnostics, Kakutani induced systems with the Kac and spectrum-rescaling
//! identities, and the Furstenberg-Poisson boundary of free-group random
//! walks with its martingale convergence and boundary skew product.
//!
//! Everything is seed-deterministic: random draws come from a counter-based
//! keyed generator, ensembles merge in member order, and identical inputs
//! give bit-identical outputs regardless of thread count.

pub mod cocycle;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod fgboundary;
pub mod flagspace;
pub mod oseledets;
pub mod rng;
pub mod stationary;
pub mod stats;

pub use cocycle::{
    evaluate, evaluate_scaled, integrability, skew_ergodicity_test, skew_orbit, CocycleSpec,
    ScaledMatrix, SkewObservable, SkewSystem,
};
pub use config::{CocycleConfig, SkewConfig, SystemConfig};
pub use dynamics::{
    birkhoff, first_return, induce, sample_orbit, CylinderIndicator, InducedSystem, Observable,
    OrbitWindow, Symbol, SymbolicSystem,
};
pub use error::{LabError, Result};
pub use fgboundary::{
    boundary_point, boundary_skew_invariance, harmonic_measure, martingale_check, walk_paths,
    BoundaryPoint, BoundarySet, PathEnsemble, ReducedWord,
};
pub use flagspace::{
    flag_distance, general_position, pr1, pr2, tuple_from_flag_pair, weyl_act, Flag, LineTuple,
    Permutation,
};
pub use oseledets::{
    equivariance_check, frame, induced_spectrum_check, lyapunov_spectrum, norm_growth_oracle,
    oseledets_flags, Classification, Spectrum, SpectrumRun,
};
pub use stationary::{
    contraction_growth_check, dirac_contraction, estimate_stationary, furstenberg_top_exponent,
    harmonic_family, properness_profile, EmpiricalMeasure, HarmonicFamily, SubspaceLocus,
    TestPanel,
};
pub use stats::Estimate;
