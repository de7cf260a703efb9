//! N-mode reduction of a nonlinear Schrödinger equation with an N-well
//! potential.
//!
//! The crate covers the linear lattice spectrum, conservative dynamics of
//! the reduced Hamiltonian system, stationary states across sign families,
//! continuation and bifurcation analysis in the effective nonlinearity
//! `eta`, large-`|eta|` localization, and a 1D finite-difference check of
//! the mode basis. Numerical code is generic over [`Real`]; the `*64`
//! aliases below fix the scalar to `f64`.

// `!(x > 0)` deliberately rejects NaN; index loops mirror the matrix formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod continuation;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod lattice;
pub mod linear1d;
pub mod linalg;
pub mod scalar;
pub mod stationary;

pub use error::{Error, Result};
pub use scalar::Real;

pub use dynamics::{
    reduce, ActionAngleState, ConservationReport, IntegrateOptions, ModeState, NModeSystem,
    ReducedState, SplittingOrder, Trajectory,
};
pub use continuation::{
    asymptotic_localized_seed, continue_branch, detect_folds, detect_pitchfork_and_classify,
    ground_state_bifurcation_table, BifurcationEvent, BifurcationRow, Branch, BranchPoint, Classification,
    Direction, EventKind, StepControl,
};
pub use lattice::{
    build_graph_coupling, build_line_coupling, closed_form_spectrum, diagonalize_symmetric,
    CouplingMatrix, CouplingStructure, ModeBasis, ModelParams,
};

pub use stationary::{
    enumerate_solutions, newton_solve, stationary_residual, symmetric_family_fourwell, sweep_symmetric,
    AmplitudeSolution, Census, SeedStrategy, SignFilter, SignPattern, SymmetricFamily,
};

pub type AmplitudeSolution64 = AmplitudeSolution<f64>;
pub type Branch64 = Branch<f64>;
pub type ModelParams64 = ModelParams<f64>;
pub type ModeBasis64 = ModeBasis<f64>;
pub type ModeState64 = ModeState<f64>;
pub type NModeSystem64 = NModeSystem<f64>;
