//! A laboratory for linear cocycles over subshifts of finite type.
//!
//! Hyperbolic basic pieces are modeled symbolically: a transitive subshift of
//! finite type carries a locally constant cocycle of invertible block-diagonal
//! matrices (stable block, then unstable block). On this desk-scale model the
//! objects of smooth hyperbolic dynamics become exactly computable: periodic
//! spectra, dominated splittings and their signatures, robustness margins of
//! equidimensional cycles, orbit-level perturbation schedules, Lyapunov
//! exponents of Markov measures, and suspension-flow spectra.

pub mod cocycle;
pub mod domination;
pub mod linalg;
pub mod measures;
pub mod perturb;
pub mod sft;
pub mod suspension;
pub mod sysfile;

pub use cocycle::{EigenData, LinearCocycle, OrbitCocycle};
pub use linalg::{ScaledMat, SmallMat};
pub use sft::{MarkovMeasure, PeriodicWord, SftSystem};
