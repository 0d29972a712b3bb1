//! Numerical laboratory for the Landau collision operator.
//!
//! The crate discretizes velocity space on a cell-centered Cartesian grid,
//! evaluates the convolution coefficients `abar`, `bbar`, `cbar` of the
//! operator with cell-integrated singular kernels, evaluates the operator in
//! three algebraically equivalent forms, integrates the spatially homogeneous
//! equation `df/dt = Q(f, f)`, and audits the quantities that enter the
//! continuation criterion for very soft and Coulomb potentials.
//!
//! Data-parallel loops go through [`par`]; building without the default
//! `parallel` feature gives a purely sequential crate with identical results.

pub mod coefficients;
pub mod collision;
pub mod diagnostics;
pub mod error;
mod fft;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod par;
pub mod quadrature;
pub mod solver;

pub use coefficients::{CoefficientFields, KernelTables, ModelParams};
pub use collision::{CollisionForm, CollisionOutput};
pub use error::{LandauError, Result};
pub use grid::{DistributionState, GaussianComponent, VelocityGrid};
pub use solver::{Scheme, SolverConfig, PositivityPolicy, TrajectoryLog};
