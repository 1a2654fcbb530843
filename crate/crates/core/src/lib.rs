//! Numerical toolkit for the two-dimensional smectic energy
//!
//! `E_ε(u) = ½∫ (1/ε)(∂z u − ½(∂x u)²)² + ε(∂x²u)² dx dz`,
//!
//! covering its BPS split, the sharp cost of a gradient jump, the optimal
//! one-dimensional transition layer, and a discrete minimizer for the
//! periodic cell problem.

pub mod calculus;
pub mod checks;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod field;
pub mod grid;
pub mod hopf_cole;
pub mod jump;
pub mod minimize;
mod precond;
pub mod profile;
pub mod quadrature;
pub mod stencil;

pub use calculus::{deriv_x, deriv_xx, deriv_z, gradient, integrate};
pub use diagnostics::{
    compression_defect, div_check, entropy_production, lp_norm, rate_fit, rotated_field, RateFit, SequenceReport,
};
pub use energy::{div_sigma, energy_eps, sigma, EnergyBreakdown};
pub use error::{Error, Result};
pub use field::{ScalarField, VectorField2};
pub use grid::{Frame, Grid2D};
pub use hopf_cole::{hopf_cole_field, HeatData};
pub use jump::{check_jump_condition, jump_cost, limit_energy, DefectPath, JumpCost, JumpSpec, PhaseState};
pub use minimize::{
    discrete_energy_gradient, minimize_energy, CellGradient, CellProblem, Initializer, MinimizeResult, OptimizerSettings,
};
pub use profile::{build_ansatz, oned_energy, solve_profile, well_potential, OneDEnergy, Profile1D};
