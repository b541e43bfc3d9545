//! Numerical laboratory for Kyle-Back insider trading equilibria driven by
//! linear conditional mean-field SDEs.
//!
//! The crate is organised bottom-up:
//!
//! * [`coefficients`] holds the deterministic model data, strategies and the
//!   scenario file format.
//! * [`deterministic`] integrates the filter-variance Riccati equation together
//!   with the auxiliary functions `phi1`, `phi2`, `phi3`, `k` and `l`.
//! * [`equilibrium`] evaluates the insider's objective, its directional
//!   derivatives, the first-order optimality residual and the closed-form
//!   optimum for `g = 0`.
//! * [`simulation`] is the Monte Carlo engine (closed loop, explicit
//!   construction, reference measure, Gaussian-conditioning oracle).
//!
//! Path-level work is spread across a rayon pool when the `parallel` feature
//! is enabled (the default); every result is a deterministic function of the
//! master seed regardless of worker count.

pub mod coefficients;
pub mod deterministic;
pub mod equilibrium;
pub mod error;
pub mod export;
pub mod par;
pub mod presets;
pub mod simulation;

pub use coefficients::{
    load_scenario, parse_scenario, CoefficientSet, Intensity, Numerics, ResolvedStrategy,
    ScenarioConfig, Strategy, TimeFunction,
};
pub use deterministic::{quadrature, solve_riccati, RiccatiSolution, TimeGrid};
pub use equilibrium::{
    directional_derivatives, foc_residual, objective_jbar, price_map_g0, solve_optimal_g0,
    EquilibriumSolution, VariationalDerivatives,
};
pub use error::{KyleError, Result};
pub use simulation::{MCEstimate, PathBundle, PathModel};
