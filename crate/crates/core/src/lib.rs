//! Observer-based feedback releases for Wolbachia introduction.
//!
//! The crate models uninfected and Wolbachia-infected mosquito populations
//! (larvae and adults), brackets the unmeasured state with an interval
//! observer, and closes the loop with two release laws: one releasing
//! infected adults, one releasing infected larvae. Both steer the population
//! from the disease-free equilibrium to complete infestation.
//!
//! Modules, bottom-up:
//! - [`model`]: vector field, cone order, equilibria, comparison systems
//! - [`observer`]: framer dynamics, gain schedules, sign conditions
//! - [`control`]: the two release laws and their dispatch
//! - [`integrator`]: Dormand-Prince 5(4) and fixed-step RK4
//! - [`scenario`]: closed-loop experiments and run reports
//! - [`io`], [`sweep`]: file formats and parameter grids

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod control;
pub mod error;
pub mod integrator;
pub mod io;
pub mod model;
pub mod observer;
pub mod scenario;
pub mod sweep;

pub use control::{
    adult_release, adult_release_linear, control_at, larvae_release, AdultLawParams, LawChoice, LawTag,
    SignConvention,
};
pub use error::{Error, Result};
pub use integrator::{integrate, IntegrationError, Method, Solution, SolverConfig, SolverStats};
pub use model::{
    auxiliary_field, equilibria, infestation_pressure_field, neg_part, order_leq, pos_part, vector_field,
    ControlInput, Equilibrium, EquilibriumSet, ModelParams, PopulationState, Stability,
};
pub use observer::{
    encloses, gain_matrix, observer_field, validate_gains, GainCondition, GainReport, GainSpec, ObserverPair,
    OutputMap, Side,
};
pub use scenario::{
    adult_scenario, default_scenarios, larvae_scenario, measurement_bounds, run_scenario, RunReport,
    Scenario, Trajectory,
};
