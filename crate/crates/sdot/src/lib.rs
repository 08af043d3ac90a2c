//! Semi-discrete optimal transport with convex storage fees.
//!
//! The problem: transport a discretized source measure onto a fixed finite
//! site set, where the target weights are free but charged through a convex
//! storage fee. This crate provides
//!
//! - the problem model (quadrature measures, site sets, cost functions and
//!   the twist check),
//! - a storage-fee algebra with exact Legendre-Fenchel conjugates,
//! - the c/c* transform calculus and Laguerre cell assignment,
//! - a supergradient dual-ascent solver with duality-gap certification,
//! - independent verification oracles (exhaustive enumeration and a 1D
//!   monotone-rearrangement scan) plus a fee-perturbation stability harness.

pub mod cost;
pub mod error;
pub mod expansion;
pub mod fee;
pub mod instance;
pub mod measure;
pub mod numeric;
pub mod oracle;
pub mod report;
pub mod simplex;
pub mod sites;
pub mod solver;
pub mod transforms;

pub use cost::{check_twist, cost_matrix, CostFunction, CostMatrix, TwistReport, TwistWitness};
pub use error::{Error, Result};
pub use fee::{fenchel_young_residual, PiecewiseLinear, StorageFee, WeightVector};
pub use instance::ProblemInstance;
pub use measure::{build_grid_measure, read_measure_csv, BoundingBox, QuadratureMeasure};
pub use oracle::{
    enumerate_agreement_band, fixed_marginal_cost_1d, oracle_enumerate, oracle_enumerate_with_fee,
    oracle_lambda_scan_1d, scan_agreement_band, stability_bound_check, stability_convergence_check,
    sup_fee_difference, sup_grid_slack, EnumerateReport, OracleConfig, ScanReport,
    StabilityBoundReport, StabilityConvergenceReport, StabilityStep,
};
pub use report::{
    enumerate_to_json, scan_to_json, solution_from_json, solution_to_json, stability_to_csv,
    SolutionFile,
};
pub use sites::SiteSet;
pub use solver::{
    certify, certify_potentials, primal_value, solve_fixed_marginal, solve_storage, Certificate,
    FixedMarginalSolve, SolveReport, SolverConfig, StepRule,
};
pub use transforms::{
    assign_cells, c_transform, cell_masses, cstar_transform, double_conjugate_values, dual_value,
    sweep, CellAssignment, DualPotential,
};
