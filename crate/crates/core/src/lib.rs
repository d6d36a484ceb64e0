//! Rothe time discretization on weighted graphs.
//!
//! Semilinear heat equation `∂ₜu = Δu − |u|^{p−1}u` with Dirichlet data,
//! parabolic variational inequalities, a spectral/ODE oracle for
//! cross-checking, and exhaustion of infinite graphs by finite domains.

pub mod calculus;
pub mod compare;
pub mod error;
pub mod graph;
pub mod heat;
pub mod io;
pub mod linalg;
pub mod spectral;
pub mod vi;

pub use calculus::{
    gamma, green_identity_check, inner_product, integrate, laplacian, lq_norm, norms, InnerProduct, Norms, VertexField,
};
pub use compare::{compare, compare_with, observed_orders, CompareRow, ErrorTable, RefinementPoint};
pub use error::{Error, Result};
pub use graph::{
    compute_metrics, exhaust, make_domain, materialize_ball, whole_graph, Domain, ExhaustionSequence, GraphBuilder,
    GraphMetrics, Lattice, Membership, NeighborOracle, Target, VertexId, VertexLabel, WeightedGraph,
};
pub use heat::{
    evaluate_interpolant, monitor_estimates, run_exhaustion, run_rothe, solve_step, step_functional, EstimateReport,
    HeatProblem, HeatStepper, Interpolant, RotheTrajectory, StepSettings, TimePartition,
};
pub use spectral::{dirichlet_eigenbasis, exact_p1_solution, ode_oracle, ExactP1, SpectralBasis};
pub use vi::{
    lipschitz_validate, run_vi, vi_monotonicity_monitor, vi_step, Constraint, Forcing, VIProblem, VIRun, VIStepper,
};
