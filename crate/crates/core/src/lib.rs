//! Sponge-crossing connectivity of weighted networks under classical bond
//! percolation and concurrence percolation rules.

pub mod bethe;
mod broyden;
pub mod cli;
pub mod network;
pub mod oracle;
pub mod reduction;
pub mod scaling;
pub mod starmesh;
pub mod weight;

pub use bethe::{bethe_closed_form_k3, bethe_diluted_recursion, bethe_finite, bethe_finite_series, bethe_fixed_point, bethe_thresholds, saturation_point, BetheError, BetheSpec, BetheThresholds, DilutedValue};
pub use oracle::{brute_force_sc, crossing_bfs, crossing_union_find, monte_carlo_sc, CrossingSample, OracleError};
pub use network::{
    build_bethe, build_lattice, contract_boundaries, dilute, load_network, LatticeKind, LatticeSpec, Link, Network,
    NetworkError, NodeId,
};
pub use reduction::{degrade_node, reduce_to_pair, reduce_with_policy, sponge_crossing, sponge_crossing_with, OrderPolicy, ReductionError, ReductionFailure, ReductionTrace, RunRecord, SpongeCrossingEstimate, SpongeOptions};
pub use scaling::{correlation_length, estimate_threshold_crossing, fit_layer_cutoff, fit_power_law, kesten_exponent, kesten_points, literature_thresholds, turning_point, CorrelationLength, CrossingEstimate, Curve, CutoffFit, LatticeRow, Regime, ScalingError, ScalingFit, ThresholdRow, LATTICE_ROWS};
pub use starmesh::{
    pairwise_connectivity, solve_star_mesh, star_mesh_residual, MeshGraph, SolveError, SolverConfig, StarGraph,
};
pub use weight::{compose_parallel, compose_series, convert_weight, LinkWeight, RuleSystem, WeightError};
