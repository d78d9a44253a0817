//! Normal sub-Riemannian geodesics and Carnot-Caratheodory distances.

mod flow;
mod shooting;

pub use flow::{
    advance_state, convergence_order, covariant_derivative_along, geodesic_equation_residual, hamiltonian,
    integrate_geodesic, integrate_path, strong_bracket_check, velocity, BracketReport, ConvergenceReport,
    CotangentState, GeodesicKind, GeodesicPath, GeodesicSample, PathDiagnostics, MIN_STEPS,
};
pub use shooting::{
    cc_distance, connecting_geodesic, estimate_diameter, estimate_diameter_pairs, DiameterEstimate, DistanceResult,
    PairResult, ShootingConfig,
};
