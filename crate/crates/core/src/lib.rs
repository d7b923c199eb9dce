//! Odd- and even-order quasi-differential operators with distributional
//! potentials: first-order systems, boundary triplets, spectra, Green
//! functions and convergence of operator families.

pub mod boundary;
pub mod convergence;
pub mod error;
pub mod integrate;
pub mod linalg;
pub mod poly;
pub mod potential;
pub mod spectral;
pub mod system;

pub use error::{Error, Result};
pub use integrate::{
    class_m_indicator, fundamental_matrix, solve_cauchy, IntegratorOptions, Propagator, Trajectory,
};
pub use linalg::{CMatrix, CVector, C64};
pub use poly::{Piecewise, PiecewiseMatrix, PiecewisePoly};
pub use potential::{make_delta_family, make_oscillating_family, AntiderivativeSpec};
pub use system::{assemble_a, assemble_rhs, OperatorConfig, TraceVector};
pub use boundary::{
    canonical_bc, classify_parameter, construct_with_traces, lagrange_defect, pgz_verify,
    BoundaryTriplet, CouplingCoefficients, ExtensionParameter, ParameterClass, Sign,
};
pub use spectral::{
    apply_resolvent, characteristic_matrix, find_complex_eigenvalues, find_real_eigenvalues,
    generalized_resolvent, greens_matrix, EigenRecord, GreenFunction, GreenKernel, Rect,
    SearchOptions, TwoPointBC,
};
pub use convergence::{
    eigenvalue_drift, kernel_distance, levin_conditions, resolvent_distance_bound,
    thm2_condition_norms, ConvergenceReport, FamilySpec,
};
