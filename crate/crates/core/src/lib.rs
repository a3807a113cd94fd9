//! Singular self-similar profiles and radial simulation of the fast
//! diffusion equation u_t = lap(u^m) in the subcritical range
//! 0 < m < (n-2)/n, n >= 3.
//!
//! The crate constructs the radially symmetric profiles f with
//! r^gamma f -> A at the origin and r^{(n-2)/m} f -> D_A at infinity,
//! simulates the equation on punctured radial annuli, and verifies the
//! structural properties of these flows (trapping between self-similar
//! solutions, the Aronson-Benilan bound, weighted-L1 contraction, and
//! convergence of the rescaled flow to a profile) as executable checks.

// validation sites use `!(x > 0)` on purpose: it rejects NaN along with
// the out-of-range values, which `x <= 0` would let through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exponents;
pub mod grid;
pub mod interp;
pub mod io;
pub mod metrics;
pub mod ode;
pub mod pde;
pub mod perturb;
pub mod profile;
pub mod report;
pub mod selfsimilar;

pub use error::{Error, Result};
pub use exponents::{derive_exponents, ExponentSet, OriginRegime};
pub use grid::LogGrid;
pub use metrics::{contraction_series, convergence_to_profile, weighted_l1, WeightedNorm};
pub use pde::{
    check_aronson_benilan, check_trapping, rescale_trajectory, simulate, simulate_rescaled,
    BoundarySpec, RadialField, RescaledTrajectory, SchemeOptions, Trajectory,
};
pub use profile::{
    extract_far_constant, invert_to_f, local_fixed_point, profile_diagnostics, solve_profile,
    ProfileCurve, SelfSimilarProfile,
};
pub use report::{DiagnosticEntry, DiagnosticsReport};
pub use selfsimilar::{
    residual_heat_operator, BarenblattSolution, RadialSpaceTimeField, SelfSimilarSolution,
    StaticSingular,
};
