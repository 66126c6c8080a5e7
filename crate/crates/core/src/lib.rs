//! Privacy mechanism design under sparse point-wise leakage.
//!
//! An agent observes `Y`, correlated with a sensitive `X`, and releases `U`
//! generated from `Y`. Each released symbol may shift the posterior of at
//! most `N` letters of `X`, with χ² leakage at most `ε²`. For small `ε` the
//! design reduces to a sparse Rayleigh quotient
//!
//! ```text
//! maximize lᵀ A l   s.t.  ‖l‖₂ = 1,  l ⊥ √P_X,  ‖l‖₀ ≤ N
//! ```
//!
//! with `A = WᵀW` and `W = [√P_Y]⁻¹ P_{X|Y}⁻¹ [√P_X]`. This crate provides
//!
//! * [`probmodel`]: validated joint distributions and the operator `W`;
//! * [`spectral`]: Jacobi eigensolver and the projections used below;
//! * [`exact`]: exact optimum by support enumeration and the Pareto curve;
//! * [`sdp`]: the lifted convex relaxation solved by ADMM;
//! * [`rounding`]: SDP-to-sparse rounding, envelope and Pareto gap;
//! * [`limits`]: `λ*`, `v*`, the thresholds `N_th`, `τ_th` and theorem checks;
//! * [`mechanism`]: the binary uniform disclosure channel and its utility.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the
//! `*F64`/`*F32` aliases below name the concrete instantiations.

pub mod error;
pub mod exact;
pub mod limits;
pub mod linalg;
pub mod mechanism;
pub mod probmodel;
pub mod rounding;
pub mod scalar;
pub mod sdp;
pub mod spectral;

pub use error::{Error, Result};
pub use exact::{pareto_exact, restricted_rayleigh, solve_exact, ParetoCurve, SparseSolution};
pub use limits::{
    threshold_report, thresholds, top_direction, verify_theorem, ClauseStatus, ClauseVerdict,
    ThresholdReport, TheoremVerdict,
};
pub use linalg::Matrix;
pub use mechanism::{
    approx_utility, build_mechanism, default_epsilon, leakage_report, max_epsilon, utility_exact,
    Mechanism,
};
pub use probmodel::{
    build_operator, load_joint, random_instance, verify_pointwise_constraints, InstanceFile,
    JointDistribution, LeakageOperator,
};
pub use rounding::{pareto_gap, round_solution, sdp_envelope, GapReport, RoundedSolution};
pub use scalar::Real;
pub use sdp::{dual_bound_check, solve_sdp, sweep_tau, SdpSolution, SolverOptions, TauGrid};
pub use spectral::{eig_sym, SymmetricEigen};

pub type MatrixF64 = Matrix<f64>;
pub type MatrixF32 = Matrix<f32>;
pub type JointDistributionF64 = JointDistribution<f64>;
pub type JointDistributionF32 = JointDistribution<f32>;
pub type LeakageOperatorF64 = LeakageOperator<f64>;
pub type LeakageOperatorF32 = LeakageOperator<f32>;
pub type SymmetricEigenF64 = SymmetricEigen<f64>;
pub type SymmetricEigenF32 = SymmetricEigen<f32>;
pub type SparseSolutionF64 = SparseSolution<f64>;
pub type ParetoCurveF64 = ParetoCurve<f64>;
pub type SdpSolutionF64 = SdpSolution<f64>;
pub type RoundedSolutionF64 = RoundedSolution<f64>;
pub type ThresholdReportF64 = ThresholdReport<f64>;
pub type MechanismF64 = Mechanism<f64>;
