//! Spectral analysis of regular Sturm–Liouville problems
//! `-(p y')' + q y = λ Δ y` whose weight `Δ ≥ 0` may vanish on whole subintervals.

pub mod config;
mod dop853;
pub mod error;
pub mod nevanlinna;
pub mod problem;
pub mod propagator;
pub mod quad;
pub mod reference;
mod roots;
pub mod spectral;
pub mod transform;
pub mod verify;

pub use config::{load_config, load_problem, parse_scalar, ProblemConfig};
pub use error::{Error, Result};
pub use problem::{CoefficientFn, Piece, QuadConfig, Rule, SLProblem};
pub use propagator::{
    phi_at, propagate, propagate_backward, psi_at, wronskian, StateVec, Trajectory,
};
pub use nevanlinna::{
    asymptotics, check_nevanlinna, classify_bc, eta_relation, eval_param, AnalyticParam,
    Asymptotics, BcClass, BcLabel, BoundaryParam, EtaRelation, Slope, TauValue,
};
pub use spectral::{
    build_spectral_function, default_eps_schedule, find_eigenvalues, m_function, point_mass,
    spectral_density, stieltjes_cdf, AcNode, MFunctionSample, SpectralFunction,
};
pub use transform::{
    eigen_expansion, fourier_transform, inverse_transform, membership_in_f, parseval_defect,
    uniform_convergence_profile, ConvergenceReport, EigenTerm, InverseValue, MembershipReport,
    TransformedFn, Truncation,
};
