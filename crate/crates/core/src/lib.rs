//! Higher-order variational mechanics over coordinate jets.
//!
//! The crate covers Lagrangians that depend on a coordinate and several of
//! its time derivatives: Euler–Lagrange residuals and equations of motion,
//! Ostrogradsky momenta and the associated Hamiltonian, action integrals and
//! stationarity checks, together with an exponential (`exp(k/r)`) family of
//! modified gravitational potentials and central-force orbit integration.

pub mod action;
pub mod euler_lagrange;
pub mod expr;
pub mod integrate;
pub mod jet;
pub mod lagrangian;
pub mod potentials;
pub mod selftest;

pub use action::{
    action_integral, paper_action, stationarity_test, ActionError, PerturbationSpec,
    StationarityReport,
};
pub use euler_lagrange::{
    derive_eom, el_residual, force_ladder, generalized_hamiltonian, newton_balance_residual,
    ostrogradsky_momenta, Convention, EomError, EomSystem, ForceLadder, Mechanics,
    MechanicsError, MomentaVector,
};
pub use expr::{parse, Bindings, Expr, ExprError, Func, JetVar, Variable};
pub use integrate::{
    compare_taylor, conservation_report, integrate_eom, solve, ConservationReport,
    IntegrateError, IntegratorSpec, Method, OdeSystem, Solution, TaylorTable,
};
pub use jet::{JetError, JetPoint, StepStats, Trajectory};
pub use lagrangian::{
    energy_ranks, EnergyRanks, ExpressionLagrangian, LagrangianError, LagrangianModel,
    QuadraticLagrangian, RankGrouping,
};
pub use potentials::{
    laplacian_residual, newtonian_comparison, orbit_simulate, potential_force, potential_value,
    series_divergence_scan, ExpVariant, OrbitInit, OrbitRun, OrbitStats, PotentialError,
    PotentialKind, PotentialModel, SeriesDiagnostics, SourceModel,
};
