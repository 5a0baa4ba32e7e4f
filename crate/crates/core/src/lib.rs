//! Rational inattention with alpha-divergence information costs.
//!
//! An agent picks a stochastic choice rule `P` (one distribution over actions
//! per state) to maximize expected payoff minus `kappa` times the
//! alpha-information of `P`. Optimal rules are q-exponential reweightings of a
//! reference distribution `m` with `q = (3 + alpha) / 2`, and `m` is the
//! alpha-integration (a normalized power mean) of the rule itself.
//!
//! Modules, bottom-up:
//!
//! - [`math`]: q-exponential, alpha-mean kernel and extended reals
//! - [`information`]: alpha-divergence, alpha-integration, alpha-information
//! - [`statewise`]: best response of one state to a fixed reference
//! - [`solver`]: alternating maximization with certified restarts, alpha sweeps
//! - [`verify`]: optimality certificate, support classification, grid oracle

pub mod error;
pub mod information;
pub mod math;
pub mod problem;
pub mod solver;
pub mod statewise;
pub mod verify;

pub use error::{Error, Result};
pub use information::{
    alpha_divergence, alpha_information, alpha_integration, weighted_divergence, ChoiceRule, Integration,
    ReferenceDist, SupportSets,
};
pub use math::{alpha_mean, fused_h_qexp, h_alpha, h_alpha_inv, q_exp, AlphaParams, ExtReal};
pub use problem::Problem;
pub use solver::{expected_payoff, objective, solve, sweep, Solution, SolveConfig, SweepEntry};
pub use statewise::{
    lambda_bar_zero, solve_lambda_bar, statewise_objective, statewise_solve, Branch, StatewiseSolution,
    TieRule,
};
pub use verify::{
    brute_force_refine, brute_force_refined, brute_force_solve, check_optimality, cutoff_diagnostics,
    is_cofinite, support_report, varphi_alpha, CutoffDiagnostics, ExtremumKind, OptimalityReport, Regime,
    SupportReport,
};
