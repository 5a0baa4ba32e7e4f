//! On-disk formats: problem files, rule files and solution files.

use std::fs;
use std::path::Path;

use alphari::{
    AlphaParams, Branch, ChoiceRule, ExtReal, OptimalityReport, Problem, Regime, Solution, SolveConfig,
    SupportReport, TieRule,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Prior sums farther than this from one are rejected outright.
const PRIOR_RENORMALIZE_LIMIT: f64 = 1e-6;

/// Prior sums within this of one are accepted as they are.
const PRIOR_EXACT_LIMIT: f64 = 1e-9;

/// Rule rows may deviate from unit mass by this much before being rescaled.
const RULE_MASS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub prior: Vec<f64>,
    /// One row per state.
    pub utility: Vec<Vec<f64>>,
    pub alpha: f64,
    pub kappa: f64,
}

impl ProblemFile {
    /// Validates the file and builds the problem, renormalizing a prior that
    /// is off by at most `1e-6`. Warnings are appended to `warnings`.
    pub fn into_problem(self, warnings: &mut Vec<String>) -> Result<Problem, CliError> {
        let mut prior = self.prior;
        let total: f64 = prior.iter().sum();
        let all_positive = prior.iter().all(|&w| w > 0.0 && w.is_finite());
        let off = (total - 1.0).abs();
        if all_positive && off > PRIOR_EXACT_LIMIT && off <= PRIOR_RENORMALIZE_LIMIT {
            warnings.push(format!("prior sums to {total}; renormalized"));
            prior.iter_mut().for_each(|w| *w /= total);
        }
        let params = AlphaParams::new(self.alpha, self.kappa)?;
        Ok(Problem::new(
            self.states,
            self.actions,
            prior,
            self.utility,
            params,
        )?)
    }
}

/// A choice rule. Any JSON object with a `rule` matrix is accepted, so a
/// solution file doubles as a rule file.
#[derive(Clone, Debug, Deserialize)]
struct RuleFile {
    rule: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub state: String,
    pub lambda: f64,
    pub nu: Option<f64>,
    pub branch: Branch,
    /// Payoff maximizers outside the reference support that received residual mass.
    pub maximizers: Vec<String>,
    pub residual_mass: f64,
    pub lambda_bar: f64,
    pub lambda_bar_zero: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportRecord {
    pub regime: Regime,
    pub s_m: Vec<String>,
    pub s_theta: Vec<Vec<String>>,
    pub consideration_set: Vec<String>,
    pub common_support: Vec<String>,
    pub holds: bool,
    pub violations: Vec<String>,
}

impl SupportRecord {
    pub fn new(report: &SupportReport, actions: &[String]) -> Self {
        SupportRecord {
            regime: report.regime,
            s_m: labels(&report.s_m, actions),
            s_theta: report.s_theta.iter().map(|s| labels(s, actions)).collect(),
            consideration_set: labels(&report.consideration_set, actions),
            common_support: labels(&report.common_support, actions),
            holds: report.holds(),
            violations: report.violations(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverRecord {
    pub converged: bool,
    pub iterations: usize,
    pub runs: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
    pub objective_tol: f64,
    pub point_tol: f64,
    pub certificate_tol: f64,
    pub tie_rule: TieRule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub alpha: f64,
    pub q: f64,
    pub kappa: f64,
    pub rule: Vec<Vec<f64>>,
    pub reference: Vec<f64>,
    pub per_state: Vec<StateRecord>,
    pub expected_payoff: f64,
    pub information: ExtReal,
    pub objective: f64,
    pub support: SupportRecord,
    pub optimality: OptimalityReport,
    pub solver: SolverRecord,
}

impl SolutionFile {
    pub fn new(
        problem: &Problem,
        solution: &Solution,
        support: &SupportReport,
        config: &SolveConfig,
    ) -> Self {
        let actions = problem.action_labels();
        SolutionFile {
            states: problem.state_labels().to_vec(),
            actions: actions.to_vec(),
            alpha: problem.alpha(),
            q: problem.params().q(),
            kappa: problem.kappa(),
            rule: solution.rule.rows().to_vec(),
            reference: solution.reference.mass().to_vec(),
            per_state: solution
                .statewise
                .iter()
                .zip(problem.state_labels())
                .map(|(s, label)| StateRecord {
                    state: label.clone(),
                    lambda: s.lambda,
                    nu: s.nu,
                    branch: s.branch,
                    maximizers: labels(&s.maximizer_set, actions),
                    residual_mass: s.residual_mass,
                    lambda_bar: s.lambda_bar,
                    lambda_bar_zero: s.lambda_bar_zero,
                })
                .collect(),
            expected_payoff: solution.expected_payoff,
            information: solution.information,
            objective: solution.objective,
            support: SupportRecord::new(support, actions),
            optimality: solution.certificate.clone(),
            solver: SolverRecord {
                converged: solution.converged,
                iterations: solution.iterations,
                runs: solution.runs,
                seed: config.rng_seed,
                restarts: config.restarts,
                max_iters: config.max_iters,
                objective_tol: config.objective_tol,
                point_tol: config.point_tol,
                certificate_tol: config.certificate_tol,
                tie_rule: config.tie_rule,
            },
        }
    }

    /// Pretty JSON with a trailing newline. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("solution files contain no NaN");
        text.push('\n');
        text
    }
}

/// Action labels of `indices`.
pub fn labels(indices: &[usize], actions: &[String]) -> Vec<String> {
    indices.iter().map(|&a| actions[a].clone()).collect()
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: cannot read file: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        if field == "." {
            CliError::Input(format!("{}: {inner}", path.display()))
        } else {
            CliError::Input(format!("{}: field `{field}`: {inner}", path.display()))
        }
    })
}

pub fn read_problem(path: &Path, warnings: &mut Vec<String>) -> Result<Problem, CliError> {
    let file: ProblemFile = read_json(path)?;
    file.into_problem(warnings)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn read_rule(path: &Path) -> Result<ChoiceRule, CliError> {
    let file: RuleFile = read_json(path)?;
    ChoiceRule::normalized(file.rule, RULE_MASS_TOL)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
