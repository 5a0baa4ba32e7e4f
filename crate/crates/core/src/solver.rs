//! Alternating maximization over choice rules and reference distributions.
//!
//! Each sweep solves every state against the current reference (the P-step)
//! and then replaces the reference with the alpha-integration of the new rule
//! (the m-step). Both steps are exact coordinate maximizations of the same
//! jointly concave objective, so the objective never decreases. Alternation
//! cannot move mass back onto an action the reference has dropped, and from an
//! interior start it only approaches a boundary optimum asymptotically, so a
//! run is accepted only once it passes the optimality certificate; otherwise
//! the solver retries from pruned supports, from every candidate support on
//! small action sets, and from random interior points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::information::{alpha_information, alpha_integration, ChoiceRule, ReferenceDist};
use crate::math::ExtReal;
use crate::problem::Problem;
use crate::statewise::{statewise_solve, StatewiseSolution, TieRule};
use crate::verify::{check_optimality, support_report, OptimalityReport, SupportReport};

/// Largest action set for which every candidate support is tried.
pub const ENUMERATION_LIMIT: usize = 10;

/// Relative mass below which an action is dropped when restarting from a pruned support.
const PRUNE_RELATIVE: f64 = 1e-6;

/// Iterations per polishing round of a settled but uncertified run.
const POLISH_CHUNK: usize = 500;

/// A polishing round must shrink the certificate gap by this factor to earn another.
const POLISH_PROGRESS: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub max_iters: usize,
    pub objective_tol: f64,
    pub point_tol: f64,
    pub restarts: usize,
    pub tie_rule: TieRule,
    pub rng_seed: u64,
    /// Absolute tolerance of the optimality certificate.
    pub certificate_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_iters: 100_000,
            objective_tol: 1e-10,
            point_tol: 1e-9,
            restarts: 8,
            tie_rule: TieRule::Uniform,
            rng_seed: 0,
            certificate_tol: 1e-7,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be at least 1"));
        }
        for (field, v) in [
            ("objective_tol", self.objective_tol),
            ("point_tol", self.point_tol),
            ("certificate_tol", self.certificate_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(field, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub rule: ChoiceRule,
    pub reference: ReferenceDist,
    pub statewise: Vec<StatewiseSolution>,
    pub expected_payoff: f64,
    pub information: ExtReal,
    pub objective: f64,
    /// Iterations of the run that produced this solution.
    pub iterations: usize,
    /// Alternation runs attempted in total.
    pub runs: usize,
    /// True iff the certificate passed.
    pub converged: bool,
    pub certificate: OptimalityReport,
    /// Objective after every iteration of the returned run.
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

/// `sum_s prior_s sum_a P_s(a) u(a, s)`.
pub fn expected_payoff(rule: &ChoiceRule, problem: &Problem) -> f64 {
    rule.rows()
        .iter()
        .zip(problem.utility())
        .zip(problem.prior())
        .map(|((row, u), w)| w * row.iter().zip(u).map(|(p, x)| p * x).sum::<f64>())
        .sum()
}

/// Expected payoff minus `kappa` times the alpha-information; `-inf` when the
/// information is infinite.
pub fn objective(rule: &ChoiceRule, problem: &Problem) -> ExtReal {
    let info = alpha_information(rule, problem.prior(), problem.alpha());
    ExtReal::Finite(expected_payoff(rule, problem)) + info.scale(-problem.kappa())
}

struct Run {
    rule: ChoiceRule,
    reference: ReferenceDist,
    statewise: Vec<StatewiseSolution>,
    trace: Vec<f64>,
    iterations: usize,
}

/// Alternates from `start`, appending to `trace`.
///
/// With `budget = None` the run stops once it settles; with `Some(n)` it runs
/// `n` more iterations regardless of the tolerances. Either way it stops at
/// `max_iters` iterations in total.
fn alternate(
    problem: &Problem,
    start: ReferenceDist,
    mut trace: Vec<f64>,
    config: &SolveConfig,
    budget: Option<usize>,
) -> Result<Run> {
    let mut m = start;
    let mut prev_rule: Option<ChoiceRule> = None;
    let limit = budget.map_or(config.max_iters, |n| (trace.len() + n).min(config.max_iters));
    loop {
        let statewise = (0..problem.n_states())
            .map(|s| statewise_solve(s, &m, problem, config.tie_rule))
            .collect::<Result<Vec<_>>>()?;
        let rule = ChoiceRule::normalized(statewise.iter().map(|s| s.row.clone()).collect(), 1e-9)?;
        let next_m = alpha_integration(&rule, problem.prior(), problem.alpha()).into_reference()?;
        let value = objective(&rule, problem)
            .finite()
            .ok_or(Error::InfiniteInformation)?;

        let mut change = next_m
            .mass()
            .iter()
            .zip(m.mass())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if let Some(prev) = &prev_rule {
            change = change.max(rule.max_abs_diff(prev));
        }
        let gain = if prev_rule.is_some() {
            trace.last().map(|last| value - last)
        } else {
            None
        };
        trace.push(value);

        let settled = budget.is_none()
            && matches!(gain, Some(g) if g < config.objective_tol)
            && change < config.point_tol;
        if settled || trace.len() >= limit {
            return Ok(Run {
                rule,
                reference: next_m,
                statewise,
                iterations: trace.len(),
                trace,
            });
        }
        prev_rule = Some(rule);
        m = next_m;
    }
}

fn pruned_support(m: &ReferenceDist) -> Vec<usize> {
    let top = m.mass().iter().cloned().fold(0.0, f64::max);
    (0..m.len())
        .filter(|&a| m.mass()[a] >= PRUNE_RELATIVE * top)
        .collect()
}

fn finish(problem: &Problem, run: Run, runs: usize, config: &SolveConfig) -> Result<Solution> {
    let certificate = check_optimality(&run.rule, problem, config.certificate_tol)?;
    let expected_payoff = expected_payoff(&run.rule, problem);
    let information = alpha_information(&run.rule, problem.prior(), problem.alpha());
    let objective = objective(&run.rule, problem)
        .finite()
        .ok_or(Error::InfiniteInformation)?;
    Ok(Solution {
        converged: certificate.overall,
        rule: run.rule,
        reference: run.reference,
        statewise: run.statewise,
        expected_payoff,
        information,
        objective,
        iterations: run.iterations,
        runs,
        certificate,
        objective_trace: run.trace,
    })
}

fn certificate_gap(report: &OptimalityReport) -> f64 {
    report.support_gap.to_f64().max(report.statewise_gap)
}

/// Solves the information-acquisition problem.
///
/// Returns the first certified solution, or the best uncertified one with
/// `converged = false` when every start fails the certificate.
pub fn solve(problem: &Problem, config: &SolveConfig) -> Result<Solution> {
    config.validate()?;
    let mut search = Search {
        problem,
        config,
        runs: 0,
        best: None,
        tried: Vec::new(),
    };
    let n = problem.n_actions();
    let all: Vec<usize> = (0..n).collect();

    let first = search.start_on(&all)?;
    if config.restarts == 0 {
        return Ok(search.into_result(first));
    }
    if let Attempt::Uncertified(m) = &first {
        let retry = search.start_on(&pruned_support(m))?;
        if let Attempt::Certified(sol) = retry {
            return Ok(*sol);
        }
    } else {
        return Ok(search.into_result(first));
    }

    if n <= ENUMERATION_LIMIT {
        let mut subsets: Vec<Vec<usize>> = (1u32..(1 << n))
            .map(|mask| (0..n).filter(|&a| mask & (1 << a) != 0).collect())
            .collect();
        subsets.sort_by_key(Vec::len);
        for support in subsets {
            if let Attempt::Certified(sol) = search.start_on(&support)? {
                return Ok(*sol);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    for _ in 0..config.restarts {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(f64::EPSILON..1.0)).collect();
        match search.start(ReferenceDist::normalized(raw)?)? {
            Attempt::Certified(sol) => return Ok(*sol),
            Attempt::Uncertified(m) => {
                if let Attempt::Certified(sol) = search.start_on(&pruned_support(&m))? {
                    return Ok(*sol);
                }
            }
            Attempt::Skipped => {}
        }
    }
    Ok(search.into_result(Attempt::Skipped))
}

enum Attempt {
    Certified(Box<Solution>),
    /// Carries the final reference of the failed run.
    Uncertified(ReferenceDist),
    Skipped,
}

struct Search<'a> {
    problem: &'a Problem,
    config: &'a SolveConfig,
    runs: usize,
    best: Option<Solution>,
    tried: Vec<Vec<usize>>,
}

impl Search<'_> {
    /// Starts from the uniform distribution on `support` unless already tried.
    fn start_on(&mut self, support: &[usize]) -> Result<Attempt> {
        if self.tried.iter().any(|t| t == support) {
            return Ok(Attempt::Skipped);
        }
        self.tried.push(support.to_vec());
        self.start(ReferenceDist::uniform_on(self.problem.n_actions(), support))
    }

    fn start(&mut self, m0: ReferenceDist) -> Result<Attempt> {
        self.runs += 1;
        let run = alternate(self.problem, m0, Vec::new(), self.config, None)?;
        let mut sol = finish(self.problem, run, self.runs, self.config)?;
        // Polish while each chunk at least halves the certificate gap.
        while !sol.converged && sol.iterations < self.config.max_iters {
            let before = certificate_gap(&sol.certificate);
            if !before.is_finite() {
                break;
            }
            let trace = std::mem::take(&mut sol.objective_trace);
            let run = alternate(
                self.problem,
                sol.reference.clone(),
                trace,
                self.config,
                Some(POLISH_CHUNK),
            )?;
            let next = finish(self.problem, run, self.runs, self.config)?;
            let improved = certificate_gap(&next.certificate) <= POLISH_PROGRESS * before;
            sol = next;
            if !improved {
                break;
            }
        }
        if sol.converged {
            return Ok(Attempt::Certified(Box::new(sol)));
        }
        let reference = sol.reference.clone();
        if self.best.as_ref().is_none_or(|b| sol.objective > b.objective) {
            self.best = Some(sol);
        }
        Ok(Attempt::Uncertified(reference))
    }

    fn into_result(self, last: Attempt) -> Solution {
        let mut sol = match last {
            Attempt::Certified(sol) => *sol,
            _ => self.best.expect("at least one run was made"),
        };
        sol.runs = self.runs;
        sol
    }
}

/// One entry of an alpha sweep.
#[derive(Clone, Debug)]
pub struct SweepEntry {
    pub alpha: f64,
    pub outcome: Result<(Solution, SupportReport)>,
}

/// Solves `problem` independently at each alpha.
///
/// Runs on the current rayon pool; output order follows `alphas`.
pub fn sweep(problem: &Problem, alphas: &[f64], config: &SolveConfig) -> Vec<SweepEntry> {
    alphas
        .par_iter()
        .map(|&alpha| SweepEntry {
            alpha,
            outcome: problem.with_alpha(alpha).and_then(|p| {
                let sol = solve(&p, config)?;
                let support = support_report(&sol.rule, &p);
                Ok((sol, support))
            }),
        })
        .collect()
}
