//! Optimality certificates, support classification and an exhaustive oracle.
//!
//! A rule is optimal iff (1) every row is the statewise best response to the
//! rule's own alpha-integration `m`, and (2) the prior-weighted values
//! `sum_s prior_s h_alpha(exp_q((u(b, s) - lambda_s) / kappa))` are extremal on
//! `supp m`: maximal across all actions when `alpha <= 1`, minimal when
//! `alpha > 1`. The multipliers `lambda_s` are re-derived here from `m`; the
//! certificate never reads them from the solver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::information::{alpha_integration, ChoiceRule, Integration};
use crate::math::{fused_h_qexp, ExtReal};
use crate::problem::Problem;
use crate::solver::{objective, Solution};
use crate::statewise::{statewise_solve, Branch, TieRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    /// `alpha <= 1`
    Max,
    /// `alpha > 1`
    Min,
}

impl ExtremumKind {
    pub fn for_alpha(alpha: f64) -> Self {
        if alpha <= 1.0 {
            ExtremumKind::Max
        } else {
            ExtremumKind::Min
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub statewise_ok: Vec<bool>,
    /// Per action.
    pub condition2_values: Vec<ExtReal>,
    pub extremum: ExtReal,
    pub extremum_kind: ExtremumKind,
    /// Worst `|value(a) - extremum|` over `a` in `supp m`.
    pub support_gap: ExtReal,
    /// Action attaining `support_gap`.
    pub worst_action: Option<usize>,
    /// Worst entrywise row mismatch against the statewise best response.
    pub statewise_gap: f64,
    pub reference: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// At `alpha = 1`, actions whose value is `+inf` are ranked as `-inf` in the
    /// max test; they are listed here.
    pub infinite_excluded: Vec<usize>,
    pub tolerance: f64,
    pub overall: bool,
}

/// Checks both optimality conditions at absolute tolerance `tolerance`.
///
/// Fails with [`Error::InfiniteInformation`] when the rule has empty common
/// support at `alpha >= 1`; such a rule is never optimal.
pub fn check_optimality(rule: &ChoiceRule, problem: &Problem, tolerance: f64) -> Result<OptimalityReport> {
    if rule.n_states() != problem.n_states() || rule.n_actions() != problem.n_actions() {
        return Err(Error::invalid(
            "rule",
            format!(
                "is {}x{} but the problem has {} states and {} actions",
                rule.n_states(),
                rule.n_actions(),
                problem.n_states(),
                problem.n_actions()
            ),
        ));
    }
    let alpha = problem.alpha();
    let kappa = problem.kappa();
    let m = match alpha_integration(rule, problem.prior(), alpha) {
        Integration::Finite(m) => m,
        Integration::InfiniteInformation => return Err(Error::InfiniteInformation),
    };
    let support = m.support();

    let mut statewise_ok = Vec::with_capacity(problem.n_states());
    let mut lambdas = Vec::with_capacity(problem.n_states());
    let mut statewise_gap: f64 = 0.0;
    for s in 0..problem.n_states() {
        let best = statewise_solve(s, &m, problem, TieRule::Uniform)?;
        let row = rule.row(s);
        let mut gap: f64 = 0.0;
        let mut free_mass = 0.0;
        for a in 0..problem.n_actions() {
            let free = best.branch == Branch::Case2b && best.maximizer_set.contains(&a);
            if free {
                free_mass += row[a];
            } else {
                gap = gap.max((row[a] - best.row[a]).abs());
            }
        }
        if best.branch == Branch::Case2b {
            gap = gap.max((free_mass - best.residual_mass).abs());
        }
        statewise_gap = statewise_gap.max(gap);
        statewise_ok.push(gap <= tolerance);
        lambdas.push(best.lambda);
    }

    let condition2_values: Vec<ExtReal> = (0..problem.n_actions())
        .map(|b| {
            (0..problem.n_states())
                .map(|s| {
                    fused_h_qexp((problem.payoff(s, b) - lambdas[s]) / kappa, alpha).scale(problem.prior()[s])
                })
                .fold(ExtReal::ZERO, |a, b| a + b)
        })
        .collect();

    let kind = ExtremumKind::for_alpha(alpha);
    let mut infinite_excluded = Vec::new();
    let ranked: Vec<ExtReal> = condition2_values
        .iter()
        .enumerate()
        .map(|(b, &v)| {
            if alpha == 1.0 && v == ExtReal::PosInf {
                infinite_excluded.push(b);
                ExtReal::NegInf
            } else {
                v
            }
        })
        .collect();
    let extremum = match kind {
        ExtremumKind::Max => ranked
            .iter()
            .cloned()
            .fold(ExtReal::NegInf, |a, b| if b > a { b } else { a }),
        ExtremumKind::Min => ranked
            .iter()
            .cloned()
            .fold(ExtReal::PosInf, |a, b| if b < a { b } else { a }),
    };

    let mut support_gap = ExtReal::ZERO;
    let mut worst_action = None;
    for &a in &support {
        let gap = match (ranked[a], extremum) {
            (ExtReal::Finite(v), ExtReal::Finite(e)) => ExtReal::Finite((v - e).abs()),
            _ => ExtReal::PosInf,
        };
        if worst_action.is_none() || gap > support_gap {
            support_gap = gap;
            worst_action = Some(a);
        }
    }

    let overall = statewise_ok.iter().all(|&ok| ok) && support_gap <= ExtReal::Finite(tolerance);
    Ok(OptimalityReport {
        statewise_ok,
        condition2_values,
        extremum,
        extremum_kind: kind,
        support_gap,
        worst_action,
        statewise_gap,
        reference: m.mass().to_vec(),
        lambdas,
        infinite_excluded,
        tolerance,
        overall,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `alpha < -1`: rows pick actions from the consideration set above a cutoff.
    Cutoff,
    /// `-1 <= alpha < 1`: every row has the support of `m`.
    FullSupport,
    /// `alpha >= 1`: `supp m` is the common support.
    CommonSupport,
}

impl Regime {
    pub fn for_alpha(alpha: f64) -> Self {
        if alpha < -1.0 {
            Regime::Cutoff
        } else if alpha < 1.0 {
            Regime::FullSupport
        } else {
            Regime::CommonSupport
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportReport {
    pub s_m: Vec<usize>,
    pub s_theta: Vec<Vec<usize>>,
    pub consideration_set: Vec<usize>,
    pub common_support: Vec<usize>,
    pub regime: Regime,
}

impl SupportReport {
    /// Descriptions of every violated support relation for this regime.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self.regime {
            Regime::Cutoff => {
                for (s, set) in self.s_theta.iter().enumerate() {
                    if !set.iter().all(|a| self.s_m.contains(a)) {
                        out.push(format!("S_{s} is not contained in S_m"));
                    }
                }
                if self.s_m != self.consideration_set {
                    out.push("S_m differs from the consideration set".into());
                }
            }
            Regime::FullSupport => {
                for (s, set) in self.s_theta.iter().enumerate() {
                    if *set != self.s_m {
                        out.push(format!("S_{s} differs from S_m"));
                    }
                }
            }
            Regime::CommonSupport => {
                if self.s_m != self.common_support {
                    out.push("S_m differs from the common support".into());
                }
            }
        }
        out
    }

    pub fn holds(&self) -> bool {
        self.violations().is_empty()
    }
}

/// Supports of `m`, of each row, their union and intersection, and the regime.
pub fn support_report(rule: &ChoiceRule, problem: &Problem) -> SupportReport {
    let sets = rule.support_sets();
    let s_m = alpha_integration(rule, problem.prior(), problem.alpha())
        .reference()
        .map(|m| m.support())
        .unwrap_or_default();
    let s_theta = rule
        .rows()
        .iter()
        .map(|row| (0..row.len()).filter(|&a| row[a] > 0.0).collect())
        .collect();
    SupportReport {
        s_m,
        s_theta,
        consideration_set: sets.union_support,
        common_support: sets.common_support,
        regime: Regime::for_alpha(problem.alpha()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutoffRelation {
    Above,
    Equal,
    Below,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffEntry {
    pub action: usize,
    pub payoff: f64,
    pub cutoff: f64,
    pub relation: CutoffRelation,
    pub chosen: bool,
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffDiagnostics {
    pub states: Vec<Vec<CutoffEntry>>,
    /// `(state, action)` pairs whose choice contradicts the cutoff pattern.
    pub mismatches: Vec<(usize, usize)>,
}

/// Relates each payoff to the shifted cutoff `nu_s = lambda_s + 2 kappa / (1 + alpha)`.
///
/// For `alpha < -1` a row is positive exactly on the consideration-set actions
/// strictly above the cutoff. For `alpha >= 1` common-support actions sit
/// strictly below it and any other chosen action sits on it. In between, each
/// row must be positive exactly on the consideration set. Cutoffs are
/// recomputed from the solution's reference distribution.
pub fn cutoff_diagnostics(solution: &Solution, problem: &Problem) -> Result<CutoffDiagnostics> {
    let alpha = problem.alpha();
    if alpha == -1.0 {
        return Err(Error::domain(
            "cutoff_diagnostics",
            "no cutoff is defined at alpha = -1",
        ));
    }
    let sets = solution.rule.support_sets();
    let mut states = Vec::new();
    let mut mismatches = Vec::new();
    for s in 0..problem.n_states() {
        let best = statewise_solve(s, &solution.reference, problem, TieRule::Uniform)?;
        let cutoff = best.nu.expect("nu exists away from alpha = -1");
        let eq_tol = 1e-9 * (1.0 + cutoff.abs());
        let mut entries = Vec::new();
        for a in 0..problem.n_actions() {
            let payoff = problem.payoff(s, a);
            let relation = if (payoff - cutoff).abs() <= eq_tol {
                CutoffRelation::Equal
            } else if payoff > cutoff {
                CutoffRelation::Above
            } else {
                CutoffRelation::Below
            };
            let chosen = solution.rule.row(s)[a] > 0.0;
            let consistent = match Regime::for_alpha(alpha) {
                Regime::Cutoff => {
                    chosen == (sets.union_support.contains(&a) && relation == CutoffRelation::Above)
                }
                Regime::FullSupport => chosen == sets.union_support.contains(&a),
                Regime::CommonSupport => {
                    if sets.common_support.contains(&a) {
                        chosen && relation == CutoffRelation::Below
                    } else {
                        !chosen || relation == CutoffRelation::Equal
                    }
                }
            };
            if !consistent {
                mismatches.push((s, a));
            }
            entries.push(CutoffEntry {
                action: a,
                payoff,
                cutoff,
                relation,
                chosen,
                consistent,
            });
        }
        states.push(entries);
    }
    Ok(CutoffDiagnostics { states, mismatches })
}

/// Largest state or action count the exhaustive oracle accepts.
pub const ORACLE_LIMIT: usize = 3;

/// All points of the simplex in `dim` coordinates whose entries are multiples
/// of `1 / steps`, restricted to `lo[i] <= k_i <= hi[i]`.
fn lattice(steps: usize, lo: &[usize], hi: &[usize]) -> Vec<Vec<f64>> {
    fn rec(
        i: usize,
        left: usize,
        lo: &[usize],
        hi: &[usize],
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let dim = lo.len();
        if i == dim - 1 {
            if left >= lo[i] && left <= hi[i] {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for k in lo[i]..=hi[i].min(left) {
            cur.push(k);
            rec(i + 1, left - k, lo, hi, cur, out);
            cur.pop();
        }
    }
    let mut ints = Vec::new();
    rec(0, steps, lo, hi, &mut Vec::new(), &mut ints);
    ints.into_iter()
        .map(|ks| ks.into_iter().map(|k| k as f64 / steps as f64).collect())
        .collect()
}

fn grid_steps(step: f64) -> Result<usize> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::invalid(
            "grid_step",
            format!("must lie in (0, 1], got {step}"),
        ));
    }
    Ok((1.0 / step).round() as usize)
}

fn check_oracle_size(problem: &Problem) -> Result<()> {
    if problem.n_states() > ORACLE_LIMIT || problem.n_actions() > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            detail: format!(
                "{} states and {} actions; at most {ORACLE_LIMIT} of each",
                problem.n_states(),
                problem.n_actions()
            ),
        });
    }
    Ok(())
}

/// Per-row quantities from which the objective of any combination of rows
/// follows by summation.
struct RowTerms {
    /// `prior_s * sum_a P_s(a) u(a, s)`.
    payoff: f64,
    /// `prior_s * sum_a P_s(a) ln P_s(a)`; used at `alpha = -1`.
    entropy: f64,
    /// Per action: `prior_s P_s(a)` at `alpha = -1`, `prior_s ln P_s(a)` at
    /// `alpha = 1`, and `prior_s P_s(a)^((1 - alpha) / 2)` otherwise.
    kernel: Vec<f64>,
}

impl RowTerms {
    fn new(row: &[f64], state: usize, problem: &Problem) -> Self {
        let w = problem.prior()[state];
        let alpha = problem.alpha();
        let e = (1.0 - alpha) / 2.0;
        let payoff = w * row
            .iter()
            .zip(&problem.utility()[state])
            .map(|(p, u)| p * u)
            .sum::<f64>();
        let entropy = w * row.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>();
        let kernel = row
            .iter()
            .map(|&p| {
                if alpha == -1.0 {
                    w * p
                } else if alpha == 1.0 {
                    w * p.ln()
                } else if p == 0.0 {
                    if e > 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    w * p.powf(e)
                }
            })
            .collect();
        RowTerms {
            payoff,
            entropy,
            kernel,
        }
    }
}

/// Objective of the rule whose rows have the given terms, using the closed
/// form of the alpha-information; `None` when the information is infinite.
fn combined_objective(rows: &[&RowTerms], acc: &mut [f64], problem: &Problem) -> Option<f64> {
    let alpha = problem.alpha();
    acc.iter_mut().for_each(|v| *v = 0.0);
    let mut payoff = 0.0;
    let mut entropy = 0.0;
    for r in rows {
        payoff += r.payoff;
        entropy += r.entropy;
        for (a, k) in acc.iter_mut().zip(&r.kernel) {
            *a += k;
        }
    }
    let info = if alpha == -1.0 {
        entropy - acc.iter().filter(|&&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>()
    } else if alpha == 1.0 {
        let z: f64 = acc.iter().map(|v| v.exp()).sum();
        if z == 0.0 {
            return None;
        }
        -z.ln()
    } else {
        let e = (1.0 - alpha) / 2.0;
        let z: f64 = acc
            .iter()
            .map(|&v| {
                if v == 0.0 || v.is_infinite() {
                    0.0
                } else {
                    v.powf(1.0 / e)
                }
            })
            .sum();
        if z == 0.0 {
            return None;
        }
        4.0 / (1.0 - alpha * alpha) * (1.0 - z.powf(e))
    };
    Some(payoff - problem.kappa() * info.max(0.0))
}

/// Best rule over the product of per-state candidate rows.
fn search_product(problem: &Problem, candidates: &[Vec<Vec<f64>>]) -> Result<(ChoiceRule, f64)> {
    let n_states = candidates.len();
    let sizes: Vec<usize> = candidates.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().product();
    let terms: Vec<Vec<RowTerms>> = candidates
        .iter()
        .enumerate()
        .map(|(s, rows)| rows.iter().map(|row| RowTerms::new(row, s, problem)).collect())
        .collect();
    // (objective, flat index); ties go to the lowest index.
    let best = (0..total)
        .into_par_iter()
        .fold(
            || {
                (
                    None::<(f64, usize)>,
                    vec![0.0; problem.n_actions()],
                    Vec::with_capacity(n_states),
                )
            },
            |(best, mut acc, mut rows), flat| {
                rows.clear();
                let mut idx = flat;
                for (s, &size) in sizes.iter().enumerate() {
                    rows.push(&terms[s][idx % size]);
                    idx /= size;
                }
                let best = match combined_objective(&rows, &mut acc, problem) {
                    Some(v) if best.is_none_or(|(b, _)| v > b) => Some((v, flat)),
                    _ => best,
                };
                (best, acc, rows)
            },
        )
        .filter_map(|(best, _, _)| best)
        .reduce_with(|a, b| {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        })
        .ok_or_else(|| Error::invalid("grid", "no grid point has finite objective"))?;
    let mut idx = best.1;
    let mut rows = Vec::with_capacity(n_states);
    for (s, &size) in sizes.iter().enumerate() {
        rows.push(candidates[s][idx % size].clone());
        idx /= size;
    }
    let rule = ChoiceRule::normalized(rows, 1e-9)?;
    let value = objective(&rule, problem)
        .finite()
        .ok_or_else(|| Error::invalid("grid", "no grid point has finite objective"))?;
    Ok((rule, value))
}

/// Exhaustive search over per-state simplex grids of spacing `grid_step`.
///
/// Independent of the solver: it only evaluates the objective through the
/// closed-form information. Limited to three states and three actions.
pub fn brute_force_solve(problem: &Problem, grid_step: f64) -> Result<(ChoiceRule, f64)> {
    check_oracle_size(problem)?;
    let steps = grid_steps(grid_step)?;
    let n = problem.n_actions();
    let rows = lattice(steps, &vec![0; n], &vec![steps; n]);
    search_product(problem, &vec![rows; problem.n_states()])
}

/// Grid search of spacing `grid_step` restricted to rows within `radius`
/// (entrywise) of `center`.
pub fn brute_force_refine(
    problem: &Problem,
    center: &ChoiceRule,
    radius: f64,
    grid_step: f64,
) -> Result<(ChoiceRule, f64)> {
    check_oracle_size(problem)?;
    let steps = grid_steps(grid_step)?;
    let candidates: Vec<Vec<Vec<f64>>> = center
        .rows()
        .iter()
        .map(|row| {
            let lo: Vec<usize> = row
                .iter()
                .map(|&c| (((c - radius) * steps as f64).ceil().max(0.0)) as usize)
                .collect();
            let hi: Vec<usize> = row
                .iter()
                .map(|&c| (((c + radius) * steps as f64).floor().min(steps as f64)) as usize)
                .collect();
            lattice(steps, &lo, &hi)
        })
        .collect();
    if candidates.iter().any(Vec::is_empty) {
        return Err(Error::invalid(
            "center",
            "no grid point within the refinement radius",
        ));
    }
    search_product(problem, &candidates)
}

/// Coarse grid search followed by a fine search around the coarse optimum.
pub fn brute_force_refined(problem: &Problem, coarse_step: f64, fine_step: f64) -> Result<(ChoiceRule, f64)> {
    let (coarse, coarse_value) = brute_force_solve(problem, coarse_step)?;
    let (fine, fine_value) = brute_force_refine(problem, &coarse, coarse_step, fine_step)?;
    Ok(if fine_value >= coarse_value {
        (fine, fine_value)
    } else {
        (coarse, coarse_value)
    })
}

/// Divergence kernel `phi_alpha` with `phi_alpha(1) = 0`.
pub fn varphi_alpha(t: f64, alpha: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(
            "varphi_alpha",
            format!("t must be positive, got {t}"),
        ));
    }
    Ok(if alpha == -1.0 {
        t * t.ln() - t + 1.0
    } else if alpha == 1.0 {
        -t.ln() + t - 1.0
    } else {
        let e = (1.0 - alpha) / 2.0;
        4.0 / (1.0 - alpha * alpha) * (1.0 - t.powf(e) + e * (t - 1.0))
    })
}

/// Whether `phi_alpha(t) / t` diverges as `t` grows, which holds iff `alpha <= -1`.
pub fn is_cofinite(alpha: f64) -> bool {
    alpha <= -1.0
}
