//! Per-state best response to a fixed reference distribution.
//!
//! Given `m`, each state solves `max_p sum_a p(a) u(a) - kappa D_alpha[p : m]`.
//! The solution lies in the q-exponential family `m(a) exp_q((u(a) - lambda) / kappa)`
//! where `lambda` normalizes the row. For `alpha > -1` with actions outside the
//! support of `m`, the multiplier is capped below at a cutoff determined by the
//! best such action, and any leftover mass goes to the payoff maximizers among
//! them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::information::{alpha_divergence, ReferenceDist};
use crate::math::{q_exp, ExtReal};
use crate::problem::Problem;

const MAX_BRACKET_STEPS: usize = 2100;
const MAX_BISECTION_STEPS: usize = 4000;

/// How residual mass is split among tied outside maximizers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    #[default]
    Uniform,
    FirstIndex,
    SingleRequired,
}

impl fmt::Display for TieRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieRule::Uniform => "uniform",
            TieRule::FirstIndex => "first-index",
            TieRule::SingleRequired => "single-required",
        })
    }
}

impl FromStr for TieRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(TieRule::Uniform),
            "first-index" => Ok(TieRule::FirstIndex),
            "single-required" => Ok(TieRule::SingleRequired),
            other => Err(format!(
                "unknown tie rule `{other}` (expected uniform, first-index or single-required)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `alpha <= -1`, or `m` has full support.
    Case1,
    /// Outside actions exist but the normalizing multiplier clears their cutoff.
    Case2a,
    /// The cutoff binds; residual mass goes to the best outside actions.
    Case2b,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatewiseSolution {
    pub row: Vec<f64>,
    pub lambda: f64,
    /// `lambda + 2 kappa / (1 + alpha)`; absent at `alpha = -1`.
    pub nu: Option<f64>,
    pub branch: Branch,
    /// Payoff maximizers outside the support of `m` (Case 2b only).
    pub maximizer_set: Vec<usize>,
    pub residual_mass: f64,
    pub lambda_bar: f64,
    pub lambda_bar_zero: Option<f64>,
}

/// `sum_{a in supp m} m(a) exp_q((u(a) - lambda) / kappa)`.
pub fn normalization_mass(state: usize, m: &ReferenceDist, problem: &Problem, lambda: f64) -> ExtReal {
    let kappa = problem.kappa();
    let q = problem.params().q();
    let mut total = 0.0;
    for (a, &w) in m.mass().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        match q_exp((problem.payoff(state, a) - lambda) / kappa, q) {
            ExtReal::Finite(v) => total += w * v,
            ExtReal::PosInf => return ExtReal::PosInf,
            ExtReal::NegInf => unreachable!("q_exp is nonnegative"),
        }
    }
    ExtReal::from_f64(total)
}

/// The unique multiplier that makes the q-exponential row on `supp m` sum to one.
pub fn solve_lambda_bar(state: usize, m: &ReferenceDist, problem: &Problem) -> Result<f64> {
    let support = m.support();
    if support.is_empty() {
        return Err(Error::invalid("reference", "support is empty"));
    }
    let alpha = problem.alpha();
    let kappa = problem.kappa();
    let u_max = support
        .iter()
        .map(|&a| problem.payoff(state, a))
        .fold(f64::NEG_INFINITY, f64::max);

    if alpha == -1.0 {
        // kappa log sum_a m(a) exp(u(a) / kappa), shifted for stability
        let s: f64 = support
            .iter()
            .map(|&a| m.mass()[a] * ((problem.payoff(state, a) - u_max) / kappa).exp())
            .sum();
        return Ok(u_max + kappa * s.ln());
    }

    let f = |lambda: f64| normalization_mass(state, m, problem, lambda);
    let bracket_err = |detail: String| Error::BracketFailure { state, detail };

    let (mut lo, mut hi) = if alpha > -1.0 {
        // The mass is infinite at and below u_max - 2 kappa / (1 + alpha).
        let pole = u_max - 2.0 * kappa / (1.0 + alpha);
        let u_scale = problem.utility()[state]
            .iter()
            .fold(0.0_f64, |acc, u| acc.max(u.abs()));
        let lo = pole - 1e-12 * (1.0 + u_scale);
        if !(f(lo) > ExtReal::ONE) {
            return Err(bracket_err(format!("mass at left end {lo} does not exceed one")));
        }
        let mut step = kappa;
        let mut hi = pole + step;
        let mut n = 0;
        while f(hi) > ExtReal::ONE {
            step *= 2.0;
            hi = pole + step;
            n += 1;
            if n > MAX_BRACKET_STEPS || !hi.is_finite() {
                return Err(bracket_err("right end not found".into()));
            }
        }
        (lo, hi)
    } else {
        // Finite everywhere; at most one at u_max since every exp_q argument is <= 0.
        let hi = u_max;
        let mut step = kappa;
        let mut lo = u_max - step;
        let mut n = 0;
        while !(f(lo) > ExtReal::ONE) {
            step *= 2.0;
            lo = u_max - step;
            n += 1;
            if n > MAX_BRACKET_STEPS || !lo.is_finite() {
                return Err(bracket_err("left end not found".into()));
            }
        }
        if f(hi) > ExtReal::ONE {
            return Err(bracket_err(format!("mass at right end {hi} exceeds one")));
        }
        (lo, hi)
    };

    for _ in 0..MAX_BISECTION_STEPS {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > ExtReal::ONE {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let residual = |lambda: f64| match f(lambda) {
        ExtReal::Finite(v) => (v - 1.0).abs(),
        _ => f64::INFINITY,
    };
    Ok(if residual(lo) < residual(hi) { lo } else { hi })
}

/// `max_{a not in supp m} u(a) - 2 kappa / (1 + alpha)`, defined for `alpha > -1`
/// when `m` misses at least one action.
pub fn lambda_bar_zero(state: usize, m: &ReferenceDist, problem: &Problem) -> Option<f64> {
    let alpha = problem.alpha();
    if alpha <= -1.0 {
        return None;
    }
    let best_outside = m
        .mass()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w == 0.0)
        .map(|(a, _)| problem.payoff(state, a))
        .reduce(f64::max)?;
    Some(best_outside - 2.0 * problem.kappa() / (1.0 + alpha))
}

fn q_exp_row(state: usize, m: &ReferenceDist, problem: &Problem, lambda: f64) -> Vec<f64> {
    let kappa = problem.kappa();
    let q = problem.params().q();
    m.mass()
        .iter()
        .enumerate()
        .map(|(a, &w)| {
            if w == 0.0 {
                return 0.0;
            }
            let v = q_exp((problem.payoff(state, a) - lambda) / kappa, q);
            w * v
                .finite()
                .expect("multiplier keeps q-exponentials finite on supp m")
        })
        .collect()
}

/// Optimal row for `state` against reference `m`.
pub fn statewise_solve(
    state: usize,
    m: &ReferenceDist,
    problem: &Problem,
    tie_rule: TieRule,
) -> Result<StatewiseSolution> {
    if m.len() != problem.n_actions() {
        return Err(Error::invalid(
            "reference",
            format!("has {} entries for {} actions", m.len(), problem.n_actions()),
        ));
    }
    let alpha = problem.alpha();
    let nu_shift = (alpha != -1.0).then(|| 2.0 * problem.kappa() / (1.0 + alpha));
    let lambda_bar = solve_lambda_bar(state, m, problem)?;
    let lambda_zero = lambda_bar_zero(state, m, problem);

    let binding = matches!(lambda_zero, Some(l0) if lambda_bar < l0);
    if !binding {
        let mut row = q_exp_row(state, m, problem, lambda_bar);
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= total);
        return Ok(StatewiseSolution {
            row,
            lambda: lambda_bar,
            nu: nu_shift.map(|s| lambda_bar + s),
            branch: if lambda_zero.is_some() {
                Branch::Case2a
            } else {
                Branch::Case1
            },
            maximizer_set: Vec::new(),
            residual_mass: 0.0,
            lambda_bar,
            lambda_bar_zero: lambda_zero,
        });
    }

    let lambda = lambda_zero.expect("binding cutoff exists");
    let mut row = q_exp_row(state, m, problem, lambda);
    let inside: f64 = row.iter().sum();
    let residual = (1.0 - inside).max(0.0);

    let outside: Vec<usize> = (0..m.len()).filter(|&a| m.mass()[a] == 0.0).collect();
    let best = outside
        .iter()
        .map(|&a| problem.payoff(state, a))
        .fold(f64::NEG_INFINITY, f64::max);
    let maximizers: Vec<usize> = outside
        .into_iter()
        .filter(|&a| problem.payoff(state, a) == best)
        .collect();
    let receivers: &[usize] = match tie_rule {
        TieRule::Uniform => &maximizers,
        TieRule::FirstIndex => &maximizers[..1],
        TieRule::SingleRequired if maximizers.len() == 1 => &maximizers,
        TieRule::SingleRequired => {
            return Err(Error::AmbiguousTie {
                state,
                count: maximizers.len(),
            })
        }
    };
    let share = residual / receivers.len() as f64;
    for &a in receivers {
        row[a] = share;
    }
    if inside > 1.0 {
        row.iter_mut().for_each(|v| *v /= inside);
    }

    Ok(StatewiseSolution {
        row,
        lambda,
        nu: nu_shift.map(|s| lambda + s),
        branch: Branch::Case2b,
        maximizer_set: maximizers,
        residual_mass: residual,
        lambda_bar,
        lambda_bar_zero: lambda_zero,
    })
}

/// Expected payoff in `state` minus `kappa` times the divergence from `m`.
pub fn statewise_objective(row: &[f64], m: &ReferenceDist, state: usize, problem: &Problem) -> ExtReal {
    let payoff: f64 = row
        .iter()
        .zip(&problem.utility()[state])
        .map(|(p, u)| p * u)
        .sum();
    ExtReal::Finite(payoff) + alpha_divergence(row, m.mass(), problem.alpha()).scale(-problem.kappa())
}
