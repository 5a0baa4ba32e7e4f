//! Alpha-divergence, alpha-integration and the closed-form alpha-information.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{alpha_mean, ExtReal};

/// Tolerance on the total mass of a probability vector.
pub const MASS_TOL: f64 = 1e-12;

fn check_distribution(field: &'static str, p: &[f64], tol: f64) -> Result<()> {
    if p.is_empty() {
        return Err(Error::invalid(field, "must not be empty"));
    }
    if let Some(bad) = p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::invalid(
            field,
            format!("entries must be finite and nonnegative, found {bad}"),
        ));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::invalid(field, format!("entries sum to {total}, not 1")));
    }
    Ok(())
}

/// Validates a prior over states: strictly positive entries summing to one.
pub fn check_prior(prior: &[f64]) -> Result<()> {
    check_distribution("prior", prior, 1e-9)?;
    if prior.iter().any(|&w| w <= 0.0) {
        return Err(Error::invalid(
            "prior",
            "every state must have positive probability",
        ));
    }
    Ok(())
}

fn support_of(p: &[f64]) -> Vec<usize> {
    p.iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// A probability distribution over actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReferenceDist {
    mass: Vec<f64>,
}

impl ReferenceDist {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        check_distribution("reference", &mass, MASS_TOL)?;
        Ok(ReferenceDist { mass })
    }

    /// Rescales a nonnegative vector with positive total to unit mass.
    pub fn normalized(mass: Vec<f64>) -> Result<Self> {
        let total: f64 = mass.iter().sum();
        if !(total > 0.0 && total.is_finite()) || mass.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("reference", "cannot normalize this vector"));
        }
        Ok(ReferenceDist {
            mass: mass.into_iter().map(|v| v / total).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        ReferenceDist {
            mass: vec![1.0 / n as f64; n],
        }
    }

    /// Uniform over `support`, zero elsewhere.
    pub fn uniform_on(n: usize, support: &[usize]) -> Self {
        let mut mass = vec![0.0; n];
        for &a in support {
            mass[a] = 1.0 / support.len() as f64;
        }
        ReferenceDist { mass }
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Indices with strictly positive mass.
    pub fn support(&self) -> Vec<usize> {
        support_of(&self.mass)
    }
}

/// One distribution over actions per state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChoiceRule {
    rows: Vec<Vec<f64>>,
}

impl ChoiceRule {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::validate_shape(&rows)?;
        for row in &rows {
            check_distribution("rule", row, MASS_TOL)?;
        }
        Ok(ChoiceRule { rows })
    }

    /// Accepts rows within `tol` of unit mass and rescales them exactly.
    pub fn normalized(rows: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        Self::validate_shape(&rows)?;
        let mut out = Vec::with_capacity(rows.len());
        for row in rows {
            check_distribution("rule", &row, tol)?;
            let total: f64 = row.iter().sum();
            out.push(row.into_iter().map(|v| v / total).collect());
        }
        Ok(ChoiceRule { rows: out })
    }

    /// Every state uses the same row.
    pub fn constant(n_states: usize, row: &[f64]) -> Result<Self> {
        ChoiceRule::new(vec![row.to_vec(); n_states])
    }

    fn validate_shape(rows: &[Vec<f64>]) -> Result<()> {
        if rows.is_empty() {
            return Err(Error::invalid("rule", "needs at least one state"));
        }
        let width = rows[0].len();
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::invalid(
                "rule",
                "rows must be nonempty and of equal length",
            ));
        }
        Ok(())
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.rows[state]
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn n_actions(&self) -> usize {
        self.rows[0].len()
    }

    /// The probabilities of `action` across states.
    pub fn column(&self, action: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[action]).collect()
    }

    pub fn support_sets(&self) -> SupportSets {
        let n = self.n_actions();
        let union_support = (0..n).filter(|&a| self.rows.iter().any(|r| r[a] > 0.0)).collect();
        let common_support = (0..n).filter(|&a| self.rows.iter().all(|r| r[a] > 0.0)).collect();
        SupportSets {
            union_support,
            common_support,
        }
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &ChoiceRule) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Union and intersection of the per-state supports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSets {
    pub union_support: Vec<usize>,
    pub common_support: Vec<usize>,
}

/// Result of alpha-integration.
#[derive(Clone, Debug, PartialEq)]
pub enum Integration {
    Finite(ReferenceDist),
    /// `alpha >= 1` and the rows share no action.
    InfiniteInformation,
}

impl Integration {
    pub fn reference(&self) -> Option<&ReferenceDist> {
        match self {
            Integration::Finite(m) => Some(m),
            Integration::InfiniteInformation => None,
        }
    }

    pub fn into_reference(self) -> Result<ReferenceDist> {
        match self {
            Integration::Finite(m) => Ok(m),
            Integration::InfiniteInformation => Err(Error::InfiniteInformation),
        }
    }
}

/// `D_alpha[p : m]` with KL at `alpha = -1` and reverse KL at `alpha = 1`.
pub fn alpha_divergence(p: &[f64], m: &[f64], alpha: f64) -> ExtReal {
    assert_eq!(p.len(), m.len(), "alpha_divergence: length mismatch");
    if alpha == -1.0 {
        return kl(p, m);
    }
    if alpha == 1.0 {
        return kl(m, p);
    }
    let ep = (1.0 - alpha) / 2.0;
    let em = (1.0 + alpha) / 2.0;
    // Sum of per-action gaps ep*p + em*m - p^ep m^em; equal entries contribute nothing.
    let mut gap = 0.0;
    for (&pa, &ma) in p.iter().zip(m) {
        if pa == ma {
            continue;
        }
        let cross = if (pa == 0.0 && ep > 0.0) || (ma == 0.0 && em > 0.0) {
            0.0
        } else if pa == 0.0 || ma == 0.0 {
            return ExtReal::PosInf;
        } else {
            pa.powf(ep) * ma.powf(em)
        };
        gap += ep * pa + em * ma - cross;
    }
    let d = 4.0 / (1.0 - alpha * alpha) * gap;
    ExtReal::Finite(d.max(0.0))
}

fn kl(p: &[f64], m: &[f64]) -> ExtReal {
    let mut total = 0.0;
    for (&pa, &ma) in p.iter().zip(m) {
        if pa == 0.0 {
            continue;
        }
        if ma == 0.0 {
            return ExtReal::PosInf;
        }
        // p log(p/m) - p + m is termwise nonnegative and sums to KL
        total += pa * (pa / ma).ln() - pa + ma;
    }
    let tail: f64 = p
        .iter()
        .zip(m)
        .filter(|(pa, _)| **pa == 0.0)
        .map(|(_, ma)| *ma)
        .sum();
    ExtReal::Finite((total + tail).max(0.0))
}

/// The reference distribution minimizing the prior-weighted divergence.
///
/// For `alpha < 1` the minimizer is the normalized alpha-mean of each action's
/// probabilities over the union of supports; for `alpha >= 1` over the common
/// support, which must be nonempty.
pub fn alpha_integration(rule: &ChoiceRule, prior: &[f64], alpha: f64) -> Integration {
    let n = rule.n_actions();
    let sets = rule.support_sets();
    let active = if alpha < 1.0 {
        &sets.union_support
    } else {
        &sets.common_support
    };
    if active.is_empty() {
        return Integration::InfiniteInformation;
    }
    let mut mass = vec![0.0; n];
    for &a in active {
        mass[a] = alpha_mean(&rule.column(a), prior, alpha)
            .expect("columns on the active support are valid alpha-mean inputs");
    }
    let z: f64 = mass.iter().sum();
    for v in &mut mass {
        *v /= z;
    }
    Integration::Finite(ReferenceDist { mass })
}

/// Sum of the alpha-means over the active support.
fn normalizer(rule: &ChoiceRule, prior: &[f64], alpha: f64, active: &[usize]) -> f64 {
    active
        .iter()
        .map(|&a| alpha_mean(&rule.column(a), prior, alpha).expect("valid alpha-mean input"))
        .sum()
}

/// `min_m sum_s prior_s D_alpha[P_s : m]` in closed form.
pub fn alpha_information(rule: &ChoiceRule, prior: &[f64], alpha: f64) -> ExtReal {
    let sets = rule.support_sets();
    if alpha == -1.0 {
        let marginal: Vec<f64> = (0..rule.n_actions())
            .map(|a| rule.column(a).iter().zip(prior).map(|(p, w)| p * w).sum())
            .collect();
        let mut total = 0.0;
        for (row, &w) in rule.rows().iter().zip(prior) {
            for &a in &sets.union_support {
                let weight = w * row[a];
                // Skip terms whose weight underflows to zero.
                if weight > 0.0 {
                    total += weight * (row[a] / marginal[a]).ln();
                }
            }
        }
        return ExtReal::Finite(total.max(0.0));
    }
    if alpha >= 1.0 && sets.common_support.is_empty() {
        return ExtReal::PosInf;
    }
    if alpha == 1.0 {
        let mass: f64 = sets
            .common_support
            .iter()
            .map(|&a| {
                rule.rows()
                    .iter()
                    .zip(prior)
                    .map(|(row, &w)| w * row[a].ln())
                    .sum::<f64>()
                    .exp()
            })
            .sum();
        return ExtReal::Finite((-mass.ln()).max(0.0));
    }
    let active = if alpha < 1.0 {
        &sets.union_support
    } else {
        &sets.common_support
    };
    let z = normalizer(rule, prior, alpha, active);
    let value = 4.0 / (1.0 - alpha * alpha) * (1.0 - z.powf((1.0 - alpha) / 2.0));
    ExtReal::Finite(value.max(0.0))
}

/// `sum_s prior_s D_alpha[P_s : m]` for an arbitrary reference `m`.
pub fn weighted_divergence(
    rule: &ChoiceRule,
    reference: &ReferenceDist,
    prior: &[f64],
    alpha: f64,
) -> ExtReal {
    rule.rows()
        .iter()
        .zip(prior)
        .map(|(row, &w)| alpha_divergence(row, reference.mass(), alpha).scale(w))
        .fold(ExtReal::ZERO, |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_rule() -> ChoiceRule {
        ChoiceRule::new(vec![vec![0.5, 0.0, 0.5], vec![0.0, 0.0, 1.0]]).unwrap()
    }

    #[test]
    fn divergence_reference_values() {
        let p = [0.2, 0.3, 0.5];
        for alpha in [-6.0, -3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0] {
            assert_eq!(alpha_divergence(&p, &p, alpha), ExtReal::ZERO);
        }
        assert_eq!(
            alpha_divergence(&[1.0, 0.0], &[0.0, 1.0], 0.0),
            ExtReal::Finite(4.0)
        );
        let kl = alpha_divergence(&[0.5, 0.5], &[0.25, 0.75], -1.0)
            .finite()
            .unwrap();
        // 0.5 ln 2 + 0.5 ln(2/3) = 0.5 ln(4/3)
        assert!((kl - 0.5 * (4.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!((kl - 0.143841).abs() < 1e-6);
        assert_eq!(alpha_divergence(&[0.5, 0.5], &[0.0, 1.0], -1.0), ExtReal::PosInf);
    }

    #[test]
    fn divergence_infinite_cases_follow_conventions() {
        // alpha > 1 behaves like reverse KL: m > 0 where p = 0 is infinite
        assert_eq!(alpha_divergence(&[0.0, 1.0], &[0.5, 0.5], 3.0), ExtReal::PosInf);
        assert!(alpha_divergence(&[0.5, 0.5], &[0.0, 1.0], 3.0).is_finite());
        // alpha < -1 behaves like KL
        assert_eq!(alpha_divergence(&[0.5, 0.5], &[0.0, 1.0], -3.0), ExtReal::PosInf);
        assert!(alpha_divergence(&[0.0, 1.0], &[0.5, 0.5], -3.0).is_finite());
        assert_eq!(alpha_divergence(&[0.0, 1.0], &[0.5, 0.5], 1.0), ExtReal::PosInf);
    }

    #[test]
    fn integration_of_identical_rows_is_the_row() {
        let row = [0.1, 0.6, 0.3];
        let rule = ChoiceRule::constant(3, &row).unwrap();
        let prior = [0.2, 0.3, 0.5];
        for alpha in [-6.0, -1.0, 0.0, 1.0, 3.0] {
            let m = alpha_integration(&rule, &prior, alpha).into_reference().unwrap();
            for (x, y) in m.mass().iter().zip(&row) {
                assert!((x - y).abs() < 1e-14);
            }
            assert_eq!(alpha_information(&rule, &prior, alpha), ExtReal::ZERO);
        }
    }

    #[test]
    fn example_rule_at_alpha_three() {
        let prior = [0.2, 0.8];
        let rule = example_rule();
        let m = alpha_integration(&rule, &prior, 3.0).into_reference().unwrap();
        assert_eq!(m.mass(), &[0.0, 0.0, 1.0]);
        // Z = 5/6, then -(1/2)(1 - 6/5)
        let info = alpha_information(&rule, &prior, 3.0).finite().unwrap();
        assert!((info - 0.1).abs() < 1e-15);
        let direct = weighted_divergence(&rule, &m, &prior, 3.0).finite().unwrap();
        assert!((direct - 0.1).abs() < 1e-15);
    }

    #[test]
    fn fully_revealing_rule() {
        let rule = ChoiceRule::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let prior = [0.5, 0.5];
        assert_eq!(
            alpha_integration(&rule, &prior, 1.0),
            Integration::InfiniteInformation
        );
        assert_eq!(alpha_information(&rule, &prior, 1.0), ExtReal::PosInf);
        assert_eq!(alpha_information(&rule, &prior, 3.0), ExtReal::PosInf);
        let mi = alpha_information(&rule, &prior, -1.0).finite().unwrap();
        assert!((mi - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn weighted_divergence_identical_rows_at_row_is_zero() {
        let rule = ChoiceRule::constant(2, &[0.25, 0.75]).unwrap();
        let m = ReferenceDist::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(weighted_divergence(&rule, &m, &[0.5, 0.5], 0.5), ExtReal::ZERO);
    }

    #[test]
    fn validation() {
        assert!(ChoiceRule::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(ChoiceRule::new(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
        assert!(ChoiceRule::new(vec![vec![-0.5, 1.5]]).is_err());
        assert!(ReferenceDist::new(vec![0.3, 0.3]).is_err());
        assert!(check_prior(&[0.0, 1.0]).is_err());
        assert!(check_prior(&[0.4, 0.6]).is_ok());
        let r = ChoiceRule::normalized(vec![vec![0.5, 0.5 + 1e-10]], 1e-9).unwrap();
        assert_eq!(r.row(0).iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn support_sets() {
        let sets = example_rule().support_sets();
        assert_eq!(sets.union_support, vec![0, 2]);
        assert_eq!(sets.common_support, vec![2]);
    }
}
