use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::information::check_prior;
use crate::math::AlphaParams;

/// A finite information-acquisition problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    state_labels: Vec<String>,
    action_labels: Vec<String>,
    prior: Vec<f64>,
    /// `utility[state][action]`
    utility: Vec<Vec<f64>>,
    params: AlphaParams,
}

impl Problem {
    pub fn new(
        state_labels: Vec<String>,
        action_labels: Vec<String>,
        prior: Vec<f64>,
        utility: Vec<Vec<f64>>,
        params: AlphaParams,
    ) -> Result<Self> {
        if state_labels.is_empty() {
            return Err(Error::invalid("states", "at least one state is required"));
        }
        if action_labels.is_empty() {
            return Err(Error::invalid("actions", "at least one action is required"));
        }
        if prior.len() != state_labels.len() {
            return Err(Error::invalid(
                "prior",
                format!("has {} entries for {} states", prior.len(), state_labels.len()),
            ));
        }
        check_prior(&prior)?;
        if utility.len() != state_labels.len() {
            return Err(Error::invalid(
                "utility",
                format!("has {} rows for {} states", utility.len(), state_labels.len()),
            ));
        }
        for (s, row) in utility.iter().enumerate() {
            if row.len() != action_labels.len() {
                return Err(Error::invalid(
                    "utility",
                    format!(
                        "row {s} has {} entries for {} actions",
                        row.len(),
                        action_labels.len()
                    ),
                ));
            }
            if row.iter().any(|u| !u.is_finite()) {
                return Err(Error::invalid(
                    "utility",
                    format!("row {s} has a non-finite entry"),
                ));
            }
        }
        Ok(Problem {
            state_labels,
            action_labels,
            prior,
            utility,
            params,
        })
    }

    /// Problem with generated labels `s0, s1, ...` and `a0, a1, ...`.
    pub fn unlabeled(prior: Vec<f64>, utility: Vec<Vec<f64>>, params: AlphaParams) -> Result<Self> {
        let n_states = prior.len();
        let n_actions = utility.first().map_or(0, Vec::len);
        Problem::new(
            (0..n_states).map(|s| format!("s{s}")).collect(),
            (0..n_actions).map(|a| format!("a{a}")).collect(),
            prior,
            utility,
            params,
        )
    }

    /// Copy of this problem at a different alpha.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let mut p = self.clone();
        p.params = self.params.with_alpha(alpha)?;
        Ok(p)
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    pub fn action_labels(&self) -> &[String] {
        &self.action_labels
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn utility(&self) -> &[Vec<f64>] {
        &self.utility
    }

    pub fn payoff(&self, state: usize, action: usize) -> f64 {
        self.utility[state][action]
    }

    pub fn params(&self) -> AlphaParams {
        self.params
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha()
    }

    pub fn kappa(&self) -> f64 {
        self.params.kappa()
    }

    pub fn n_states(&self) -> usize {
        self.state_labels.len()
    }

    pub fn n_actions(&self) -> usize {
        self.action_labels.len()
    }
}
