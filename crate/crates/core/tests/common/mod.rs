#![allow(dead_code)]

use alphari::{AlphaParams, ChoiceRule, Problem, ReferenceDist};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn example1(alpha: f64) -> Problem {
    Problem::new(
        vec!["1".into(), "2".into()],
        vec!["a".into(), "b".into(), "c".into()],
        vec![0.2, 0.8],
        vec![vec![2.0, 1.25, 0.0], vec![-1.0, -0.25, 0.0]],
        AlphaParams::new(alpha, 1.0).unwrap(),
    )
    .unwrap()
}

pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen_range(1e-12..1.0f64).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Simplex point with some exact zeros (at least one positive entry).
pub fn random_sparse_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v = random_simplex(rng, n);
    let keep = rng.gen_range(0..n);
    for (i, x) in v.iter_mut().enumerate() {
        if i != keep && rng.gen_bool(0.3) {
            *x = 0.0;
        }
    }
    let total: f64 = v.iter().sum();
    v.into_iter().map(|x| x / total).collect()
}

pub fn random_problem(rng: &mut ChaCha8Rng, n_states: usize, n_actions: usize, alpha: f64) -> Problem {
    let prior = random_simplex(rng, n_states);
    let utility = (0..n_states)
        .map(|_| (0..n_actions).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let kappa = rng.gen_range(0.5..2.0);
    Problem::unlabeled(prior, utility, AlphaParams::new(alpha, kappa).unwrap()).unwrap()
}

pub fn random_rule(rng: &mut ChaCha8Rng, n_states: usize, n_actions: usize) -> ChoiceRule {
    ChoiceRule::normalized(
        (0..n_states).map(|_| random_simplex(rng, n_actions)).collect(),
        1e-9,
    )
    .unwrap()
}

pub fn random_reference(rng: &mut ChaCha8Rng, n: usize) -> ReferenceDist {
    ReferenceDist::normalized(random_simplex(rng, n)).unwrap()
}

/// Every point of the simplex in `n` coordinates with spacing `1 / steps`.
pub fn simplex_grid(n: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(i: usize, n: usize, left: usize, steps: usize, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if i == n - 1 {
            cur.push(left as f64 / steps as f64);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k as f64 / steps as f64);
            rec(i + 1, n, left - k, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, steps, steps, &mut Vec::new(), &mut out);
    out
}

pub const ALPHA_GRID: [f64; 8] = [-6.0, -3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0];
