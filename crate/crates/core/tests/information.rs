mod common;

use alphari::{
    alpha_divergence, alpha_information, alpha_integration, weighted_divergence, ChoiceRule, ExtReal,
    ReferenceDist,
};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn prob_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(1e-3f64..1.0, n).prop_map(|v| {
        let t: f64 = v.iter().sum();
        v.into_iter().map(|x| x / t).collect()
    })
}

proptest! {
    #[test]
    fn divergence_is_nonnegative_and_zero_only_at_identity(
        p in prob_vec(4),
        m in prob_vec(4),
        idx in 0usize..8,
    ) {
        let alpha = ALPHA_GRID[idx];
        let d = alpha_divergence(&p, &m, alpha);
        prop_assert!(d >= ExtReal::ZERO);
        prop_assert_eq!(alpha_divergence(&p, &p, alpha), ExtReal::ZERO);
        let dist = p.iter().zip(&m).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if dist > 1e-3 {
            prop_assert!(d > ExtReal::ZERO);
        }
    }

    #[test]
    fn divergence_is_continuous_at_the_kl_limits(p in prob_vec(3), m in prob_vec(3)) {
        for center in [-1.0f64, 1.0] {
            let at = alpha_divergence(&p, &m, center).finite().unwrap();
            for offset in [-1e-4, 1e-4] {
                let near = alpha_divergence(&p, &m, center + offset).finite().unwrap();
                prop_assert!((near - at).abs() <= 1e-3, "alpha {} -> {near} vs {at}", center + offset);
            }
        }
    }
}

#[test]
fn integration_matches_grid_argmin() {
    // Brute force: scan every reference on a 1e-3 simplex grid.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid = simplex_grid(3, 1000);
    let prior = [0.35, 0.65];
    for alpha in [-3.0, -1.0, 0.0, 0.5, 1.0, 3.0] {
        let rule = random_rule(&mut rng, 2, 3);
        let (mut best, mut best_m) = (f64::INFINITY, None);
        for m in &grid {
            let m = ReferenceDist::new(m.clone()).unwrap();
            if let Some(v) = weighted_divergence(&rule, &m, &prior, alpha).finite() {
                if v < best {
                    best = v;
                    best_m = Some(m);
                }
            }
        }
        let best_m = best_m.unwrap();
        let m = alpha_integration(&rule, &prior, alpha).into_reference().unwrap();
        for (x, y) in m.mass().iter().zip(best_m.mass()) {
            assert!(
                (x - y).abs() <= 1e-3,
                "alpha {alpha}: {:?} vs grid {:?}",
                m.mass(),
                best_m.mass()
            );
        }
        let exact = weighted_divergence(&rule, &m, &prior, alpha).finite().unwrap();
        assert!(exact <= best + 1e-15);
    }
}

#[test]
fn integration_at_alpha_zero_on_random_rule_matches_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rule = random_rule(&mut rng, 2, 3);
    let prior = [0.5, 0.5];
    let m = alpha_integration(&rule, &prior, 0.0).into_reference().unwrap();
    let best = simplex_grid(3, 1000)
        .into_iter()
        .map(|g| {
            let v = weighted_divergence(&rule, &ReferenceDist::new(g.clone()).unwrap(), &prior, 0.0)
                .finite()
                .unwrap();
            (v, g)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    for (x, y) in m.mass().iter().zip(&best.1) {
        assert!((x - y).abs() <= 1e-3);
    }
}

#[test]
fn integration_minimizes_against_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for &alpha in &ALPHA_GRID {
        for _ in 0..5 {
            let n_states = rng.gen_range(1..=4);
            let n_actions = rng.gen_range(2..=4);
            let rule = random_rule(&mut rng, n_states, n_actions);
            let prior = random_simplex(&mut rng, n_states);
            let m = alpha_integration(&rule, &prior, alpha).into_reference().unwrap();
            let at_min = weighted_divergence(&rule, &m, &prior, alpha).finite().unwrap();
            for _ in 0..200 {
                let scale = 10f64.powf(rng.gen_range(-6.0..-0.5));
                let perturbed: Vec<f64> = m
                    .mass()
                    .iter()
                    .map(|&x| (x + scale * rng.gen_range(-1.0..1.0)).max(0.0))
                    .collect();
                let Ok(other) = ReferenceDist::normalized(perturbed) else {
                    continue;
                };
                let v = weighted_divergence(&rule, &other, &prior, alpha);
                assert!(v >= ExtReal::Finite(at_min - 1e-12), "alpha {alpha}");
            }
        }
    }
}

#[test]
fn other_references_are_strictly_worse() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for &alpha in &ALPHA_GRID {
        let rule = random_rule(&mut rng, 3, 3);
        let prior = random_simplex(&mut rng, 3);
        let m = alpha_integration(&rule, &prior, alpha).into_reference().unwrap();
        let at_min = weighted_divergence(&rule, &m, &prior, alpha).finite().unwrap();
        for _ in 0..20 {
            let other = random_reference(&mut rng, 3);
            let v = weighted_divergence(&rule, &other, &prior, alpha);
            assert!(v > ExtReal::Finite(at_min));
        }
    }
}

#[test]
fn closed_form_equals_divergence_at_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for &alpha in &ALPHA_GRID {
        for _ in 0..30 {
            let n_states = rng.gen_range(1..=4);
            let n_actions = rng.gen_range(2..=5);
            let rows = (0..n_states)
                .map(|_| random_sparse_simplex(&mut rng, n_actions))
                .collect();
            let rule = ChoiceRule::normalized(rows, 1e-9).unwrap();
            let prior = random_simplex(&mut rng, n_states);
            let info = alpha_information(&rule, &prior, alpha);
            match alpha_integration(&rule, &prior, alpha).reference() {
                Some(m) => {
                    let direct = weighted_divergence(&rule, m, &prior, alpha).finite().unwrap();
                    let closed = info.finite().unwrap();
                    assert!(
                        (direct - closed).abs() <= 1e-10,
                        "alpha {alpha}: {direct} vs {closed}"
                    );
                }
                None => {
                    assert!(alpha >= 1.0);
                    assert_eq!(info, ExtReal::PosInf);
                }
            }
        }
    }
}

#[test]
fn fully_revealing_rule_information() {
    let rule = ChoiceRule::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let prior = [0.5, 0.5];
    for alpha in [1.0, 1.5, 3.0] {
        assert_eq!(alpha_information(&rule, &prior, alpha), ExtReal::PosInf);
    }
    let mi = alpha_information(&rule, &prior, -1.0).finite().unwrap();
    assert!((mi - std::f64::consts::LN_2).abs() <= 1e-10);
}

#[test]
fn subnormal_entries_do_not_break_closed_forms() {
    let prior = [0.36, 0.11, 0.53];
    let tiny = f64::from_bits(1);
    let rows = |eps: f64| {
        ChoiceRule::new(vec![
            vec![0.3, 0.7 - eps, eps],
            vec![0.7, 0.3 - eps, eps],
            vec![0.9, 0.1, 0.0],
        ])
        .unwrap()
    };
    for &alpha in &ALPHA_GRID {
        if alpha >= 1.0 {
            continue;
        }
        let with_tiny = alpha_information(&rows(tiny), &prior, alpha).finite().unwrap();
        let without = alpha_information(&rows(0.0), &prior, alpha).finite().unwrap();
        assert!(
            (with_tiny - without).abs() <= 1e-12,
            "alpha {alpha}: {with_tiny} vs {without}"
        );
        assert!(without > 0.0);
    }
}
