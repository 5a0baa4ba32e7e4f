mod common;

use alphari::statewise::normalization_mass;
use alphari::{
    lambda_bar_zero, solve_lambda_bar, statewise_objective, statewise_solve, Branch, ExtReal, ReferenceDist,
    TieRule,
};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_reference_with_zeros(rng: &mut ChaCha8Rng, n: usize) -> ReferenceDist {
    ReferenceDist::normalized(random_sparse_simplex(rng, n)).unwrap()
}

#[test]
fn normalization_root_has_tiny_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for &alpha in &ALPHA_GRID {
        for _ in 0..50 {
            let n = rng.gen_range(1..=5);
            let p = random_problem(&mut rng, 2, n, alpha);
            let m = random_reference_with_zeros(&mut rng, n);
            for s in 0..2 {
                let lambda = solve_lambda_bar(s, &m, &p).unwrap();
                let mass = normalization_mass(s, &m, &p, lambda).finite().unwrap();
                assert!(
                    (mass - 1.0).abs() <= 1e-10,
                    "alpha {alpha}: residual {}",
                    mass - 1.0
                );
            }
        }
    }
}

#[test]
fn normalization_mass_is_strictly_decreasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for &alpha in &ALPHA_GRID {
        let p = random_problem(&mut rng, 1, 4, alpha);
        let m = random_reference(&mut rng, 4);
        let root = solve_lambda_bar(0, &m, &p).unwrap();
        let mut prev = ExtReal::PosInf;
        for i in -200..=200 {
            let lambda = root + i as f64 * 0.01;
            let v = normalization_mass(0, &m, &p, lambda);
            if v.finite().is_some_and(|x| x > 0.0) && prev.finite().is_some_and(|x| x > 0.0) {
                assert!(v < prev, "alpha {alpha} at {lambda}");
            } else {
                assert!(v <= prev);
            }
            prev = v;
        }
    }
}

#[test]
fn example_statewise_optimum_dominates_random_rows() {
    let p = example1(3.0);
    let m = ReferenceDist::new(vec![0.0, 0.0, 1.0]).unwrap();
    let sol = statewise_solve(0, &m, &p, TieRule::Uniform).unwrap();
    assert_eq!(sol.row, vec![0.5, 0.0, 0.5]);
    let best = statewise_objective(&sol.row, &m, 0, &p);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..500 {
        let row = random_sparse_simplex(&mut rng, 3);
        assert!(statewise_objective(&row, &m, 0, &p) <= best);
    }
}

#[test]
fn statewise_solution_beats_random_and_grid_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for &alpha in &ALPHA_GRID {
        for trial in 0..4 {
            let n = rng.gen_range(2..=4);
            let p = random_problem(&mut rng, 1, n, alpha);
            let m = if trial % 2 == 0 {
                random_reference(&mut rng, n)
            } else {
                random_reference_with_zeros(&mut rng, n)
            };
            let sol = statewise_solve(0, &m, &p, TieRule::Uniform).unwrap();
            let best = statewise_objective(&sol.row, &m, 0, &p).finite().unwrap();
            let beats = |row: &[f64]| match statewise_objective(row, &m, 0, &p) {
                ExtReal::Finite(v) => v <= best + 1e-8,
                ExtReal::NegInf => true,
                ExtReal::PosInf => false,
            };
            for _ in 0..1000 {
                let row = random_sparse_simplex(&mut rng, n);
                assert!(beats(&row), "alpha {alpha}");
            }
            for row in simplex_grid(n, 100) {
                assert!(beats(&row), "alpha {alpha}, grid row {row:?}");
            }
        }
    }
}

#[test]
fn modified_logit_on_random_instance() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let p = random_problem(&mut rng, 3, 4, -1.0);
    let m = random_reference(&mut rng, 4);
    for s in 0..3 {
        let sol = statewise_solve(s, &m, &p, TieRule::Uniform).unwrap();
        let w: Vec<f64> = (0..4)
            .map(|a| m.mass()[a] * (p.payoff(s, a) / p.kappa()).exp())
            .collect();
        let z: f64 = w.iter().sum();
        for a in 0..4 {
            assert!((sol.row[a] - w[a] / z).abs() <= 1e-12);
        }
    }
}

#[test]
fn uniform_reference_with_flat_payoffs_gives_uniform_row() {
    let p = alphari::Problem::unlabeled(
        vec![1.0],
        vec![vec![0.3; 4]],
        alphari::AlphaParams::new(-1.0, 1.5).unwrap(),
    )
    .unwrap();
    let m = ReferenceDist::uniform(4);
    let sol = statewise_solve(0, &m, &p, TieRule::Uniform).unwrap();
    assert!(sol.row.iter().all(|v| (v - 0.25).abs() < 1e-15));
    // kappa log sum_b m(b) e^{u/kappa} = u
    assert!((sol.lambda - 0.3).abs() < 1e-12);
}

#[test]
fn case_2b_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let mut seen_2b = 0;
    for &alpha in &[-0.5, 0.0, 0.5, 1.0, 3.0] {
        for _ in 0..200 {
            let n = rng.gen_range(2..=5);
            let p = random_problem(&mut rng, 1, n, alpha);
            let m = random_reference_with_zeros(&mut rng, n);
            let sol = statewise_solve(0, &m, &p, TieRule::Uniform).unwrap();
            let lb = solve_lambda_bar(0, &m, &p).unwrap();
            let l0 = lambda_bar_zero(0, &m, &p);
            assert_eq!(sol.branch == Branch::Case2b, matches!(l0, Some(z) if lb < z));
            let gap = 2.0 * p.kappa() / (1.0 + alpha);
            assert!((sol.nu.unwrap() - sol.lambda - gap).abs() <= 1e-12 * (1.0 + sol.lambda.abs()));
            let support = m.support();
            let inside: f64 = support.iter().map(|&a| sol.row[a]).sum();
            match sol.branch {
                Branch::Case2b => {
                    seen_2b += 1;
                    assert!(inside <= 1.0);
                    assert!((1.0 - inside - sol.residual_mass).abs() <= 1e-15);
                    let outside_mass: f64 = sol.maximizer_set.iter().map(|&a| sol.row[a]).sum();
                    assert!((outside_mass - sol.residual_mass).abs() <= 1e-15);
                    for a in 0..n {
                        if !support.contains(&a) && !sol.maximizer_set.contains(&a) {
                            assert_eq!(sol.row[a], 0.0);
                        }
                    }
                }
                _ => {
                    for a in 0..n {
                        assert_eq!(sol.row[a] > 0.0, support.contains(&a), "alpha {alpha}");
                    }
                }
            }
            assert!((sol.row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
    assert!(seen_2b > 20);
}

#[test]
fn cutoff_structure_below_minus_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    for &alpha in &[-6.0, -3.0, -1.5] {
        for _ in 0..200 {
            let n = rng.gen_range(2..=5);
            let p = random_problem(&mut rng, 1, n, alpha);
            let m = random_reference_with_zeros(&mut rng, n);
            let sol = statewise_solve(0, &m, &p, TieRule::Uniform).unwrap();
            assert_eq!(sol.branch, Branch::Case1);
            let nu = sol.nu.unwrap();
            for a in 0..n {
                let expected = p.payoff(0, a) > nu && m.mass()[a] > 0.0;
                assert_eq!(sol.row[a] > 0.0, expected, "alpha {alpha} action {a}");
            }
        }
    }
}

#[test]
fn rows_equal_reference_under_flat_payoffs() {
    let mut rng = ChaCha8Rng::seed_from_u64(28);
    for &alpha in &ALPHA_GRID {
        let p = alphari::Problem::unlabeled(
            vec![1.0],
            vec![vec![-0.4; 3]],
            alphari::AlphaParams::new(alpha, 0.8).unwrap(),
        )
        .unwrap();
        let m = random_reference(&mut rng, 3);
        let sol = statewise_solve(0, &m, &p, TieRule::Uniform).unwrap();
        for (x, y) in sol.row.iter().zip(m.mass()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
}
