use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn lp(c: &[f64], a: &[&[f64]], b: &[f64], nonneg: &[usize]) -> LpProblem {
    let m = if a.is_empty() {
        Matrix::zeros(0, c.len())
    } else {
        Matrix::from_rows(a).unwrap()
    };
    LpProblem::new(c.to_vec(), m, b.to_vec(), nonneg).unwrap()
}

fn solve(p: &LpProblem) -> LpSolution {
    lp_solve(p, &SolverOptions::default())
}

fn trivial_cases() -> Vec<(LpProblem, LpStatus, f64)> {
    vec![
        (
            lp(&[1.0, 1.0], &[&[1.0, 1.0]], &[1.0], &[0, 1]),
            LpStatus::Optimal,
            1.0,
        ),
        (
            lp(&[-1.0], &[&[-1.0]], &[-2.0], &[0]),
            LpStatus::Optimal,
            -2.0,
        ),
        (
            lp(&[-1.0], &[], &[], &[0]),
            LpStatus::Unbounded,
            f64::NEG_INFINITY,
        ),
        (
            lp(&[0.0], &[&[1.0], &[-1.0]], &[1.0, 0.0], &[]),
            LpStatus::Infeasible,
            f64::INFINITY,
        ),
    ]
}

#[test]
fn trivial_examples() {
    for (p, status, obj) in trivial_cases() {
        let s = solve(&p);
        assert_eq!(s.status, status, "{}", to_text(&p));
        if status == LpStatus::Optimal {
            assert!((s.objective - obj).abs() < 1e-12);
        } else {
            assert_eq!(s.objective, obj);
        }
    }
    let s = solve(&lp(&[-1.0], &[&[-1.0]], &[-2.0], &[0]));
    assert!((s.z[0] - 2.0).abs() < 1e-12);
}

#[test]
fn oracle_agrees_on_trivial_examples() {
    for (p, status, obj) in trivial_cases() {
        let o = lp_enumerate_oracle(&p).unwrap();
        assert_eq!(o.status, status);
        if status == LpStatus::Optimal {
            assert!((o.objective - obj).abs() < 1e-12);
        }
    }
}

#[test]
fn oracle_rejects_large_instances() {
    let p = LpProblem::new(vec![1.0; 8], Matrix::zeros(7, 8), vec![0.0; 7], &[]).unwrap();
    assert!(matches!(
        lp_enumerate_oracle(&p),
        Err(LpError::TooLarge { .. })
    ));
}

#[test]
fn nan_rejected_up_front() {
    let r = LpProblem::new(vec![f64::NAN], Matrix::zeros(0, 1), vec![], &[]);
    assert_eq!(r, Err(LpError::NonFinite("c")));
    let r = LpProblem::new(vec![1.0], Matrix::zeros(1, 1), vec![f64::NAN], &[]);
    assert_eq!(r, Err(LpError::NonFinite("b")));
    assert!(LpProblem::new(vec![1.0], Matrix::zeros(1, 1), vec![0.0], &[3]).is_err());
    assert!(LpProblem::new(vec![1.0, 2.0], Matrix::zeros(1, 1), vec![0.0], &[]).is_err());
}

#[test]
fn free_variables_split() {
    // min |x - 3| via t >= x - 3, t >= 3 - x, x free.
    let p = lp(
        &[0.0, 1.0],
        &[&[-1.0, 1.0], &[1.0, 1.0]],
        &[-3.0, 3.0],
        &[1],
    );
    let s = solve(&p);
    assert_eq!(s.status, LpStatus::Optimal);
    assert!(s.objective.abs() < 1e-12);
    assert!((s.z[0] - 3.0).abs() < 1e-9);
    let p = lp(&[1.0], &[&[1.0]], &[-4.0], &[]);
    let s = solve(&p);
    assert!((s.z[0] + 4.0).abs() < 1e-12);
}

#[test]
fn degenerate_duplicate_constraints() {
    let p = lp(
        &[1.0, 2.0],
        &[&[1.0, 1.0], &[1.0, 1.0], &[1.0, -1.0]],
        &[2.0, 2.0, 0.0],
        &[0, 1],
    );
    let s = solve(&p);
    let o = lp_enumerate_oracle(&p).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert_eq!(o.status, LpStatus::Optimal);
    assert!((s.objective - o.objective).abs() < 1e-9);
    assert!((s.objective - 2.0).abs() < 1e-9);
}

/// Beale's example, which cycles under Dantzig pricing with a naive tie-break.
fn beale() -> LpProblem {
    lp(
        &[-0.75, 20.0, -0.5, 6.0],
        &[
            &[-0.25, 8.0, 1.0, -9.0],
            &[-0.5, 12.0, 0.5, -3.0],
            &[0.0, 0.0, -1.0, 0.0],
        ],
        &[0.0, 0.0, -1.0],
        &[0, 1, 2, 3],
    )
}

#[test]
fn cycling_example_terminates() {
    let p = beale();
    let o = lp_enumerate_oracle(&p).unwrap();
    // optimum -5/4 at (1, 0, 1, 0)
    assert!((o.objective + 1.25).abs() < 1e-12);
    for refresh_every in [1, 3, 50] {
        let s = lp_solve(
            &p,
            &SolverOptions {
                refresh_every,
                ..Default::default()
            },
        );
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - o.objective).abs() < 1e-9);
        assert!(s.iterations < 50 * (3 + 4));
    }
}

#[test]
fn iteration_limit_is_a_status() {
    let p = beale();
    let s = lp_solve(
        &p,
        &SolverOptions {
            max_iter: Some(0),
            ..Default::default()
        },
    );
    assert_eq!(s.status, LpStatus::IterationLimit);
}

#[test]
fn text_dump_round_trips() {
    let p = beale();
    let text = to_text(&p);
    assert!(text.starts_with("lp 3 4\n"));
    assert_eq!(parse_text(&text).unwrap(), p);
    assert!(parse_text("lp 1 1\nc 1\nA\n1 2\nb 0\nnonneg\n").is_err());
}

#[test]
fn documented_dump_example() {
    let p = parse_text("lp 2 2\nc -1.0 -1.0\nA\n-1.0 -2.0\n-3.0 -1.0\nb -4.0 -6.0\nnonneg 0 1\n")
        .unwrap();
    let s = solve(&p);
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective + 2.8).abs() < 1e-12);
    assert!((s.z[0] - 1.6).abs() < 1e-12 && (s.z[1] - 1.2).abs() < 1e-12);
}

/// Random LP with integer data in [-5, 5], small enough for the oracle.
pub(crate) fn random_lp(rng: &mut ChaCha8Rng) -> LpProblem {
    let n = rng.random_range(1..=6);
    let r = rng.random_range(1..=8);
    let mut nonneg = Vec::new();
    let mut width = n + r;
    for j in 0..n {
        if width < ORACLE_MAX_COLUMNS && rng.random_bool(0.3) {
            width += 1;
        } else {
            nonneg.push(j);
        }
    }
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-5..=5) as f64).collect();
    let a: Vec<f64> = (0..n * r)
        .map(|_| rng.random_range(-5..=5) as f64)
        .collect();
    let b: Vec<f64> = (0..r).map(|_| rng.random_range(-5..=5) as f64).collect();
    LpProblem::new(c, Matrix::from_row_major(r, n, a), b, &nonneg).unwrap()
}

#[test]
fn random_instances_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let tol = SolverOptions::default().tol_feas;
    let (mut optimal, mut total) = (0, 0);
    while optimal < 200 {
        total += 1;
        let p = random_lp(&mut rng);
        let s = solve(&p);
        let o = lp_enumerate_oracle(&p).unwrap();
        assert_eq!(s.status, o.status, "{}", to_text(&p));
        if s.is_optimal() {
            optimal += 1;
            assert!((s.objective - o.objective).abs() <= 1e-6, "{}", to_text(&p));
            assert!(p.max_violation(&s.z) <= tol * (1.0 + p.rhs_inf_norm()));
        }
    }
    assert!(total < 5000, "{total} instances for 200 optimal ones");
}

#[test]
fn cost_scaling_keeps_basis() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    while checked < 100 {
        let p = random_lp(&mut rng);
        let s = solve(&p);
        if !s.is_optimal() {
            continue;
        }
        checked += 1;
        for factor in [0.5, 3.0, 8.0] {
            let scaled = solve(&p.with_scaled_cost(factor));
            assert_eq!(scaled.status, LpStatus::Optimal);
            assert!(
                (scaled.objective - factor * s.objective).abs()
                    <= 1e-9 * (1.0 + s.objective.abs()) * factor
            );
            assert_eq!(scaled.basis, s.basis);
        }
    }
}
