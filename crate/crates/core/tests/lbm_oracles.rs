mod common;

use cobeam::lbm::{solve_lbm, LbmProblem};
use cobeam::linalg::{c, numerical_rank, trace_re, CMat};
use cobeam::rates::per_bs_bound;
use cobeam::relaxed::{solve_relaxed, RelaxedOptions};
use cobeam::rrp::reduce_to_rank_one;
use cobeam::UserId;
use common::*;
use rand::Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

#[test]
fn matches_grid_for_two_antennas() {
    let mut r = rng(100);
    for _ in 0..3 {
        let a_rank = r.random_range(0..=2);
        let prob = random_lbm(&mut r, 2, a_rank);
        let sol = prob.solve(1.0, 1e-10).unwrap();
        let exact = lbm_objective(&prob, &sol.w_star);
        let grid = lbm_grid_k2(&prob, 1.0, 1e-3);
        assert!(exact >= grid - 1e-9, "grid beats solver: {grid} > {exact}");
        assert!(exact - grid <= 1e-4, "{exact} vs grid {grid}");
    }
}

#[test]
fn matches_projected_gradient() {
    let mut r = rng(200);
    for k in 1..=4 {
        for _ in 0..5 {
            let a_rank = r.random_range(0..=k);
            let prob = random_lbm(&mut r, k, a_rank);
            let sol = prob.solve(1.0, 1e-10).unwrap();
            let init = CMat::identity(k, k) * c(0.5 / k as f64, 0.0);
            let pg = solve_relaxed(&prob, 1.0, &init, RelaxedOptions::default());
            let exact = lbm_objective(&prob, &sol.w_star);
            assert!(
                rel(exact, pg.objective) < 1e-5,
                "K={k}: {exact} vs {}",
                pg.objective
            );
            assert!(exact >= pg.objective - 1e-9);
            assert!(numerical_rank(&sol.w_star, 1e-8) <= 1);
        }
    }
}

#[test]
fn relaxed_then_reduced_matches_exact() {
    let mut r = rng(300);
    for _ in 0..10 {
        let syn = synthetic_optimum(&mut r, 4, 3);
        let init = CMat::identity(4, 4) * c(0.2, 0.0);
        let pg = solve_relaxed(&syn.prob, syn.budget, &init, RelaxedOptions::default());
        let red = reduce_to_rank_one(&pg.w, &syn.h_mat, &syn.prob.a).unwrap();
        let exact = syn.prob.solve(syn.budget, 1e-10).unwrap();
        assert_eq!(numerical_rank(&red.w, 1e-8), 1);
        let a = lbm_objective(&syn.prob, &red.w);
        let b = lbm_objective(&syn.prob, &exact.w_star);
        assert!(rel(a, b) < 1e-5, "{a} vs {b}");
        assert!(trace_re(&red.w) <= syn.budget + 1e-9);
    }
}

#[test]
fn objective_difference_equals_bound_difference() {
    let (ch, cfg, covs) = network(400, 3, 1, 3, 0.3);
    for m in 0..3 {
        let prob = LbmProblem::new(&ch, &covs, m, &cfg.user_weights).unwrap();
        let sol = solve_lbm(&ch, &covs, m, 1.0, 1e-10, &cfg.user_weights).unwrap();
        let d_obj =
            lbm_objective(&prob, &sol.w_star) - lbm_objective(&prob, covs.get(UserId::new(m, 0)));
        let d_bound = per_bs_bound(
            &ch,
            std::slice::from_ref(&sol.w_star),
            &covs,
            m,
            &cfg.user_weights,
        ) - per_bs_bound(&ch, covs.cell(m), &covs, m, &cfg.user_weights);
        assert!((d_obj - d_bound).abs() < 1e-10, "{d_obj} vs {d_bound}");
    }
}
