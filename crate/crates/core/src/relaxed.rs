//! Generic first-order solver for the rank-relaxed bound maximization.
//!
//! Accelerated projected gradient ascent on
//! `ω log2(1 + hᴴWh/I) − Tr(AW)` over `{W ⪰ 0, Tr W ≤ p̄}`. It knows nothing
//! about whitening or rank-1 structure, which makes it an independent check
//! on [`crate::lbm`] and a source of higher-rank relaxed optima for
//! [`crate::rrp`].

use std::f64::consts::LN_2;

use crate::lbm::LbmProblem;
use crate::linalg::{self, c, CMat, CVec};

#[derive(Clone, Debug)]
pub struct RelaxedSolution {
    pub w: CMat,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct RelaxedOptions {
    pub max_iters: usize,
    /// Stop once the relative objective change over a window of 50 iterations
    /// drops below this.
    pub tol: f64,
}

impl Default for RelaxedOptions {
    fn default() -> Self {
        Self {
            max_iters: 50_000,
            tol: 1e-13,
        }
    }
}

fn gradient(prob: &LbmProblem, w: &CMat) -> CMat {
    let s = linalg::quad_form(&prob.h, w);
    let coef = prob.weight / (LN_2 * (prob.interference + s));
    linalg::outer(&prob.h) * c(coef, 0.0) - &prob.a
}

/// Euclidean projection of a real vector onto `{x ≥ 0, Σx ≤ budget}`.
pub fn project_capped_simplex(x: &[f64], budget: f64) -> Vec<f64> {
    let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= budget {
        return clipped;
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cum += v;
        let t = (cum - budget) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    x.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Projection onto `{W ⪰ 0, Tr W ≤ budget}` through the eigenvalues.
pub fn project_feasible(w: &CMat, budget: f64) -> CMat {
    let (vals, vecs) = linalg::eigh(w);
    let proj = project_capped_simplex(&vals, budget);
    let n = w.nrows();
    let mut out = CMat::zeros(n, n);
    for (k, &v) in proj.iter().enumerate() {
        if v > 0.0 {
            let u: CVec = vecs.column(k).into_owned();
            out += linalg::outer(&u) * c(v, 0.0);
        }
    }
    linalg::hermitian_part(&out)
}

pub fn solve_relaxed(
    prob: &LbmProblem,
    budget: f64,
    init: &CMat,
    opts: RelaxedOptions,
) -> RelaxedSolution {
    let hn = prob.h.norm_squared();
    let lipschitz =
        (prob.weight * hn * hn / (LN_2 * prob.interference * prob.interference)).max(1e-12);
    let step = 1.0 / lipschitz;

    let mut x = project_feasible(init, budget);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut fx = prob.objective(&x);
    let mut window_start = fx;
    let mut iterations = 0;
    for it in 0..opts.max_iters {
        iterations = it + 1;
        let g = gradient(prob, &y);
        let x_next = project_feasible(&(&y + g * c(step, 0.0)), budget);
        let f_next = prob.objective(&x_next);
        if f_next < fx {
            // adaptive restart: drop momentum and take a plain step from x
            t = 1.0;
            let g = gradient(prob, &x);
            let plain = project_feasible(&(&x + g * c(step, 0.0)), budget);
            let f_plain = prob.objective(&plain);
            if f_plain >= fx {
                x = plain;
                fx = f_plain;
            }
            y = x.clone();
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            y = &x_next + (&x_next - &x) * c(beta, 0.0);
            x = x_next;
            fx = f_next;
            t = t_next;
        }
        if (it + 1) % 50 == 0 {
            if (fx - window_start).abs() <= opts.tol * fx.abs().max(1.0) {
                break;
            }
            window_start = fx;
        }
    }
    RelaxedSolution {
        objective: fx,
        w: x,
        iterations,
    }
}
