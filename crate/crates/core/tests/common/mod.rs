#![allow(dead_code)]

use std::f64::consts::{LN_2, PI};

use cobeam::lbm::LbmProblem;
use cobeam::linalg::{c, complex_gaussian, random_psd, unit_sphere, CMat, CVec};
use cobeam::{ChannelSet, CovSet, NetworkConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random network with CN(0,1) channels and uniform noise.
pub fn network(
    seed: u64,
    m: usize,
    n: usize,
    k: usize,
    noise: f64,
) -> (ChannelSet, NetworkConfig, CovSet) {
    let mut r = rng(seed);
    let cfg = NetworkConfig::new(m, n, k);
    let ch = ChannelSet::random(&mut r, m, n, k, noise);
    let mut covs = CovSet::zeros(m, n, k);
    for u in cfg.users() {
        let rank = r.random_range(1..=k);
        let tr = r.random_range(0.05..1.0) / n as f64;
        covs.set(u, random_psd(&mut r, k, rank, tr));
    }
    (ch, cfg, covs)
}

/// `ω log2(1 + hᴴWh/I) − Tr(AW)`, written out entry by entry.
pub fn lbm_objective(prob: &LbmProblem, w: &CMat) -> f64 {
    let k = prob.h.len();
    let mut s = 0.0;
    let mut tax = 0.0;
    for i in 0..k {
        for j in 0..k {
            s += (prob.h[i].conj() * w[(i, j)] * prob.h[j]).re;
            tax += (prob.a[(i, j)] * w[(j, i)]).re;
        }
    }
    prob.weight * (1.0 + s / prob.interference).log2() - tax
}

/// Brute-force maximum of the bound over rank-1 `p vvᴴ`, `K = 2`.
///
/// `v = (cos φ, sin φ e^{iθ})` on a grid of step `step` covers every
/// direction up to a global phase. For a fixed direction the objective is
/// concave in `p`, so the best power is the clamped stationary point.
pub fn lbm_grid_k2(prob: &LbmProblem, budget: f64, step: f64) -> f64 {
    assert_eq!(prob.h.len(), 2);
    let (h0, h1) = (prob.h[0], prob.h[1]);
    let a00 = prob.a[(0, 0)].re;
    let a11 = prob.a[(1, 1)].re;
    let a01 = prob.a[(0, 1)];
    let (om, i0) = (prob.weight, prob.interference);
    let nphi = (PI / step).ceil() as usize;
    let ntheta = (2.0 * PI / step).ceil() as usize;
    let thetas: Vec<(f64, f64)> = (0..ntheta).map(|t| (t as f64 * step).sin_cos()).collect();
    let mut best = 0.0f64;
    for pi in 0..=nphi {
        let (sp, cp) = (pi as f64 * step).min(PI).sin_cos();
        for &(st, ct) in &thetas {
            let v1 = c(sp * ct, sp * st);
            let hv = h0.conj() * cp + h1.conj() * v1;
            let g = hv.norm_sqr();
            let a = a00 * cp * cp + a11 * v1.norm_sqr() + 2.0 * (a01 * v1 * cp).re;
            let p = if g <= 0.0 {
                0.0
            } else if a <= 0.0 {
                budget
            } else {
                (om / (LN_2 * a) - i0 / g).clamp(0.0, budget)
            };
            let val = om * (1.0 + p * g / i0).log2() - p * a;
            best = best.max(val);
        }
    }
    best
}

/// Rank-1 relaxed problem with a known rank-`r` optimum.
///
/// `h = βQe₁` and `A = a Qe₁e₁ᴴQᴴ + Σ_{j≥r} b_j Qe_jeⱼᴴQᴴ`, so the best
/// `e₁` component is `t* = ω/(ln2·a) − I/β²`, the taxed directions stay
/// empty and any PSD mass on `Qe₂…Qe_r` is free. That yields optima of
/// every rank up to `K`.
pub struct SyntheticOptimum {
    pub prob: LbmProblem,
    pub h_mat: CMat,
    pub w: CMat,
    pub budget: f64,
    pub rank: usize,
}

pub fn synthetic_optimum<R: Rng>(rng: &mut R, k: usize, rank: usize) -> SyntheticOptimum {
    assert!(rank >= 1 && rank <= k);
    // random unitary from a QR of a complex Gaussian matrix
    let g = CMat::from_iterator(k, k, complex_gaussian(rng, k * k, 1.0).iter().copied());
    let q = g.qr().q();
    let e1 = q.column(0).into_owned();
    let beta: f64 = rng.random_range(0.8..2.0);
    let interference: f64 = rng.random_range(0.2..1.0);
    let budget = 1.0;
    let t_star = loop {
        let a: f64 = rng.random_range(0.5..3.0);
        let t = 1.0 / (LN_2 * a) - interference / (beta * beta);
        if t > 0.05 && t < 0.8 * budget {
            break (a, t);
        }
    };
    let (a, t) = t_star;
    let h = &e1 * c(beta, 0.0);
    // taxed directions outside the free block
    let mut tax = &e1 * e1.adjoint() * c(a, 0.0);
    for j in rank..k {
        let qj = q.column(j).into_owned();
        tax += &qj * qj.adjoint() * c(rng.random_range(0.1..2.0), 0.0);
    }
    let prob = LbmProblem {
        bs: 0,
        h: h.clone(),
        interference,
        a: tax,
        weight: 1.0,
    };
    let mut w = &e1 * e1.adjoint() * c(t, 0.0);
    if rank > 1 {
        let spare = rng.random_range(0.3..1.0) * (budget - t);
        let rest = random_psd(rng, rank - 1, rank - 1, spare);
        let basis = q.columns(1, rank - 1).into_owned();
        w += &basis * rest * basis.adjoint();
    }
    let w = (&w + w.adjoint()) * c(0.5, 0.0);
    SyntheticOptimum {
        h_mat: &h * h.adjoint(),
        prob,
        w,
        budget,
        rank,
    }
}

/// Random single-cell LBM problem with a PSD taxation matrix of the given rank.
pub fn random_lbm<R: Rng>(rng: &mut R, k: usize, a_rank: usize) -> LbmProblem {
    let h = complex_gaussian(rng, k, 1.0);
    let tr: f64 = rng.random_range(0.1..2.0);
    let a = if a_rank == 0 {
        CMat::zeros(k, k)
    } else {
        random_psd(rng, k, a_rank, tr)
    };
    LbmProblem {
        bs: 0,
        h,
        interference: rng.random_range(0.1..1.0),
        a,
        weight: 1.0,
    }
}

pub fn unit<R: Rng>(rng: &mut R, k: usize) -> CVec {
    unit_sphere(rng, k)
}
