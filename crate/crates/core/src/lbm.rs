//! Exact lower-bound maximization for one user per cell.
//!
//! With the other BSs fixed at `Ŵ_{-m}`, BS `m` maximizes
//!
//! ```text
//! ω_m log2(1 + hᴴ W h / I_m) − Tr(A_m W)   s.t.  Tr W ≤ p̄_m,  W ⪰ 0
//! ```
//!
//! where `A_m = Σ_{q≠m} ω_q T_q(Ŵ) h_{m,q} h_{m,q}ᴴ` collects the taxation the
//! other cells charge for interference. For a fixed multiplier `μ` the
//! Lagrangian is maximized in closed form: Cholesky-whiten `A_m + μI`,
//! eigendecompose the whitened rank-1 channel, water-fill the diagonal, and
//! map back. The whitened channel has rank ≤ 1, so the answer has rank ≤ 1
//! for every `μ`. The trace of that answer decreases in `μ`, so a bisection
//! on `μ` enforces the power budget.

use std::f64::consts::LN_2;

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::model::{ChannelSet, CovSet, UserId};
use crate::rates::LinkPowers;

/// Relative eigenvalue threshold for treating `A_m` as full rank.
pub const FULL_RANK_TOL: f64 = 1e-10;

const MAX_BRACKET_DOUBLINGS: usize = 200;
const MAX_BISECTIONS: usize = 400;

#[derive(Clone, Debug, PartialEq)]
pub struct LbmSolution {
    pub w_star: CMat,
    pub mu_star: f64,
    pub power_used: f64,
    pub iterations: usize,
}

/// Intermediate quantities of one fixed-multiplier solve.
#[derive(Clone, Debug)]
pub struct FixedMuSolution {
    pub w: CMat,
    /// Eigenvalues of the whitened channel, descending.
    pub delta: Vec<f64>,
    /// Water-filled diagonal in the whitened eigenbasis.
    pub diag: Vec<f64>,
}

/// `A_m` for a one-user-per-cell network.
pub fn assemble_a(ch: &ChannelSet, covs_hat: &CovSet, bs: usize, weights: &[f64]) -> Result<CMat> {
    require_single_user(ch)?;
    let lp = LinkPowers::from_covs(ch, covs_hat);
    Ok(assemble_a_from(ch, &lp, bs, weights))
}

fn assemble_a_from(ch: &ChannelSet, lp: &LinkPowers, bs: usize, weights: &[f64]) -> CMat {
    let k = ch.antennas();
    let mut a = CMat::zeros(k, k);
    for q in (0..ch.num_bs()).filter(|&q| q != bs) {
        let t = weights[q] * lp.taxation(q);
        if t != 0.0 {
            a += linalg::outer(ch.h_flat(bs, q)) * c(t, 0.0);
        }
    }
    linalg::hermitian_part(&a)
}

fn require_single_user(ch: &ChannelSet) -> Result<()> {
    if ch.users_per_cell() != 1 {
        return Err(Error::Dimension(format!(
            "lower-bound maximization needs one user per cell, got {}",
            ch.users_per_cell()
        )));
    }
    Ok(())
}

/// Closed-form diagonal maximizer: `[(Δ_ii − 1)/Δ_ii]⁺`, zero where `Δ_ii = 0`.
/// Round-off negatives count as zero.
pub fn diag_waterfill(delta: &[f64]) -> Vec<f64> {
    delta
        .iter()
        .map(|&d| {
            if d > 0.0 {
                ((d - 1.0) / d).max(0.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// The bound maximization seen from BS `bs`, with everything but `W_m` frozen.
#[derive(Clone, Debug)]
pub struct LbmProblem {
    pub bs: usize,
    /// Direct channel of the BS's user.
    pub h: CVec,
    /// Interference plus noise at the user, evaluated at `Ŵ`.
    pub interference: f64,
    /// Aggregate taxation matrix `A_m`.
    pub a: CMat,
    pub weight: f64,
}

impl LbmProblem {
    pub fn new(ch: &ChannelSet, covs_hat: &CovSet, bs: usize, weights: &[f64]) -> Result<Self> {
        require_single_user(ch)?;
        let lp = LinkPowers::from_covs(ch, covs_hat);
        Ok(Self {
            bs,
            h: ch.direct(UserId::new(bs, 0)).clone(),
            interference: lp.interference(bs),
            a: assemble_a_from(ch, &lp, bs, weights),
            weight: weights[bs],
        })
    }

    /// The part of `U_m` that depends on `W`.
    pub fn objective(&self, w: &CMat) -> f64 {
        let s = linalg::quad_form(&self.h, w);
        self.weight * (s / self.interference).ln_1p() / LN_2 - linalg::trace_product_re(&self.a, w)
    }

    /// Partial Lagrangian `objective(W) − μ (Tr W − p̄)`.
    pub fn lagrangian(&self, w: &CMat, mu: f64, budget: f64) -> f64 {
        self.objective(w) - mu * (linalg::trace_re(w) - budget)
    }

    fn a_is_full_rank(&self) -> bool {
        let (vals, _) = linalg::eigh(&self.a);
        let top = vals.first().copied().unwrap_or(0.0);
        top > 0.0 && vals.last().copied().unwrap_or(0.0) > FULL_RANK_TOL * top
    }

    pub fn solve_fixed_mu(&self, mu: f64) -> Result<CMat> {
        self.solve_fixed_mu_detailed(mu).map(|s| s.w)
    }

    /// Maximize the Lagrangian over the PSD cone for a fixed `μ ≥ 0`.
    pub fn solve_fixed_mu_detailed(&self, mu: f64) -> Result<FixedMuSolution> {
        let k = self.h.len();
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::Invalid(format!("multiplier must be >= 0, got {mu}")));
        }
        if self.weight == 0.0 {
            return Ok(FixedMuSolution {
                w: CMat::zeros(k, k),
                delta: vec![0.0; k],
                diag: vec![0.0; k],
            });
        }
        if mu == 0.0 && !self.a_is_full_rank() {
            return Err(Error::SingularPenalty);
        }
        // The objective is in bits and the closed form is for natural log, so
        // the penalty is rescaled by ln 2 / ω.
        let scale = LN_2 / self.weight;
        let mut penalty = &self.a * c(scale, 0.0);
        for i in 0..k {
            penalty[(i, i)] += c(scale * mu, 0.0);
        }
        let penalty = linalg::hermitian_part(&penalty);
        let chol = Cholesky::new(penalty).ok_or(Error::SingularPenalty)?;
        let l = chol.l();
        let x = l
            .solve_lower_triangular(&self.h)
            .ok_or(Error::SingularPenalty)?;
        let whitened = linalg::outer(&x) * c(1.0 / self.interference, 0.0);
        let (delta, v) = linalg::eigh(&whitened);
        let diag = diag_waterfill(&delta);
        let y = l
            .adjoint()
            .solve_upper_triangular(&v)
            .ok_or(Error::SingularPenalty)?;
        let mut w = CMat::zeros(k, k);
        for (j, &d) in diag.iter().enumerate() {
            if d > 0.0 {
                let col = y.column(j).into_owned();
                w += linalg::outer(&col) * c(d, 0.0);
            }
        }
        Ok(FixedMuSolution {
            w: linalg::hermitian_part(&w),
            delta,
            diag,
        })
    }

    /// Bisection on `μ` until the power budget is met with complementarity.
    /// `tol` is the absolute tolerance on `|Tr W − p̄|`.
    pub fn solve(&self, budget: f64, tol: f64) -> Result<LbmSolution> {
        let k = self.h.len();
        if self.weight == 0.0 {
            return Ok(LbmSolution {
                w_star: CMat::zeros(k, k),
                mu_star: 0.0,
                power_used: 0.0,
                iterations: 0,
            });
        }
        let mut iterations = 0;
        if self.a_is_full_rank() {
            let w = self.solve_fixed_mu(0.0)?;
            let p = linalg::trace_re(&w);
            iterations += 1;
            if p <= budget {
                return Ok(LbmSolution {
                    w_star: w,
                    mu_star: 0.0,
                    power_used: p,
                    iterations,
                });
            }
        }

        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut w_hi = self.solve_fixed_mu(hi)?;
        iterations += 1;
        let mut doublings = 0;
        while linalg::trace_re(&w_hi) > budget {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > MAX_BRACKET_DOUBLINGS || !hi.is_finite() {
                return Err(Error::BisectionFailure(format!(
                    "no multiplier up to {hi:e} meets the budget {budget}"
                )));
            }
            w_hi = self.solve_fixed_mu(hi)?;
            iterations += 1;
        }

        for _ in 0..MAX_BISECTIONS {
            if hi - lo < 1e-12 * hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let w = self.solve_fixed_mu(mid)?;
            iterations += 1;
            let p = linalg::trace_re(&w);
            if p <= budget && budget - p < tol {
                return Ok(LbmSolution {
                    w_star: w,
                    mu_star: mid,
                    power_used: p,
                    iterations,
                });
            }
            if p > budget {
                lo = mid;
            } else {
                hi = mid;
                w_hi = w;
            }
        }
        let p = linalg::trace_re(&w_hi);
        Ok(LbmSolution {
            w_star: w_hi,
            mu_star: hi,
            power_used: p,
            iterations,
        })
    }
}

/// Solve BS `bs`'s bound maximization at `Ŵ` for a fixed multiplier.
pub fn solve_fixed_mu(
    ch: &ChannelSet,
    covs_hat: &CovSet,
    bs: usize,
    mu: f64,
    weights: &[f64],
) -> Result<CMat> {
    LbmProblem::new(ch, covs_hat, bs, weights)?.solve_fixed_mu(mu)
}

/// Solve BS `bs`'s bound maximization at `Ŵ` under its power budget.
/// `rel_tol` is relative to the budget.
pub fn solve_lbm(
    ch: &ChannelSet,
    covs_hat: &CovSet,
    bs: usize,
    budget: f64,
    rel_tol: f64,
    weights: &[f64],
) -> Result<LbmSolution> {
    LbmProblem::new(ch, covs_hat, bs, weights)?.solve(budget, rel_tol * budget)
}
