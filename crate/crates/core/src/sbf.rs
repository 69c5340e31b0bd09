//! S-BF: sequential beam updates for several users per cell.
//!
//! The stationarity condition of BS `m`'s bound in beam form is
//!
//! ```text
//! M_{m,i}(μ) w_{m,i} = ω_{m,i} h (hᴴ w_{m,i}) / (I_{m,i} + |hᴴ w_{m,i}|²)
//! M_{m,i}(μ) = ln2 · (Σ_{(q,j)≠(m,i)} ω_{q,j} T_{q,j} h_{m,(q,j)} h_{m,(q,j)}ᴴ + μ I)
//! ```
//!
//! whose solutions are `w = β M†h` with
//! `β² = [ω hᴴM†h − I]⁺ / (hᴴM†h)²`. The taxation and interference terms are
//! evaluated at the previous beams, one Jacobi pass per update, and `μ` is
//! bisected to meet the BS's power budget. A candidate is kept only if it
//! raises the BS's bound, which keeps the sum rate nondecreasing.

use std::f64::consts::LN_2;
use web_time::Instant;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::model::{beams_to_covs, BeamSet, ChannelSet, NetworkConfig, UserId};
use crate::rates::{per_bs_bound_tables, LinkPowers};
use crate::trace::{window_converged, IterationRecord, RunTrace};

/// Eigenvalues below this fraction of the largest are dropped from `M†`.
pub const PINV_TOL: f64 = 1e-12;

const MAX_BRACKET_DOUBLINGS: usize = 200;
const MAX_BISECTIONS: usize = 400;

/// Random start: independent directions, `p̄_m / N` per user.
pub fn random_init<R: Rng + ?Sized>(rng: &mut R, cfg: &NetworkConfig) -> BeamSet {
    BeamSet::random(rng, cfg)
}

/// Intra-cell taxation terms `T_{m,l}(w_m, ŵ₋ₘ)`: own-cell beams replaced by
/// `w_m`, everything else at `ŵ`.
pub fn intra_tax(ch: &ChannelSet, w_m: &[CVec], beams_hat: &BeamSet, bs: usize) -> Vec<f64> {
    let lp = LinkPowers::from_beams(ch, beams_hat).with_cell_from_beams(ch, bs, w_m);
    let n = ch.users_per_cell();
    (0..w_m.len()).map(|i| lp.taxation(bs * n + i)).collect()
}

/// `M_{m,i}(μ)` with every taxation term taken at `ŵ`.
pub fn build_m(
    ch: &ChannelSet,
    mu: f64,
    beams_hat: &BeamSet,
    target: UserId,
    weights: &[f64],
) -> CMat {
    let lp = LinkPowers::from_beams(ch, beams_hat);
    let taxes: Vec<f64> = (0..ch.num_users())
        .map(|u| weights[u] * lp.taxation(u))
        .collect();
    penalty(ch, target.cell, ch.flat(target), &taxes, mu)
}

fn penalty(ch: &ChannelSet, bs: usize, skip: usize, taxes: &[f64], mu: f64) -> CMat {
    let k = ch.antennas();
    let mut m = CMat::identity(k, k) * c(mu, 0.0);
    for (u, &t) in taxes.iter().enumerate() {
        if u != skip && t != 0.0 {
            m += linalg::outer(ch.h_flat(bs, u)) * c(t, 0.0);
        }
    }
    linalg::hermitian_part(&(m * c(LN_2, 0.0)))
}

/// Beam scaling for user `user` at multiplier `mu`, everything taken at `ŵ`.
pub fn beta(
    ch: &ChannelSet,
    mu: f64,
    beams_hat: &BeamSet,
    user: UserId,
    weights: &[f64],
) -> Result<f64> {
    let lp = LinkPowers::from_beams(ch, beams_hat);
    let m = build_m(ch, mu, beams_hat, user, weights);
    let h = ch.direct(user);
    let z = linalg::pinv_hermitian(&m, PINV_TOL) * h;
    beta_from(
        h.dotc(&z).re,
        lp.interference(ch.flat(user)),
        weights[ch.flat(user)],
    )
}

fn beta_from(g: f64, interference: f64, weight: f64) -> Result<f64> {
    let bracket = weight * g - interference;
    if bracket <= 0.0 {
        return Ok(0.0);
    }
    if g == 0.0 {
        return Err(Error::DegenerateChannel(
            "hᴴM†h vanished with a positive bracket".into(),
        ));
    }
    Ok((bracket / (g * g)).sqrt())
}

/// The update problem of one user, diagonalized once and reused across `μ`.
struct UserSystem {
    weight: f64,
    interference: f64,
    vals: Vec<f64>,
    vecs: CMat,
    /// Channel in the eigenbasis, `Uᴴh`.
    proj: CVec,
}

impl UserSystem {
    fn full_rank(&self) -> bool {
        let top = self.vals.first().copied().unwrap_or(0.0);
        top > 0.0 && self.vals.last().copied().unwrap_or(0.0) > PINV_TOL * top
    }

    /// Coordinates of `M†h` in the eigenbasis.
    fn solve_coords(&self, mu: f64) -> CVec {
        let d: Vec<f64> = self.vals.iter().map(|&l| l + LN_2 * mu).collect();
        let top = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        CVec::from_iterator(
            d.len(),
            d.iter().zip(self.proj.iter()).map(|(&di, &p)| {
                if top > 0.0 && di.abs() > PINV_TOL * top {
                    p / di
                } else {
                    c(0.0, 0.0)
                }
            }),
        )
    }

    fn beam(&self, mu: f64) -> Result<(CVec, f64)> {
        let y = self.solve_coords(mu);
        let g = self.proj.dotc(&y).re;
        let b = beta_from(g, self.interference, self.weight)?;
        let power = b * b * y.norm_squared();
        Ok((&self.vecs * y * c(b, 0.0), power))
    }
}

/// One BS's update problem: weighted taxation per flat user and the
/// interference seen by each own-cell user.
pub(crate) struct CellProblem<'a> {
    ch: &'a ChannelSet,
    bs: usize,
    systems: Vec<UserSystem>,
    penalties: Vec<CMat>,
}

impl<'a> CellProblem<'a> {
    pub(crate) fn new(
        ch: &'a ChannelSet,
        bs: usize,
        weights: &[f64],
        taxes: &[f64],
        interference: &[f64],
    ) -> Self {
        let n = ch.users_per_cell();
        let mut systems = Vec::with_capacity(n);
        let mut penalties = Vec::with_capacity(n);
        for i in 0..n {
            let flat = bs * n + i;
            let p = penalty(ch, bs, flat, taxes, 0.0);
            let (vals, vecs) = linalg::eigh(&p);
            let proj = vecs.adjoint() * ch.h_flat(bs, flat);
            systems.push(UserSystem {
                weight: weights[flat],
                interference: interference[i],
                vals,
                vecs,
                proj,
            });
            penalties.push(p);
        }
        Self {
            ch,
            bs,
            systems,
            penalties,
        }
    }

    /// Problem with taxation and interference taken from `lp`.
    pub(crate) fn from_powers(
        ch: &'a ChannelSet,
        bs: usize,
        weights: &[f64],
        lp: &LinkPowers,
    ) -> Self {
        let n = ch.users_per_cell();
        let taxes: Vec<f64> = (0..ch.num_users())
            .map(|u| weights[u] * lp.taxation(u))
            .collect();
        let interference: Vec<f64> = (0..n).map(|i| lp.interference(bs * n + i)).collect();
        Self::new(ch, bs, weights, &taxes, &interference)
    }

    fn beams(&self, mu: f64) -> Result<(Vec<CVec>, f64)> {
        let mut beams = Vec::with_capacity(self.systems.len());
        let mut power = 0.0;
        for s in &self.systems {
            let (w, p) = s.beam(mu)?;
            beams.push(w);
            power += p;
        }
        Ok((beams, power))
    }

    /// Bisection on `μ` for the power budget; returns beams and `μ`.
    pub(crate) fn solve(&self, budget: f64, tol: f64) -> Result<(Vec<CVec>, f64)> {
        if self.systems.iter().all(UserSystem::full_rank) {
            let (beams, power) = self.beams(0.0)?;
            if power <= budget {
                return Ok((beams, 0.0));
            }
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut best = self.beams(hi)?;
        let mut doublings = 0;
        while best.1 > budget {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > MAX_BRACKET_DOUBLINGS || !hi.is_finite() {
                return Err(Error::BisectionFailure(format!(
                    "BS {}: no multiplier up to {hi:e} meets the budget {budget}",
                    self.bs
                )));
            }
            best = self.beams(hi)?;
        }
        for _ in 0..MAX_BISECTIONS {
            if hi - lo < 1e-12 * hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let cand = self.beams(mid)?;
            if cand.1 <= budget && budget - cand.1 < tol {
                return Ok((cand.0, mid));
            }
            if cand.1 > budget {
                lo = mid;
            } else {
                hi = mid;
                best = cand;
            }
        }
        Ok((best.0, hi))
    }

    /// Largest relative violation of the stationarity identity over the
    /// cell's users.
    pub(crate) fn residual(&self, beams: &[CVec], mu: f64) -> f64 {
        let n = self.ch.users_per_cell();
        let k = self.ch.antennas();
        let mut worst = 0.0f64;
        for (i, (s, w)) in self.systems.iter().zip(beams).enumerate() {
            let h = self.ch.h_flat(self.bs, self.bs * n + i);
            let m = &self.penalties[i] + CMat::identity(k, k) * c(LN_2 * mu, 0.0);
            let lhs = m * w;
            let hw = h.dotc(w);
            let rhs = h * (hw * c(s.weight / (s.interference + hw.norm_sqr()), 0.0));
            let scale = lhs.norm().max(rhs.norm());
            if scale > 0.0 {
                worst = worst.max((lhs - rhs).norm() / scale);
            }
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BsUpdateResult {
    /// New beams of the BS; the previous ones when the update is rejected.
    pub beams: Vec<CVec>,
    /// Candidate beams, before the acceptance test.
    pub candidate: Vec<CVec>,
    pub mu: f64,
    pub bound_before: f64,
    pub bound_after: f64,
    pub accepted: bool,
    /// Stationarity residual of the candidate.
    pub residual: f64,
}

/// One S-BF update of BS `bs` from `ŵ`.
pub fn update_bs(
    ch: &ChannelSet,
    beams_hat: &BeamSet,
    bs: usize,
    cfg: &NetworkConfig,
) -> Result<BsUpdateResult> {
    let budget = cfg.power_budget[bs];
    let tol = cfg.bisection_tol * budget;
    let weights = &cfg.user_weights;
    let hat = LinkPowers::from_beams(ch, beams_hat);

    let mut prob = CellProblem::from_powers(ch, bs, weights, &hat);
    let (mut candidate, mut mu) = prob.solve(budget, tol)?;
    for _ in 0..cfg.sbf_inner_sweeps {
        let lp = hat.with_cell_from_beams(ch, bs, &candidate);
        prob = CellProblem::from_powers(ch, bs, weights, &lp);
        (candidate, mu) = prob.solve(budget, tol)?;
    }
    let residual = prob.residual(&candidate, mu);

    let n = ch.users_per_cell();
    let before = per_bs_bound_tables(&hat, &hat, bs, n, weights);
    let new = hat.with_cell_from_beams(ch, bs, &candidate);
    let after = per_bs_bound_tables(&hat, &new, bs, n, weights);
    let accepted = after >= before;
    let beams = if accepted {
        candidate.clone()
    } else {
        beams_hat.cell(bs).to_vec()
    };
    Ok(BsUpdateResult {
        beams,
        candidate,
        mu,
        bound_before: before,
        bound_after: after,
        accepted,
        residual,
    })
}

fn check_inputs(ch: &ChannelSet, cfg: &NetworkConfig, init: &BeamSet) -> Result<()> {
    cfg.validate()?;
    if !ch.matches(cfg) {
        return Err(Error::Dimension(
            "channels do not match the network configuration".into(),
        ));
    }
    init.validate(cfg)
        .map_err(|e| Error::InfeasibleInit(e.to_string()))
}

pub fn run_sbf(ch: &ChannelSet, cfg: &NetworkConfig, init: &BeamSet) -> Result<RunTrace> {
    run_sbf_observed(ch, cfg, init, |_, _| {})
}

/// [`run_sbf`] that also hands every update and the resulting beams to
/// `observe`.
pub fn run_sbf_observed(
    ch: &ChannelSet,
    cfg: &NetworkConfig,
    init: &BeamSet,
    mut observe: impl FnMut(&BsUpdateResult, &BeamSet),
) -> Result<RunTrace> {
    check_inputs(ch, cfg, init)?;
    let weights = &cfg.user_weights;
    let mut beams = init.clone();
    let initial_sum_rate = LinkPowers::from_beams(ch, &beams).sum_rate(weights);
    let mut rates = vec![initial_sum_rate];
    let mut records = Vec::new();
    let mut converged = false;
    for t in 0..cfg.max_outer_iters {
        let start = Instant::now();
        let m = t % cfg.num_bs;
        let upd = update_bs(ch, &beams, m, cfg)?;
        if upd.accepted {
            beams.set_cell(m, &upd.beams);
        }
        let rate = LinkPowers::from_beams(ch, &beams).sum_rate(weights);
        observe(&upd, &beams);
        rates.push(rate);
        records.push(IterationRecord {
            iter: t,
            active_bs: Some(m),
            sum_rate: rate,
            bound_before: Some(upd.bound_before),
            bound_after: Some(if upd.accepted {
                upd.bound_after
            } else {
                upd.bound_before
            }),
            info_units: 1,
            accepted: upd.accepted,
            residual: upd.accepted.then_some(upd.residual),
            wall_time: start.elapsed(),
        });
        if window_converged(&rates, cfg.num_bs, cfg.stop_tol) {
            converged = true;
            break;
        }
    }
    Ok(RunTrace {
        initial_sum_rate,
        records,
        final_covs: beams_to_covs(&beams),
        final_beams: Some(beams),
        converged,
        kkt_residual: None,
    })
}
