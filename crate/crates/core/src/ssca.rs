//! SSCA-BF: round-robin exact bound maximization, one user per cell.
//!
//! In iteration `t` BS `m = t mod M` receives the other cells' taxation terms
//! (one information unit), solves its bound maximization exactly and switches
//! to the rank-1 answer. Since
//! `R(Wᵗ⁺¹) ≥ U_m(Wᵗ⁺¹_m, Wᵗ₋ₘ) ≥ U_m(Wᵗ) = R(Wᵗ)`, the sum rate never
//! decreases. The run stops once a full round changes the rate by less than
//! `stop_tol`.

use web_time::Instant;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lbm::{LbmProblem, LbmSolution};
use crate::model::{covs_to_beams, ChannelSet, CovSet, NetworkConfig, UserId};
use crate::rates::{per_bs_bound, sum_rate};
use crate::trace::{window_converged, IterationRecord, RunTrace};

/// Random full-power rank-1 start: `W_m = p̄_m vvᴴ`, `v` uniform on the unit
/// sphere.
pub fn random_init<R: Rng + ?Sized>(rng: &mut R, cfg: &NetworkConfig) -> CovSet {
    CovSet::random(rng, cfg)
}

fn check_inputs(ch: &ChannelSet, cfg: &NetworkConfig, init: &CovSet) -> Result<()> {
    cfg.validate()?;
    if cfg.users_per_cell != 1 {
        return Err(Error::Dimension(format!(
            "SSCA-BF needs one user per cell, got {}",
            cfg.users_per_cell
        )));
    }
    if !ch.matches(cfg) {
        return Err(Error::Dimension(
            "channels do not match the network configuration".into(),
        ));
    }
    init.validate(cfg)
        .map_err(|e| Error::InfeasibleInit(e.to_string()))
}

fn solve_bs(ch: &ChannelSet, cfg: &NetworkConfig, covs: &CovSet, bs: usize) -> Result<LbmSolution> {
    let budget = cfg.power_budget[bs];
    LbmProblem::new(ch, covs, bs, &cfg.user_weights)?.solve(budget, cfg.bisection_tol * budget)
}

pub fn run_ssca(ch: &ChannelSet, cfg: &NetworkConfig, init: &CovSet) -> Result<RunTrace> {
    run_ssca_observed(ch, cfg, init, |_, _| {})
}

/// [`run_ssca`] that also hands every exact solve and the resulting point to
/// `observe`.
pub fn run_ssca_observed(
    ch: &ChannelSet,
    cfg: &NetworkConfig,
    init: &CovSet,
    mut observe: impl FnMut(&LbmSolution, &CovSet),
) -> Result<RunTrace> {
    check_inputs(ch, cfg, init)?;
    let weights = &cfg.user_weights;
    let mut covs = init.clone();
    let initial_sum_rate = sum_rate(ch, &covs, weights);
    let mut rates = vec![initial_sum_rate];
    let mut records = Vec::new();
    let mut converged = false;
    for t in 0..cfg.max_outer_iters {
        let start = Instant::now();
        let m = t % cfg.num_bs;
        let sol = solve_bs(ch, cfg, &covs, m)?;
        let before = per_bs_bound(ch, covs.cell(m), &covs, m, weights);
        let after = per_bs_bound(ch, std::slice::from_ref(&sol.w_star), &covs, m, weights);
        let accepted = after >= before;
        if accepted {
            covs.set(UserId::new(m, 0), sol.w_star.clone());
        }
        let rate = sum_rate(ch, &covs, weights);
        observe(&sol, &covs);
        rates.push(rate);
        records.push(IterationRecord {
            iter: t,
            active_bs: Some(m),
            sum_rate: rate,
            bound_before: Some(before),
            bound_after: Some(if accepted { after } else { before }),
            info_units: 1,
            accepted,
            residual: None,
            wall_time: start.elapsed(),
        });
        if window_converged(&rates, cfg.num_bs, cfg.stop_tol) {
            converged = true;
            break;
        }
    }
    let kkt = kkt_residual(ch, &covs, cfg)?;
    Ok(RunTrace {
        initial_sum_rate,
        records,
        final_beams: covs_to_beams(&covs, 1e-6).ok(),
        final_covs: covs,
        converged,
        kkt_residual: Some(kkt),
    })
}

/// Largest bound improvement any single BS could still get from one exact
/// solve; zero at a KKT point.
pub fn kkt_residual(ch: &ChannelSet, covs: &CovSet, cfg: &NetworkConfig) -> Result<f64> {
    let mut worst = 0.0f64;
    for m in 0..cfg.num_bs {
        let sol = solve_bs(ch, cfg, covs, m)?;
        let before = per_bs_bound(ch, covs.cell(m), covs, m, &cfg.user_weights);
        let after = per_bs_bound(
            ch,
            std::slice::from_ref(&sol.w_star),
            covs,
            m,
            &cfg.user_weights,
        );
        worst = worst.max(after - before);
    }
    Ok(worst)
}
