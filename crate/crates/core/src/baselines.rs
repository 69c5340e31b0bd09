//! Reference schemes: per-cell matched filter and zero forcing without
//! coordination, and a simultaneous-update coordinated variant.

use web_time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec};
use crate::model::{beams_to_covs, BeamSet, ChannelSet, NetworkConfig, UserId};
use crate::rates::LinkPowers;
use crate::sbf::CellProblem;
use crate::trace::{window_converged, IterationRecord, RunTrace};

fn equal_power_beam(direction: &CVec, power: f64) -> CVec {
    direction * c((power / direction.norm_squared()).sqrt(), 0.0)
}

/// `w_{m,i} = √(p̄_m/N) h_{m,(m,i)} / ‖h_{m,(m,i)}‖`.
pub fn matched_filter(ch: &ChannelSet, cfg: &NetworkConfig) -> Result<BeamSet> {
    let share = |m: usize| cfg.power_budget[m] / cfg.users_per_cell as f64;
    let mut beams = Vec::with_capacity(cfg.num_users());
    for u in cfg.users() {
        let h = ch.direct(u);
        if h.norm_squared() == 0.0 {
            return Err(Error::ZeroChannel {
                cell: u.cell,
                index: u.index,
            });
        }
        beams.push(equal_power_beam(h, share(u.cell)));
    }
    Ok(BeamSet {
        num_bs: cfg.num_bs,
        users_per_cell: cfg.users_per_cell,
        beams,
    })
}

/// Per-cell zero forcing with equal power: beam directions are the columns of
/// the pseudoinverse of the cell's stacked channels, so no user hears the
/// other users of its own cell.
pub fn zero_forcing(ch: &ChannelSet, cfg: &NetworkConfig) -> Result<BeamSet> {
    let (n, k) = (cfg.users_per_cell, cfg.antennas);
    if n > k {
        return Err(Error::Dimension(format!(
            "zero forcing needs N <= K, got N = {n}, K = {k}"
        )));
    }
    let mut beams = Vec::with_capacity(cfg.num_users());
    for m in 0..cfg.num_bs {
        // rows are h_{m,(m,i)}ᴴ
        let mut g = CMat::zeros(n, k);
        for i in 0..n {
            let h = ch.direct(UserId::new(m, i));
            if h.norm_squared() == 0.0 {
                return Err(Error::ZeroChannel { cell: m, index: i });
            }
            g.set_row(i, &h.adjoint());
        }
        let svd = g.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= 1e-12 * smax {
            let rank = svd
                .singular_values
                .iter()
                .filter(|&&s| s > 1e-12 * smax)
                .count();
            return Err(Error::Rank { rank, expected: n });
        }
        // G† = Gᴴ (G Gᴴ)⁻¹ for full row rank
        let gram = &g * g.adjoint();
        let inv = gram.try_inverse().ok_or(Error::Rank {
            rank: n - 1,
            expected: n,
        })?;
        let pinv = g.adjoint() * inv;
        let share = cfg.power_budget[m] / n as f64;
        for i in 0..n {
            beams.push(equal_power_beam(&pinv.column(i).into_owned(), share));
        }
    }
    Ok(BeamSet {
        num_bs: cfg.num_bs,
        users_per_cell: n,
        beams,
    })
}

/// Simultaneous-update coordination.
///
/// Every outer iteration all BSs share their taxation terms (`M` information
/// units) and the inter-cell terms are frozen at the current beams. Then
/// `icbf_inner_iters` times every BS computes its S-BF candidate from the
/// current beams, with intra-cell terms and interference refreshed, and all
/// BSs switch at once. Nothing guarantees a monotone sum rate. The run stops
/// once one outer iteration changes the rate by less than `stop_tol`.
pub fn run_icbf_variant(ch: &ChannelSet, cfg: &NetworkConfig, init: &BeamSet) -> Result<RunTrace> {
    cfg.validate()?;
    if !ch.matches(cfg) {
        return Err(Error::Dimension(
            "channels do not match the network configuration".into(),
        ));
    }
    init.validate(cfg)
        .map_err(|e| Error::InfeasibleInit(e.to_string()))?;
    let weights = &cfg.user_weights;
    let n = cfg.users_per_cell;
    let mut beams = init.clone();
    let initial_sum_rate = LinkPowers::from_beams(ch, &beams).sum_rate(weights);
    let mut rates = vec![initial_sum_rate];
    let mut records = Vec::new();
    let mut converged = false;
    for t in 0..cfg.max_outer_iters {
        let start = Instant::now();
        let frozen = LinkPowers::from_beams(ch, &beams);
        let frozen_tax: Vec<f64> = (0..cfg.num_users())
            .map(|u| weights[u] * frozen.taxation(u))
            .collect();
        let mut residual = 0.0f64;
        for _ in 0..cfg.icbf_inner_iters.max(1) {
            let current = LinkPowers::from_beams(ch, &beams);
            let mut next = beams.clone();
            for m in 0..cfg.num_bs {
                let own = m * n..(m + 1) * n;
                let taxes: Vec<f64> = (0..cfg.num_users())
                    .map(|u| {
                        if own.contains(&u) {
                            weights[u] * current.taxation(u)
                        } else {
                            frozen_tax[u]
                        }
                    })
                    .collect();
                let interference: Vec<f64> = own.clone().map(|u| current.interference(u)).collect();
                let prob = CellProblem::new(ch, m, weights, &taxes, &interference);
                let budget = cfg.power_budget[m];
                let (cell, mu) = prob.solve(budget, cfg.bisection_tol * budget)?;
                residual = residual.max(prob.residual(&cell, mu));
                next.set_cell(m, &cell);
            }
            beams = next;
        }
        let rate = LinkPowers::from_beams(ch, &beams).sum_rate(weights);
        rates.push(rate);
        records.push(IterationRecord {
            iter: t,
            active_bs: None,
            sum_rate: rate,
            bound_before: None,
            bound_after: None,
            info_units: cfg.num_bs as u64,
            accepted: true,
            residual: Some(residual),
            wall_time: start.elapsed(),
        });
        if window_converged(&rates, 1, cfg.stop_tol) {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbf;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64, m: usize, n: usize, k: usize) -> (ChannelSet, NetworkConfig) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (
            ChannelSet::random(&mut rng, m, n, k, 0.1),
            NetworkConfig::new(m, n, k),
        )
    }

    #[test]
    fn matched_filter_cases() {
        let (ch, cfg) = setup(1, 2, 1, 3);
        let b = matched_filter(&ch, &cfg).unwrap();
        for m in 0..2 {
            let u = UserId::new(m, 0);
            assert!((b.cell_power(m) - 1.0).abs() < 1e-14);
            assert!((ch.direct(u).dotc(b.get(u)).norm() - ch.direct(u).norm()).abs() < 1e-12);
        }
        let (ch, mut cfg) = setup(2, 3, 2, 2);
        cfg.power_budget = vec![2.0, 1.0, 0.5];
        let b = matched_filter(&ch, &cfg).unwrap();
        for m in 0..3 {
            assert!((b.cell_power(m) - cfg.power_budget[m]).abs() < 1e-14);
            let p0 = b.get(UserId::new(m, 0)).norm_squared();
            let p1 = b.get(UserId::new(m, 1)).norm_squared();
            assert!((p0 - p1).abs() < 1e-14);
        }
    }

    #[test]
    fn matched_filter_zero_channel() {
        let h = vec![vec![CVec::zeros(2)]];
        let ch = ChannelSet::new(1, 1, 2, h, vec![1.0]).unwrap();
        let cfg = NetworkConfig::new(1, 1, 2);
        assert!(matches!(
            matched_filter(&ch, &cfg),
            Err(Error::ZeroChannel { cell: 0, index: 0 })
        ));
    }

    #[test]
    fn zero_forcing_cases() {
        let (ch, cfg) = setup(3, 2, 1, 3);
        let zf = zero_forcing(&ch, &cfg).unwrap();
        let mf = matched_filter(&ch, &cfg).unwrap();
        for (a, b) in zf.beams.iter().zip(&mf.beams) {
            assert!(a.dotc(b).norm() > (1.0 - 1e-12) * a.norm() * b.norm());
        }

        let e0 = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let e1 = CVec::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let ch =
            ChannelSet::new(1, 2, 2, vec![vec![e0.clone(), e1.clone()]], vec![1.0, 1.0]).unwrap();
        let cfg = NetworkConfig::new(1, 2, 2);
        let zf = zero_forcing(&ch, &cfg).unwrap();
        let mf = matched_filter(&ch, &cfg).unwrap();
        for (a, b) in zf.beams.iter().zip(&mf.beams) {
            assert!((a - b).norm() < 1e-14);
        }

        let (ch, cfg) = setup(4, 2, 2, 4);
        let zf = zero_forcing(&ch, &cfg).unwrap();
        for m in 0..2 {
            assert!((zf.cell_power(m) - 1.0).abs() < 1e-12);
            for i in 0..2 {
                for j in 0..2 {
                    if i != j {
                        let leak = ch
                            .direct(UserId::new(m, j))
                            .dotc(zf.get(UserId::new(m, i)))
                            .norm();
                        assert!(leak < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_forcing_errors() {
        let (ch, cfg) = setup(5, 1, 3, 2);
        assert!(matches!(zero_forcing(&ch, &cfg), Err(Error::Dimension(_))));
        let h = CVec::from_vec(vec![c(1.0, 0.5), c(0.2, 0.0)]);
        let ch = ChannelSet::new(
            1,
            2,
            2,
            vec![vec![h.clone(), h * c(2.0, 0.0)]],
            vec![1.0, 1.0],
        )
        .unwrap();
        let cfg = NetworkConfig::new(1, 2, 2);
        assert!(matches!(zero_forcing(&ch, &cfg), Err(Error::Rank { .. })));
    }

    #[test]
    fn icbf_single_cell_matches_update_bs() {
        let (ch, mut cfg) = setup(6, 1, 2, 3);
        cfg.icbf_inner_iters = 1;
        cfg.max_outer_iters = 1;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let init = BeamSet::random(&mut rng, &cfg);
        let trace = run_icbf_variant(&ch, &cfg, &init).unwrap();
        let upd = sbf::update_bs(&ch, &init, 0, &cfg).unwrap();
        let got = trace.final_beams.unwrap();
        for (a, b) in got.beams.iter().zip(&upd.candidate) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn icbf_counts_m_units_per_iteration() {
        let (ch, cfg) = setup(8, 4, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let init = BeamSet::random(&mut rng, &cfg);
        let trace = run_icbf_variant(&ch, &cfg, &init).unwrap();
        assert!(trace.records.iter().all(|r| r.info_units == 4));
        assert_eq!(trace.info_units(), 4 * trace.iterations() as u64);
        for m in 0..4 {
            assert!(trace.final_beams.as_ref().unwrap().cell_power(m) <= 1.0 + 1e-7);
        }
    }
}
