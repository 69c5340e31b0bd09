//! Rates, interference, taxation terms and the per-user / per-BS lower bounds.
//!
//! Everything here reduces to the table of received powers
//! `P[u][v] = h_{cell(v),u}ᴴ W_v h_{cell(v),u}`: the power user `u` receives
//! from the signal intended for user `v`. [`LinkPowers`] builds that table from
//! either covariances or beams, and the rate and bound formulas read from it.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::model::{BeamSet, ChannelSet, CovSet, UserId};

/// Received power table, `p[u * users + v]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkPowers {
    users: usize,
    users_per_cell: usize,
    noise: Vec<f64>,
    p: Vec<f64>,
}

impl LinkPowers {
    pub fn from_covs(ch: &ChannelSet, covs: &CovSet) -> Self {
        Self::build(ch, |bs, u, v| {
            linalg::quad_form(ch.h_flat(bs, u), &covs.covs[v])
        })
    }

    pub fn from_beams(ch: &ChannelSet, beams: &BeamSet) -> Self {
        Self::build(ch, |bs, u, v| {
            linalg::beam_gain(ch.h_flat(bs, u), &beams.beams[v])
        })
    }

    fn build(ch: &ChannelSet, gain: impl Fn(usize, usize, usize) -> f64) -> Self {
        let users = ch.num_users();
        let n = ch.users_per_cell();
        let mut p = vec![0.0; users * users];
        for u in 0..users {
            for v in 0..users {
                p[u * users + v] = gain(v / n, u, v);
            }
        }
        Self {
            users,
            users_per_cell: n,
            noise: ch.noise_powers().to_vec(),
            p,
        }
    }

    pub fn num_users(&self) -> usize {
        self.users
    }

    /// Power received at `u` from the transmission intended for `v`.
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.p[u * self.users + v]
    }

    /// Replace every column belonging to `bs`, i.e. swap in new transmissions
    /// for that BS's users.
    pub fn with_cell_from_covs(&self, ch: &ChannelSet, bs: usize, cell: &[CMat]) -> Self {
        let mut out = self.clone();
        let n = self.users_per_cell;
        for u in 0..self.users {
            for (i, w) in cell.iter().enumerate() {
                out.p[u * self.users + bs * n + i] = linalg::quad_form(ch.h_flat(bs, u), w);
            }
        }
        out
    }

    pub fn with_cell_from_beams(&self, ch: &ChannelSet, bs: usize, cell: &[CVec]) -> Self {
        let mut out = self.clone();
        let n = self.users_per_cell;
        for u in 0..self.users {
            for (i, w) in cell.iter().enumerate() {
                out.p[u * self.users + bs * n + i] = linalg::beam_gain(ch.h_flat(bs, u), w);
            }
        }
        out
    }

    pub fn signal(&self, u: usize) -> f64 {
        self.get(u, u)
    }

    /// Noise plus all received power not intended for `u`.
    pub fn interference(&self, u: usize) -> f64 {
        let row = &self.p[u * self.users..(u + 1) * self.users];
        self.noise[u]
            + row
                .iter()
                .enumerate()
                .filter(|&(v, _)| v != u)
                .map(|(_, x)| *x)
                .sum::<f64>()
    }

    pub fn rate(&self, u: usize) -> f64 {
        (self.signal(u) / self.interference(u)).ln_1p() / LN_2
    }

    pub fn sum_rate(&self, weights: &[f64]) -> f64 {
        (0..self.users).map(|u| weights[u] * self.rate(u)).sum()
    }

    pub fn taxation(&self, u: usize) -> f64 {
        let s = self.signal(u);
        let i = self.interference(u);
        s / ((i + s) * i) / LN_2
    }

    pub fn taxations(&self) -> Vec<f64> {
        (0..self.users).map(|u| self.taxation(u)).collect()
    }
}

pub fn interference(ch: &ChannelSet, covs: &CovSet, user: UserId) -> f64 {
    let k = ch.flat(user);
    let mut acc = ch.noise(user);
    for v in 0..ch.num_users() {
        if v != k {
            acc += linalg::quad_form(ch.h_flat(ch.user(v).cell, k), &covs.covs[v]);
        }
    }
    acc
}

pub fn user_rate(ch: &ChannelSet, covs: &CovSet, user: UserId) -> f64 {
    let s = linalg::quad_form(ch.direct(user), covs.get(user));
    (s / interference(ch, covs, user)).ln_1p() / LN_2
}

/// Weighted sum rate; all-ones weights give the plain sum rate.
pub fn sum_rate(ch: &ChannelSet, covs: &CovSet, weights: &[f64]) -> f64 {
    LinkPowers::from_covs(ch, covs).sum_rate(weights)
}

pub fn sum_rate_beams(ch: &ChannelSet, beams: &BeamSet, weights: &[f64]) -> f64 {
    LinkPowers::from_beams(ch, beams).sum_rate(weights)
}

/// Taxation terms `T_{q,j}(Ŵ)`, flat row-major, with the point they were
/// evaluated at.
#[derive(Clone, Debug, PartialEq)]
pub struct TaxationTable {
    pub entries: Vec<f64>,
    pub evaluated_at: CovSet,
}

impl TaxationTable {
    pub fn get(&self, u: UserId) -> f64 {
        self.entries[u.cell * self.evaluated_at.users_per_cell + u.index]
    }
}

pub fn taxation(ch: &ChannelSet, covs_hat: &CovSet) -> TaxationTable {
    TaxationTable {
        entries: LinkPowers::from_covs(ch, covs_hat).taxations(),
        evaluated_at: covs_hat.clone(),
    }
}

/// Per-user bound given the expansion-point table and the table with the
/// candidate transmission for `user` swapped in.
pub(crate) fn per_user_bound_tables(
    hat: &LinkPowers,
    new: &LinkPowers,
    user: usize,
    weights: &[f64],
) -> f64 {
    let mut value = weights[user] * new.rate(user);
    for v in 0..hat.num_users() {
        if v == user {
            continue;
        }
        let t = weights[v] * hat.taxation(v);
        value += weights[v] * hat.rate(v) - t * (new.get(v, user) - hat.get(v, user));
    }
    value
}

/// Per-user lower bound `U_{m,i}(W_mi, Ŵ_{-(m,i)})`.
///
/// Equals the weighted sum rate at `W_mi = Ŵ_{m,i}` and never exceeds the
/// weighted sum rate with `W_mi` substituted.
pub fn per_user_bound(
    ch: &ChannelSet,
    w_mi: &CMat,
    covs_hat: &CovSet,
    user: UserId,
    weights: &[f64],
) -> f64 {
    let hat = LinkPowers::from_covs(ch, covs_hat);
    let mut covs = covs_hat.clone();
    covs.set(user, w_mi.clone());
    let new = LinkPowers::from_covs(ch, &covs);
    per_user_bound_tables(&hat, &new, ch.flat(user), weights)
}

/// Per-BS bound given both tables; `new` differs from `hat` only in the
/// columns of `bs`.
pub(crate) fn per_bs_bound_tables(
    hat: &LinkPowers,
    new: &LinkPowers,
    bs: usize,
    users_per_cell: usize,
    weights: &[f64],
) -> f64 {
    let own = bs * users_per_cell..(bs + 1) * users_per_cell;
    let mut value = 0.0;
    for u in 0..hat.num_users() {
        if own.contains(&u) {
            value += weights[u] * new.rate(u);
        } else {
            let t = weights[u] * hat.taxation(u);
            let delta: f64 = own.clone().map(|v| new.get(u, v) - hat.get(u, v)).sum();
            value += weights[u] * hat.rate(u) - t * delta;
        }
    }
    value
}

/// Per-BS lower bound `Ū_m(W_m, Ŵ_{-m})`.
pub fn per_bs_bound(
    ch: &ChannelSet,
    w_m: &[CMat],
    covs_hat: &CovSet,
    bs: usize,
    weights: &[f64],
) -> f64 {
    let hat = LinkPowers::from_covs(ch, covs_hat);
    let new = hat.with_cell_from_covs(ch, bs, w_m);
    per_bs_bound_tables(&hat, &new, bs, ch.users_per_cell(), weights)
}

/// Per-BS bound in beam form.
pub fn per_bs_bound_beams(
    ch: &ChannelSet,
    w_m: &[CVec],
    beams_hat: &BeamSet,
    bs: usize,
    weights: &[f64],
) -> f64 {
    let hat = LinkPowers::from_beams(ch, beams_hat);
    let new = hat.with_cell_from_beams(ch, bs, w_m);
    per_bs_bound_tables(&hat, &new, bs, ch.users_per_cell(), weights)
}

/// Central second difference of `R_target` along `direction` applied to the
/// covariance of `varied`.
///
/// Fails with [`Error::StencilInfeasible`] when `W_varied ± step·D` leaves the
/// PSD cone.
pub fn directional_second_derivative(
    ch: &ChannelSet,
    covs: &CovSet,
    target: UserId,
    varied: UserId,
    direction: &CMat,
    step: f64,
) -> Result<f64> {
    let base = covs.get(varied);
    let scale = linalg::trace_re(base).abs().max(1.0);
    let rate_at = |t: f64| -> Result<f64> {
        let w = base + direction * linalg::c(t, 0.0);
        if linalg::min_eigenvalue(&w) < -1e-12 * scale {
            return Err(Error::StencilInfeasible { t });
        }
        let mut shifted = covs.clone();
        shifted.set(varied, w);
        Ok(user_rate(ch, &shifted, target))
    };
    let plus = rate_at(step)?;
    let minus = rate_at(-step)?;
    let mid = user_rate(ch, covs, target);
    Ok((plus - 2.0 * mid + minus) / (step * step))
}

/// Step used by the curvature probes: `1e-4 · (1 + ‖W‖_F)`.
pub fn default_probe_step(w: &CMat) -> f64 {
    1e-4 * (1.0 + linalg::fro_norm(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, outer, random_hermitian, random_psd};
    use crate::model::{beams_to_covs, NetworkConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ones(n: usize) -> Vec<f64> {
        vec![1.0; n]
    }

    /// Straight scalar-loop evaluation, independent of `LinkPowers`.
    fn interference_oracle(ch: &ChannelSet, covs: &CovSet, user: UserId) -> f64 {
        let mut acc = ch.noise(user);
        for q in 0..ch.num_bs() {
            for j in 0..ch.users_per_cell() {
                let other = UserId::new(q, j);
                if other == user {
                    continue;
                }
                let h = ch.h(q, user);
                let w = covs.get(other);
                for a in 0..h.len() {
                    for b in 0..h.len() {
                        acc += (h[a].conj() * w[(a, b)] * h[b]).re;
                    }
                }
            }
        }
        acc
    }

    fn random_instance(
        seed: u64,
        m: usize,
        n: usize,
        k: usize,
    ) -> (ChannelSet, CovSet, NetworkConfig) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = ChannelSet::random(&mut rng, m, n, k, 0.3);
        let cfg = NetworkConfig::new(m, n, k);
        let mut covs = CovSet::zeros(m, n, k);
        for u in cfg.users() {
            covs.set(u, random_psd(&mut rng, k, k, 1.0 / n as f64));
        }
        (ch, covs, cfg)
    }

    #[test]
    fn interference_is_noise_when_silent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ch = ChannelSet::random(&mut rng, 2, 2, 3, 0.7);
        let covs = CovSet::zeros(2, 2, 3);
        assert_eq!(interference(&ch, &covs, UserId::new(1, 0)), 0.7);
    }

    #[test]
    fn single_interferer_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ch = ChannelSet::random(&mut rng, 2, 1, 3, 0.5);
        let v = crate::linalg::complex_gaussian(&mut rng, 3, 1.0);
        let mut covs = CovSet::zeros(2, 1, 3);
        covs.set(UserId::new(1, 0), outer(&v));
        let target = UserId::new(0, 0);
        let expect = 0.5 + ch.h(1, target).dotc(&v).norm_sqr();
        assert!((interference(&ch, &covs, target) - expect).abs() < 1e-12);
    }

    #[test]
    fn interference_matches_scalar_loop() {
        let (ch, covs, cfg) = random_instance(7, 2, 2, 3);
        for u in cfg.users() {
            let a = interference(&ch, &covs, u);
            let b = interference_oracle(&ch, &covs, u);
            assert!((a - b).abs() < 1e-12 * b);
            let lp = LinkPowers::from_covs(&ch, &covs);
            assert!((lp.interference(ch.flat(u)) - b).abs() < 1e-12 * b);
        }
    }

    #[test]
    fn zero_signal_zero_rate() {
        let (ch, mut covs, _) = random_instance(8, 2, 1, 2);
        covs.set(UserId::new(0, 0), CMat::zeros(2, 2));
        assert_eq!(user_rate(&ch, &covs, UserId::new(0, 0)), 0.0);
    }

    #[test]
    fn matched_filter_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ch = ChannelSet::random(&mut rng, 1, 1, 4, 0.2);
        let u = UserId::new(0, 0);
        let h = ch.direct(u).clone();
        let pbar: f64 = 2.5;
        let w = &h * c((pbar).sqrt() / h.norm(), 0.0);
        let covs = beams_to_covs(&BeamSet {
            num_bs: 1,
            users_per_cell: 1,
            beams: vec![w],
        });
        let expect = (1.0 + pbar * h.norm_squared() / 0.2).log2();
        assert!((user_rate(&ch, &covs, u) - expect).abs() < 1e-12);
    }

    #[test]
    fn scalar_and_matrix_rate_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let cfg = NetworkConfig::new(3, 2, 3);
        let ch = ChannelSet::random(&mut rng, 3, 2, 3, 0.4);
        let beams = BeamSet::random(&mut rng, &cfg);
        let covs = beams_to_covs(&beams);
        for u in cfg.users() {
            // wᴴ H w form over beams
            let hd = ch.direct(u);
            let s = beams
                .get(u)
                .dotc(&(crate::linalg::outer(hd) * beams.get(u)))
                .re;
            let mut i = ch.noise(u);
            for v in cfg.users().filter(|&v| v != u) {
                let hq = ch.h(v.cell, u);
                i += beams
                    .get(v)
                    .dotc(&(crate::linalg::outer(hq) * beams.get(v)))
                    .re;
            }
            let scalar = (1.0 + s / i).log2();
            assert!((scalar - user_rate(&ch, &covs, u)).abs() < 1e-12);
        }
    }

    #[test]
    fn sum_rate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ch = ChannelSet::random(&mut rng, 2, 1, 2, 0.4);
        assert_eq!(sum_rate(&ch, &CovSet::zeros(2, 1, 2), &ones(2)), 0.0);

        let (ch, covs, cfg) = random_instance(12, 2, 1, 3);
        let loop_sum: f64 = cfg.users().map(|u| user_rate(&ch, &covs, u)).sum();
        assert!((sum_rate(&ch, &covs, &ones(2)) - loop_sum).abs() < 1e-12);

        let (ch, covs, _) = random_instance(13, 1, 1, 3);
        let u = UserId::new(0, 0);
        assert!((sum_rate(&ch, &covs, &ones(1)) - user_rate(&ch, &covs, u)).abs() < 1e-15);
    }

    #[test]
    fn taxation_zero_and_single_user() {
        let (ch, mut covs, _) = random_instance(14, 2, 1, 2);
        covs.set(UserId::new(1, 0), CMat::zeros(2, 2));
        assert_eq!(taxation(&ch, &covs).get(UserId::new(1, 0)), 0.0);

        let (ch, covs, _) = random_instance(15, 1, 1, 2);
        let u = UserId::new(0, 0);
        let s = crate::linalg::quad_form(ch.direct(u), covs.get(u));
        let cn = ch.noise(u);
        let expect = s / ((cn + s) * cn) / LN_2;
        let t = taxation(&ch, &covs).get(u);
        assert!((t - expect).abs() < 1e-14 * expect);
    }

    #[test]
    fn taxation_is_negative_rate_sensitivity() {
        let (ch, covs, cfg) = random_instance(16, 3, 2, 2);
        let table = taxation(&ch, &covs);
        let lp = LinkPowers::from_covs(&ch, &covs);
        for u in cfg.users() {
            let k = ch.flat(u);
            let s = lp.signal(k);
            let i = lp.interference(k);
            let r = |extra: f64| (1.0 + s / (i + extra)).log2();
            let h = 1e-6 * i;
            let fd = -(r(h) - r(-h)) / (2.0 * h);
            let t = table.get(u);
            assert!(t >= 0.0);
            assert!((fd - t).abs() <= 1e-6 * t.max(1.0), "fd {fd} vs T {t}");
        }
    }

    #[test]
    fn per_user_bound_tangent_and_below() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (ch, covs, cfg) = random_instance(18, 3, 2, 3);
        let w = ones(cfg.num_users());
        let r_hat = sum_rate(&ch, &covs, &w);
        for u in cfg.users() {
            let at_hat = per_user_bound(&ch, covs.get(u), &covs, u, &w);
            assert!((at_hat - r_hat).abs() <= 1e-10 * r_hat);
        }
        for trial in 0..1000 {
            let u = cfg.user(trial % cfg.num_users());
            let cand = random_psd(
                &mut rng,
                3,
                1 + trial % 3,
                0.1 + 2.0 * (trial as f64 / 1000.0),
            );
            let bound = per_user_bound(&ch, &cand, &covs, u, &w);
            let mut sub = covs.clone();
            sub.set(u, cand);
            let r = sum_rate(&ch, &sub, &w);
            assert!(
                bound <= r + 1e-10 * r.abs().max(1.0),
                "trial {trial}: {bound} > {r}"
            );
        }
    }

    #[test]
    fn per_user_bound_single_cell_is_own_rate() {
        let (ch, covs, _) = random_instance(19, 1, 1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let cand = random_psd(&mut rng, 3, 2, 1.3);
        let u = UserId::new(0, 0);
        let mut sub = covs.clone();
        sub.set(u, cand.clone());
        let expect = user_rate(&ch, &sub, u);
        assert!((per_user_bound(&ch, &cand, &covs, u, &ones(1)) - expect).abs() < 1e-14);
    }

    #[test]
    fn per_bs_bound_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (ch, covs, cfg) = random_instance(22, 3, 2, 2);
        let w = ones(cfg.num_users());
        let r_hat = sum_rate(&ch, &covs, &w);
        for m in 0..3 {
            let b = per_bs_bound(&ch, covs.cell(m), &covs, m, &w);
            assert!((b - r_hat).abs() <= 1e-10 * r_hat);
        }
        for trial in 0..1000 {
            let m = trial % 3;
            let cell: Vec<CMat> = (0..2).map(|_| random_psd(&mut rng, 2, 2, 0.5)).collect();
            let b = per_bs_bound(&ch, &cell, &covs, m, &w);
            let mut sub = covs.clone();
            for (i, wi) in cell.into_iter().enumerate() {
                sub.set(UserId::new(m, i), wi);
            }
            let r = sum_rate(&ch, &sub, &w);
            assert!(b <= r + 1e-10 * r.abs().max(1.0));
        }
    }

    #[test]
    fn per_bs_bound_single_user_reduces_to_per_user() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (ch, covs, _) = random_instance(24, 3, 1, 3);
        let w = ones(3);
        let cand = random_psd(&mut rng, 3, 1, 0.8);
        let a = per_bs_bound(&ch, std::slice::from_ref(&cand), &covs, 1, &w);
        let b = per_user_bound(&ch, &cand, &covs, UserId::new(1, 0), &w);
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn curvature_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let (ch, covs, _) = random_instance(26, 2, 2, 3);
        let target = UserId::new(0, 0);
        let zero = CMat::zeros(3, 3);
        let step = default_probe_step(covs.get(target));
        let d0 = directional_second_derivative(&ch, &covs, target, target, &zero, step).unwrap();
        assert_eq!(d0, 0.0);
        for _ in 0..50 {
            let d = random_hermitian(&mut rng, 3) * c(0.05, 0.0);
            let other = UserId::new(1, 1);
            let s = default_probe_step(covs.get(other));
            let cvx = directional_second_derivative(&ch, &covs, target, other, &d, s).unwrap();
            assert!(cvx >= -1e-6, "{cvx}");
            let s = default_probe_step(covs.get(target));
            let ccv = directional_second_derivative(&ch, &covs, target, target, &d, s).unwrap();
            assert!(ccv <= 1e-6, "{ccv}");
        }
    }

    #[test]
    fn stencil_outside_cone_is_rejected() {
        let (ch, mut covs, _) = random_instance(27, 2, 1, 2);
        let u = UserId::new(1, 0);
        covs.set(u, CMat::zeros(2, 2));
        let d = CMat::identity(2, 2);
        let r = directional_second_derivative(&ch, &covs, UserId::new(0, 0), u, &d, 1e-3);
        assert!(matches!(r, Err(Error::StencilInfeasible { .. })));
    }
}
