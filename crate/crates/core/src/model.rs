//! Network configuration, channels, and the two representations of a
//! transmit strategy: one beam vector per user ([`BeamSet`]) or one
//! covariance matrix per user ([`CovSet`]).
//!
//! Users are addressed by [`UserId`] and stored row-major by cell, so user
//! `(m, i)` lives at flat index `m * N + i` in every per-user vector.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UserId {
    pub cell: usize,
    pub index: usize,
}

impl UserId {
    pub fn new(cell: usize, index: usize) -> Self {
        Self { cell, index }
    }
}

impl std::fmt::Display for UserId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.cell, self.index)
    }
}

/// Network dimensions and algorithm knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub num_bs: usize,
    pub users_per_cell: usize,
    pub antennas: usize,
    /// Per-BS sum-power budget.
    pub power_budget: Vec<f64>,
    /// Per-user rate weights, flat row-major.
    pub user_weights: Vec<f64>,
    /// Stopping tolerance on the sum rate change over one round, bits/s/Hz.
    pub stop_tol: f64,
    pub max_outer_iters: usize,
    /// Power bisection tolerance, relative to the BS budget.
    pub bisection_tol: f64,
    pub psd_tol: f64,
    /// Inner iterations per outer iteration of the simultaneous (ICBF) variant.
    pub icbf_inner_iters: usize,
    /// Extra fixed-point sweeps inside one S-BF update. Zero means a single
    /// pass with all taxation terms frozen at the previous beams.
    pub sbf_inner_sweeps: usize,
}

impl NetworkConfig {
    pub const DEFAULT_STOP_TOL: f64 = 1e-2;

    /// Unit power budgets, unit weights, default tolerances.
    pub fn new(num_bs: usize, users_per_cell: usize, antennas: usize) -> Self {
        Self {
            num_bs,
            users_per_cell,
            antennas,
            power_budget: vec![1.0; num_bs],
            user_weights: vec![1.0; num_bs * users_per_cell],
            stop_tol: Self::DEFAULT_STOP_TOL,
            max_outer_iters: 500,
            bisection_tol: 1e-8,
            psd_tol: 1e-9,
            icbf_inner_iters: 3,
            sbf_inner_sweeps: 0,
        }
    }

    pub fn num_users(&self) -> usize {
        self.num_bs * self.users_per_cell
    }

    pub fn flat(&self, u: UserId) -> usize {
        u.cell * self.users_per_cell + u.index
    }

    pub fn user(&self, flat: usize) -> UserId {
        UserId::new(flat / self.users_per_cell, flat % self.users_per_cell)
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        (0..self.num_users()).map(|k| self.user(k))
    }

    pub fn cell_users(&self, cell: usize) -> impl Iterator<Item = UserId> {
        (0..self.users_per_cell).map(move |i| UserId::new(cell, i))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Invalid(msg));
        if self.num_bs == 0 || self.users_per_cell == 0 || self.antennas == 0 {
            return bad("num_bs, users_per_cell and antennas must all be >= 1".into());
        }
        if self.power_budget.len() != self.num_bs {
            return bad(format!(
                "power_budget has {} entries, expected {}",
                self.power_budget.len(),
                self.num_bs
            ));
        }
        if let Some(p) = self
            .power_budget
            .iter()
            .find(|p| !(**p > 0.0) || !p.is_finite())
        {
            return bad(format!("power budgets must be > 0, got {p}"));
        }
        if self.user_weights.len() != self.num_users() {
            return bad(format!(
                "user_weights has {} entries, expected {}",
                self.user_weights.len(),
                self.num_users()
            ));
        }
        if let Some(w) = self
            .user_weights
            .iter()
            .find(|w| !(**w >= 0.0) || !w.is_finite())
        {
            return bad(format!("user weights must be >= 0, got {w}"));
        }
        if !(self.stop_tol > 0.0) || !(self.bisection_tol > 0.0) {
            return bad("stop_tol and bisection_tol must be > 0".into());
        }
        if !(self.psd_tol >= 0.0) {
            return bad("psd_tol must be >= 0".into());
        }
        Ok(())
    }
}

/// All BS-to-user channels plus per-user noise power.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    num_bs: usize,
    users_per_cell: usize,
    antennas: usize,
    /// `gains[q][u]` is the channel from BS `q` to flat user `u`.
    gains: Vec<Vec<CVec>>,
    noise: Vec<f64>,
}

impl ChannelSet {
    pub fn new(
        num_bs: usize,
        users_per_cell: usize,
        antennas: usize,
        gains: Vec<Vec<CVec>>,
        noise: Vec<f64>,
    ) -> Result<Self> {
        let users = num_bs * users_per_cell;
        if gains.len() != num_bs || gains.iter().any(|row| row.len() != users) {
            return Err(Error::Dimension(format!(
                "expected {num_bs} x {users} channel vectors"
            )));
        }
        if gains.iter().flatten().any(|h| h.len() != antennas) {
            return Err(Error::Dimension(format!(
                "channel vectors must have length {antennas}"
            )));
        }
        if noise.len() != users {
            return Err(Error::Dimension(format!("expected {users} noise powers")));
        }
        if let Some(n) = noise.iter().find(|n| !(**n > 0.0) || !n.is_finite()) {
            return Err(Error::Invalid(format!("noise power must be > 0, got {n}")));
        }
        Ok(Self {
            num_bs,
            users_per_cell,
            antennas,
            gains,
            noise,
        })
    }

    /// I.i.d. CN(0, 1) channels and the given noise on every user.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        num_bs: usize,
        users_per_cell: usize,
        antennas: usize,
        noise: f64,
    ) -> Self {
        let users = num_bs * users_per_cell;
        let gains = (0..num_bs)
            .map(|_| {
                (0..users)
                    .map(|_| linalg::complex_gaussian(rng, antennas, 1.0))
                    .collect()
            })
            .collect();
        Self::new(num_bs, users_per_cell, antennas, gains, vec![noise; users])
            .expect("consistent random dimensions")
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn users_per_cell(&self) -> usize {
        self.users_per_cell
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn num_users(&self) -> usize {
        self.num_bs * self.users_per_cell
    }

    pub fn flat(&self, u: UserId) -> usize {
        u.cell * self.users_per_cell + u.index
    }

    pub fn user(&self, flat: usize) -> UserId {
        UserId::new(flat / self.users_per_cell, flat % self.users_per_cell)
    }

    /// Channel from BS `bs` to `user`.
    pub fn h(&self, bs: usize, user: UserId) -> &CVec {
        &self.gains[bs][self.flat(user)]
    }

    pub fn h_flat(&self, bs: usize, user: usize) -> &CVec {
        &self.gains[bs][user]
    }

    /// Channel from the user's own BS.
    pub fn direct(&self, user: UserId) -> &CVec {
        self.h(user.cell, user)
    }

    pub fn noise(&self, user: UserId) -> f64 {
        self.noise[self.flat(user)]
    }

    pub fn noise_flat(&self, user: usize) -> f64 {
        self.noise[user]
    }

    pub fn noise_powers(&self) -> &[f64] {
        &self.noise
    }

    pub fn gains(&self) -> &[Vec<CVec>] {
        &self.gains
    }

    pub fn matches(&self, cfg: &NetworkConfig) -> bool {
        self.num_bs == cfg.num_bs
            && self.users_per_cell == cfg.users_per_cell
            && self.antennas == cfg.antennas
    }
}

/// One beam vector per user, flat row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamSet {
    pub num_bs: usize,
    pub users_per_cell: usize,
    pub beams: Vec<CVec>,
}

impl BeamSet {
    pub fn zeros(num_bs: usize, users_per_cell: usize, antennas: usize) -> Self {
        Self {
            num_bs,
            users_per_cell,
            beams: vec![CVec::zeros(antennas); num_bs * users_per_cell],
        }
    }

    /// Random directions, each user at `p̄_m / N`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, cfg: &NetworkConfig) -> Self {
        let n = cfg.users_per_cell;
        let beams = cfg
            .users()
            .map(|u| {
                let p = cfg.power_budget[u.cell] / n as f64;
                linalg::unit_sphere(rng, cfg.antennas) * c(p.sqrt(), 0.0)
            })
            .collect();
        Self {
            num_bs: cfg.num_bs,
            users_per_cell: n,
            beams,
        }
    }

    pub fn get(&self, u: UserId) -> &CVec {
        &self.beams[u.cell * self.users_per_cell + u.index]
    }

    pub fn cell(&self, bs: usize) -> &[CVec] {
        let n = self.users_per_cell;
        &self.beams[bs * n..(bs + 1) * n]
    }

    pub fn set_cell(&mut self, bs: usize, beams: &[CVec]) {
        let n = self.users_per_cell;
        self.beams[bs * n..(bs + 1) * n].clone_from_slice(beams);
    }

    pub fn cell_power(&self, bs: usize) -> f64 {
        self.cell(bs).iter().map(|w| w.norm_squared()).sum()
    }

    pub fn validate(&self, cfg: &NetworkConfig) -> Result<()> {
        if self.num_bs != cfg.num_bs
            || self.users_per_cell != cfg.users_per_cell
            || self.beams.len() != cfg.num_users()
            || self.beams.iter().any(|w| w.len() != cfg.antennas)
        {
            return Err(Error::Dimension(
                "beam set does not match the network".into(),
            ));
        }
        for m in 0..cfg.num_bs {
            let p = self.cell_power(m);
            if p > cfg.power_budget[m] + cfg.psd_tol {
                return Err(Error::Invalid(format!(
                    "BS {m} uses power {p} above its budget {}",
                    cfg.power_budget[m]
                )));
            }
        }
        Ok(())
    }
}

/// One transmit covariance per user, flat row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CovSet {
    pub num_bs: usize,
    pub users_per_cell: usize,
    pub covs: Vec<CMat>,
}

impl CovSet {
    pub fn zeros(num_bs: usize, users_per_cell: usize, antennas: usize) -> Self {
        Self {
            num_bs,
            users_per_cell,
            covs: vec![CMat::zeros(antennas, antennas); num_bs * users_per_cell],
        }
    }

    /// Rank-1 covariances `(p̄_m/N) v vᴴ` with `v` uniform on the unit sphere.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, cfg: &NetworkConfig) -> Self {
        beams_to_covs(&BeamSet::random(rng, cfg))
    }

    pub fn get(&self, u: UserId) -> &CMat {
        &self.covs[u.cell * self.users_per_cell + u.index]
    }

    pub fn set(&mut self, u: UserId, w: CMat) {
        let k = u.cell * self.users_per_cell + u.index;
        self.covs[k] = w;
    }

    pub fn cell(&self, bs: usize) -> &[CMat] {
        let n = self.users_per_cell;
        &self.covs[bs * n..(bs + 1) * n]
    }

    pub fn cell_trace(&self, bs: usize) -> f64 {
        self.cell(bs).iter().map(linalg::trace_re).sum()
    }

    pub fn validate(&self, cfg: &NetworkConfig) -> Result<()> {
        if self.num_bs != cfg.num_bs
            || self.users_per_cell != cfg.users_per_cell
            || self.covs.len() != cfg.num_users()
            || self
                .covs
                .iter()
                .any(|w| w.nrows() != cfg.antennas || w.ncols() != cfg.antennas)
        {
            return Err(Error::Dimension(
                "covariance set does not match the network".into(),
            ));
        }
        for (k, w) in self.covs.iter().enumerate() {
            let scale = linalg::trace_re(w).abs().max(1.0);
            let asym = linalg::fro_norm(&(w - w.adjoint()));
            if asym > cfg.psd_tol * scale {
                return Err(Error::Invalid(format!(
                    "covariance {k} is not Hermitian ({asym})"
                )));
            }
            let lo = linalg::min_eigenvalue(w);
            if lo < -cfg.psd_tol * scale {
                return Err(Error::Invalid(format!("covariance {k} is not PSD ({lo})")));
            }
        }
        for m in 0..cfg.num_bs {
            let t = self.cell_trace(m);
            if t > cfg.power_budget[m] + cfg.psd_tol * cfg.power_budget[m].max(1.0) {
                return Err(Error::Invalid(format!(
                    "BS {m} covariance trace {t} above its budget {}",
                    cfg.power_budget[m]
                )));
            }
        }
        Ok(())
    }
}

/// `W = w wᴴ` for every user.
pub fn beams_to_covs(beams: &BeamSet) -> CovSet {
    CovSet {
        num_bs: beams.num_bs,
        users_per_cell: beams.users_per_cell,
        covs: beams.beams.iter().map(linalg::outer).collect(),
    }
}

/// Rank-1 factor of a Hermitian PSD matrix.
///
/// Returns `v` with `‖v‖² = Tr(W)`, first non-negligible entry real and
/// non-negative. Fails with [`Error::Rank`] when the second eigenvalue exceeds
/// `tol · λ₁`.
pub fn cov_to_beam(w: &CMat, tol: f64) -> Result<CVec> {
    let k = w.nrows();
    let (vals, vecs) = linalg::eigh(w);
    let top = vals.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Ok(CVec::zeros(k));
    }
    if vals.len() > 1 && vals[1] > tol * top {
        let rank = vals.iter().filter(|&&v| v > tol * top).count();
        return Err(Error::Rank { rank, expected: 1 });
    }
    let power = linalg::trace_re(w).max(0.0);
    let mut v = vecs.column(0).into_owned() * c(power.sqrt(), 0.0);
    normalize_phase(&mut v);
    Ok(v)
}

/// Rotate `v` so its first entry with non-negligible magnitude is real and >= 0.
pub fn normalize_phase(v: &mut CVec) {
    let n = v.norm();
    if n == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12 * n).copied() {
        let rot = z.conj() / z.norm();
        *v *= rot;
    }
}

/// Extract beams from a set of numerically rank-1 covariances.
pub fn covs_to_beams(covs: &CovSet, tol: f64) -> Result<BeamSet> {
    let beams = covs
        .covs
        .iter()
        .map(|w| cov_to_beam(w, tol))
        .collect::<Result<_>>()?;
    Ok(BeamSet {
        num_bs: covs.num_bs,
        users_per_cell: covs.users_per_cell,
        beams,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fro_norm, numerical_rank, trace_re};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(v: Vec<C64>) -> BeamSet {
        BeamSet {
            num_bs: 1,
            users_per_cell: 1,
            beams: vec![CVec::from_vec(v)],
        }
    }

    use crate::linalg::C64;

    #[test]
    fn zero_beam_gives_zero_cov() {
        let covs = beams_to_covs(&single(vec![c(0.0, 0.0); 3]));
        assert_eq!(covs.covs[0], CMat::zeros(3, 3));
    }

    #[test]
    fn unit_vector_outer_product() {
        let covs = beams_to_covs(&single(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        let expect =
            CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(covs.covs[0], expect);
    }

    #[test]
    fn random_outer_product_trace_and_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = linalg::complex_gaussian(&mut rng, 3, 1.0);
        let covs = beams_to_covs(&BeamSet {
            num_bs: 1,
            users_per_cell: 1,
            beams: vec![w.clone()],
        });
        let cov = &covs.covs[0];
        assert!((trace_re(cov) - w.norm_squared()).abs() < 1e-12);
        assert_eq!(numerical_rank(cov, 1e-9), 1);
        for i in 0..3 {
            for j in 0..3 {
                assert!((cov[(i, j)] - w[i] * w[j].conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn diagonal_rank_one_extraction() {
        let w = CMat::from_row_slice(2, 2, &[c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let v = cov_to_beam(&w, 1e-9).unwrap();
        assert!((v[0] - c(2.0, 0.0)).norm() < 1e-12);
        assert!(v[1].norm() < 1e-12);
    }

    #[test]
    fn identity_is_rank_two() {
        let w = CMat::identity(2, 2);
        assert!(matches!(
            cov_to_beam(&w, 1e-9),
            Err(Error::Rank { rank: 2, .. })
        ));
    }

    #[test]
    fn random_beams_produce_valid_covs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cfg = NetworkConfig::new(3, 2, 4);
        let beams = BeamSet::random(&mut rng, &cfg);
        beams.validate(&cfg).unwrap();
        beams_to_covs(&beams).validate(&cfg).unwrap();
    }

    #[test]
    fn config_rejects_bad_values() {
        let mut cfg = NetworkConfig::new(2, 1, 2);
        cfg.power_budget[1] = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = NetworkConfig::new(2, 1, 2);
        cfg.user_weights[0] = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = NetworkConfig::new(2, 1, 2);
        cfg.stop_tol = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn channel_set_rejects_nonpositive_noise() {
        let gains = vec![vec![CVec::zeros(2)]];
        assert!(ChannelSet::new(1, 1, 2, gains, vec![0.0]).is_err());
    }

    fn complex_vec(k: usize) -> impl Strategy<Value = CVec> {
        prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), k)
            .prop_map(|v| CVec::from_iterator(v.len(), v.into_iter().map(|(a, b)| c(a, b))))
    }

    proptest! {
        #[test]
        fn round_trip_up_to_global_phase(w in (1usize..5).prop_flat_map(complex_vec)) {
            prop_assume!(w.norm() > 1e-3);
            let cov = linalg::outer(&w);
            let v = cov_to_beam(&cov, 1e-9).unwrap();
            prop_assert!((v.norm_squared() - trace_re(&cov)).abs() <= 1e-9 * trace_re(&cov));
            prop_assert!(fro_norm(&(linalg::outer(&v) - &cov)) <= 1e-9 * trace_re(&cov));
            // v equals w after removing w's own phase convention
            let mut w_norm = w.clone();
            normalize_phase(&mut w_norm);
            prop_assert!((v - w_norm).norm() <= 1e-8 * w.norm());
        }
    }
}
