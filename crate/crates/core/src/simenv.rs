//! Network layouts, path loss with log-normal shadowing, and noise.
//!
//! BSs sit on a hexagonal grid with inter-site distance `ISD`; axial cell
//! `(q, r)` is at `ISD · (q + r/2, r·√3/2)`. With `M = 4` the coordinated
//! cluster is the rhombus `{(0,0), (1,0), (0,1), (1,1)}` and its ring of ten
//! neighbours transmits as uncoordinated interference, 14 BSs in total. For
//! other `M` the grid is the smallest hexagonal disc of radius ≥ 2 leaving at
//! least ten uncoordinated cells, with the `M` cells closest to the centre
//! coordinated (ties broken by angle); `M = 9` gives 19 BSs.
//!
//! Every entry of a channel vector is `CN(0, (d₀/d)^α · L)` with
//! `10 log10 L ~ N(0, s²)` drawn once per BS-user link. Uncoordinated BSs add
//! their received power to the thermal noise.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CVec};
use crate::model::ChannelSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FadingParams {
    pub pathloss_ref_distance: f64,
    pub pathloss_exponent: f64,
    pub shadowing_std_db: f64,
    pub snr_db: f64,
    /// Power that the SNR is defined against: `σ² = p_ref / 10^(SNR/10)`.
    pub reference_power: f64,
    /// Transmit power of every uncoordinated BS.
    pub interferer_power: f64,
}

impl Default for FadingParams {
    fn default() -> Self {
        Self {
            pathloss_ref_distance: 200.0,
            pathloss_exponent: 3.5,
            shadowing_std_db: 8.0,
            snr_db: 10.0,
            reference_power: 1.0,
            interferer_power: 1.0,
        }
    }
}

impl FadingParams {
    pub fn with_snr(snr_db: f64) -> Self {
        Self {
            snr_db,
            ..Self::default()
        }
    }

    pub fn thermal_noise(&self) -> f64 {
        self.reference_power / 10f64.powf(self.snr_db / 10.0)
    }

    /// Mean path gain `(d₀/d)^α`, with `d` clamped to at least 1 m.
    pub fn path_gain(&self, distance: f64) -> f64 {
        (self.pathloss_ref_distance / distance.max(1.0)).powf(self.pathloss_exponent)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pathloss_exponent > 2.0) {
            return Err(Error::Invalid(format!(
                "path-loss exponent must be > 2, got {}",
                self.pathloss_exponent
            )));
        }
        if !(self.shadowing_std_db >= 0.0) {
            return Err(Error::Invalid("shadowing std must be >= 0".into()));
        }
        if !(self.pathloss_ref_distance > 0.0)
            || !(self.reference_power > 0.0)
            || !(self.interferer_power >= 0.0)
        {
            return Err(Error::Invalid(
                "reference distance and powers must be positive".into(),
            ));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Invalid("SNR must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Coordinated cluster surrounded by uncoordinated interferers.
    #[default]
    Hex,
    /// Only the coordinated cells, no outside interference.
    Isolated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologyParams {
    pub num_bs: usize,
    pub users_per_cell: usize,
    pub inter_site_distance: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub layout: Layout,
}

impl Default for TopologyParams {
    fn default() -> Self {
        Self {
            num_bs: 4,
            users_per_cell: 1,
            inter_site_distance: 2000.0,
            d_min: 200.0,
            d_max: 1000.0,
            layout: Layout::Hex,
        }
    }
}

impl TopologyParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_bs == 0 || self.users_per_cell == 0 {
            return Err(Error::Invalid(
                "num_bs and users_per_cell must be >= 1".into(),
            ));
        }
        if !(self.inter_site_distance > 0.0) {
            return Err(Error::Invalid("inter-site distance must be > 0".into()));
        }
        if !(self.d_min >= 0.0) || !(self.d_max >= self.d_min) || !self.d_max.is_finite() {
            return Err(Error::Invalid(format!(
                "bad placement annulus [{}, {}]",
                self.d_min, self.d_max
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub inter_site_distance: f64,
    pub bs_positions: Vec<[f64; 2]>,
    /// Indices into `bs_positions`; cell `m` is served by `coordinated[m]`.
    pub coordinated: Vec<usize>,
    pub users_per_cell: usize,
    /// Flat row-major over `(cell, index)`.
    pub user_positions: Vec<[f64; 2]>,
}

impl Topology {
    pub fn num_bs(&self) -> usize {
        self.coordinated.len()
    }

    pub fn uncoordinated(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.bs_positions.len()).filter(|w| !self.coordinated.contains(w))
    }

    pub fn distance(&self, bs_index: usize, user: usize) -> f64 {
        dist(self.bs_positions[bs_index], self.user_positions[user])
    }

    /// Distance from user `user` to the BS of cell `cell`.
    pub fn cell_distance(&self, cell: usize, user: usize) -> f64 {
        self.distance(self.coordinated[cell], user)
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn axial_position(q: i32, r: i32, isd: f64) -> [f64; 2] {
    let (q, r) = (q as f64, r as f64);
    [isd * (q + r / 2.0), isd * r * 3f64.sqrt() / 2.0]
}

fn hex_distance(q: i32, r: i32) -> i32 {
    (q.abs() + r.abs() + (q + r).abs()) / 2
}

const NEIGHBOURS: [(i32, i32); 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)];

/// Axial cells of the grid and the indices of the coordinated ones.
fn grid(num_bs: usize, layout: Layout) -> (Vec<(i32, i32)>, Vec<usize>) {
    let cluster: Vec<(i32, i32)> = if num_bs == 4 {
        vec![(0, 0), (1, 0), (0, 1), (1, 1)]
    } else {
        let mut radius = 2;
        while (3 * radius * (radius + 1) + 1) < num_bs as i32 + 10 {
            radius += 1;
        }
        let mut disc = Vec::new();
        for q in -radius..=radius {
            for r in -radius..=radius {
                if hex_distance(q, r) <= radius {
                    disc.push((q, r));
                }
            }
        }
        disc.sort_by(|a, b| {
            let key = |&(q, r): &(i32, i32)| {
                let [x, y] = axial_position(q, r, 1.0);
                (hex_distance(q, r), y.atan2(x).rem_euclid(2.0 * PI))
            };
            let (da, aa) = key(a);
            let (db, ab) = key(b);
            da.cmp(&db).then(aa.total_cmp(&ab))
        });
        if layout == Layout::Isolated {
            disc.truncate(num_bs);
        }
        return (disc, (0..num_bs).collect());
    };
    let mut cells = cluster.clone();
    if layout == Layout::Hex {
        for &(q, r) in &cluster {
            for (dq, dr) in NEIGHBOURS {
                let n = (q + dq, r + dr);
                if !cells.contains(&n) {
                    cells.push(n);
                }
            }
        }
    }
    (cells, (0..4).collect())
}

pub fn generate_topology(params: &TopologyParams, seed: u64) -> Result<Topology> {
    generate_topology_with(params, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn generate_topology_with<R: Rng + ?Sized>(
    params: &TopologyParams,
    rng: &mut R,
) -> Result<Topology> {
    params.validate()?;
    let isd = params.inter_site_distance;
    let (cells, coordinated) = grid(params.num_bs, params.layout);
    let bs_positions: Vec<[f64; 2]> = cells
        .iter()
        .map(|&(q, r)| axial_position(q, r, isd))
        .collect();
    let (lo, hi) = (params.d_min * params.d_min, params.d_max * params.d_max);
    let mut user_positions = Vec::with_capacity(params.num_bs * params.users_per_cell);
    for &b in &coordinated {
        let [x, y] = bs_positions[b];
        for _ in 0..params.users_per_cell {
            let r = if hi > lo {
                rng.random_range(lo..hi).sqrt()
            } else {
                params.d_min
            };
            let theta = rng.random_range(0.0..2.0 * PI);
            user_positions.push([x + r * theta.cos(), y + r * theta.sin()]);
        }
    }
    Ok(Topology {
        inter_site_distance: isd,
        bs_positions,
        coordinated,
        users_per_cell: params.users_per_cell,
        user_positions,
    })
}

fn shadowing<R: Rng + ?Sized>(rng: &mut R, fading: &FadingParams) -> f64 {
    if fading.shadowing_std_db == 0.0 {
        return 1.0;
    }
    let db: f64 = Normal::new(0.0, fading.shadowing_std_db)
        .expect("validated std")
        .sample(rng);
    10f64.powf(db / 10.0)
}

pub fn sample_channels(
    topo: &Topology,
    fading: &FadingParams,
    antennas: usize,
    seed: u64,
) -> Result<ChannelSet> {
    sample_channels_with(topo, fading, antennas, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn sample_channels_with<R: Rng + ?Sized>(
    topo: &Topology,
    fading: &FadingParams,
    antennas: usize,
    rng: &mut R,
) -> Result<ChannelSet> {
    fading.validate()?;
    if antennas == 0 {
        return Err(Error::Invalid("antennas must be >= 1".into()));
    }
    let users = topo.user_positions.len();
    let mut gains: Vec<Vec<CVec>> = Vec::with_capacity(topo.num_bs());
    for &b in &topo.coordinated {
        let row = (0..users)
            .map(|u| {
                let var = fading.path_gain(topo.distance(b, u)) * shadowing(rng, fading);
                linalg::complex_gaussian(rng, antennas, var)
            })
            .collect();
        gains.push(row);
    }
    let sigma2 = fading.thermal_noise();
    let outside: Vec<usize> = topo.uncoordinated().collect();
    let noise = (0..users)
        .map(|u| {
            sigma2
                + outside
                    .iter()
                    .map(|&w| {
                        fading.path_gain(topo.distance(w, u))
                            * shadowing(rng, fading)
                            * fading.interferer_power
                    })
                    .sum::<f64>()
        })
        .collect();
    ChannelSet::new(topo.num_bs(), topo.users_per_cell, antennas, gains, noise)
}

/// Serializable channel realization: `gains[q][u][k] = [re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSnapshot {
    pub num_bs: usize,
    pub users_per_cell: usize,
    pub antennas: usize,
    pub gains: Vec<Vec<Vec<[f64; 2]>>>,
    pub noise: Vec<f64>,
}

impl ChannelSnapshot {
    pub fn from_channels(ch: &ChannelSet) -> Self {
        Self {
            num_bs: ch.num_bs(),
            users_per_cell: ch.users_per_cell(),
            antennas: ch.antennas(),
            gains: ch
                .gains()
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|h| h.iter().map(|z| [z.re, z.im]).collect())
                        .collect()
                })
                .collect(),
            noise: ch.noise_powers().to_vec(),
        }
    }

    pub fn to_channels(&self) -> Result<ChannelSet> {
        let gains = self
            .gains
            .iter()
            .map(|row| {
                row.iter()
                    .map(|h| CVec::from_iterator(h.len(), h.iter().map(|p| c(p[0], p[1]))))
                    .collect()
            })
            .collect();
        ChannelSet::new(
            self.num_bs,
            self.users_per_cell,
            self.antennas,
            gains,
            self.noise.clone(),
        )
    }
}

/// Topology plus one channel draw, for regression fixtures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub topology: Topology,
    pub fading: FadingParams,
    pub channels: ChannelSnapshot,
}
