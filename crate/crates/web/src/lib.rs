//! Browser bindings for the cobeam demo page.
//!
//! Each exported function takes plain numbers and returns a JSON string the
//! page draws from. The `*_view` functions hold the logic and run natively
//! in tests.

use cobeam::baselines::{matched_filter, run_icbf_variant, zero_forcing};
use cobeam::harness::{trial_instance, Algorithm, ExperimentSpec, NetworkSpec};
use cobeam::lbm::LbmProblem;
use cobeam::linalg::{c, random_psd, trace_re, CMat};
use cobeam::rates::{per_bs_bound, sum_rate, sum_rate_beams};
use cobeam::sbf::run_sbf;
use cobeam::{ChannelSet, CovSet, NetworkConfig, Result, RunTrace, UserId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct TraceView {
    /// Sum rate before the first update, then after each iteration.
    pub rates: Vec<f64>,
    /// Backhaul units spent up to each entry of `rates`.
    pub units: Vec<u64>,
    pub converged: bool,
}

impl From<&RunTrace> for TraceView {
    fn from(t: &RunTrace) -> Self {
        let units = std::iter::once(0)
            .chain(t.records.iter().scan(0, |acc, r| {
                *acc += r.info_units;
                Some(*acc)
            }))
            .collect();
        Self {
            rates: t.sum_rates(),
            units,
            converged: t.converged,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SimulationView {
    pub bs_positions: Vec<[f64; 2]>,
    pub coordinated: Vec<usize>,
    pub user_positions: Vec<[f64; 2]>,
    pub users_per_cell: usize,
    pub sbf: TraceView,
    pub icbf: TraceView,
    pub zf: Option<f64>,
    pub mf: f64,
}

/// One drop of the hex network, with S-BF and ICBF traces and both
/// uncoordinated baselines. ZF is `None` when a cell has more users than
/// antennas.
pub fn simulation_view(
    num_bs: usize,
    users_per_cell: usize,
    antennas: usize,
    snr_db: f64,
    seed: u64,
) -> Result<SimulationView> {
    let mut spec = ExperimentSpec::new(
        "demo",
        vec![Algorithm::Sbf, Algorithm::Icbf],
        vec![snr_db],
        NetworkSpec::new(num_bs, users_per_cell, antennas),
    );
    spec.seed = seed;
    spec.trials = 1;
    spec.validate()?;
    let cfg = spec.network_config();
    let inst = trial_instance(&spec, snr_db, 0)?;
    let sbf = run_sbf(&inst.channels, &cfg, &inst.init)?;
    let icbf = run_icbf_variant(&inst.channels, &cfg, &inst.init)?;
    let zf = zero_forcing(&inst.channels, &cfg)
        .ok()
        .map(|b| sum_rate_beams(&inst.channels, &b, &cfg.user_weights));
    let mf = sum_rate_beams(
        &inst.channels,
        &matched_filter(&inst.channels, &cfg)?,
        &cfg.user_weights,
    );
    Ok(SimulationView {
        bs_positions: inst.topology.bs_positions,
        coordinated: inst.topology.coordinated,
        user_positions: inst.topology.user_positions,
        users_per_cell,
        sbf: (&sbf).into(),
        icbf: (&icbf).into(),
        zf,
        mf,
    })
}

#[derive(Debug, Serialize)]
pub struct PowerCurveView {
    /// Multipliers on a log grid.
    pub mu: Vec<f64>,
    /// `Tr W*(μ)` at each multiplier.
    pub power: Vec<f64>,
    pub budget: f64,
    pub mu_star: f64,
    pub power_used: f64,
    pub objective: f64,
    pub iterations: usize,
}

fn demo_network(seed: u64, num_bs: usize, antennas: usize) -> (ChannelSet, NetworkConfig, CovSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = NetworkConfig::new(num_bs, 1, antennas);
    let ch = ChannelSet::random(&mut rng, num_bs, 1, antennas, 0.1);
    let mut covs = CovSet::zeros(num_bs, 1, antennas);
    for u in cfg.users() {
        let tr = rng.random_range(0.2..1.0);
        covs.set(u, random_psd(&mut rng, antennas, 1, tr));
    }
    (ch, cfg, covs)
}

/// Transmit power of the per-BS bound maximizer as the power price varies,
/// plus the price the bisection settles on for `budget`.
pub fn power_curve_view(
    seed: u64,
    antennas: usize,
    budget: f64,
    points: usize,
) -> Result<PowerCurveView> {
    if antennas == 0 || points < 2 || !(budget > 0.0) {
        return Err(cobeam::Error::Invalid(
            "need antennas >= 1, points >= 2 and budget > 0".into(),
        ));
    }
    let (ch, cfg, covs) = demo_network(seed, 3, antennas);
    let prob = LbmProblem::new(&ch, &covs, 0, &cfg.user_weights)?;
    let sol = prob.solve(budget, cfg.bisection_tol * budget)?;
    let (lo, hi) = (-3.0f64, 2.0f64);
    let mut mu = Vec::with_capacity(points);
    let mut power = Vec::with_capacity(points);
    for i in 0..points {
        let m = 10f64.powf(lo + (hi - lo) * i as f64 / (points - 1) as f64);
        mu.push(m);
        power.push(trace_re(&prob.solve_fixed_mu(m)?));
    }
    Ok(PowerCurveView {
        mu,
        power,
        budget,
        mu_star: sol.mu_star,
        power_used: sol.power_used,
        objective: prob.objective(&sol.w_star),
        iterations: sol.iterations,
    })
}

#[derive(Debug, Serialize)]
pub struct BoundSliceView {
    pub t: Vec<f64>,
    /// Sum rate along the segment.
    pub rate: Vec<f64>,
    /// Per-BS lower bound built at `t = 0`.
    pub bound: Vec<f64>,
}

/// Sum rate and its per-BS lower bound along the segment from the current
/// covariance of BS 0 towards a random feasible one.
pub fn bound_slice_view(seed: u64, antennas: usize, points: usize) -> Result<BoundSliceView> {
    if antennas == 0 || points < 2 {
        return Err(cobeam::Error::Invalid(
            "need antennas >= 1 and points >= 2".into(),
        ));
    }
    let (ch, cfg, covs) = demo_network(seed, 3, antennas);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let hat = covs.get(UserId::new(0, 0)).clone();
    let far = random_psd(&mut rng, antennas, antennas, 1.0);
    let w = &cfg.user_weights;
    let mut view = BoundSliceView {
        t: Vec::new(),
        rate: Vec::new(),
        bound: Vec::new(),
    };
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        let wt: CMat = &hat * c(1.0 - t, 0.0) + &far * c(t, 0.0);
        let mut moved = covs.clone();
        moved.set(UserId::new(0, 0), wt.clone());
        view.t.push(t);
        view.rate.push(sum_rate(&ch, &moved, w));
        view.bound
            .push(per_bs_bound(&ch, std::slice::from_ref(&wt), &covs, 0, w));
    }
    Ok(view)
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn simulate(
    num_bs: usize,
    users_per_cell: usize,
    antennas: usize,
    snr_db: f64,
    seed: u64,
) -> std::result::Result<String, JsError> {
    to_js(simulation_view(
        num_bs,
        users_per_cell,
        antennas,
        snr_db,
        seed,
    ))
}

#[wasm_bindgen]
pub fn power_curve(
    seed: u64,
    antennas: usize,
    budget: f64,
    points: usize,
) -> std::result::Result<String, JsError> {
    to_js(power_curve_view(seed, antennas, budget, points))
}

#[wasm_bindgen]
pub fn bound_slice(
    seed: u64,
    antennas: usize,
    points: usize,
) -> std::result::Result<String, JsError> {
    to_js(bound_slice_view(seed, antennas, points))
}
