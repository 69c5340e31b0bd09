//! Monte Carlo driver.
//!
//! Work items are `(snr, trial)` pairs. Each trial draws its topology, fading
//! and starting beams from its own counter-derived ChaCha streams of the
//! master seed, so results do not depend on scheduling or pool width, and the
//! same trial sees the same users and fading at every SNR.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{matched_filter, run_icbf_variant, zero_forcing};
use crate::error::{Error, Result};
use crate::harness::config::{Algorithm, ExperimentSpec};
use crate::model::{beams_to_covs, BeamSet, ChannelSet};
use crate::rates::sum_rate_beams;
use crate::sbf::run_sbf;
use crate::simenv::{generate_topology_with, sample_channels_with, Topology};
use crate::ssca::run_ssca;
use crate::trace::RunTrace;

const STREAM_TOPOLOGY: u64 = 0;
const STREAM_CHANNELS: u64 = 1;
const STREAM_INIT: u64 = 2;
const STREAMS_PER_TRIAL: u64 = 4;

/// Random stream `purpose` of trial `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 * STREAMS_PER_TRIAL + purpose);
    rng
}

/// Everything one trial needs at one SNR.
#[derive(Clone, Debug)]
pub struct TrialInstance {
    pub topology: Topology,
    pub channels: ChannelSet,
    pub init: BeamSet,
}

pub fn trial_instance(spec: &ExperimentSpec, snr_db: f64, trial: usize) -> Result<TrialInstance> {
    let topology = generate_topology_with(
        &spec.topology_params(),
        &mut trial_rng(spec.seed, trial, STREAM_TOPOLOGY),
    )?;
    let fading = spec.fading.at_snr(snr_db);
    let channels = sample_channels_with(
        &topology,
        &fading,
        spec.network.antennas,
        &mut trial_rng(spec.seed, trial, STREAM_CHANNELS),
    )?;
    let init = BeamSet::random(
        &mut trial_rng(spec.seed, trial, STREAM_INIT),
        &spec.network_config(),
    );
    Ok(TrialInstance {
        topology,
        channels,
        init,
    })
}

/// Backhaul information units of a run: one per sequential update, `M` per
/// simultaneous round.
pub fn count_info_units(trace: &RunTrace) -> u64 {
    trace.info_units()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub sum_rate: f64,
    pub iterations: usize,
    pub info_units: u64,
}

/// Full trace of one coordinated algorithm on one trial.
pub fn trace_trial(
    spec: &ExperimentSpec,
    algorithm: Algorithm,
    snr_db: f64,
    trial: usize,
) -> Result<RunTrace> {
    let inst = trial_instance(spec, snr_db, trial)?;
    run_traced(spec, algorithm, &inst)
}

fn run_traced(
    spec: &ExperimentSpec,
    algorithm: Algorithm,
    inst: &TrialInstance,
) -> Result<RunTrace> {
    let cfg = spec.network_config();
    match algorithm {
        Algorithm::Ssca => run_ssca(&inst.channels, &cfg, &beams_to_covs(&inst.init)),
        Algorithm::Sbf => run_sbf(&inst.channels, &cfg, &inst.init),
        Algorithm::Icbf => run_icbf_variant(&inst.channels, &cfg, &inst.init),
        Algorithm::Zf | Algorithm::Mf => Err(Error::Invalid(format!(
            "`{algorithm}` is not iterative and has no trace"
        ))),
    }
}

pub fn run_algorithm(
    spec: &ExperimentSpec,
    algorithm: Algorithm,
    inst: &TrialInstance,
) -> Result<TrialOutcome> {
    let cfg = spec.network_config();
    let fixed = |beams: BeamSet| TrialOutcome {
        sum_rate: sum_rate_beams(&inst.channels, &beams, &cfg.user_weights),
        iterations: 0,
        info_units: 0,
    };
    Ok(match algorithm {
        Algorithm::Zf => fixed(zero_forcing(&inst.channels, &cfg)?),
        Algorithm::Mf => fixed(matched_filter(&inst.channels, &cfg)?),
        _ => {
            let trace = run_traced(spec, algorithm, inst)?;
            TrialOutcome {
                sum_rate: trace.final_sum_rate(),
                iterations: trace.iterations(),
                info_units: count_info_units(&trace),
            }
        }
    })
}

/// Per-trial outcomes, indexed `[snr][trial][algorithm]` in spec order.
pub fn run_trials(
    spec: &ExperimentSpec,
    parallel: Option<usize>,
) -> Result<Vec<Vec<Vec<TrialOutcome>>>> {
    spec.validate()?;
    let items: Vec<(usize, usize)> = (0..spec.snr_grid_db.len())
        .flat_map(|s| (0..spec.trials).map(move |t| (s, t)))
        .collect();
    let work = |&(s, t): &(usize, usize)| -> Result<Vec<TrialOutcome>> {
        let inst = trial_instance(spec, spec.snr_grid_db[s], t)?;
        spec.algorithms
            .iter()
            .map(|&a| run_algorithm(spec, a, &inst))
            .collect()
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = parallel {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let flat: Vec<Vec<TrialOutcome>> =
        pool.install(|| items.par_iter().map(work).collect::<Result<_>>())?;
    let mut out = Vec::with_capacity(spec.snr_grid_db.len());
    let mut it = flat.into_iter();
    for _ in 0..spec.snr_grid_db.len() {
        out.push(it.by_ref().take(spec.trials).collect());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub algorithm: String,
    pub snr_db: f64,
    pub mean_sum_rate: f64,
    pub rate_stderr: f64,
    pub mean_iterations: f64,
    pub mean_info_units: f64,
    pub trials: usize,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation over `√n`; zero for a single trial.
fn stderr(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Aggregate per-trial outcomes into rows ordered by algorithm, then SNR.
pub fn aggregate(spec: &ExperimentSpec, outcomes: &[Vec<Vec<TrialOutcome>>]) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for (a, alg) in spec.algorithms.iter().enumerate() {
        for (s, &snr) in spec.snr_grid_db.iter().enumerate() {
            let trials = &outcomes[s];
            let rates: Vec<f64> = trials.iter().map(|t| t[a].sum_rate).collect();
            let iters: Vec<f64> = trials.iter().map(|t| t[a].iterations as f64).collect();
            let units: Vec<f64> = trials.iter().map(|t| t[a].info_units as f64).collect();
            rows.push(ResultRow {
                algorithm: alg.name().to_string(),
                snr_db: snr,
                mean_sum_rate: mean(&rates),
                rate_stderr: stderr(&rates),
                mean_iterations: mean(&iters),
                mean_info_units: mean(&units),
                trials: trials.len(),
            });
        }
    }
    rows
}

pub fn run_experiment(spec: &ExperimentSpec, parallel: Option<usize>) -> Result<Vec<ResultRow>> {
    Ok(aggregate(spec, &run_trials(spec, parallel)?))
}
