//! Regression snapshots: one trial's network plus every algorithm's final
//! sum rate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::ExperimentSpec;
use crate::harness::experiment::{run_algorithm, trial_instance};
use crate::simenv::{ChannelSnapshot, Snapshot};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub spec: ExperimentSpec,
    pub snr_db: f64,
    pub trial: usize,
    pub snapshot: Snapshot,
    pub sum_rates: BTreeMap<String, f64>,
}

/// Fixture for trial `trial` at the first SNR of the grid.
pub fn make_fixture(spec: &ExperimentSpec, trial: usize) -> Result<Fixture> {
    spec.validate()?;
    let snr_db = spec.snr_grid_db[0];
    let inst = trial_instance(spec, snr_db, trial)?;
    let mut sum_rates = BTreeMap::new();
    for &a in &spec.algorithms {
        sum_rates.insert(
            a.name().to_string(),
            run_algorithm(spec, a, &inst)?.sum_rate,
        );
    }
    Ok(Fixture {
        spec: spec.clone(),
        snr_db,
        trial,
        snapshot: Snapshot {
            topology: inst.topology,
            fading: spec.fading.at_snr(snr_db),
            channels: ChannelSnapshot::from_channels(&inst.channels),
        },
        sum_rates,
    })
}

/// Regenerate a fixture from its own spec and report every mismatch.
pub fn verify_fixture(fixture: &Fixture, rate_tol: f64) -> Result<()> {
    let fresh = make_fixture(&fixture.spec, fixture.trial)?;
    let mut problems = Vec::new();
    if fresh.snapshot != fixture.snapshot {
        problems.push("network snapshot differs".to_string());
    }
    for (name, &want) in &fixture.sum_rates {
        match fresh.sum_rates.get(name) {
            Some(&got) if (got - want).abs() <= rate_tol * want.abs().max(1.0) => {}
            Some(&got) => problems.push(format!("{name}: sum rate {got} vs recorded {want}")),
            None => problems.push(format!("{name}: missing")),
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(format!(
            "fixture mismatch: {}",
            problems.join("; ")
        )))
    }
}
