//! Per-iteration records of the coordination algorithms.

use std::time::Duration;

use serde::Serialize;

use crate::model::{BeamSet, CovSet};

/// One outer iteration.
///
/// Equality ignores `wall_time`, so two runs from the same inputs compare
/// equal.
#[derive(Clone, Debug, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// The updating BS, or `None` when every BS updated at once.
    pub active_bs: Option<usize>,
    /// Sum rate after the iteration.
    pub sum_rate: f64,
    /// Bound of the updating BS at the previous point and at the update.
    pub bound_before: Option<f64>,
    pub bound_after: Option<f64>,
    /// Backhaul information units spent in this iteration.
    pub info_units: u64,
    pub accepted: bool,
    /// Relative stationarity residual of the accepted update, when defined.
    pub residual: Option<f64>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl PartialEq for IterationRecord {
    fn eq(&self, other: &Self) -> bool {
        self.iter == other.iter
            && self.active_bs == other.active_bs
            && self.sum_rate.to_bits() == other.sum_rate.to_bits()
            && self.bound_before.map(f64::to_bits) == other.bound_before.map(f64::to_bits)
            && self.bound_after.map(f64::to_bits) == other.bound_after.map(f64::to_bits)
            && self.info_units == other.info_units
            && self.accepted == other.accepted
            && self.residual.map(f64::to_bits) == other.residual.map(f64::to_bits)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    /// Sum rate of the initial point.
    pub initial_sum_rate: f64,
    pub records: Vec<IterationRecord>,
    pub final_covs: CovSet,
    pub final_beams: Option<BeamSet>,
    pub converged: bool,
    pub kkt_residual: Option<f64>,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn info_units(&self) -> u64 {
        self.records.iter().map(|r| r.info_units).sum()
    }

    /// Initial rate followed by the rate after each iteration.
    pub fn sum_rates(&self) -> Vec<f64> {
        std::iter::once(self.initial_sum_rate)
            .chain(self.records.iter().map(|r| r.sum_rate))
            .collect()
    }

    pub fn final_sum_rate(&self) -> f64 {
        self.records
            .last()
            .map_or(self.initial_sum_rate, |r| r.sum_rate)
    }

    /// Largest drop between consecutive rates, zero for a nondecreasing trace.
    pub fn max_decrease(&self) -> f64 {
        self.sum_rates()
            .windows(2)
            .map(|p| p[0] - p[1])
            .fold(0.0, f64::max)
    }
}

/// Stopping rule: the sum rate moved less than `tol` over the last `window`
/// iterations.
pub(crate) fn window_converged(rates: &[f64], window: usize, tol: f64) -> bool {
    let n = rates.len();
    n > window && (rates[n - 1] - rates[n - 1 - window]).abs() < tol
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(iter: usize, rate: f64, units: u64, ms: u64) -> IterationRecord {
        IterationRecord {
            iter,
            active_bs: Some(0),
            sum_rate: rate,
            bound_before: None,
            bound_after: None,
            info_units: units,
            accepted: true,
            residual: None,
            wall_time: Duration::from_millis(ms),
        }
    }

    #[test]
    fn equality_ignores_wall_time() {
        assert_eq!(rec(0, 1.0, 1, 3), rec(0, 1.0, 1, 900));
        assert_ne!(rec(0, 1.0, 1, 3), rec(0, 1.5, 1, 3));
    }

    #[test]
    fn summaries() {
        let t = RunTrace {
            initial_sum_rate: 0.5,
            records: vec![rec(0, 1.0, 4, 0), rec(1, 0.9, 4, 0), rec(2, 1.2, 4, 0)],
            final_covs: CovSet::zeros(1, 1, 1),
            final_beams: None,
            converged: true,
            kkt_residual: None,
        };
        assert_eq!(t.info_units(), 12);
        assert_eq!(t.iterations(), 3);
        assert_eq!(t.sum_rates(), vec![0.5, 1.0, 0.9, 1.2]);
        assert!((t.max_decrease() - 0.1).abs() < 1e-12);
        assert_eq!(t.final_sum_rate(), 1.2);
    }

    #[test]
    fn window_rule() {
        assert!(!window_converged(&[1.0, 1.0], 2, 0.1));
        assert!(window_converged(&[0.0, 1.0, 1.0, 1.05], 2, 0.1));
        assert!(!window_converged(&[0.0, 1.0, 1.0, 1.5], 2, 0.1));
    }
}
