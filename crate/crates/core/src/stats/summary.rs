use serde::{Deserialize, Serialize};

use crate::dynamics::trajectory::{Outcome, TrajectorySummary};
use crate::units::PhysicalParams;

/// Run length in the units that matter: atomic time, seconds, orbits and
/// damping times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub z: f64,
    pub t_total: f64,
    pub t_total_seconds: f64,
    /// `1 / beta^2`.
    pub t_damp: f64,
    pub t_damp_seconds: f64,
    pub n_orbit: f64,
    /// `t_total / t_damp`.
    pub n_damp: f64,
    pub ionised: bool,
    pub pushes: u64,
    pub cutoff_updates: u64,
}

impl RunSummary {
    pub fn from_time(params: &PhysicalParams, t_total: f64, n_orbit: f64) -> Self {
        let t_damp = params.damping_time();
        let tau0 = params.tau0_seconds();
        Self {
            z: params.z,
            t_total,
            t_total_seconds: t_total * tau0,
            t_damp,
            t_damp_seconds: t_damp * tau0,
            n_orbit,
            n_damp: t_total / t_damp,
            ionised: false,
            pushes: 0,
            cutoff_updates: 0,
        }
    }
}

pub fn run_summary(trajectory: &TrajectorySummary, params: &PhysicalParams) -> RunSummary {
    RunSummary {
        ionised: trajectory.outcome == Outcome::Ionised,
        pushes: trajectory.pushes,
        cutoff_updates: trajectory.cutoff_updates,
        ..RunSummary::from_time(params, trajectory.t_final, trajectory.orbits)
    }
}

/// Keep `digits` significant figures, dropping the rest.
pub fn truncate_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).trunc() / scale
}

/// Round to `digits` significant figures.
pub fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}
