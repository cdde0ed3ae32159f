//! Velocity kicks that lift a deeply bound electron back to a target energy.

use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SedError};
use crate::units::{hamiltonian, ElectronState, PhysicalParams, RelativisticTerms, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PushBranch {
    Parallel,
    Perpendicular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushOutcome {
    pub state: ElectronState,
    pub branch: PushBranch,
    /// Size of the velocity increment.
    pub magnitude: f64,
}

/// Kick the velocity along `v` or along a random direction perpendicular to
/// it (probability 1/2 each), with the size solved so the energy becomes
/// `target`. A zero velocity is kicked along an isotropic direction.
pub fn energy_push<R: Rng + ?Sized>(
    state: &ElectronState,
    params: &PhysicalParams,
    terms: RelativisticTerms,
    rng: &mut R,
    target: f64,
) -> Result<PushOutcome> {
    let e0 = hamiltonian(state, params, terms)?;
    if !(e0 < target) {
        return Err(SedError::Config(format!("push needs energy below the target {target}, have {e0}")));
    }
    let parallel = rng.random_bool(0.5);
    let speed = state.v.norm();
    let direction = if speed == 0.0 {
        Vec3::from(UnitSphere.sample(rng))
    } else if parallel {
        state.v / speed
    } else {
        random_perpendicular(&(state.v / speed), rng)
    };
    let energy = |lambda: f64| {
        let kicked = ElectronState { v: state.v + direction * lambda, ..*state };
        hamiltonian(&kicked, params, terms)
    };
    // bracket, then bisect to the last representable step
    let mut hi = 1.0f64.max(speed);
    while energy(hi)? < target {
        hi *= 2.0;
        if hi > 1e8 {
            return Err(SedError::Config("push target unreachable".into()));
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if energy(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (e_lo, e_hi) = (energy(lo)?, energy(hi)?);
    let lambda = if (e_lo - target).abs() <= (e_hi - target).abs() { lo } else { hi };
    let branch = if parallel { PushBranch::Parallel } else { PushBranch::Perpendicular };
    Ok(PushOutcome {
        state: ElectronState { v: state.v + direction * lambda, ..*state },
        branch,
        magnitude: lambda,
    })
}

/// Uniform direction in the plane perpendicular to the unit vector `n`.
fn random_perpendicular<R: Rng + ?Sized>(n: &Vec3, rng: &mut R) -> Vec3 {
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = n.cross(&helper).normalize();
    let e2 = n.cross(&e1);
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    e1 * phi.cos() + e2 * phi.sin()
}
