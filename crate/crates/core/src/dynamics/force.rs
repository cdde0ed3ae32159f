//! Equations of motion.
//!
//! ```text
//! a = -r/r^3 - beta (E + F v) + beta^2 jerk
//!     + eps (v^2 r + 2 (v.r) v) / (2 r^3)
//!     + eps/(2 r^3) (2 S x v - 3 (r.v)/r^2 S x r + 3 (S.L)/r^2 r)
//! dS/dt = eps/2 (L x S) / r^3
//! ```
//!
//! with `eps = Z^2 alpha^2`, `L = r x v`, and the radiation reaction reduced
//! to `jerk = d/dt(-r/r^3) = -v/r^3 + 3 (r.v) r / r^5`. The `S x v` weight of
//! 2 follows from Hamilton's equations for the spin-orbit energy; it is what
//! keeps the canonical total angular momentum conserved.

use crate::dynamics::config::Toggles;
use crate::error::Result;
use crate::field::eval::FieldSample;
use crate::units::{ElectronState, PhysicalParams, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceModel {
    pub params: PhysicalParams,
    pub toggles: Toggles,
}

impl ForceModel {
    pub fn new(params: PhysicalParams, toggles: Toggles) -> Self {
        Self { params, toggles }
    }

    /// Whether the acceleration depends on the stochastic field.
    pub fn needs_field(&self) -> bool {
        self.toggles.noise
    }

    pub fn acceleration(&self, state: &ElectronState, field: &FieldSample) -> Result<Vec3> {
        let rn = state.check_floor(&self.params)?;
        Ok(self.acceleration_at(&state.r, &state.v, &state.s, rn, field))
    }

    #[inline]
    pub(crate) fn acceleration_at(&self, r: &Vec3, v: &Vec3, s: &Vec3, rn: f64, field: &FieldSample) -> Vec3 {
        let p = &self.params;
        let tg = &self.toggles;
        let inv_r2 = 1.0 / (rn * rn);
        let inv_r3 = inv_r2 / rn;
        let rv = r.dot(v);
        let mut a = -r * inv_r3;
        if tg.noise {
            let mut drive = field.e;
            if tg.magnetic {
                drive += field.lorentz(v);
            }
            a -= drive * p.beta;
        }
        if tg.damping {
            let jerk = -v * inv_r3 + r * (3.0 * rv * inv_r3 * inv_r2);
            a += jerk * (p.beta * p.beta);
        }
        if tg.p4 {
            a += (r * v.norm_squared() + v * (2.0 * rv)) * (0.5 * p.za2 * inv_r3);
        }
        if tg.spin_orbit {
            let l = r.cross(v);
            let so = s.cross(v) * 2.0 - s.cross(r) * (3.0 * rv * inv_r2) + r * (3.0 * s.dot(&l) * inv_r2);
            a += so * (0.5 * p.za2 * inv_r3);
        }
        a
    }

    pub fn spin_derivative(&self, state: &ElectronState) -> Result<Vec3> {
        let rn = state.check_floor(&self.params)?;
        Ok(self.spin_derivative_at(&state.r, &state.v, &state.s, rn))
    }

    #[inline]
    pub(crate) fn spin_derivative_at(&self, r: &Vec3, v: &Vec3, s: &Vec3, rn: f64) -> Vec3 {
        if !self.toggles.spin_orbit {
            return Vec3::zeros();
        }
        r.cross(v).cross(s) * (0.5 * self.params.za2 / (rn * rn * rn))
    }
}

/// The energy conserved exactly by the field-free, undamped flow:
/// `-ln(1 - 3 eps v^2 / 2) / (3 eps) - 1/r`. The spin force does no work.
pub fn exact_energy(state: &ElectronState, params: &PhysicalParams, toggles: Toggles) -> f64 {
    let v2 = state.v.norm_squared();
    let kinetic = if toggles.p4 {
        let x = 1.5 * params.za2 * v2;
        -(-x).ln_1p() / (3.0 * params.za2)
    } else {
        0.5 * v2
    };
    kinetic - 1.0 / state.r.norm()
}

/// Runge-Lenz vector `v x L - rhat`.
pub fn runge_lenz(state: &ElectronState) -> Vec3 {
    let l = state.r.cross(&state.v);
    state.v.cross(&l) - state.r / state.r.norm()
}
