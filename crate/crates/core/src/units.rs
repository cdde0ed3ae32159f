//! Bohr-unit constants and orbital quantities.
//!
//! Lengths are in Bohr radii `a0 = hbar / (Z alpha m c)`, times in
//! `tau0 = hbar / (Z^2 alpha^2 m c^2)`, angular momenta and spin in `hbar`.
//! In these units the Kepler problem is parameter free and every
//! correction is scaled by `Z^2 alpha^2` or by the radiation coupling `beta`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SedError};

pub type Vec3 = Vector3<f64>;

/// Fine-structure constant.
pub const FINE_STRUCTURE: f64 = 1.0 / 137.036;

/// `hbar / (m_e c^2)` in seconds (reduced Compton time of the electron).
pub const COMPTON_TIME_S: f64 = 6.582_119_569e-16 / 510_998.95;

/// Spin length `sqrt(3)/2` in units of hbar.
pub const SPIN_LENGTH: f64 = 0.866_025_403_784_438_6;

/// Default lower bound on `|r|` below which integration aborts.
pub const DEFAULT_R_FLOOR: f64 = 1e-6;

/// Radiation coupling `sqrt(2/3) Z alpha^{3/2}`.
pub fn beta_coupling(z: f64, alpha: f64) -> f64 {
    (2.0f64 / 3.0).sqrt() * z * alpha.powf(1.5)
}

/// Physical parameters in Bohr units. Construct with [`PhysicalParams::new`]
/// so the derived fields stay consistent with `z` and `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub z: f64,
    pub alpha: f64,
    /// Radiation coupling, sets both the noise strength and the damping.
    pub beta: f64,
    /// Compton cutoff time in units of `tau0`; numerically equal to `za2`.
    pub tau_c: f64,
    /// `Z alpha`, the ratio of the Bohr radius to the reduced wavelength of a
    /// photon with Bohr energy.
    pub za: f64,
    /// `Z^2 alpha^2`, the strength of the relativistic corrections.
    pub za2: f64,
    pub r_floor: f64,
}

impl PhysicalParams {
    pub fn new(z: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(SedError::Config(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(z >= 0.0) || !z.is_finite() {
            return Err(SedError::Config(format!("Z must be a finite non-negative number, got {z}")));
        }
        let za = z * alpha;
        Ok(Self {
            z,
            alpha,
            beta: beta_coupling(z, alpha),
            tau_c: za * za,
            za,
            za2: za * za,
            r_floor: DEFAULT_R_FLOOR,
        })
    }

    pub fn hydrogen_like(z: f64) -> Self {
        Self::new(z, FINE_STRUCTURE).expect("the physical fine-structure constant is valid")
    }

    pub fn with_r_floor(mut self, floor: f64) -> Self {
        self.r_floor = floor;
        self
    }

    /// Radiative damping time `1/beta^2` in units of `tau0`.
    pub fn damping_time(&self) -> f64 {
        1.0 / (self.beta * self.beta)
    }

    /// `tau0` in seconds.
    pub fn tau0_seconds(&self) -> f64 {
        COMPTON_TIME_S / self.za2
    }
}

/// Which of the leading relativistic corrections are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelativisticTerms {
    pub p4: bool,
    pub spin_orbit: bool,
}

impl RelativisticTerms {
    pub const ALL: Self = Self { p4: true, spin_orbit: true };
    pub const NONE: Self = Self { p4: false, spin_orbit: false };

    pub fn p4_coupling(&self, params: &PhysicalParams) -> f64 {
        if self.p4 {
            params.za2
        } else {
            0.0
        }
    }

    pub fn spin_orbit_coupling(&self, params: &PhysicalParams) -> f64 {
        if self.spin_orbit {
            params.za2
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectronState {
    pub r: Vec3,
    pub v: Vec3,
    pub s: Vec3,
    pub t: f64,
}

impl ElectronState {
    pub fn new(r: Vec3, v: Vec3, s: Vec3) -> Self {
        Self { r, v, s, t: 0.0 }
    }

    /// Circular Kepler orbit of radius `a` in the xy plane, spin along z.
    pub fn circular(a: f64) -> Self {
        Self::new(
            Vec3::new(a, 0.0, 0.0),
            Vec3::new(0.0, a.powf(-0.5), 0.0),
            Vec3::new(0.0, 0.0, SPIN_LENGTH),
        )
    }

    /// Kepler ellipse with semi-major axis `a` and eccentricity `e`, started
    /// at periapsis on the x axis and moving in +y.
    pub fn ellipse_at_periapsis(a: f64, e: f64) -> Self {
        let rp = a * (1.0 - e);
        let vp = ((1.0 + e) / rp).sqrt();
        Self::new(Vec3::new(rp, 0.0, 0.0), Vec3::new(0.0, vp, 0.0), Vec3::new(0.0, 0.0, SPIN_LENGTH))
    }

    pub fn with_spin(mut self, s: Vec3) -> Self {
        self.s = s;
        self
    }

    pub fn radius(&self) -> f64 {
        self.r.norm()
    }

    pub fn check_floor(&self, params: &PhysicalParams) -> Result<f64> {
        let radius = self.r.norm();
        if radius < params.r_floor || !radius.is_finite() {
            return Err(SedError::Singular { radius, floor: params.r_floor, t: self.t });
        }
        Ok(radius)
    }
}

/// Orbital angular momentum `L = r x v`.
pub fn angular_momentum(state: &ElectronState) -> Vec3 {
    state.r.cross(&state.v)
}

/// Total angular momentum `J = L + S`.
pub fn total_j(state: &ElectronState) -> Vec3 {
    angular_momentum(state) + state.s
}

/// Energy with the leading relativistic corrections, momentum identified with
/// the velocity:
/// `E = v^2/2 - 1/r - (Z^2 alpha^2 / 8) v^4 + (Z^2 alpha^2 / 2) (L.S) / r^3`.
///
/// The contact (delta-function) term is not represented; it vanishes for any
/// `r != 0`.
pub fn hamiltonian(state: &ElectronState, params: &PhysicalParams, terms: RelativisticTerms) -> Result<f64> {
    let r = state.check_floor(params)?;
    Ok(energy_with_momentum(&state.r, &state.v, &state.s, r, params, terms))
}

fn energy_with_momentum(
    r_vec: &Vec3,
    p: &Vec3,
    s: &Vec3,
    r: f64,
    params: &PhysicalParams,
    terms: RelativisticTerms,
) -> f64 {
    let p2 = p.norm_squared();
    let mut e = 0.5 * p2 - 1.0 / r;
    if terms.p4 {
        e -= 0.125 * params.za2 * p2 * p2;
    }
    if terms.spin_orbit {
        let l = r_vec.cross(p);
        e += 0.5 * params.za2 * l.dot(s) / (r * r * r);
    }
    e
}

/// Canonical momentum reconstructed from the velocity by inverting
/// `rdot = (1 - Z^2 alpha^2 p^2 / 2) p + (Z^2 alpha^2 / 2) (S x r) / r^3`.
pub fn canonical_momentum(state: &ElectronState, params: &PhysicalParams, terms: RelativisticTerms) -> Result<Vec3> {
    let r = state.check_floor(params)?;
    let eps_p4 = terms.p4_coupling(params);
    let eps_so = terms.spin_orbit_coupling(params);
    let shift = state.v - 0.5 * eps_so * state.s.cross(&state.r) / (r * r * r);
    let mut p = shift;
    for _ in 0..100 {
        let next = shift + 0.5 * eps_p4 * p.norm_squared() * p;
        let delta = (next - p).norm();
        p = next;
        if delta <= 1e-17 * p.norm().max(1e-300) {
            break;
        }
    }
    Ok(p)
}

/// Hamiltonian evaluated at the canonical momentum (see [`canonical_momentum`]).
pub fn canonical_hamiltonian(state: &ElectronState, params: &PhysicalParams, terms: RelativisticTerms) -> Result<f64> {
    let r = state.check_floor(params)?;
    let p = canonical_momentum(state, params, terms)?;
    Ok(energy_with_momentum(&state.r, &p, &state.s, r, params, terms))
}

/// `r x p + S` with the canonical momentum.
pub fn canonical_total_j(state: &ElectronState, params: &PhysicalParams, terms: RelativisticTerms) -> Result<Vec3> {
    let p = canonical_momentum(state, params, terms)?;
    Ok(state.r.cross(&p) + state.s)
}

/// Angular frequency `(2|E|)^{3/2}` of the bound Kepler orbit with energy `E`.
pub fn kepler_frequency(energy: f64) -> Result<f64> {
    if !(energy < 0.0) {
        return Err(SedError::Unbound { energy });
    }
    Ok((2.0 * energy.abs()).powf(1.5))
}

pub fn kepler_period(energy: f64) -> Result<f64> {
    Ok(std::f64::consts::TAU / kepler_frequency(energy)?)
}
