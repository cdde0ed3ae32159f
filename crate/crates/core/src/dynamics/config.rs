use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SedError};
use crate::field::sampler::{SumEngine, DEFAULT_SAMPLES_PER_PERIOD};
use crate::units::{kepler_frequency, PhysicalParams, RelativisticTerms, FINE_STRUCTURE};

/// Energy whose Keplerian frequency, times the cutoff multiplier, sets the
/// default top of the frequency grid.
pub const DEFAULT_OMEGA_MAX_ENERGY: f64 = -3.0;

/// Which physics terms are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Toggles {
    pub damping: bool,
    pub noise: bool,
    pub magnetic: bool,
    pub p4: bool,
    pub spin_orbit: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Self::ALL
    }
}

impl Toggles {
    pub const ALL: Self = Self { damping: true, noise: true, magnetic: true, p4: true, spin_orbit: true };
    /// Relativistic Kepler problem: no field, no damping.
    pub const CONSERVATIVE: Self = Self { damping: false, noise: false, magnetic: false, p4: true, spin_orbit: true };
    pub const KEPLER: Self = Self { damping: false, noise: false, magnetic: false, p4: false, spin_orbit: false };

    pub fn relativistic(&self) -> RelativisticTerms {
        RelativisticTerms { p4: self.p4, spin_orbit: self.spin_orbit }
    }
}

/// Initial orbit: a Keplerian ellipse in the xy-plane started at periapsis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialOrbit {
    pub semi_major_axis: f64,
    pub eccentricity: f64,
    /// Fixed spin; drawn with random orientation and length sqrt(3)/2 if absent.
    pub spin: Option<[f64; 3]>,
}

impl Default for InitialOrbit {
    fn default() -> Self {
        Self { semi_major_axis: 1.0, eccentricity: 0.0, spin: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub z: f64,
    pub alpha: f64,
    /// Frequency-grid denominator: `omega_n = n / N`.
    pub n_per_unit: u64,
    /// Top of the frequency grid; defaults to the cutoff at `E = -3`.
    pub omega_max: Option<f64>,
    pub cutoff_multiplier: f64,
    pub period_update_threshold: f64,
    pub steps_per_orbit: u32,
    pub push_threshold: f64,
    pub push_target: f64,
    pub ionisation_threshold: f64,
    pub t_end: f64,
    pub seed: u64,
    pub toggles: Toggles,
    pub samples_per_period: f64,
    pub window_taper: bool,
    pub r_floor: f64,
    /// Steps between time-series rows.
    pub sample_stride: u32,
    pub engine: SumEngine,
    pub initial: InitialOrbit,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            z: 3.0,
            alpha: FINE_STRUCTURE,
            n_per_unit: 100_000,
            omega_max: None,
            cutoff_multiplier: 2.5,
            period_update_threshold: 0.20,
            steps_per_orbit: 4000,
            push_threshold: -1.6,
            push_target: -1.0,
            ionisation_threshold: -0.05,
            t_end: 1e5,
            seed: 1,
            toggles: Toggles::ALL,
            samples_per_period: DEFAULT_SAMPLES_PER_PERIOD,
            window_taper: false,
            r_floor: crate::units::DEFAULT_R_FLOOR,
            sample_stride: 100,
            engine: SumEngine::Chirp,
            initial: InitialOrbit::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SedError::Config(m));
        if !(self.push_threshold < self.push_target
            && self.push_target < self.ionisation_threshold
            && self.ionisation_threshold < 0.0)
        {
            return bad(format!(
                "need push_threshold < push_target < ionisation_threshold < 0, got {} / {} / {}",
                self.push_threshold, self.push_target, self.ionisation_threshold
            ));
        }
        if self.steps_per_orbit < 100 {
            return bad(format!("steps_per_orbit must be at least 100, got {}", self.steps_per_orbit));
        }
        if self.n_per_unit == 0 {
            return bad("n_per_unit must be positive".into());
        }
        if !(self.cutoff_multiplier > 0.0) || !(self.period_update_threshold > 0.0) {
            return bad("cutoff_multiplier and period_update_threshold must be positive".into());
        }
        if !(self.t_end >= 0.0) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if self.sample_stride == 0 {
            return bad("sample_stride must be positive".into());
        }
        if !(self.initial.semi_major_axis > 0.0) || !(0.0..1.0).contains(&self.initial.eccentricity) {
            return bad("initial orbit needs a > 0 and 0 <= e < 1".into());
        }
        if let Some(w) = self.omega_max {
            if !(w > 0.0) {
                return bad(format!("omega_max must be positive, got {w}"));
            }
        }
        self.params().map(|_| ())
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        Ok(PhysicalParams::new(self.z, self.alpha)?.with_r_floor(self.r_floor))
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max.unwrap_or_else(|| {
            self.cutoff_multiplier * kepler_frequency(DEFAULT_OMEGA_MAX_ENERGY).expect("bound energy")
        })
    }

    /// SHA-256 over everything that shapes the trajectory, truncated to 64
    /// bits. The end time is excluded so a run can be extended on resume.
    pub fn hash(&self) -> u64 {
        let mut c = *self;
        c.t_end = 0.0;
        let json = serde_json::to_vec(&c).expect("config serializes");
        let digest = Sha256::digest(&json);
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert!((c.omega_max() - 2.5 * 6f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn ordering_of_thresholds_is_enforced() {
        let c = RunConfig { push_target: -2.0, ..RunConfig::default() };
        assert!(c.validate().is_err());
        let c = RunConfig { steps_per_orbit: 99, ..RunConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_ignores_end_time_only() {
        let a = RunConfig::default();
        let b = RunConfig { t_end: 5.0, ..a };
        let c = RunConfig { seed: 2, ..a };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"z": 1.0, "zz": 2}"#).unwrap_err();
        assert!(err.to_string().contains("zz"));
        let ok: RunConfig = serde_json::from_str(r#"{"toggles": {"noise": false}}"#).unwrap();
        assert!(!ok.toggles.noise && ok.toggles.damping);
    }
}
