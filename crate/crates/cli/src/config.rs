//! The TOML run file: a `[run]` table with the simulation parameters and an
//! `[output]` table with paths and checkpoint cadence.
//!
//! ```toml
//! [run]
//! z = 3.0                       # nuclear charge
//! n_per_unit = 100000           # frequency grid: omega_n = n / N
//! # omega_max = 36.74           # grid top; default 2.5 x Kepler frequency at E = -3
//! cutoff_multiplier = 2.5       # window edge in units of the Kepler frequency
//! period_update_threshold = 0.2 # move the window when T_K changes by 20 %
//! steps_per_orbit = 4000
//! push_threshold = -1.6         # push when E drops below this ...
//! push_target = -1.0            # ... back up to this energy
//! ionisation_threshold = -0.05
//! t_end = 1e5                   # atomic time units
//! seed = 1
//! samples_per_period = 27.0     # field samples per period of the top admitted mode
//! window_taper = false
//! r_floor = 1e-6                # abort below this radius
//! sample_stride = 100           # steps per CSV row
//! engine = "chirp"              # or "direct"
//!
//! [run.toggles]
//! damping = true
//! noise = true
//! magnetic = true
//! p4 = true
//! spin_orbit = true
//!
//! [run.initial]
//! semi_major_axis = 1.0
//! eccentricity = 0.0
//! # spin = [0.0, 0.0, 0.8660254037844386]  # random orientation if absent
//!
//! [output]
//! # dir = "out"                 # default: --out, then $SEDH_OUT_DIR, then ./sedh-out
//! checkpoint_interval = 1e4     # atomic time units between checkpoints
//! ```

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use sedh_core::dynamics::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: Option<PathBuf>,
    pub checkpoint_interval: Option<f64>,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self { dir: None, checkpoint_interval: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub run: RunConfig,
    pub output: OutputSettings,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let file: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        file.run.validate().map_err(|e| e.to_string())?;
        if let Some(dt) = file.output.checkpoint_interval {
            if !(dt > 0.0) {
                return Err(format!("output.checkpoint_interval must be positive, got {dt}"));
            }
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Checkpoint cadence: configured, else a tenth of the run.
    pub fn checkpoint_interval(&self) -> f64 {
        self.output.checkpoint_interval.unwrap_or(self.run.t_end / 10.0).max(f64::MIN_POSITIVE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_example_parses() {
        let doc: String = include_str!("config.rs")
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start_matches(' '))
            .collect::<Vec<_>>()
            .join("\n");
        let file = ConfigFile::parse(&doc).unwrap();
        assert_eq!(file.run, RunConfig::default());
        assert_eq!(file.output.checkpoint_interval, Some(1e4));
    }

    #[test]
    fn unknown_key_is_named_with_its_line() {
        let err = ConfigFile::parse("[run]\nz = 3.0\nstep_per_orbit = 10\n").unwrap_err();
        assert!(err.contains("step_per_orbit"), "{err}");
        assert!(err.contains("line 3"), "{err}");
        let err = ConfigFile::parse("[outputs]\n").unwrap_err();
        assert!(err.contains("outputs"), "{err}");
    }

    #[test]
    fn invalid_values_are_reported() {
        let err = ConfigFile::parse("[run]\npush_target = -2.0\n").unwrap_err();
        assert!(err.contains("push_threshold"), "{err}");
    }
}
