//! The run loop: window management, step-size schedule, pushes, ionisation.
//!
//! Every iteration (1) checks whether the Keplerian period moved by more than
//! the update threshold since the last window update and, if so, moves the
//! cutoff and starts a new sampling segment; (2) at the start of each orbit
//! segment sets `h = T_K / steps_per_orbit`; (3) takes one RK4 step; (4)
//! pushes the electron if it fell below the push threshold; (5) stops on
//! ionisation. A run ends at the first step boundary at or after `t_end`,
//! so extending a finished run continues it exactly.

use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::dynamics::config::RunConfig;
use crate::dynamics::events::{Event, EventLog};
use crate::dynamics::force::ForceModel;
use crate::dynamics::push::energy_push;
use crate::dynamics::rk4::{rk4_step, NoField, SampledField};
use crate::error::{Result, SedError};
use crate::field::bank::{ModeBank, ModeGrid, Window};
use crate::field::sampler::CoefficientSampler;
use crate::rng::{stream_rng, streams};
use crate::units::{
    angular_momentum, hamiltonian, kepler_frequency, ElectronState, PhysicalParams, RelativisticTerms, Vec3,
    SPIN_LENGTH,
};

pub const CSV_HEADER: &str = "t,E,r,L,Lz,S_norm,omega_K,window_modes";

/// One time-series sample. `dwell` is the time represented by the row (the
/// sum of the step sizes since the previous row).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub t: f64,
    pub energy: f64,
    pub r: f64,
    pub l: f64,
    pub lz: f64,
    pub s_norm: f64,
    pub omega_k: f64,
    pub window_modes: u64,
    pub dwell: f64,
}

impl Row {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.t, self.energy, self.r, self.l, self.lz, self.s_norm, self.omega_k, self.window_modes
        )
    }
}

pub trait Observer {
    fn row(&mut self, row: &Row) -> Result<()>;
}

impl Observer for Vec<Row> {
    fn row(&mut self, row: &Row) -> Result<()> {
        self.push(*row);
        Ok(())
    }
}

/// Discards rows.
pub struct NullObserver;

impl Observer for NullObserver {
    fn row(&mut self, _row: &Row) -> Result<()> {
        Ok(())
    }
}

/// Writes rows as CSV lines (the header is the caller's business).
pub struct CsvObserver<W: Write> {
    pub out: W,
}

impl<W: Write> Observer for CsvObserver<W> {
    fn row(&mut self, row: &Row) -> Result<()> {
        writeln!(self.out, "{}", row.csv_line()).map_err(|e| SedError::Config(format!("writing time series: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Completed,
    Ionised,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub outcome: Outcome,
    pub t_final: f64,
    pub steps: u64,
    /// Orbits completed, counting `steps_per_orbit` steps as one orbit.
    pub orbits: f64,
    pub pushes: u64,
    pub cutoff_updates: u64,
    pub rows: u64,
    pub final_energy: f64,
}

/// Mutable run state; everything in here goes into a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Schedule {
    pub h: f64,
    /// Steps taken in the current orbit segment.
    pub segment_step: u32,
    /// Keplerian period when the window last moved.
    pub period_at_update: f64,
    pub push_count: u64,
    pub cutoff_updates: u64,
    pub steps: u64,
    pub rows: u64,
    pub row_steps: u32,
    pub row_time: f64,
    pub warned_n: bool,
    pub finished: Option<Outcome>,
}

pub struct Trajectory {
    pub(crate) config: RunConfig,
    pub(crate) params: PhysicalParams,
    pub(crate) model: ForceModel,
    pub(crate) terms: RelativisticTerms,
    pub(crate) state: ElectronState,
    pub(crate) bank: ModeBank,
    pub(crate) field: Option<SampledField>,
    pub(crate) events: EventLog,
    pub(crate) sched: Schedule,
}

fn initial_state(config: &RunConfig) -> ElectronState {
    let orbit = &config.initial;
    let spin = match orbit.spin {
        Some(s) => Vec3::from(s),
        None => {
            let mut rng = stream_rng(config.seed, streams::SPIN_INIT, 0);
            Vec3::from(UnitSphere.sample(&mut rng)) * SPIN_LENGTH
        }
    };
    ElectronState::ellipse_at_periapsis(orbit.semi_major_axis, orbit.eccentricity).with_spin(spin)
}

impl Trajectory {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let params = config.params()?;
        let state = initial_state(&config);
        let mut t = Self::assemble(config, params, state)?;
        let energy = t.energy()?;
        if t.config.toggles.noise && energy < 0.0 {
            t.move_window(energy)?;
        } else if energy < 0.0 {
            t.sched.period_at_update = std::f64::consts::TAU / kepler_frequency(energy)?;
        }
        Ok(t)
    }

    pub(crate) fn assemble(config: RunConfig, params: PhysicalParams, state: ElectronState) -> Result<Self> {
        let grid = ModeGrid::covering(config.n_per_unit, config.omega_max())?;
        let mut bank = ModeBank::new(config.seed, grid, params.tau_c);
        bank.set_taper(config.window_taper);
        Ok(Self {
            model: ForceModel::new(params, config.toggles),
            terms: config.toggles.relativistic(),
            config,
            params,
            state,
            bank,
            field: None,
            events: EventLog::default(),
            sched: Schedule {
                h: 0.0,
                segment_step: 0,
                period_at_update: f64::NAN,
                push_count: 0,
                cutoff_updates: 0,
                steps: 0,
                rows: 0,
                row_steps: 0,
                row_time: 0.0,
                warned_n: false,
                finished: None,
            },
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn state(&self) -> &ElectronState {
        &self.state
    }

    pub fn bank(&self) -> &ModeBank {
        &self.bank
    }

    pub fn events(&self) -> &EventLog {
        &self.events
    }

    pub fn energy(&self) -> Result<f64> {
        hamiltonian(&self.state, &self.params, self.terms)
    }

    pub fn summary(&self) -> TrajectorySummary {
        TrajectorySummary {
            outcome: self.sched.finished.unwrap_or(Outcome::Completed),
            t_final: self.state.t,
            steps: self.sched.steps,
            orbits: self.sched.steps as f64 / self.config.steps_per_orbit as f64,
            pushes: self.sched.push_count,
            cutoff_updates: self.sched.cutoff_updates,
            rows: self.sched.rows,
            final_energy: self.energy().unwrap_or(f64::NAN),
        }
    }

    fn move_window(&mut self, energy: f64) -> Result<()> {
        let omega_k = kepler_frequency(energy)?;
        let change = self.bank.update_window(omega_k, self.config.cutoff_multiplier)?;
        let sampler =
            CoefficientSampler::new(&self.bank, self.state.t, self.config.samples_per_period, self.config.engine)?;
        self.field = Some(SampledField::new(sampler, self.params.za));
        self.sched.period_at_update = std::f64::consts::TAU / omega_k;
        self.sched.cutoff_updates += 1;
        self.sched.segment_step = 0;
        self.events.push(Event::CutoffUpdate {
            t: self.state.t,
            energy,
            omega_k,
            omega_cutoff: change.omega_cutoff,
            entering: change.entering,
            leaving: change.leaving,
            highest_mode: change.highest_mode,
            state: (&self.state).into(),
        });
        Ok(())
    }

    fn singular(&mut self, err: SedError) -> SedError {
        if let SedError::Singular { radius, .. } = err {
            self.events.push(Event::SingularityAbort { t: self.state.t, radius, state: (&self.state).into() });
        }
        err
    }

    /// Integrate until the first step boundary at or after `t_stop`, or
    /// until ionisation.
    pub fn advance<O: Observer>(&mut self, t_stop: f64, observer: &mut O) -> Result<Outcome> {
        if let Some(Outcome::Ionised) = self.sched.finished {
            return Ok(Outcome::Ionised);
        }
        let mut energy = self.energy().map_err(|e| self.singular(e))?;
        if energy > self.config.ionisation_threshold {
            return Ok(self.ionise(energy));
        }
        while self.state.t < t_stop {
            let period = std::f64::consts::TAU / kepler_frequency(energy)?;
            if self.config.toggles.noise
                && ((period - self.sched.period_at_update) / self.sched.period_at_update).abs()
                    > self.config.period_update_threshold
            {
                self.move_window(energy)?;
            }
            if self.sched.segment_step == 0 {
                self.sched.h = period / self.config.steps_per_orbit as f64;
            }
            let h = self.sched.h;
            let next = match self.field.as_mut() {
                Some(field) if self.model.needs_field() => {
                    field.sampler.ensure_until(&self.bank, self.state.t, self.state.t + h);
                    rk4_step(&self.state, &self.model, field, h)
                }
                _ => rk4_step(&self.state, &self.model, &mut NoField, h),
            };
            self.state = next.map_err(|e| self.singular(e))?;
            self.sched.steps += 1;
            self.sched.segment_step = (self.sched.segment_step + 1) % self.config.steps_per_orbit;
            energy = self.energy().map_err(|e| self.singular(e))?;

            self.sched.row_steps += 1;
            self.sched.row_time += h;
            if self.sched.row_steps == self.config.sample_stride {
                let row = self.row(energy);
                self.sched.rows += 1;
                self.sched.row_steps = 0;
                self.sched.row_time = 0.0;
                observer.row(&row)?;
            }

            if !self.sched.warned_n && self.state.t > self.config.n_per_unit as f64 {
                self.sched.warned_n = true;
                log::warn!("t = {} exceeds N = {}; the frequency grid no longer resolves a continuum", self.state.t, self.config.n_per_unit);
                self.events.push(Event::TExceedsN { t: self.state.t, n_per_unit: self.config.n_per_unit });
            }

            if energy < self.config.push_threshold {
                energy = self.push(energy)?;
            }
            if energy > self.config.ionisation_threshold {
                return Ok(self.ionise(energy));
            }
        }
        self.sched.finished = Some(Outcome::Completed);
        Ok(Outcome::Completed)
    }

    fn row(&self, energy: f64) -> Row {
        let l = angular_momentum(&self.state);
        Row {
            t: self.state.t,
            energy,
            r: self.state.r.norm(),
            l: l.norm(),
            lz: l.z,
            s_norm: self.state.s.norm(),
            omega_k: kepler_frequency(energy).unwrap_or(f64::NAN),
            window_modes: if self.config.toggles.noise { self.bank.window().n_cut } else { 0 },
            dwell: self.sched.row_time,
        }
    }

    fn push(&mut self, energy: f64) -> Result<f64> {
        let mut rng = stream_rng(self.config.seed, streams::PUSH, self.sched.push_count);
        let out = energy_push(&self.state, &self.params, self.terms, &mut rng, self.config.push_target)?;
        self.state = out.state;
        self.sched.push_count += 1;
        self.sched.segment_step = 0;
        let after = self.energy()?;
        self.events.push(Event::Push {
            t: self.state.t,
            energy_before: energy,
            energy_after: after,
            branch: out.branch,
            magnitude: out.magnitude,
            state: (&self.state).into(),
        });
        Ok(after)
    }

    fn ionise(&mut self, energy: f64) -> Outcome {
        self.events.push(Event::Ionisation { t: self.state.t, energy, state: (&self.state).into() });
        self.sched.finished = Some(Outcome::Ionised);
        Outcome::Ionised
    }

    /// Window currently applied to the bank.
    pub fn window(&self) -> &Window {
        self.bank.window()
    }
}

/// Run a configuration to its end time.
pub fn run_trajectory<O: Observer>(config: RunConfig, observer: &mut O) -> Result<(TrajectorySummary, EventLog)> {
    let mut traj = Trajectory::new(config)?;
    traj.advance(config.t_end, observer)?;
    Ok((traj.summary(), traj.events.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::config::{InitialOrbit, Toggles};

    fn quiet(toggles: Toggles, t_end: f64) -> RunConfig {
        RunConfig {
            toggles,
            t_end,
            n_per_unit: 1000,
            initial: InitialOrbit { semi_major_axis: 1.0, eccentricity: 0.0, spin: Some([0.0, 0.0, SPIN_LENGTH]) },
            ..RunConfig::default()
        }
    }

    #[test]
    fn deterministic_limit_has_no_events() {
        let orbits = 20.0;
        let t_end = orbits * std::f64::consts::TAU;
        let mut rows = Vec::new();
        let (summary, events) = run_trajectory(quiet(Toggles::KEPLER, t_end), &mut rows).unwrap();
        assert!(events.is_empty());
        assert_eq!(summary.outcome, Outcome::Completed);
        // rounding in t may leave one extra step
        assert!((summary.orbits - orbits).abs() <= 1.0 / 4000.0 + 1e-12, "{}", summary.orbits);
        let e0 = rows[0].energy;
        let spread = rows.iter().map(|r| (r.energy - e0).abs()).fold(0.0, f64::max);
        assert!(spread < 1e-9 * orbits * e0.abs(), "{spread}");

        // with the relativistic terms on, the conserved quantity is the
        // canonical Hamiltonian; E(p = v) itself wobbles at O(Z^4 alpha^4)
        let config = quiet(Toggles::CONSERVATIVE, t_end);
        let mut traj = Trajectory::new(config).unwrap();
        let terms = config.toggles.relativistic();
        let h0 = crate::units::canonical_hamiltonian(traj.state(), traj.params(), terms).unwrap();
        traj.advance(t_end, &mut NullObserver).unwrap();
        assert!(traj.events().is_empty());
        let h1 = crate::units::canonical_hamiltonian(traj.state(), traj.params(), terms).unwrap();
        assert!(((h1 - h0) / h0).abs() < 1e-9 * orbits, "{}", (h1 - h0) / h0);
    }

    #[test]
    fn damping_only_decays_without_ionising() {
        let mut rows = Vec::new();
        let (summary, _) = run_trajectory(quiet(Toggles { damping: true, ..Toggles::KEPLER }, 30.0), &mut rows).unwrap();
        assert_eq!(summary.outcome, Outcome::Completed);
        assert!(rows.windows(2).all(|w| w[1].energy < w[0].energy));
    }

    #[test]
    fn stops_at_first_boundary_past_end() {
        let mut traj = Trajectory::new(quiet(Toggles::KEPLER, 1.0)).unwrap();
        traj.advance(1.0, &mut NullObserver).unwrap();
        let h = std::f64::consts::TAU / 4000.0;
        assert!(traj.state.t >= 1.0 && traj.state.t < 1.0 + h * 1.0001);
    }

    #[test]
    fn unbound_start_ionises_immediately() {
        let mut c = quiet(Toggles::KEPLER, 10.0);
        c.initial.semi_major_axis = 30.0; // E = -1/60 > -0.05
        let (summary, events) = run_trajectory(c, &mut NullObserver).unwrap();
        assert_eq!(summary.outcome, Outcome::Ionised);
        assert_eq!(events.count("ionisation"), 1);
        assert_eq!(summary.steps, 0);
    }
}
