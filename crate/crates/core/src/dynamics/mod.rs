//! Orbit integration: forces, stepping, the moving cutoff, pushes and
//! checkpoints.

pub mod checkpoint;
pub mod config;
pub mod events;
pub mod force;
pub mod push;
pub mod rk4;
pub mod trajectory;

pub use checkpoint::{Checkpoint, OutputCursor};
pub use config::{InitialOrbit, RunConfig, Toggles};
pub use events::{Event, EventLog, Snapshot};
pub use force::{exact_energy, runge_lenz, ForceModel};
pub use push::{energy_push, PushBranch, PushOutcome};
pub use rk4::{rk4_step, DirectField, FieldSource, NoField, SampledField};
pub use trajectory::{
    run_trajectory, CsvObserver, NullObserver, Observer, Outcome, Row, Trajectory, TrajectorySummary, CSV_HEADER,
};
