use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::dynamics::push::PushBranch;
use crate::units::ElectronState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub r: [f64; 3],
    pub v: [f64; 3],
    pub s: [f64; 3],
}

impl From<&ElectronState> for Snapshot {
    fn from(s: &ElectronState) -> Self {
        Self { r: s.r.into(), v: s.v.into(), s: s.s.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    CutoffUpdate {
        t: f64,
        energy: f64,
        omega_k: f64,
        omega_cutoff: f64,
        entering: u64,
        leaving: u64,
        highest_mode: u64,
        state: Snapshot,
    },
    Push {
        t: f64,
        energy_before: f64,
        energy_after: f64,
        branch: PushBranch,
        magnitude: f64,
        state: Snapshot,
    },
    Ionisation {
        t: f64,
        energy: f64,
        state: Snapshot,
    },
    SingularityAbort {
        t: f64,
        radius: f64,
        state: Snapshot,
    },
    /// The frequency grid stops resolving a continuum beyond `t = N`.
    TExceedsN {
        t: f64,
        n_per_unit: u64,
    },
}

impl Event {
    pub fn time(&self) -> f64 {
        match self {
            Event::CutoffUpdate { t, .. }
            | Event::Push { t, .. }
            | Event::Ionisation { t, .. }
            | Event::SingularityAbort { t, .. }
            | Event::TExceedsN { t, .. } => *t,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Event::CutoffUpdate { .. } => "cutoff_update",
            Event::Push { .. } => "push",
            Event::Ionisation { .. } => "ionisation",
            Event::SingularityAbort { .. } => "singularity_abort",
            Event::TExceedsN { .. } => "t_exceeds_n",
        }
    }
}

/// Events in time order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn push(&mut self, event: Event) {
        debug_assert!(self.events.last().is_none_or(|e| e.time() <= event.time()));
        self.events.push(event);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn count(&self, kind: &str) -> usize {
        self.events.iter().filter(|e| e.kind() == kind).count()
    }

    pub fn write_json_lines<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut *w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn from_json_lines(text: &str) -> serde_json::Result<Self> {
        let events = text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect::<Result<_, _>>()?;
        Ok(Self { events })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_lines_round_trip() {
        let mut log = EventLog::default();
        log.push(Event::TExceedsN { t: 1.0, n_per_unit: 10 });
        log.push(Event::Ionisation { t: 2.0, energy: -0.01, state: (&ElectronState::circular(1.0)).into() });
        let mut buf = Vec::new();
        log.write_json_lines(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().next().unwrap().contains(r#""kind":"t_exceeds_n""#));
        assert_eq!(EventLog::from_json_lines(&text).unwrap(), log);
        assert_eq!(log.count("ionisation"), 1);
    }
}
