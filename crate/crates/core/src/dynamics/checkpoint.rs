//! Binary checkpoints.
//!
//! ```text
//! magic        4 bytes  "SEDH"
//! version      u32
//! payload_len  u64
//! payload:
//!   config_hash    u64
//!   config         u32 length + JSON
//!   state          t, r[3], v[3], s[3]                          f64
//!   schedule       h f64, segment_step u32, period_at_update f64,
//!                  push_count u64, cutoff_updates u64, steps u64, rows u64,
//!                  row_steps u32, row_time f64, warned_n u8,
//!                  finished u8 (0 running, 1 completed, 2 ionised)
//!   bank           mode-bank snapshot record
//!   sampler        u8 present; origin f64, spacing f64
//!   output         csv_bytes u64, events_bytes u64
//!   events         u64 length + JSON lines
//! digest       32 bytes SHA-256 of everything above
//! ```
//!
//! All integers and floats are little endian; floats are stored as their
//! bit patterns, so a resumed run continues bit for bit.

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use sha2::{Digest, Sha256};
use std::io::{Cursor, Read, Write};
use std::path::Path;

use crate::dynamics::config::RunConfig;
use crate::dynamics::events::EventLog;
use crate::dynamics::rk4::SampledField;
use crate::dynamics::trajectory::{Outcome, Schedule, Trajectory};
use crate::error::{CheckpointError, Result, SedError};
use crate::field::bank::{io_err, BankSnapshot, ModeBank};
use crate::field::sampler::{CoefficientSampler, SegmentGrid};
use crate::units::{ElectronState, Vec3};

pub const MAGIC: &[u8; 4] = b"SEDH";
pub const VERSION: u32 = 1;

/// Byte offsets of the run's output files at checkpoint time, so a resume
/// can truncate them and append.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OutputCursor {
    pub csv_bytes: u64,
    pub events_bytes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub config_hash: u64,
    pub state: ElectronState,
    pub(crate) sched: Schedule,
    pub bank: BankSnapshot,
    pub sampler_grid: Option<SegmentGrid>,
    pub output: OutputCursor,
    pub events: EventLog,
}

fn vec3<R: Read>(r: &mut R) -> std::result::Result<Vec3, CheckpointError> {
    Ok(Vec3::new(f64_(r)?, f64_(r)?, f64_(r)?))
}

fn f64_<R: Read>(r: &mut R) -> std::result::Result<f64, CheckpointError> {
    r.read_f64::<LittleEndian>().map_err(io_err)
}

fn u64_<R: Read>(r: &mut R) -> std::result::Result<u64, CheckpointError> {
    r.read_u64::<LittleEndian>().map_err(io_err)
}

fn u32_<R: Read>(r: &mut R) -> std::result::Result<u32, CheckpointError> {
    r.read_u32::<LittleEndian>().map_err(io_err)
}

fn bytes<R: Read>(r: &mut R, len: usize) -> std::result::Result<Vec<u8>, CheckpointError> {
    let mut buf = vec![0; len];
    r.read_exact(&mut buf).map_err(io_err)?;
    Ok(buf)
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut p = Vec::new();
        self.write_payload(&mut p).expect("writing to a vector");
        let mut out = Vec::with_capacity(p.len() + 48);
        out.extend_from_slice(MAGIC);
        out.write_u32::<LittleEndian>(VERSION).unwrap();
        out.write_u64::<LittleEndian>(p.len() as u64).unwrap();
        out.extend_from_slice(&p);
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    fn write_payload(&self, w: &mut Vec<u8>) -> std::io::Result<()> {
        w.write_u64::<LittleEndian>(self.config_hash)?;
        let json = serde_json::to_vec(&self.config).expect("config serializes");
        w.write_u32::<LittleEndian>(json.len() as u32)?;
        w.write_all(&json)?;
        let s = &self.state;
        w.write_f64::<LittleEndian>(s.t)?;
        for x in s.r.iter().chain(s.v.iter()).chain(s.s.iter()) {
            w.write_f64::<LittleEndian>(*x)?;
        }
        let c = &self.sched;
        w.write_f64::<LittleEndian>(c.h)?;
        w.write_u32::<LittleEndian>(c.segment_step)?;
        w.write_f64::<LittleEndian>(c.period_at_update)?;
        w.write_u64::<LittleEndian>(c.push_count)?;
        w.write_u64::<LittleEndian>(c.cutoff_updates)?;
        w.write_u64::<LittleEndian>(c.steps)?;
        w.write_u64::<LittleEndian>(c.rows)?;
        w.write_u32::<LittleEndian>(c.row_steps)?;
        w.write_f64::<LittleEndian>(c.row_time)?;
        w.write_u8(c.warned_n as u8)?;
        w.write_u8(match c.finished {
            None => 0,
            Some(Outcome::Completed) => 1,
            Some(Outcome::Ionised) => 2,
        })?;
        self.bank.write_to(w)?;
        match self.sampler_grid {
            Some(g) => {
                w.write_u8(1)?;
                w.write_f64::<LittleEndian>(g.origin)?;
                w.write_f64::<LittleEndian>(g.spacing)?;
            }
            None => w.write_u8(0)?,
        }
        w.write_u64::<LittleEndian>(self.output.csv_bytes)?;
        w.write_u64::<LittleEndian>(self.output.events_bytes)?;
        let mut events = Vec::new();
        self.events.write_json_lines(&mut events)?;
        w.write_u64::<LittleEndian>(events.len() as u64)?;
        w.write_all(&events)
    }

    pub fn from_bytes(data: &[u8]) -> std::result::Result<Self, CheckpointError> {
        if data.len() < 4 {
            return Err(CheckpointError::Truncated);
        }
        if &data[..4] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let mut r = Cursor::new(&data[4..]);
        let version = u32_(&mut r)?;
        if version != VERSION {
            return Err(CheckpointError::Version { found: version, expected: VERSION });
        }
        let len = u64_(&mut r)? as usize;
        let body_end = 16usize.checked_add(len).ok_or(CheckpointError::Truncated)?;
        if data.len() < body_end + 32 {
            return Err(CheckpointError::Truncated);
        }
        if data.len() > body_end + 32 {
            return Err(CheckpointError::Malformed("trailing bytes after digest".into()));
        }
        if Sha256::digest(&data[..body_end])[..] != data[body_end..] {
            return Err(CheckpointError::Corrupt);
        }
        let mut r = Cursor::new(&data[16..body_end]);
        let cp = Self::read_payload(&mut r)?;
        if r.position() as usize != len {
            return Err(CheckpointError::Malformed("payload length disagrees with its contents".into()));
        }
        Ok(cp)
    }

    fn read_payload<R: Read>(r: &mut R) -> std::result::Result<Self, CheckpointError> {
        let config_hash = u64_(r)?;
        let json_len = u32_(r)? as usize;
        let config: RunConfig = serde_json::from_slice(&bytes(r, json_len)?)
            .map_err(|e| CheckpointError::Malformed(format!("embedded config: {e}")))?;
        if config.hash() != config_hash {
            return Err(CheckpointError::ConfigMismatch { found: config_hash, expected: config.hash() });
        }
        let t = f64_(r)?;
        let state = ElectronState { r: vec3(r)?, v: vec3(r)?, s: vec3(r)?, t };
        let flag = |v: u8, what: &str| match v {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(CheckpointError::Malformed(format!("{what} flag {other}"))),
        };
        let sched = Schedule {
            h: f64_(r)?,
            segment_step: u32_(r)?,
            period_at_update: f64_(r)?,
            push_count: u64_(r)?,
            cutoff_updates: u64_(r)?,
            steps: u64_(r)?,
            rows: u64_(r)?,
            row_steps: u32_(r)?,
            row_time: f64_(r)?,
            warned_n: flag(r.read_u8().map_err(io_err)?, "warning")?,
            finished: match r.read_u8().map_err(io_err)? {
                0 => None,
                1 => Some(Outcome::Completed),
                2 => Some(Outcome::Ionised),
                other => return Err(CheckpointError::Malformed(format!("outcome tag {other}"))),
            },
        };
        let bank = BankSnapshot::read_from(r)?;
        let sampler_grid = if flag(r.read_u8().map_err(io_err)?, "sampler")? {
            Some(SegmentGrid { origin: f64_(r)?, spacing: f64_(r)? })
        } else {
            None
        };
        let output = OutputCursor { csv_bytes: u64_(r)?, events_bytes: u64_(r)? };
        let events_len = u64_(r)? as usize;
        let text = String::from_utf8(bytes(r, events_len)?)
            .map_err(|_| CheckpointError::Malformed("event log is not UTF-8".into()))?;
        let events =
            EventLog::from_json_lines(&text).map_err(|e| CheckpointError::Malformed(format!("event log: {e}")))?;
        Ok(Self { config, config_hash, state, sched, bank, sampler_grid, output, events })
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        // write then rename so a crash never leaves half a checkpoint behind
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes())
            .and_then(|_| std::fs::rename(&tmp, path))
            .map_err(|e| CheckpointError::Io(format!("{}: {e}", path.display())).into())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| CheckpointError::Io(format!("{}: {e}", path.display())))?;
        Ok(Self::from_bytes(&data)?)
    }
}

impl Trajectory {
    pub fn checkpoint(&self, output: OutputCursor) -> Checkpoint {
        Checkpoint {
            config: self.config,
            config_hash: self.config.hash(),
            state: self.state,
            sched: self.sched,
            bank: self.bank.snapshot(),
            sampler_grid: self.field.as_ref().map(|f| f.sampler.grid()),
            output,
            events: self.events.clone(),
        }
    }

    /// Continue from a checkpoint with its own configuration.
    pub fn resume(cp: &Checkpoint) -> Result<Self> {
        Self::resume_with(cp.config, cp)
    }

    /// Continue from a checkpoint under `config`, which may differ from the
    /// stored one only in `t_end`.
    pub fn resume_with(config: RunConfig, cp: &Checkpoint) -> Result<Self> {
        let expected = config.hash();
        if cp.config_hash != expected {
            return Err(CheckpointError::ConfigMismatch { found: cp.config_hash, expected }.into());
        }
        config.validate()?;
        let params = config.params()?;
        let mut traj = Self::assemble(config, params, cp.state)?;
        let bank = ModeBank::restore(&cp.bank, params.tau_c)?;
        if bank.grid() != traj.bank.grid() {
            return Err(SedError::Checkpoint(CheckpointError::Malformed("bank grid disagrees with config".into())));
        }
        traj.bank = bank;
        traj.field = cp.sampler_grid.map(|g| {
            let sampler = CoefficientSampler::with_grid(&traj.bank, g, config.samples_per_period, config.engine);
            SampledField::new(sampler, params.za)
        });
        traj.sched = cp.sched;
        traj.events = cp.events.clone();
        Ok(traj)
    }
}
