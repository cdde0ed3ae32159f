//! `run` and `resume`: drive a trajectory, stream the time series, and write
//! checkpoints, the event log and a summary along the way.

use rayon::prelude::*;
use serde::Serialize;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use sedh_core::dynamics::{Checkpoint, CsvObserver, OutputCursor, Outcome, Trajectory, TrajectorySummary, CSV_HEADER};
use sedh_core::stats::{run_summary, Binning, Histogram, RunSummary};

use crate::config::ConfigFile;

pub const TIMESERIES: &str = "timeseries.csv";
pub const EVENTS: &str = "events.jsonl";
pub const CHECKPOINT: &str = "checkpoint.sedh";
pub const SUMMARY: &str = "summary.json";
pub const CONFIG: &str = "config.toml";

#[derive(Debug, Serialize)]
struct SummaryFile<'a> {
    seed: u64,
    config_hash: String,
    trajectory: &'a TrajectorySummary,
    run: &'a RunSummary,
    wall_seconds: f64,
}

fn io<E: std::fmt::Display>(path: &Path) -> impl Fn(E) -> String + '_ {
    move |e| format!("{}: {e}", path.display())
}

fn write_events(dir: &Path, traj: &Trajectory) -> Result<u64, String> {
    let path = dir.join(EVENTS);
    let mut buf = Vec::new();
    traj.events().write_json_lines(&mut buf).map_err(io(&path))?;
    std::fs::write(&path, &buf).map_err(io(&path))?;
    Ok(buf.len() as u64)
}

/// Advance to `t_end`, checkpointing every `interval`, appending rows to
/// `csv` (positioned at its end).
fn drive(traj: &mut Trajectory, dir: &Path, csv: File, interval: f64, t_end: f64) -> Result<Outcome, String> {
    let started = Instant::now();
    let csv_path = dir.join(TIMESERIES);
    let mut observer = CsvObserver { out: BufWriter::new(csv) };
    let outcome = loop {
        let t = traj.state().t;
        let target = (((t / interval).floor() + 1.0) * interval).min(t_end);
        let step = traj.advance(target, &mut observer);
        observer.out.flush().map_err(io(&csv_path))?;
        let events_bytes = write_events(dir, traj)?;
        let outcome = step.map_err(|e| e.to_string())?;
        let csv_bytes = observer.out.get_mut().stream_position().map_err(io(&csv_path))?;
        traj.checkpoint(OutputCursor { csv_bytes, events_bytes })
            .write_file(&dir.join(CHECKPOINT))
            .map_err(|e| e.to_string())?;
        if outcome == Outcome::Ionised || traj.state().t >= t_end {
            break outcome;
        }
    };
    let summary = traj.summary();
    let run = run_summary(&summary, traj.params());
    let file = SummaryFile {
        seed: traj.config().seed,
        config_hash: format!("{:016x}", traj.config().hash()),
        trajectory: &summary,
        run: &run,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    let path = dir.join(SUMMARY);
    std::fs::write(&path, serde_json::to_string_pretty(&file).unwrap() + "\n").map_err(io(&path))?;
    Ok(outcome)
}

pub fn run_one(config: &ConfigFile, dir: &Path) -> Result<Outcome, String> {
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let config_path = dir.join(CONFIG);
    let text = toml::to_string(config).map_err(|e| e.to_string())?;
    std::fs::write(&config_path, text).map_err(io(&config_path))?;
    let csv_path = dir.join(TIMESERIES);
    let mut csv = File::create(&csv_path).map_err(io(&csv_path))?;
    writeln!(csv, "{CSV_HEADER}").map_err(io(&csv_path))?;
    let mut traj = Trajectory::new(config.run).map_err(|e| e.to_string())?;
    drive(&mut traj, dir, csv, config.checkpoint_interval(), config.run.t_end)
}

/// Seeds `seed, seed + 1, ...` in `member-000`, `member-001`, ... run in
/// parallel; the members' energy and radius histograms are merged.
pub fn run_ensemble(config: &ConfigFile, dir: &Path, members: u32) -> Result<Vec<Result<Outcome, String>>, String> {
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let results: Vec<(PathBuf, Result<Outcome, String>)> = (0..members)
        .into_par_iter()
        .map(|k| {
            let mut member = config.clone();
            member.run.seed = config.run.seed.wrapping_add(k as u64);
            let sub = dir.join(format!("member-{k:03}"));
            let outcome = run_one(&member, &sub);
            (sub, outcome)
        })
        .collect();
    let mut energy = Histogram::new(Binning::ENERGY).unwrap();
    let mut radius = Histogram::new(Binning::RADIUS).unwrap();
    for (sub, outcome) in &results {
        if outcome.is_ok() {
            let series = crate::analyze::read_timeseries(&sub.join(TIMESERIES))?;
            energy.merge(&series.histogram(Binning::ENERGY, |r| r.energy)).map_err(|e| e.to_string())?;
            radius.merge(&series.histogram(Binning::RADIUS, |r| r.r)).map_err(|e| e.to_string())?;
        }
    }
    let path = dir.join("ensemble.json");
    let body = serde_json::json!({
        "members": members,
        "outcomes": results.iter().map(|(_, o)| match o {
            Ok(Outcome::Completed) => "completed".to_string(),
            Ok(Outcome::Ionised) => "ionised".to_string(),
            Err(e) => format!("error: {e}"),
        }).collect::<Vec<_>>(),
        "energy_histogram": energy,
        "radius_histogram": radius,
    });
    std::fs::write(&path, serde_json::to_string_pretty(&body).unwrap() + "\n").map_err(io(&path))?;
    Ok(results.into_iter().map(|(_, o)| o).collect())
}

/// Continue the run whose checkpoint is at `checkpoint`, writing into `dir`
/// (the checkpoint's directory by default). Output files are cut back to
/// their state at checkpoint time, so the result matches an uninterrupted
/// run byte for byte.
pub fn resume(checkpoint: &Path, t_end: Option<f64>, dir: Option<&Path>) -> Result<Outcome, String> {
    let cp = Checkpoint::read_file(checkpoint).map_err(|e| format!("checkpoint {}: {e}", checkpoint.display()))?;
    let mut config = cp.config;
    if let Some(t) = t_end {
        config.t_end = t;
    }
    let dir = match dir {
        Some(d) => d.to_path_buf(),
        None => checkpoint.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let mut traj = Trajectory::resume_with(config, &cp).map_err(|e| e.to_string())?;
    let csv_path = dir.join(TIMESERIES);
    let mut csv = OpenOptions::new().write(true).open(&csv_path).map_err(io(&csv_path))?;
    let len = csv.metadata().map_err(io(&csv_path))?.len();
    if len < cp.output.csv_bytes {
        return Err(format!(
            "{}: shorter ({len} bytes) than at checkpoint time ({} bytes)",
            csv_path.display(),
            cp.output.csv_bytes
        ));
    }
    csv.set_len(cp.output.csv_bytes).map_err(io(&csv_path))?;
    csv.seek(SeekFrom::End(0)).map_err(io(&csv_path))?;
    let file = ConfigFile { run: config, ..ConfigFile::default() };
    drive(&mut traj, &dir, csv, file.checkpoint_interval(), config.t_end)
}
