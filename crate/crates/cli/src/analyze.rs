//! `analyze`: histograms of a run's time series against the reference
//! densities, with KS distances, CSV tables and SVG overlays.

use serde::Serialize;
use std::path::Path;

use sedh_core::dynamics::CSV_HEADER;
use sedh_core::stats::{ks_distance_histogram, ks_distance_weighted, Binning, Histogram, Quadrature, Reference};

use crate::run::{SUMMARY, TIMESERIES};
use crate::svg::overlay;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub energy: f64,
    pub r: f64,
}

/// Time-series rows with their dwell weights.
#[derive(Debug, Clone)]
pub struct Series {
    pub rows: Vec<SeriesRow>,
    pub weights: Vec<f64>,
}

impl Series {
    pub fn histogram(&self, binning: Binning, value: impl Fn(&SeriesRow) -> f64) -> Histogram {
        let xs: Vec<f64> = self.rows.iter().map(value).collect();
        Histogram::from_weighted(binning, &xs, &self.weights).expect("valid binning")
    }
}

pub fn read_timeseries(path: &Path) -> Result<Series, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("missing or unreadable {}: {e}", path.display()))?;
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(format!("corrupt {}: header is not `{CSV_HEADER}`", path.display()));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let bad = || format!("corrupt {}: line {} `{line}`", path.display(), k + 2);
        let fields: Vec<f64> = line.split(',').map(|f| f.parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        if fields.len() != CSV_HEADER.split(',').count() {
            return Err(bad());
        }
        rows.push(SeriesRow { t: fields[0], energy: fields[1], r: fields[2] });
    }
    // each row stands for the time since the previous one
    let mut last = 0.0;
    let weights = rows
        .iter()
        .map(|row| {
            let w = row.t - last;
            last = row.t;
            w
        })
        .collect();
    Ok(Series { rows, weights })
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub quantity: &'static str,
    pub samples: usize,
    pub ks: f64,
    pub ks_binned: f64,
    pub occupied_bins: usize,
    pub mean: Option<f64>,
    pub underflow: f64,
    pub overflow: f64,
}

#[derive(Debug, Serialize)]
pub struct Analysis {
    pub rows: usize,
    pub time_covered: f64,
    pub energy: Comparison,
    pub radius: Comparison,
    pub run_summary: Option<serde_json::Value>,
}

fn compare(
    series: &Series,
    reference: Reference,
    binning: Binning,
    value: impl Fn(&SeriesRow) -> f64 + Copy,
    dir: &Path,
) -> Result<Comparison, String> {
    let hist = series.histogram(binning, value);
    let xs: Vec<f64> = series.rows.iter().map(value).collect();
    let ks = ks_distance_weighted(&xs, &series.weights, reference).map_err(|e| e.to_string())?;
    let ks_binned = ks_distance_histogram(&hist, reference).map_err(|e| e.to_string())?;
    let density = hist.density().map_err(|e| format!("{} histogram: {e}", reference.name()))?;

    // bin-averaged reference density next to the measured one
    let quad = Quadrature::default();
    let edges = hist.edges();
    let mut table = String::from("lo,hi,weight,density,reference\n");
    for (k, e) in edges.windows(2).enumerate() {
        let reference_avg = quad.integrate(|x| reference.pdf(x), e[0], e[1]) / (e[1] - e[0]);
        table += &format!("{},{},{},{},{}\n", e[0], e[1], hist.counts[k], density[k], reference_avg);
    }
    let name = reference.name();
    let path = dir.join(format!("hist_{name}.csv"));
    std::fs::write(&path, table).map_err(|e| format!("{}: {e}", path.display()))?;
    let svg = overlay(&format!("{name}: dwell-weighted histogram vs reference"), name, &hist, &density, |x| {
        reference.pdf(x)
    });
    let path = dir.join(format!("{name}.svg"));
    std::fs::write(&path, svg).map_err(|e| format!("{}: {e}", path.display()))?;

    Ok(Comparison {
        quantity: name,
        samples: xs.len(),
        ks,
        ks_binned,
        occupied_bins: hist.occupied_bins(),
        mean: hist.mean(),
        underflow: hist.underflow,
        overflow: hist.overflow,
    })
}

pub fn analyze(dir: &Path, out: Option<&Path>) -> Result<Analysis, String> {
    if !dir.is_dir() {
        return Err(format!("run directory {} does not exist", dir.display()));
    }
    let series = read_timeseries(&dir.join(TIMESERIES))?;
    if series.rows.is_empty() {
        return Err(format!("{} has no samples", dir.join(TIMESERIES).display()));
    }
    let out = out.unwrap_or(dir);
    std::fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    let energy = compare(&series, Reference::ConjectureEnergy, Binning::ENERGY, |r| r.energy, out)?;
    let radius = compare(&series, Reference::QuantumRadius, Binning::RADIUS, |r| r.r, out)?;
    let run_summary = match std::fs::read_to_string(dir.join(SUMMARY)) {
        Ok(text) => Some(serde_json::from_str(&text).map_err(|e| format!("corrupt {}: {e}", dir.join(SUMMARY).display()))?),
        Err(_) => None,
    };
    let analysis = Analysis {
        rows: series.rows.len(),
        time_covered: series.weights.iter().sum(),
        energy,
        radius,
        run_summary,
    };
    let path = out.join("analysis.json");
    std::fs::write(&path, serde_json::to_string_pretty(&analysis).unwrap() + "\n")
        .map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(analysis)
}
