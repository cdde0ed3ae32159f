use serde::{Deserialize, Serialize};

use crate::error::{Result, SedError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scale", rename_all = "lowercase")]
pub enum Binning {
    Uniform { lo: f64, hi: f64, bins: usize },
    /// Bins uniform in `ln x`; needs `0 < lo < hi`.
    Log { lo: f64, hi: f64, bins: usize },
}

impl Binning {
    /// 100 bins on [-4, 0].
    pub const ENERGY: Self = Self::Uniform { lo: -4.0, hi: 0.0, bins: 100 };
    /// 100 bins on [0, 6].
    pub const RADIUS: Self = Self::Uniform { lo: 0.0, hi: 6.0, bins: 100 };

    fn validate(&self) -> Result<()> {
        let (lo, hi, bins, log) = match *self {
            Binning::Uniform { lo, hi, bins } => (lo, hi, bins, false),
            Binning::Log { lo, hi, bins } => (lo, hi, bins, true),
        };
        if bins == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() || (log && !(lo > 0.0)) {
            return Err(SedError::Config(format!("bad binning {self:?}")));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        match *self {
            Binning::Uniform { bins, .. } | Binning::Log { bins, .. } => bins,
        }
    }

    pub fn edges(&self) -> Vec<f64> {
        match *self {
            Binning::Uniform { lo, hi, bins } => {
                (0..=bins).map(|k| if k == bins { hi } else { lo + (hi - lo) * k as f64 / bins as f64 }).collect()
            }
            Binning::Log { lo, hi, bins } => {
                let (a, b) = (lo.ln(), hi.ln());
                (0..=bins)
                    .map(|k| match k {
                        0 => lo,
                        k if k == bins => hi,
                        k => (a + (b - a) * k as f64 / bins as f64).exp(),
                    })
                    .collect()
            }
        }
    }

    /// `Err(false)` below range, `Err(true)` above; the top edge belongs to
    /// the last bin.
    fn locate(&self, x: f64) -> std::result::Result<usize, bool> {
        let (pos, bins, lo, hi) = match *self {
            Binning::Uniform { lo, hi, bins } => ((x - lo) / (hi - lo), bins, lo, hi),
            Binning::Log { lo, hi, bins } => {
                if !(x > 0.0) {
                    return Err(false);
                }
                ((x / lo).ln() / (hi / lo).ln(), bins, lo, hi)
            }
        };
        if x < lo {
            return Err(false);
        }
        if x > hi {
            return Err(true);
        }
        Ok(((pos * bins as f64) as usize).min(bins - 1))
    }
}

/// Weighted histogram. Weights are dwell times for time-series input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub binning: Binning,
    pub counts: Vec<f64>,
    pub underflow: f64,
    pub overflow: f64,
    pub total_weight: f64,
    pub samples: u64,
}

impl Histogram {
    pub fn new(binning: Binning) -> Result<Self> {
        binning.validate()?;
        Ok(Self {
            binning,
            counts: vec![0.0; binning.bins()],
            underflow: 0.0,
            overflow: 0.0,
            total_weight: 0.0,
            samples: 0,
        })
    }

    /// Non-finite values and non-positive weights are ignored.
    pub fn add(&mut self, x: f64, weight: f64) {
        if !x.is_finite() || !(weight > 0.0) {
            return;
        }
        match self.binning.locate(x) {
            Ok(k) => self.counts[k] += weight,
            Err(false) => self.underflow += weight,
            Err(true) => self.overflow += weight,
        }
        self.total_weight += weight;
        self.samples += 1;
    }

    pub fn from_samples(binning: Binning, xs: &[f64]) -> Result<Self> {
        let mut h = Self::new(binning)?;
        xs.iter().for_each(|&x| h.add(x, 1.0));
        Ok(h)
    }

    pub fn from_weighted(binning: Binning, xs: &[f64], weights: &[f64]) -> Result<Self> {
        if xs.len() != weights.len() {
            return Err(SedError::Config("samples and weights differ in length".into()));
        }
        let mut h = Self::new(binning)?;
        xs.iter().zip(weights).for_each(|(&x, &w)| h.add(x, w));
        Ok(h)
    }

    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.binning != other.binning {
            return Err(SedError::Config("cannot merge histograms with different binning".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        self.total_weight += other.total_weight;
        self.samples += other.samples;
        Ok(())
    }

    pub fn in_range_weight(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn edges(&self) -> Vec<f64> {
        self.binning.edges()
    }

    pub fn centers(&self) -> Vec<f64> {
        let e = self.edges();
        e.windows(2)
            .map(|w| match self.binning {
                Binning::Uniform { .. } => 0.5 * (w[0] + w[1]),
                Binning::Log { .. } => (w[0] * w[1]).sqrt(),
            })
            .collect()
    }

    /// Density normalized over the in-range weight.
    pub fn density(&self) -> Result<Vec<f64>> {
        let w = self.in_range_weight();
        if !(w > 0.0) {
            return Err(SedError::Empty("histogram has no in-range weight"));
        }
        Ok(self.edges().windows(2).zip(&self.counts).map(|(e, c)| c / (w * (e[1] - e[0]))).collect())
    }

    /// Bins holding any weight.
    pub fn occupied_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0.0).count()
    }

    /// Weighted mean of the bin centres.
    pub fn mean(&self) -> Option<f64> {
        let w = self.in_range_weight();
        (w > 0.0).then(|| self.centers().iter().zip(&self.counts).map(|(x, c)| x * c).sum::<f64>() / w)
    }
}
