//! Coarse time sampling of the field coefficients plus 5-point Lagrange
//! interpolation between samples.
//!
//! Samples live on the grid `t_k = origin + k * spacing` with
//! `spacing = 2 pi / (spp * omega_top)`. They are produced in fixed blocks,
//! so the value of sample `k` depends only on `k` and the segment, not on
//! when it was requested; that is what makes checkpoint/resume exact.
//!
//! The chirp engine evaluates a block of `K` samples of all 28 sums with
//! Bluestein's identity `nj = (n^2 + j^2 - (j-n)^2)/2`, turning the
//! `O(modes * K)` sum into FFT convolutions of length `L >= modes + K`.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::bank::ModeBank;
use super::eval::{field_coefficients, FieldCoefficients, LINEAR_FACTOR};
use crate::error::{Result, SedError};

const NC: usize = FieldCoefficients::LEN;
/// Each block overlaps the next by this many samples, so every centered
/// stencil fits inside one block.
const OVERLAP: usize = 4;

pub const DEFAULT_SAMPLES_PER_PERIOD: f64 = 27.0;

/// Weights of the 5-point Lagrange stencil on nodes `-2..=2` at offset `x`.
#[inline]
pub fn lagrange5_weights(x: f64) -> [f64; 5] {
    let (a, b, c, d, e) = (x + 2.0, x + 1.0, x, x - 1.0, x - 2.0);
    [
        b * c * d * e / 24.0,
        -(a * c * d * e) / 6.0,
        a * b * d * e / 4.0,
        -(a * b * c * e) / 6.0,
        a * b * c * d / 24.0,
    ]
}

pub fn sample_spacing(omega_top: f64, samples_per_period: f64) -> f64 {
    2.0 * PI / (samples_per_period * omega_top)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SumEngine {
    /// Mode-by-mode evaluation at every sample; the reference.
    Direct,
    /// Blocked chirp-z evaluation.
    #[default]
    Chirp,
}

/// The time grid of one sampling segment (fixed window).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentGrid {
    pub origin: f64,
    pub spacing: f64,
}

impl SegmentGrid {
    #[inline]
    pub fn node_time(&self, k: i64) -> f64 {
        self.origin + k as f64 * self.spacing
    }

    #[inline]
    pub fn nearest(&self, t: f64) -> i64 {
        ((t - self.origin) / self.spacing).round() as i64
    }
}

struct ChirpPlan {
    len: usize,
    theta: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    kernel: Vec<Complex64>,
    post: Vec<Complex64>,
}

impl ChirpPlan {
    fn new(n_cut: usize, block: usize, len: usize, theta: f64) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        let chirp = |m: f64| Complex64::from_polar(1.0, 0.5 * theta * m * m);
        let mut kernel = vec![Complex64::new(0.0, 0.0); len];
        for j in 0..block {
            kernel[j] = chirp(j as f64);
        }
        for n in 1..=n_cut {
            kernel[len - n] = chirp(n as f64);
        }
        fwd.process(&mut kernel);
        let scale = 1.0 / len as f64;
        for k in kernel.iter_mut() {
            *k *= scale;
        }
        let post = (0..block).map(|j| chirp(j as f64).conj()).collect();
        Self { len, theta, fwd, inv, kernel, post }
    }
}

struct Block {
    index: i64,
    values: Vec<[f64; NC]>,
}

/// Produces and interpolates coefficient samples for one window at a time.
pub struct CoefficientSampler {
    engine: SumEngine,
    samples_per_period: f64,
    grid: SegmentGrid,
    n_cut: u64,
    block_len: usize,
    chirp: Option<ChirpPlan>,
    blocks: VecDeque<Block>,
}

impl std::fmt::Debug for CoefficientSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientSampler")
            .field("engine", &self.engine)
            .field("grid", &self.grid)
            .field("n_cut", &self.n_cut)
            .field("block_len", &self.block_len)
            .field("blocks", &self.blocks.len())
            .finish()
    }
}

impl CoefficientSampler {
    /// Start a segment for the bank's current window, with the sample grid
    /// anchored a few nodes before `t_start`.
    pub fn new(bank: &ModeBank, t_start: f64, samples_per_period: f64, engine: SumEngine) -> Result<Self> {
        if !(samples_per_period >= 5.0) {
            return Err(SedError::Config(format!(
                "samples per period must be at least 5, got {samples_per_period}"
            )));
        }
        let window = bank.window();
        let omega_top = if window.n_cut > 0 { bank.grid().omega(window.n_cut) } else { window.omega_cutoff };
        let spacing = if omega_top > 0.0 { sample_spacing(omega_top, samples_per_period) } else { 1.0 };
        let grid = SegmentGrid { origin: t_start - 4.0 * spacing, spacing };
        Ok(Self::with_grid(bank, grid, samples_per_period, engine))
    }

    /// Rebuild a segment on an explicit grid (resuming from a checkpoint).
    pub fn with_grid(bank: &ModeBank, grid: SegmentGrid, samples_per_period: f64, engine: SumEngine) -> Self {
        let n_cut = bank.window().n_cut;
        let (block_len, chirp) = match engine {
            SumEngine::Direct => (256, None),
            SumEngine::Chirp => {
                let n = n_cut as usize;
                let len = (n + (n / 2).max(1024)).next_power_of_two();
                let block = len - n;
                let theta = grid.spacing / bank.grid().n_per_unit as f64;
                (block, Some(ChirpPlan::new(n, block, len, theta)))
            }
        };
        Self { engine, samples_per_period, grid, n_cut, block_len, chirp, blocks: VecDeque::new() }
    }

    pub fn grid(&self) -> SegmentGrid {
        self.grid
    }

    pub fn engine(&self) -> SumEngine {
        self.engine
    }

    pub fn samples_per_period(&self) -> f64 {
        self.samples_per_period
    }

    pub fn n_cut(&self) -> u64 {
        self.n_cut
    }

    fn stride(&self) -> i64 {
        (self.block_len - OVERLAP) as i64
    }

    /// Block holding the whole stencil around node `k`.
    fn block_of(&self, k: i64) -> i64 {
        (k - 2).div_euclid(self.stride())
    }

    /// Times covered by the retained blocks, as an interpolation span.
    pub fn span(&self) -> Option<(f64, f64)> {
        let first = self.blocks.front()?;
        let last = self.blocks.back()?;
        let lo = self.grid.node_time(first.index * self.stride() + 2) - 0.5 * self.grid.spacing;
        let hi = self.grid.node_time(last.index * self.stride() + self.block_len as i64 - 3) + 0.5 * self.grid.spacing;
        Some((lo, hi))
    }

    /// Make sure every time in `[t, t_hi]` can be interpolated.
    pub fn ensure_until(&mut self, bank: &ModeBank, t: f64, t_hi: f64) {
        debug_assert_eq!(bank.window().n_cut, self.n_cut, "window changed under the sampler");
        let first = self.block_of(self.grid.nearest(t));
        let last = self.block_of(self.grid.nearest(t_hi));
        while let Some(b) = self.blocks.front() {
            if b.index < first {
                self.blocks.pop_front();
            } else {
                break;
            }
        }
        if self.blocks.front().map_or(true, |b| b.index > first) {
            self.blocks.clear();
        }
        let mut next = self.blocks.back().map_or(first, |b| b.index + 1);
        while next <= last {
            let values = self.compute_block(bank, next);
            self.blocks.push_back(Block { index: next, values });
            next += 1;
        }
    }

    /// Drop blocks that lie entirely before `t`.
    pub fn trim(&mut self, t: f64) {
        let first = self.block_of(self.grid.nearest(t));
        while self.blocks.front().is_some_and(|b| b.index < first) {
            self.blocks.pop_front();
        }
    }

    /// Exact sample `k`, if retained.
    pub fn node(&self, k: i64) -> Option<FieldCoefficients> {
        let block = self.blocks.iter().find(|b| {
            let start = b.index * self.stride();
            k >= start && k < start + self.block_len as i64
        })?;
        Some(FieldCoefficients::from_array(&block.values[(k - block.index * self.stride()) as usize]))
    }

    pub fn interpolate(&self, t: f64) -> Result<FieldCoefficients> {
        let k = self.grid.nearest(t);
        let m = self.block_of(k);
        let Some(block) = self.blocks.iter().find(|b| b.index == m) else {
            let (lo, hi) = self.span().unwrap_or((f64::NAN, f64::NAN));
            return Err(SedError::OutOfSpan { t, lo, hi });
        };
        let x = (t - self.grid.node_time(k)) / self.grid.spacing;
        let w = lagrange5_weights(x);
        let base = (k - 2 - m * self.stride()) as usize;
        let rows = &block.values[base..base + 5];
        let mut out = [0.0; NC];
        for (row, wj) in rows.iter().zip(w) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += wj * v;
            }
        }
        Ok(FieldCoefficients::from_array(&out))
    }

    fn compute_block(&self, bank: &ModeBank, index: i64) -> Vec<[f64; NC]> {
        let k0 = index * self.stride();
        match &self.chirp {
            None => (0..self.block_len as i64)
                .map(|j| field_coefficients(bank, self.grid.node_time(k0 + j)).to_array())
                .collect(),
            Some(plan) => self.chirp_block(bank, plan, self.grid.node_time(k0)),
        }
    }

    fn chirp_block(&self, bank: &ModeBank, plan: &ChirpPlan, t0: f64) -> Vec<[f64; NC]> {
        let n_cut = self.n_cut as usize;
        let grid = bank.grid();
        let zero = Complex64::new(0.0, 0.0);
        let mut out = vec![[0.0; NC]; self.block_len];
        if n_cut == 0 {
            return out;
        }
        // per-mode phasor exp(-i (w_n t0 + theta n^2 / 2)) and channel weights
        let mut phasor = vec![zero; n_cut + 1];
        let mut weight = vec![[0.0; 3]; n_cut + 1];
        for n in 1..=n_cut {
            let omega = grid.omega(n as u64);
            let fm = n as f64;
            phasor[n] = Complex64::from_polar(1.0, -(omega * t0 + 0.5 * plan.theta * fm * fm));
            let amp = bank.amplitude(n as u64);
            weight[n] = [amp, amp * omega * LINEAR_FACTOR, amp * omega * omega / 10.0];
        }
        let mut buf = vec![zero; plan.len];
        let mut scratch = vec![zero; plan.fwd.get_inplace_scratch_len().max(plan.inv.get_inplace_scratch_len())];
        for ch in 0..NC {
            buf.fill(zero);
            let (electric, order, comp) = channel(ch);
            for n in 1..=n_cut {
                let m = bank.coefficients(n as u64);
                let (c, d) = match order {
                    1 => (m.beta1[comp], m.beta2[comp]),
                    _ => (m.b[comp], m.a[comp]),
                };
                let mut z = Complex64::new(c, d) * weight[n][order];
                if electric {
                    // w (c sin - d cos) = Re[ w (-d + i c) e^{-i phi} ]
                    z = Complex64::new(-z.im, z.re) * grid.omega(n as u64);
                }
                buf[n] = z * phasor[n];
            }
            plan.fwd.process_with_scratch(&mut buf, &mut scratch);
            for (b, k) in buf.iter_mut().zip(&plan.kernel) {
                *b *= k;
            }
            plan.inv.process_with_scratch(&mut buf, &mut scratch);
            for (j, row) in out.iter_mut().enumerate() {
                row[ch] = (buf[j] * plan.post[j]).re;
            }
        }
        out
    }
}

/// `(electric, order, component)` of a packed channel index.
fn channel(ch: usize) -> (bool, usize, usize) {
    let electric = ch >= 14;
    let c = ch % 14;
    match c {
        0..=2 => (electric, 0, c),
        3..=10 => (electric, 1, c - 3),
        _ => (electric, 2, c - 11),
    }
}
