//! Analytic autocorrelators of the vacuum field and Monte-Carlo estimates of
//! the same quantities from synthesized banks.
//!
//! With `sigma = dt - i tau_c`:
//!
//! ```text
//! Cs = -(3/2pi) Re 1/(sigma^2 - r^2)
//! Cp = -(3/(2pi r^2)) Re[ sigma/(2r) log((sigma+r)/(sigma-r)) - 1 ]
//! C_A = C0 1 - C1 rhat rhat,   C0 = Cs - Cp,   C1 = Cs - 3 Cp
//! ```

use nalgebra::Matrix3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::field::bank::{Channels, ModeCoefficients, ModeGrid};
use crate::field::eval::{FieldCoefficients, LINEAR_FACTOR};
use crate::field::lambda::{lambda_matrices, LambdaMatrices};
use crate::rng::{stream_seed, streams};
use crate::units::Vec3;

/// Below `rbar / |sigma|` of this, `cp_analytic` uses its series.
pub const CP_SERIES_SWITCH: f64 = 1e-3;

#[inline]
fn sigma(dt: f64, tau_c: f64) -> Complex64 {
    Complex64::new(dt, -tau_c)
}

pub fn cs_analytic(rbar: f64, dt: f64, tau_c: f64) -> f64 {
    let s = sigma(dt, tau_c);
    -1.5 / PI * (s * s - rbar * rbar).inv().re
}

/// Second-order expansion of [`cs_analytic`] in `rbar`.
pub fn cs_series(rbar: f64, dt: f64, tau_c: f64) -> f64 {
    let s2 = sigma(dt, tau_c).powi(2).inv();
    -1.5 / PI * (s2 + rbar * rbar * s2 * s2).re
}

pub fn cp_analytic(rbar: f64, dt: f64, tau_c: f64) -> f64 {
    let s = sigma(dt, tau_c);
    if rbar < CP_SERIES_SWITCH * s.norm() {
        return cp_series(rbar, dt, tau_c);
    }
    cp_closed(rbar, dt, tau_c)
}

/// The logarithmic form, without the small-`rbar` switch.
///
/// The log of the ratio is taken as `log1p(x) - log1p(-x)` with
/// `x = rbar/sigma`: accurate for small `x`, and continuous in `rbar` since
/// `1 +- x` never crosses the negative real axis when `tau_c > 0`.
pub fn cp_closed(rbar: f64, dt: f64, tau_c: f64) -> f64 {
    let s = sigma(dt, tau_c);
    let x = rbar / s;
    let log = ln_1p(x) - ln_1p(-x);
    -1.5 / (PI * rbar * rbar) * (log / (2.0 * x) - 1.0).re
}

fn ln_1p(z: Complex64) -> Complex64 {
    Complex64::new(0.5 * (2.0 * z.re + z.norm_sqr()).ln_1p(), z.im.atan2(1.0 + z.re))
}

pub fn cp_series(rbar: f64, dt: f64, tau_c: f64) -> f64 {
    let s2 = sigma(dt, tau_c).powi(2).inv();
    -0.5 / PI * (s2 + 0.6 * rbar * rbar * s2 * s2).re
}

/// `-(1/pi) Re 1/sigma^2`, the correlator of the field at coincident points.
pub fn ca_leading(dt: f64, tau_c: f64) -> f64 {
    -sigma(dt, tau_c).powi(2).inv().re / PI
}

/// `(3/(5 pi)) Re 1/sigma^4`, the weight of the `rr - 2 r^2 1` structure.
pub fn r2_coefficient(dt: f64, tau_c: f64) -> f64 {
    0.6 / PI * sigma(dt, tau_c).powi(4).inv().re
}

/// `rr - 2 r^2 1`.
pub fn r2_structure(rbar: &Vec3) -> Matrix3<f64> {
    rbar * rbar.transpose() - Matrix3::identity() * (2.0 * rbar.norm_squared())
}

/// Small-separation A-field correlator tensor.
pub fn ca_smallr(rbar: &Vec3, dt: f64, tau_c: f64) -> Matrix3<f64> {
    Matrix3::identity() * ca_leading(dt, tau_c) + r2_structure(rbar) * r2_coefficient(dt, tau_c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelatorDecomposition {
    pub c0: f64,
    pub c1: f64,
    pub cs: f64,
    pub cp: f64,
}

impl CorrelatorDecomposition {
    pub fn new(rbar: f64, dt: f64, tau_c: f64) -> Self {
        Self::from_parts(cs_analytic(rbar, dt, tau_c), cp_analytic(rbar, dt, tau_c))
    }

    /// Built from the second-order expansions of both parts.
    pub fn series(rbar: f64, dt: f64, tau_c: f64) -> Self {
        Self::from_parts(cs_series(rbar, dt, tau_c), cp_series(rbar, dt, tau_c))
    }

    pub fn from_parts(cs: f64, cp: f64) -> Self {
        Self { c0: cs - cp, c1: cs - 3.0 * cp, cs, cp }
    }

    /// `C0 1 - C1 rhat rhat`.
    pub fn tensor(&self, rhat: &Vec3) -> Matrix3<f64> {
        Matrix3::identity() * self.c0 - rhat * rhat.transpose() * self.c1
    }
}

/// `sum_n dw w_n W(w_n)^2 / pi`: the equal-time, coincident variance of each
/// component of A for a full window.
pub fn discrete_variance(grid: &ModeGrid, tau_c: f64) -> f64 {
    let dw = grid.d_omega();
    (1..=grid.n_max)
        .map(|n| {
            let w = grid.omega(n);
            dw * w * (-w * tau_c).exp() / PI
        })
        .sum()
}

/// Streaming (sum, sum of squares, count) over a vector of observables.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    pub count: u64,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(dim: usize) -> Self {
        Self { count: 0, sum: vec![0.0; dim], sum_sq: vec![0.0; dim] }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        for ((s, q), v) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(x) {
            *s += v;
            *q += v * v;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.count += other.count;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.sum.iter().map(|s| s / n).collect()
    }

    /// Standard error of each mean.
    pub fn stderr(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(s, q)| {
                let m = s / n;
                ((q / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt()
            })
            .collect()
    }
}

/// Run `sample(e)` for `e in 0..n` and accumulate the results.
///
/// Work is split into fixed chunks that are merged in index order, so the
/// result does not depend on the number of threads.
pub fn mc_estimate<F>(n: u64, dim: usize, sample: F) -> MomentAccumulator
where
    F: Fn(u64) -> Vec<f64> + Sync,
{
    const CHUNK: u64 = 64;
    let chunks: Vec<MomentAccumulator> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = MomentAccumulator::new(dim);
            for e in (c * CHUNK)..((c + 1) * CHUNK).min(n) {
                acc.push(&sample(e));
            }
            acc
        })
        .collect();
    let mut total = MomentAccumulator::new(dim);
    for c in &chunks {
        total.merge(c);
    }
    total
}

/// Seed of the `e`-th independent bank of an ensemble.
pub fn ensemble_seed(seed: u64, e: u64) -> u64 {
    stream_seed(seed, streams::ENSEMBLE, e)
}

/// Grid and seed shared by every bank of a Monte-Carlo ensemble. Banks use
/// the full window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub n_per_unit: u64,
    pub omega_max: f64,
    pub seed: u64,
}

impl McConfig {
    pub fn grid(&self) -> ModeGrid {
        ModeGrid::covering(self.n_per_unit, self.omega_max).expect("positive grid")
    }
}

/// One field evaluation: A at scaled position `rbar`, time `t`, cutoff `tau_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe {
    pub rbar: Vec3,
    pub t: f64,
    pub tau_c: f64,
}

/// Evaluates A at a fixed set of probes for many banks, streaming each bank's
/// modes once and sharing phase and cutoff tables across banks.
pub struct MultiProbeEvaluator {
    grid: ModeGrid,
    channels: Channels,
    lambda: LambdaMatrices,
    probes: Vec<Probe>,
    /// For each probe, its (time, cutoff) key.
    probe_key: Vec<usize>,
    /// Per key and mode: `(c_n cos wt, c_n sin wt)`.
    tables: Vec<Vec<(f64, f64)>>,
}

impl MultiProbeEvaluator {
    /// `channels = Vector` skips the lambda channels, which is exact for
    /// probes at the origin and for quantities even in position.
    pub fn new(grid: ModeGrid, probes: Vec<Probe>, channels: Channels) -> Self {
        let mut keys: Vec<(f64, f64)> = Vec::new();
        let probe_key = probes
            .iter()
            .map(|p| match keys.iter().position(|&(t, tau)| t == p.t && tau == p.tau_c) {
                Some(i) => i,
                None => {
                    keys.push((p.t, p.tau_c));
                    keys.len() - 1
                }
            })
            .collect();
        let dw = grid.d_omega();
        let tables = keys
            .iter()
            .map(|&(t, tau)| {
                (1..=grid.n_max)
                    .map(|n| {
                        let w = grid.omega(n);
                        let amp = (dw * w / PI).sqrt() * (-0.5 * w * tau).exp();
                        let (s, c) = (w * t).sin_cos();
                        (amp * c, amp * s)
                    })
                    .collect()
            })
            .collect();
        Self { grid, channels, lambda: lambda_matrices(), probes, probe_key, tables }
    }

    pub fn probes(&self) -> &[Probe] {
        &self.probes
    }

    /// A-field sums of every key for the bank with this seed.
    pub fn coefficients(&self, bank_seed: u64) -> Vec<FieldCoefficients> {
        let mut out = vec![FieldCoefficients::default(); self.tables.len()];
        let full = self.channels == Channels::All;
        for n in 1..=self.grid.n_max {
            let m = ModeCoefficients::draw(bank_seed, n, self.channels);
            let w = self.grid.omega(n);
            let (k1, k2) = (w * LINEAR_FACTOR, w * w / 10.0);
            let idx = (n - 1) as usize;
            for (c, table) in out.iter_mut().zip(&self.tables) {
                let (ac, as_) = table[idx];
                for i in 0..3 {
                    let u = m.b[i] * ac + m.a[i] * as_;
                    c.a0[i] += u;
                    c.a2[i] += k2 * u;
                }
                if full {
                    for a in 0..8 {
                        c.a1[a] += k1 * (m.beta1[a] * ac + m.beta2[a] * as_);
                    }
                }
            }
        }
        out
    }

    /// A at every probe for the bank with this seed.
    pub fn evaluate(&self, bank_seed: u64) -> Vec<Vec3> {
        let coeffs = self.coefficients(bank_seed);
        self.probes
            .iter()
            .zip(&self.probe_key)
            .map(|(p, &k)| coeffs[k].assemble_a(&self.lambda, &p.rbar))
            .collect()
    }
}

/// `<A_i(t, rbar) A_j(s, qbar)>` for one pair of space-time points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelatorPoint {
    pub rbar: Vec3,
    pub t: f64,
    pub qbar: Vec3,
    pub s: f64,
    pub tau_c: f64,
}

impl CorrelatorPoint {
    pub fn at_origin(dt: f64, tau_c: f64) -> Self {
        Self { rbar: Vec3::zeros(), t: dt, qbar: Vec3::zeros(), s: 0.0, tau_c }
    }

    pub fn dt(&self) -> f64 {
        self.t - self.s
    }

    /// Small-separation analytic target.
    pub fn target(&self) -> Matrix3<f64> {
        ca_smallr(&(self.rbar - self.qbar), self.dt(), self.tau_c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelatorEstimate {
    pub point: CorrelatorPoint,
    pub mean: Matrix3<f64>,
    pub stderr: Matrix3<f64>,
    pub n_ensembles: u64,
}

impl CorrelatorEstimate {
    /// Componentwise `(mean - target) / stderr`.
    pub fn z_scores(&self, target: &Matrix3<f64>) -> Matrix3<f64> {
        (self.mean - target).component_div(&self.stderr)
    }
}

/// Monte-Carlo estimate of the A-field correlator at each point.
pub fn mc_autocorrelator(config: &McConfig, points: &[CorrelatorPoint], n_ensembles: u64) -> Vec<CorrelatorEstimate> {
    assert!(n_ensembles >= 2, "need at least two ensembles for a standard error");
    let at_origin = points.iter().all(|p| p.rbar == Vec3::zeros() && p.qbar == Vec3::zeros());
    let channels = if at_origin { Channels::Vector } else { Channels::All };
    let probes = points
        .iter()
        .flat_map(|p| {
            [Probe { rbar: p.rbar, t: p.t, tau_c: p.tau_c }, Probe { rbar: p.qbar, t: p.s, tau_c: p.tau_c }]
        })
        .collect();
    let eval = MultiProbeEvaluator::new(config.grid(), probes, channels);
    let acc = mc_estimate(n_ensembles, 9 * points.len(), |e| {
        let a = eval.evaluate(ensemble_seed(config.seed, e));
        let mut out = Vec::with_capacity(9 * points.len());
        for pair in a.chunks_exact(2) {
            let m = pair[0] * pair[1].transpose();
            out.extend_from_slice(m.as_slice());
        }
        out
    });
    let (mean, err) = (acc.mean(), acc.stderr());
    points
        .iter()
        .enumerate()
        .map(|(i, p)| CorrelatorEstimate {
            point: *p,
            mean: Matrix3::from_column_slice(&mean[9 * i..9 * i + 9]),
            stderr: Matrix3::from_column_slice(&err[9 * i..9 * i + 9]),
            n_ensembles,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct R2Extraction {
    pub dt: f64,
    pub tau_c: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
}

impl R2Extraction {
    pub fn relative_error(&self) -> f64 {
        (self.estimate / self.target - 1.0).abs()
    }
}

/// Extract the coefficient of `rr - 2 r^2 1` in `<A_i(dt, rbar) A_j(0, 0)>`
/// for each `(dt, tau_c)` case.
///
/// The even part `Q = [A(rbar) + A(-rbar) - 2 A(0)] / 2` isolates the second
/// order exactly, and `Q_i A_j` is projected onto the structure tensor. The
/// lambda channels cancel from `Q`, so they are not drawn. All cases share
/// the same banks.
pub fn extract_r2_coefficients(
    config: &McConfig,
    rbar: Vec3,
    cases: &[(f64, f64)],
    n_ensembles: u64,
) -> Vec<R2Extraction> {
    let mut probes = Vec::new();
    for &(dt, tau) in cases {
        for pos in [rbar, -rbar, Vec3::zeros()] {
            probes.push(Probe { rbar: pos, t: dt, tau_c: tau });
        }
        probes.push(Probe { rbar: Vec3::zeros(), t: 0.0, tau_c: tau });
    }
    let eval = MultiProbeEvaluator::new(config.grid(), probes, Channels::Vector);
    let structure = r2_structure(&rbar);
    let norm = structure.norm_squared();
    let acc = mc_estimate(n_ensembles, cases.len(), |e| {
        let a = eval.evaluate(ensemble_seed(config.seed, e));
        a.chunks_exact(4)
            .map(|p| {
                let q = (p[0] + p[1] - p[2] * 2.0) * 0.5;
                (q * p[3].transpose()).component_mul(&structure).sum() / norm
            })
            .collect()
    });
    let (mean, err) = (acc.mean(), acc.stderr());
    cases
        .iter()
        .enumerate()
        .map(|(i, &(dt, tau))| R2Extraction {
            dt,
            tau_c: tau,
            estimate: mean[i],
            stderr: err[i],
            target: r2_coefficient(dt, tau),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::bank::ModeBank;
    use crate::field::eval::eval_a;
    use proptest::prelude::*;

    #[test]
    fn cs_limit_and_series() {
        assert!((cs_analytic(0.0, 1.0, 1e-12) + 1.5 / PI).abs() < 1e-12);
        let (a, b) = (cs_analytic(0.01, 1.0, 1e-3), cs_series(0.01, 1.0, 1e-3));
        assert!((a / b - 1.0).abs() < 1e-4);
    }

    #[test]
    fn cp_limit_and_branch_overlap() {
        assert!((cp_analytic(0.0, 1.0, 1e-12) + 0.5 / PI).abs() < 1e-12);
        let closed = cp_closed(1e-3, 1.0, 1e-12);
        let series = cp_series(1e-3, 1.0, 1e-12);
        assert!((closed / series - 1.0).abs() < 1e-8, "{closed} {series}");
        let s = cs_analytic(0.0, 1.0, 1e-12);
        assert!((cp_analytic(0.0, 1.0, 1e-12) * 3.0 - s).abs() < 1e-12);
    }

    #[test]
    fn leading_tensor() {
        let c = ca_smallr(&Vec3::zeros(), 1.0, 1e-12);
        assert!((c - Matrix3::identity() * (-1.0 / PI)).norm() < 1e-12);
    }

    #[test]
    fn small_r_tensor_matches_decomposition() {
        let rbar = Vec3::new(0.01, 0.0, 0.0);
        let ca = ca_smallr(&rbar, 1.0, 1e-3);
        let d = CorrelatorDecomposition::series(0.01, 1.0, 1e-3);
        let t = d.tensor(&Vec3::x());
        assert!((ca - t).norm() < 1e-4 * ca.norm());
        let exact = CorrelatorDecomposition::new(0.01, 1.0, 1e-3).tensor(&Vec3::x());
        assert!((ca - exact).norm() < 1e-4 * ca.norm());
        assert_eq!(ca, ca.transpose());
    }

    #[test]
    fn discrete_variance_sums_the_spectrum() {
        let g = ModeGrid::new(10, 3).unwrap();
        let want = (0.1 * 0.1 * (-0.1f64 * 0.5).exp() + 0.1 * 0.2 * (-0.2f64 * 0.5).exp() + 0.1 * 0.3 * (-0.3f64 * 0.5).exp()) / PI;
        assert!((discrete_variance(&g, 0.5) - want).abs() < 1e-17);
    }

    #[test]
    fn multiprobe_matches_bank_evaluation() {
        let cfg = McConfig { n_per_unit: 8, omega_max: 30.0, seed: 5 };
        let grid = cfg.grid();
        let probes = vec![
            Probe { rbar: Vec3::new(0.1, -0.2, 0.05), t: 1.5, tau_c: 0.2 },
            Probe { rbar: Vec3::zeros(), t: 0.0, tau_c: 0.2 },
            Probe { rbar: Vec3::new(0.0, 0.3, 0.0), t: 1.5, tau_c: 0.4 },
        ];
        let eval = MultiProbeEvaluator::new(grid, probes.clone(), Channels::All);
        let seed = ensemble_seed(cfg.seed, 3);
        let got = eval.evaluate(seed);
        for (p, a) in probes.iter().zip(&got) {
            let bank = ModeBank::full(seed, grid, p.tau_c);
            let want = eval_a(&bank, &p.rbar, p.t);
            assert!((a - want).norm() < 1e-12 * want.norm());
        }
    }

    #[test]
    fn moments_merge_like_a_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 - 4.0).collect();
        let mut whole = MomentAccumulator::new(1);
        let (mut a, mut b) = (MomentAccumulator::new(1), MomentAccumulator::new(1));
        for (i, x) in xs.iter().enumerate() {
            whole.push(&[*x]);
            if i < 40 { a.push(&[*x]) } else { b.push(&[*x]) }
        }
        a.merge(&b);
        assert_eq!(a.count, whole.count);
        assert!((a.mean()[0] - whole.mean()[0]).abs() < 1e-14);
        assert!((a.stderr()[0] - whole.stderr()[0]).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn correlators_are_even_in_time(r in 0.0f64..0.5, dt in 0.2f64..5.0, tau in 1e-3f64..0.5) {
            prop_assert!((cs_analytic(r, dt, tau) - cs_analytic(r, -dt, tau)).abs() < 1e-12 * cs_analytic(r, dt, tau).abs().max(1e-3));
            prop_assert!((cp_analytic(r, dt, tau) - cp_analytic(r, -dt, tau)).abs() < 1e-9 * cp_analytic(r, dt, tau).abs().max(1e-3));
        }

        #[test]
        fn decomposition_identities(r in 1e-3f64..0.5, dt in 0.2f64..5.0, tau in 1e-3f64..0.5) {
            let d = CorrelatorDecomposition::new(r, dt, tau);
            prop_assert_eq!(d.c0, d.cs - d.cp);
            prop_assert_eq!(d.c1, d.cs - 3.0 * d.cp);
            let rhat = Vec3::new(0.48, -0.6, 0.64);
            let t = d.tensor(&rhat);
            prop_assert!((t.trace() - (3.0 * d.c0 - d.c1)).abs() < 1e-12 * (d.c0.abs() + d.c1.abs()));
            let along = (rhat.transpose() * t * rhat)[0];
            prop_assert!((along - (d.c0 - d.c1)).abs() < 1e-12 * (d.c0.abs() + d.c1.abs()));
        }
    }
}
