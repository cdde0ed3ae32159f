//! Self-checks of the field synthesis against its analytic properties: the
//! lambda contraction identity, the Coulomb gauge, `E = -dA/dt`,
//! `F = curl A`, and Monte-Carlo correlators against their closed forms.

use nalgebra::Matrix3;
use rand::Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::time::Instant;

use crate::correlator::{
    ensemble_seed, extract_r2_coefficients, mc_estimate, McConfig, MultiProbeEvaluator, Probe, R2Extraction,
};
use crate::field::bank::{Channels, ModeBank, ModeGrid};
use crate::field::eval::{eval_a, eval_e, eval_f};
use crate::field::lambda::{lambda_matrices, LambdaMatrices};
use crate::rng::stream_rng;
use crate::units::{PhysicalParams, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

/// One line of a z-score table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZRow {
    pub point: String,
    pub component: String,
    pub mean: f64,
    pub stderr: f64,
    pub target: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub rows: Vec<ZRow>,
    pub seconds: f64,
}

// ---------------------------------------------------------------------------

/// Largest contraction residual accepted: the entries carry sqrt(3) and
/// sqrt(5), whose squares are off by an ulp; any real defect is O(1).
pub const LAMBDA_RESIDUAL_TOLERANCE: f64 = 1e-14;

pub fn lambda_identity_suite(lambda: &LambdaMatrices) -> SuiteResult {
    let start = Instant::now();
    let residual = lambda.identity_residual();
    let traceless = lambda.iter().all(|m| m.trace() == 0.0);
    SuiteResult {
        name: "lambda-identity",
        passed: residual < LAMBDA_RESIDUAL_TOLERANCE && traceless,
        detail: format!("max residual over 81 index tuples {residual:e}; traceless: {traceless}"),
        rows: Vec::new(),
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// The eighth matrix with its `-2` diagonal entry changed to `-1`.
pub fn tampered_lambda8() -> LambdaMatrices {
    let mut l = lambda_matrices();
    l.0[7][(2, 2)] = -1.0;
    l
}

// ---------------------------------------------------------------------------

/// Worst relative errors over the sampled points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaugeReport {
    pub points: usize,
    /// `|div A|` relative to the Frobenius norm of the Jacobian.
    pub divergence: f64,
    /// `|E + dA/dt|` relative to `|E|`.
    pub electric: f64,
    /// `|F - curl A|` relative to `|F|`.
    pub magnetic: f64,
}

/// Central-difference checks at `points` random (bank, position, time)
/// triples. Each point draws its own bank on a small grid.
pub fn gauge_check(points: usize, seed: u64) -> GaugeReport {
    let params = PhysicalParams::hydrogen_like(3.0);
    let za = params.za;
    let mut rng = stream_rng(seed, 0, 0);
    let mut report = GaugeReport { points, divergence: 0.0, electric: 0.0, magnetic: 0.0 };
    for p in 0..points {
        let grid = ModeGrid::covering(rng.random_range(5..40), rng.random_range(5.0..30.0)).expect("grid");
        let bank = ModeBank::full(seed ^ (p as u64).wrapping_mul(0x9e37_79b9), grid, params.tau_c);
        let rbar = Vec3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2));
        let t = rng.random_range(0.0..100.0);

        // A is a quadratic polynomial in rbar, so central differences are
        // exact up to rounding and the step can be large
        let h = 1e-3;
        let mut jac = Matrix3::zeros(); // jac[(i, j)] = d_i A_j
        for i in 0..3 {
            let mut e = Vec3::zeros();
            e[i] = h;
            let d = (eval_a(&bank, &(rbar + e), t) - eval_a(&bank, &(rbar - e), t)) / (2.0 * h);
            jac.set_row(i, &d.transpose());
        }
        report.divergence = report.divergence.max(jac.trace().abs() / jac.norm());

        let ht = 1e-4;
        let dadt = (eval_a(&bank, &rbar, t + ht) - eval_a(&bank, &rbar, t - ht)) / (2.0 * ht);
        let e = eval_e(&bank, &rbar, t);
        report.electric = report.electric.max((e + dadt).norm() / e.norm());

        let curl = (jac - jac.transpose()) * za;
        let f = eval_f(&bank, &(rbar / za), t, za);
        report.magnetic = report.magnetic.max((f - curl).norm() / f.norm());
    }
    report
}

pub fn gauge_suite(level: Level, seed: u64) -> SuiteResult {
    let start = Instant::now();
    let points = match level {
        Level::Quick => 100,
        Level::Full => 1000,
    };
    let g = gauge_check(points, seed);
    SuiteResult {
        name: "gauge-consistency",
        passed: g.divergence < 1e-6 && g.electric < 1e-5 && g.magnetic < 1e-5,
        detail: format!(
            "{} points: div {:.2e} (< 1e-6), E vs -dA/dt {:.2e} (< 1e-5), F vs curl A {:.2e} (< 1e-5)",
            g.points, g.divergence, g.electric, g.magnetic
        ),
        rows: Vec::new(),
        seconds: start.elapsed().as_secs_f64(),
    }
}

// ---------------------------------------------------------------------------

/// `-(1/pi) Re[1/(dt - i tau)^2]`, the isotropic correlator at the origin.
pub fn origin_target(dt: f64, tau_c: f64) -> f64 {
    let d = num_complex::Complex64::new(dt, -tau_c);
    -(1.0 / (d * d)).re / PI
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OriginCorrelator {
    pub dt: f64,
    pub tau_c: f64,
    pub mean: f64,
    pub stderr: f64,
    pub target: f64,
}

impl OriginCorrelator {
    pub fn z(&self) -> f64 {
        (self.mean - self.target) / self.stderr
    }
}

/// `tr <A(dt, 0) A(0, 0)^T> / 3` at each separation, one bank per ensemble.
pub fn origin_correlators(config: &McConfig, dts: &[f64], tau_c: f64, n_ensembles: u64) -> Vec<OriginCorrelator> {
    let mut probes = vec![Probe { rbar: Vec3::zeros(), t: 0.0, tau_c }];
    probes.extend(dts.iter().map(|&dt| Probe { rbar: Vec3::zeros(), t: dt, tau_c }));
    let eval = MultiProbeEvaluator::new(config.grid(), probes, Channels::Vector);
    let acc = mc_estimate(n_ensembles, dts.len(), |e| {
        let a = eval.evaluate(ensemble_seed(config.seed, e));
        a[1..].iter().map(|x| x.dot(&a[0]) / 3.0).collect()
    });
    let (mean, err) = (acc.mean(), acc.stderr());
    dts.iter()
        .enumerate()
        .map(|(i, &dt)| OriginCorrelator { dt, tau_c, mean: mean[i], stderr: err[i], target: origin_target(dt, tau_c) })
        .collect()
}

/// Settings of the two Monte-Carlo checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelatorPlan {
    pub origin: McConfig,
    pub origin_tau_c: f64,
    pub origin_ensembles: u64,
    pub r2: McConfig,
    pub r2_ensembles: u64,
}

pub const ORIGIN_SEPARATIONS: [f64; 4] = [0.5, 1.0, 2.0, 5.0];
pub const R2_SEPARATIONS: [f64; 3] = [0.5, 1.0, 2.0];

impl CorrelatorPlan {
    pub fn new(level: Level, seed: u64) -> Self {
        let (origin_ensembles, r2_ensembles) = match level {
            Level::Quick => (1_000, 10_000),
            Level::Full => (20_000, 100_000),
        };
        Self {
            // W(100) = exp(-12.5): the truncated tail is far below the noise
            origin: McConfig { n_per_unit: 2000, omega_max: 100.0, seed },
            origin_tau_c: 0.25,
            origin_ensembles,
            r2: McConfig { n_per_unit: 200, omega_max: 80.0, seed: seed ^ 0x5eed },
            r2_ensembles,
        }
    }

    /// The r^2 coefficient is measured with `tau_c = dt`, where it is
    /// largest relative to the sampling noise.
    pub fn r2_cases(&self) -> Vec<(f64, f64)> {
        R2_SEPARATIONS.iter().map(|&dt| (dt, dt)).collect()
    }
}

pub fn origin_rows(estimates: &[OriginCorrelator]) -> Vec<ZRow> {
    estimates
        .iter()
        .map(|c| ZRow {
            point: format!("r=q=0 dt={} tau={}", c.dt, c.tau_c),
            component: "tr/3".into(),
            mean: c.mean,
            stderr: c.stderr,
            target: c.target,
            z: c.z(),
        })
        .collect()
}

pub fn r2_rows(estimates: &[R2Extraction]) -> Vec<ZRow> {
    estimates
        .iter()
        .map(|c| ZRow {
            point: format!("r^2 coefficient dt={} tau={}", c.dt, c.tau_c),
            component: "rr-2r^2".into(),
            mean: c.estimate,
            stderr: c.stderr,
            target: c.target,
            z: (c.estimate - c.target) / c.stderr,
        })
        .collect()
}

pub fn correlator_suite(level: Level, seed: u64) -> SuiteResult {
    let start = Instant::now();
    let plan = CorrelatorPlan::new(level, seed);
    let origin = origin_correlators(&plan.origin, &ORIGIN_SEPARATIONS, plan.origin_tau_c, plan.origin_ensembles);
    let r2 = extract_r2_coefficients(&plan.r2, Vec3::new(0.3, -0.2, 0.1), &plan.r2_cases(), plan.r2_ensembles);
    let origin_ok = origin.iter().all(|c| c.z().abs() < 3.0);
    let r2_ok = r2.iter().all(|c| c.relative_error() < 0.10);
    let worst_z = origin.iter().map(|c| c.z().abs()).fold(0.0, f64::max);
    let worst_rel = r2.iter().map(|c| c.relative_error()).fold(0.0, f64::max);
    let mut rows = origin_rows(&origin);
    rows.extend(r2_rows(&r2));
    SuiteResult {
        name: "mc-correlators",
        passed: origin_ok && r2_ok,
        detail: format!(
            "origin: {} ensembles, max |z| {worst_z:.2} (< 3); r^2: {} ensembles, max rel err {:.1}% (< 10%)",
            plan.origin_ensembles,
            plan.r2_ensembles,
            100.0 * worst_rel
        ),
        rows,
        seconds: start.elapsed().as_secs_f64(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub level: Level,
    pub seed: u64,
    pub tamper_lambda8: bool,
}

pub fn run_all(opts: &VerifyOptions) -> Vec<SuiteResult> {
    let lambda = if opts.tamper_lambda8 { tampered_lambda8() } else { lambda_matrices() };
    vec![
        lambda_identity_suite(&lambda),
        gauge_suite(opts.level, opts.seed),
        correlator_suite(opts.level, opts.seed),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_passes_and_tampering_fails() {
        let good = lambda_identity_suite(&lambda_matrices());
        assert!(good.passed, "{}", good.detail);
        let bad = lambda_identity_suite(&tampered_lambda8());
        assert!(!bad.passed, "{}", bad.detail);
    }

    #[test]
    fn gauge_on_a_few_points() {
        let g = gauge_check(10, 3);
        assert!(g.divergence < 1e-6 && g.electric < 1e-5 && g.magnetic < 1e-5, "{g:?}");
    }

    #[test]
    fn origin_target_limits() {
        assert!((origin_target(1.0, 0.0) + 1.0 / PI).abs() < 1e-15);
        // Re 1/(dt - i tau)^2 = (dt^2 - tau^2) / (dt^2 + tau^2)^2
        assert!((origin_target(2.0, 1.0) + 3.0 / 25.0 / PI).abs() < 1e-15);
    }
}
