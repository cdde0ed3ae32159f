//! Reference densities for the energy and radius distributions, their
//! closed-form CDFs, a quadrature CDF, and inverse-transform samplers.

use gauss_quad::legendre::GaussLegendre;
use rand::Rng;
use std::num::NonZeroUsize;

use crate::error::{Result, SedError};

/// `P(E) = 4/(3|E|^6) exp(-2/|E|)` for bound energies.
pub fn conjecture_energy_pdf(energy: f64) -> Result<f64> {
    if !(energy < 0.0) {
        return Err(SedError::Domain { what: "energy", value: energy });
    }
    let x = -energy;
    Ok(4.0 / (3.0 * x.powi(6)) * (-2.0 / x).exp())
}

/// `P(r) = 4 r^2 exp(-2r)`.
pub fn quantum_radial_pdf(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(SedError::Domain { what: "radius", value: r });
    }
    Ok(4.0 * r * r * (-2.0 * r).exp())
}

/// `Q(k, u) = exp(-u) sum_{j<k} u^j / j!`, the upper regularized incomplete
/// gamma function at integer order.
fn gamma_upper_integer(k: u32, u: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..k {
        term *= u / j as f64;
        sum += term;
    }
    (-u).exp() * sum
}

/// `P(E' <= E)`: with `u = 2/|E|` the density is a Gamma(5) in `u`.
pub fn conjecture_energy_cdf(energy: f64) -> Result<f64> {
    if !(energy < 0.0) {
        return Err(SedError::Domain { what: "energy", value: energy });
    }
    // the upper tail of u is the lower tail of E
    Ok(1.0 - gamma_upper_integer(5, -2.0 / energy))
}

/// `P(r' <= r)`: `2r` is Gamma(3) distributed.
pub fn quantum_radial_cdf(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(SedError::Domain { what: "radius", value: r });
    }
    Ok(1.0 - gamma_upper_integer(3, 2.0 * r))
}

/// A one-dimensional density on an interval that may be unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    ConjectureEnergy,
    QuantumRadius,
}

impl Reference {
    pub fn pdf(&self, x: f64) -> f64 {
        // zero outside the support, so histograms may straddle its edge
        match self {
            Reference::ConjectureEnergy => conjecture_energy_pdf(x).unwrap_or(0.0),
            Reference::QuantumRadius => quantum_radial_pdf(x).unwrap_or(0.0),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Reference::ConjectureEnergy => conjecture_energy_cdf(x).unwrap_or(1.0),
            Reference::QuantumRadius => quantum_radial_cdf(x).unwrap_or(0.0),
        }
    }

    /// Open support `(lo, hi)`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Reference::ConjectureEnergy => (f64::NEG_INFINITY, 0.0),
            Reference::QuantumRadius => (0.0, f64::INFINITY),
        }
    }

    pub fn mode(&self) -> f64 {
        match self {
            Reference::ConjectureEnergy => -1.0 / 3.0,
            Reference::QuantumRadius => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Reference::ConjectureEnergy => "energy",
            Reference::QuantumRadius => "radius",
        }
    }
}

/// Adaptive Gauss-Legendre quadrature with semi-infinite intervals mapped
/// onto `[0, 1)` by `x = a + t/(1-t)`.
pub struct Quadrature {
    rule: GaussLegendre,
    tol: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::new(1e-13)
    }
}

impl Quadrature {
    pub fn new(tol: f64) -> Self {
        Self { rule: GaussLegendre::new(NonZeroUsize::new(10).unwrap()), tol }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        self.integrate_dyn(&f, a, b)
    }

    fn integrate_dyn(&self, f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        match (a.is_finite(), b.is_finite()) {
            (true, true) => self.adaptive(f, a, b, self.tol, 0),
            (true, false) => {
                let g = |t: f64| {
                    let s = 1.0 - t;
                    f(a + t / s) / (s * s)
                };
                self.adaptive(&g, 0.0, 1.0, self.tol, 0)
            }
            (false, true) => {
                let g = |t: f64| {
                    let s = 1.0 - t;
                    f(b - t / s) / (s * s)
                };
                self.adaptive(&g, 0.0, 1.0, self.tol, 0)
            }
            (false, false) => self.integrate_dyn(f, a, 0.0) + self.integrate_dyn(f, 0.0, b),
        }
    }

    fn adaptive(&self, f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let whole = self.rule.integrate(a, b, f);
        let m = 0.5 * (a + b);
        let left = self.rule.integrate(a, m, f);
        let right = self.rule.integrate(m, b, f);
        if depth >= 40 || (left + right - whole).abs() <= tol.max(1e-15 * (left + right).abs()) {
            left + right
        } else {
            self.adaptive(f, a, m, 0.5 * tol, depth + 1) + self.adaptive(f, m, b, 0.5 * tol, depth + 1)
        }
    }
}

/// Reference CDF by quadrature, evaluated at ascending points: each call
/// integrates only from the previous point.
pub struct NumericCdf<'a> {
    reference: Reference,
    quad: &'a Quadrature,
    x: f64,
    value: f64,
}

impl<'a> NumericCdf<'a> {
    pub fn new(reference: Reference, quad: &'a Quadrature) -> Self {
        Self { reference, quad, x: reference.support().0, value: 0.0 }
    }

    /// CDF at `x`, which must not be smaller than the previous argument.
    pub fn at(&mut self, x: f64) -> f64 {
        let (lo, hi) = self.reference.support();
        let x = x.clamp(lo, hi);
        debug_assert!(x >= self.x, "NumericCdf arguments must ascend");
        if x > self.x {
            self.value += self.quad.integrate(|y| self.reference.pdf(y), self.x, x);
            self.x = x;
        }
        self.value
    }
}

/// Inverse of the closed-form CDF, by safeguarded Newton iteration.
pub fn inverse_cdf(reference: Reference, p: f64) -> f64 {
    let (mut lo, mut hi) = match reference {
        Reference::ConjectureEnergy => (-1.0, -1e-300),
        Reference::QuantumRadius => (0.0, 1.0),
    };
    // grow the open end until it brackets p
    match reference {
        Reference::ConjectureEnergy => {
            while reference.cdf(lo) > p {
                lo *= 2.0;
            }
        }
        Reference::QuantumRadius => {
            while reference.cdf(hi) < p {
                hi *= 2.0;
            }
        }
    }
    let mut x = reference.mode().clamp(lo, hi);
    for _ in 0..200 {
        let f = reference.cdf(x) - p;
        if f == 0.0 {
            return x;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = reference.pdf(x);
        let newton = x - f / d;
        let next = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-15 * x.abs().max(1e-300) || hi - lo <= 1e-15 * hi.abs().max(lo.abs()) {
            return next;
        }
        x = next;
    }
    x
}

pub fn sample<R: Rng + ?Sized>(reference: Reference, rng: &mut R) -> f64 {
    // open interval: p = 0 or 1 maps to the end of the support
    let p: f64 = rng.random_range(f64::EPSILON..1.0);
    inverse_cdf(reference, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdf_examples() {
        assert!((conjecture_energy_pdf(-1.0).unwrap() - 0.180447).abs() < 5e-7);
        assert!((quantum_radial_pdf(1.0).unwrap() - 4.0 * (-2f64).exp()).abs() < 1e-16);
        assert!(conjecture_energy_pdf(0.0).is_err());
        assert!(conjecture_energy_pdf(0.5).is_err());
        assert!(quantum_radial_pdf(-1e-9).is_err());
    }

    #[test]
    fn normalization_by_quadrature() {
        let q = Quadrature::default();
        for r in [Reference::ConjectureEnergy, Reference::QuantumRadius] {
            let (lo, hi) = r.support();
            let total = q.integrate(|x| r.pdf(x), lo, hi);
            assert!((total - 1.0).abs() < 1e-10, "{r:?}: {total}");
        }
        let mean_r = q.integrate(|x| x * Reference::QuantumRadius.pdf(x), 0.0, f64::INFINITY);
        assert!((mean_r - 1.5).abs() < 1e-10);
    }

    #[test]
    fn closed_form_cdf_matches_quadrature() {
        let q = Quadrature::default();
        for r in [Reference::ConjectureEnergy, Reference::QuantumRadius] {
            let mut numeric = NumericCdf::new(r, &q);
            let xs: Vec<f64> = match r {
                Reference::ConjectureEnergy => (1..200).map(|k| -8.0 + 0.04 * k as f64).collect(),
                Reference::QuantumRadius => (0..200).map(|k| 0.05 * k as f64).collect(),
            };
            for x in xs {
                let (a, b) = (numeric.at(x), r.cdf(x));
                assert!((a - b).abs() < 1e-11, "{r:?} at {x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn modes() {
        // derivative of the log density vanishes at the mode
        let h = 1e-5;
        for r in [Reference::ConjectureEnergy, Reference::QuantumRadius] {
            let m = r.mode();
            let slope = (r.pdf(m + h).ln() - r.pdf(m - h).ln()) / (2.0 * h);
            assert!(slope.abs() < 1e-6, "{r:?}: {slope}");
            assert!(r.pdf(m) > r.pdf(m + 0.01) && r.pdf(m) > r.pdf(m - 0.01));
        }
    }

    #[test]
    fn inverse_cdf_round_trips() {
        for r in [Reference::ConjectureEnergy, Reference::QuantumRadius] {
            for p in [1e-9, 1e-4, 0.1, 0.5, 0.9, 0.999_999] {
                let x = inverse_cdf(r, p);
                assert!((r.cdf(x) - p).abs() < 1e-12 * p.max(1e-3), "{r:?} p={p} x={x}");
            }
        }
    }
}
