//! Field evaluation to second order in the scaled position `rbar = Z alpha r`.
//!
//! Each mode contributes through two Gaussian vectors combined with its phase,
//! `u = B cos(wt) + A sin(wt)` and `g_a = beta1_a cos(wt) + beta2_a sin(wt)`:
//!
//! ```text
//! A_i = sum_n c_n [ u_i + w/(4 sqrt5) g_a (L^a rbar)_i + w^2/10 ((u.rbar) rbar_i - 2 u_i rbar^2) ]
//! ```
//!
//! with `c_n = sqrt(dw w / pi) W(w) w_n`. `E = -dA/dt` and `F_ij = d_i A_j - d_j A_i`
//! follow mode by mode. Because the position enters only polynomially, every
//! field is an exact assembly of 28 time-dependent sums ([`FieldCoefficients`]).

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::bank::ModeBank;
use super::lambda::{lambda_matrices, LambdaMatrices, ANTISYMMETRIC};
use crate::units::Vec3;

/// `1 / (4 sqrt 5)`.
pub const LINEAR_FACTOR: f64 = 0.111_803_398_874_989_48;

/// Per-mode weights of the three spatial orders.
#[inline]
fn order_factors(omega: f64) -> (f64, f64) {
    (omega * LINEAR_FACTOR, omega * omega / 10.0)
}

/// Time-dependent sums from which A, E and F are assembled exactly.
///
/// `a*` are the A-field sums, `e*` the E-field sums (`e = -d/dt a`).
/// Order 0 and 2 are vectors, order 1 carries one weight per lambda matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldCoefficients {
    pub a0: [f64; 3],
    pub a1: [f64; 8],
    pub a2: [f64; 3],
    pub e0: [f64; 3],
    pub e1: [f64; 8],
    pub e2: [f64; 3],
}

impl FieldCoefficients {
    pub const LEN: usize = 28;

    pub fn to_array(&self) -> [f64; Self::LEN] {
        let mut out = [0.0; Self::LEN];
        out[0..3].copy_from_slice(&self.a0);
        out[3..11].copy_from_slice(&self.a1);
        out[11..14].copy_from_slice(&self.a2);
        out[14..17].copy_from_slice(&self.e0);
        out[17..25].copy_from_slice(&self.e1);
        out[25..28].copy_from_slice(&self.e2);
        out
    }

    pub fn from_array(x: &[f64; Self::LEN]) -> Self {
        let mut c = Self::default();
        c.a0.copy_from_slice(&x[0..3]);
        c.a1.copy_from_slice(&x[3..11]);
        c.a2.copy_from_slice(&x[11..14]);
        c.e0.copy_from_slice(&x[14..17]);
        c.e1.copy_from_slice(&x[17..25]);
        c.e2.copy_from_slice(&x[25..28]);
        c
    }

    pub fn assemble_a(&self, lambda: &LambdaMatrices, rbar: &Vec3) -> Vec3 {
        assemble(&self.a0, &self.a1, &self.a2, lambda, rbar)
    }

    pub fn assemble_e(&self, lambda: &LambdaMatrices, rbar: &Vec3) -> Vec3 {
        assemble(&self.e0, &self.e1, &self.e2, lambda, rbar)
    }

    /// Field tensor at Bohr-unit position `r`; `za = Z alpha`.
    pub fn assemble_f(&self, lambda: &LambdaMatrices, r: &Vec3, za: f64) -> Matrix3<f64> {
        let rbar = r * za;
        let mut f = Matrix3::zeros();
        for &a in &ANTISYMMETRIC {
            f -= lambda.get(a) * (2.0 * self.a1[a]);
        }
        let q = Vec3::from(self.a2);
        let outer = q * rbar.transpose();
        f += (outer - outer.transpose()) * 5.0;
        f * za
    }

    pub fn sample(&self, lambda: &LambdaMatrices, r: &Vec3, za: f64) -> FieldSample {
        FieldSample { e: self.assemble_e(lambda, &(r * za)), f: self.assemble_f(lambda, r, za) }
    }
}

fn assemble(x0: &[f64; 3], x1: &[f64; 8], x2: &[f64; 3], lambda: &LambdaMatrices, rbar: &Vec3) -> Vec3 {
    let mut out = Vec3::from(*x0);
    for (a, m) in lambda.iter().enumerate() {
        out += (m * rbar) * x1[a];
    }
    let q = Vec3::from(*x2);
    out += rbar * q.dot(rbar) - q * (2.0 * rbar.norm_squared());
    out
}

/// Electric field and field tensor at one space-time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub e: Vec3,
    pub f: Matrix3<f64>,
}

impl FieldSample {
    pub const ZERO: Self = Self { e: Vec3::new(0.0, 0.0, 0.0), f: Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0) };

    /// `B_k = 1/2 eps_ijk F_ij`.
    pub fn b(&self) -> Vec3 {
        let f = &self.f;
        Vec3::new(f[(1, 2)], f[(2, 0)], f[(0, 1)])
    }

    /// `(v x B)_i = F_ij v_j`.
    #[inline]
    pub fn lorentz(&self, v: &Vec3) -> Vec3 {
        self.f * v
    }
}

/// All 28 sums at time `t`, evaluated mode by mode.
pub fn field_coefficients(bank: &ModeBank, t: f64) -> FieldCoefficients {
    let grid = bank.grid();
    let mut c = FieldCoefficients::default();
    for n in bank.admitted() {
        let amp = bank.amplitude(n);
        if amp == 0.0 {
            continue;
        }
        let omega = grid.omega(n);
        let (s, co) = (omega * t).sin_cos();
        let m = bank.coefficients(n);
        let (k1, k2) = order_factors(omega);
        for i in 0..3 {
            let u = m.b[i] * co + m.a[i] * s;
            let up = m.b[i] * s - m.a[i] * co;
            c.a0[i] += amp * u;
            c.a2[i] += amp * k2 * u;
            c.e0[i] += amp * omega * up;
            c.e2[i] += amp * omega * k2 * up;
        }
        for a in 0..8 {
            let g = m.beta1[a] * co + m.beta2[a] * s;
            let gp = m.beta1[a] * s - m.beta2[a] * co;
            c.a1[a] += amp * k1 * g;
            c.e1[a] += amp * omega * k1 * gp;
        }
    }
    c
}

/// Vector potential at scaled position `rbar`, summed directly per mode.
pub fn eval_a(bank: &ModeBank, rbar: &Vec3, t: f64) -> Vec3 {
    let lambda = lambda_matrices();
    let r2 = rbar.norm_squared();
    let mut out = Vec3::zeros();
    for n in bank.admitted() {
        let amp = bank.amplitude(n);
        if amp == 0.0 {
            continue;
        }
        let omega = bank.grid().omega(n);
        let (s, co) = (omega * t).sin_cos();
        let m = bank.coefficients(n);
        let (k1, k2) = order_factors(omega);
        let u = Vec3::from(m.b) * co + Vec3::from(m.a) * s;
        let mut term = u;
        for (a, l) in lambda.iter().enumerate() {
            let g = m.beta1[a] * co + m.beta2[a] * s;
            term += (l * rbar) * (k1 * g);
        }
        term += (rbar * u.dot(rbar) - u * (2.0 * r2)) * k2;
        out += term * amp;
    }
    out
}

/// Electric field `-dA/dt` at scaled position `rbar`, summed directly per mode.
pub fn eval_e(bank: &ModeBank, rbar: &Vec3, t: f64) -> Vec3 {
    let lambda = lambda_matrices();
    let r2 = rbar.norm_squared();
    let mut out = Vec3::zeros();
    for n in bank.admitted() {
        let amp = bank.amplitude(n);
        if amp == 0.0 {
            continue;
        }
        let omega = bank.grid().omega(n);
        let (s, co) = (omega * t).sin_cos();
        let m = bank.coefficients(n);
        let (k1, k2) = order_factors(omega);
        let up = Vec3::from(m.b) * s - Vec3::from(m.a) * co;
        let mut term = up;
        for (a, l) in lambda.iter().enumerate() {
            let gp = m.beta1[a] * s - m.beta2[a] * co;
            term += (l * rbar) * (k1 * gp);
        }
        term += (rbar * up.dot(rbar) - up * (2.0 * r2)) * k2;
        out += term * (amp * omega);
    }
    out
}

/// Field tensor at Bohr-unit position `r`, summed directly per mode:
///
/// ```text
/// F_ij = -za sum_n sqrt(dw w^3/(20 pi)) W w_n sum_{a antisym} g_a L^a_ij
///      + za^2 sum_n sqrt(dw w^5/(4 pi)) W w_n (u_i r_j - u_j r_i)
/// ```
pub fn eval_f(bank: &ModeBank, r: &Vec3, t: f64, za: f64) -> Matrix3<f64> {
    let lambda = lambda_matrices();
    let grid = bank.grid();
    let dw = grid.d_omega();
    let pi = std::f64::consts::PI;
    let mut f = Matrix3::zeros();
    for n in bank.admitted() {
        let w = bank.window().weight(n);
        if w == 0.0 {
            continue;
        }
        let omega = grid.omega(n);
        let cut = bank.cutoff(omega) * w;
        let amp1 = (dw * omega.powi(3) / (20.0 * pi)).sqrt() * cut;
        let amp2 = (dw * omega.powi(5) / (4.0 * pi)).sqrt() * cut;
        let (s, co) = (omega * t).sin_cos();
        let m = bank.coefficients(n);
        for &a in &ANTISYMMETRIC {
            let g = m.beta1[a] * co + m.beta2[a] * s;
            f -= lambda.get(a) * (za * amp1 * g);
        }
        let u = Vec3::from(m.b) * co + Vec3::from(m.a) * s;
        let outer = u * r.transpose();
        f += (outer - outer.transpose()) * (za * za * amp2);
    }
    f
}
