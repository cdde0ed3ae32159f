//! The eight real 3x3 matrices that carry the linear-in-position part of the
//! field. Up to normalisation they are the SU(3) generators; the factors are
//! chosen so that
//! `sum_a L^a_ik L^a_jl = 2 (4 d_ij d_kl - d_ik d_jl - d_il d_jk)`.

use nalgebra::Matrix3;

/// Zero-based indices of the antisymmetric matrices (the 2nd, 5th and 7th).
pub const ANTISYMMETRIC: [usize; 3] = [1, 4, 6];

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaMatrices(pub [Matrix3<f64>; 8]);

impl LambdaMatrices {
    pub fn get(&self, a: usize) -> &Matrix3<f64> {
        &self.0[a]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Matrix3<f64>> {
        self.0.iter()
    }

    /// `sum_a L^a_ik L^a_jl` for one index tuple.
    pub fn contraction(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0.iter().map(|m| m[(i, k)] * m[(j, l)]).sum()
    }

    /// Largest deviation of the contraction from its closed form over all 81
    /// index tuples.
    pub fn identity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let got = self.contraction(i, j, k, l);
                        worst = worst.max((got - contraction_target(i, j, k, l)).abs());
                    }
                }
            }
        }
        worst
    }
}

/// `2 (4 d_ij d_kl - d_ik d_jl - d_il d_jk)`.
pub fn contraction_target(i: usize, j: usize, k: usize, l: usize) -> f64 {
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    2.0 * (4.0 * d(i, j) * d(k, l) - d(i, k) * d(j, l) - d(i, l) * d(j, k))
}

pub fn lambda_matrices() -> LambdaMatrices {
    let s3 = 3f64.sqrt();
    let s5 = 5f64.sqrt();
    #[rustfmt::skip]
    let m = [
        Matrix3::new(0.0, s3, 0.0,
                     s3, 0.0, 0.0,
                     0.0, 0.0, 0.0),
        Matrix3::new(0.0, -s5, 0.0,
                     s5, 0.0, 0.0,
                     0.0, 0.0, 0.0),
        Matrix3::new(s3, 0.0, 0.0,
                     0.0, -s3, 0.0,
                     0.0, 0.0, 0.0),
        Matrix3::new(0.0, 0.0, s3,
                     0.0, 0.0, 0.0,
                     s3, 0.0, 0.0),
        Matrix3::new(0.0, 0.0, -s5,
                     0.0, 0.0, 0.0,
                     s5, 0.0, 0.0),
        Matrix3::new(0.0, 0.0, 0.0,
                     0.0, 0.0, s3,
                     0.0, s3, 0.0),
        Matrix3::new(0.0, 0.0, 0.0,
                     0.0, 0.0, -s5,
                     0.0, s5, 0.0),
        Matrix3::new(1.0, 0.0, 0.0,
                     0.0, 1.0, 0.0,
                     0.0, 0.0, -2.0),
    ];
    LambdaMatrices(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_matrix_entries() {
        let l = lambda_matrices();
        let m = l.get(0);
        for i in 0..3 {
            for k in 0..3 {
                let want = if (i, k) == (0, 1) || (i, k) == (1, 0) { 3f64.sqrt() } else { 0.0 };
                assert_eq!(m[(i, k)], want);
            }
        }
    }

    #[test]
    fn traceless_and_symmetry_classes() {
        let l = lambda_matrices();
        for (a, m) in l.iter().enumerate() {
            assert_eq!(m.trace(), 0.0, "matrix {a}");
            if ANTISYMMETRIC.contains(&a) {
                assert_eq!(m + m.transpose(), Matrix3::zeros(), "matrix {a}");
            } else {
                assert_eq!(m - m.transpose(), Matrix3::zeros(), "matrix {a}");
            }
        }
    }

    #[test]
    fn contraction_identity_all_tuples() {
        let l = lambda_matrices();
        // brute force sum against the closed form, sampled values first
        assert!((l.contraction(0, 0, 0, 0) - 4.0).abs() < 1e-14);
        assert!((l.contraction(0, 1, 0, 1) + 2.0).abs() < 1e-14);
        assert!(l.identity_residual() < 1e-14);
    }

    #[test]
    fn tampered_matrix_breaks_identity() {
        let mut l = lambda_matrices();
        l.0[7][(2, 2)] = -1.0;
        assert!(l.identity_residual() > 0.5);
    }
}
