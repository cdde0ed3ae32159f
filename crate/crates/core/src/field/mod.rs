//! Stochastic vacuum field: mode bank, evaluation, and time sampling.

pub mod bank;
pub mod eval;
pub mod lambda;
pub mod sampler;

pub use bank::{build_mode_bank, Channels, ModeBank, ModeCoefficients, ModeGrid, Window, WindowChange};
pub use eval::{eval_a, eval_e, eval_f, field_coefficients, FieldCoefficients, FieldSample};
pub use lambda::{lambda_matrices, LambdaMatrices};
pub use sampler::{lagrange5_weights, CoefficientSampler, SegmentGrid, SumEngine};
