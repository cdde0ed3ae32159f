//! Histograms, reference densities, distribution distances and run
//! bookkeeping.

pub mod density;
pub mod histogram;
pub mod ks;
pub mod summary;

pub use density::{
    conjecture_energy_cdf, conjecture_energy_pdf, inverse_cdf, quantum_radial_cdf, quantum_radial_pdf, sample,
    NumericCdf, Quadrature, Reference,
};
pub use histogram::{Binning, Histogram};
pub use ks::{ks_distance, ks_distance_histogram, ks_distance_weighted};
pub use summary::{round_significant, run_summary, truncate_significant, RunSummary};
