//! Kolmogorov-Smirnov distances against a reference density, with the
//! reference CDF obtained by quadrature of the pdf.

use crate::error::{Result, SedError};
use crate::stats::density::{NumericCdf, Quadrature, Reference};
use crate::stats::histogram::Histogram;

/// Unweighted KS distance `sup |F_n - F|`.
pub fn ks_distance(samples: &[f64], reference: Reference) -> Result<f64> {
    ks_distance_weighted(samples, &vec![1.0; samples.len()], reference)
}

/// KS distance of the weighted empirical CDF. Ties are merged, so the result
/// does not depend on sample order.
pub fn ks_distance_weighted(samples: &[f64], weights: &[f64], reference: Reference) -> Result<f64> {
    if samples.len() != weights.len() {
        return Err(SedError::Config("samples and weights differ in length".into()));
    }
    let mut pairs: Vec<(f64, f64)> =
        samples.iter().zip(weights).filter(|(x, w)| x.is_finite() && **w > 0.0).map(|(x, w)| (*x, *w)).collect();
    if pairs.is_empty() {
        return Err(SedError::Empty("no samples with positive weight"));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let quad = Quadrature::new(1e-14);
    let mut cdf = NumericCdf::new(reference, &quad);
    let mut below = 0.0;
    let mut worst = 0.0f64;
    let mut i = 0;
    while i < pairs.len() {
        let x = pairs[i].0;
        let mut w = 0.0;
        while i < pairs.len() && pairs[i].0 == x {
            w += pairs[i].1;
            i += 1;
        }
        let f = cdf.at(x);
        let before = below / total;
        below += w;
        let after = below / total;
        worst = worst.max((f - before).abs()).max((after - f).abs());
    }
    Ok(worst)
}

/// KS distance evaluated at the bin edges of a histogram (a lower bound on
/// the sample KS distance). Under- and overflow weight counts as mass
/// beyond the range.
pub fn ks_distance_histogram(hist: &Histogram, reference: Reference) -> Result<f64> {
    if !(hist.total_weight > 0.0) {
        return Err(SedError::Empty("histogram is empty"));
    }
    let quad = Quadrature::new(1e-14);
    let mut cdf = NumericCdf::new(reference, &quad);
    let mut below = hist.underflow;
    let edges = hist.edges();
    let mut worst = (cdf.at(edges[0]) - below / hist.total_weight).abs();
    for (edge, count) in edges[1..].iter().zip(&hist.counts) {
        below += count;
        worst = worst.max((cdf.at(*edge) - below / hist.total_weight).abs());
    }
    Ok(worst)
}
