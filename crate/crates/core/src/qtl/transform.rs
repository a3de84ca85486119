//! Rank-based transformation of phenotypes to normal quantiles.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Replaces each non-missing value by Φ⁻¹[(R − 0.5)/n], where R is its rank
/// among the n non-missing values (ties receive average ranks). Missing
/// entries (NaN) are preserved.
pub fn normal_quantile_transform(values: &[f64]) -> Result<Vec<f64>> {
    let present: Vec<usize> = (0..values.len()).filter(|&i| !values[i].is_nan()).collect();
    if present.is_empty() {
        return Err(Error::invalid(
            "quantile transform",
            "all values are missing",
        ));
    }
    let n = present.len() as f64;

    let mut order = present.clone();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());

    let normal = Normal::standard();
    let mut out = values.to_vec();
    let mut i = 0;
    while i < order.len() {
        // Run of tied values shares the average of its ranks.
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let y = normal.inverse_cdf((avg_rank - 0.5) / n);
        for &idx in &order[i..=j] {
            out[idx] = y;
        }
        i = j + 1;
    }
    Ok(out)
}
