//! Haley-Knott regression: LOD scores from least-squares fits of a
//! phenotype on conditional genotype probabilities.

use nalgebra::{DMatrix, DVector};

use crate::types::Sex;

/// Outcome of a single-position Haley-Knott fit.
#[derive(Clone, Copy, Debug)]
pub struct HkFit {
    pub lod: f64,
    /// The full design matrix was rank deficient and was fit with a
    /// pseudo-inverse.
    pub rank_deficient: bool,
    /// Samples actually used after dropping missing phenotypes (and, for
    /// covariate fits, unknown sex).
    pub n: usize,
}

/// LOD at one locus: (n/2)·log₁₀(RSS₀/RSS₁), where the full model regresses
/// the phenotype on [1, P(BR), P(RR)] plus the optional sex covariate (and
/// sex×probability interactions when `interactive`), and the null model
/// keeps only the intercept and covariate.
///
/// `pheno` and `probs` are row-aligned; samples with a missing (NaN)
/// phenotype are dropped, as are samples of unknown sex whenever sex enters
/// the model.
pub fn hk_lod_at(
    pheno: &[f64],
    probs: &[[f64; 3]],
    sex: Option<&[Sex]>,
    interactive: bool,
) -> HkFit {
    assert_eq!(pheno.len(), probs.len(), "pheno/probs must be row-aligned");
    if let Some(sex) = sex {
        assert_eq!(pheno.len(), sex.len(), "pheno/sex must be row-aligned");
    }

    let keep: Vec<usize> = (0..pheno.len())
        .filter(|&i| {
            !pheno[i].is_nan()
                && match sex {
                    Some(sex) => sex[i] != Sex::Unknown,
                    None => true,
                }
        })
        .collect();
    let n = keep.len();
    if n == 0 {
        return HkFit {
            lod: 0.0,
            rank_deficient: true,
            n: 0,
        };
    }

    let y = DVector::from_iterator(n, keep.iter().map(|&i| pheno[i]));

    let mut null_cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
    let mut full_cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
    if let Some(sex) = sex {
        let sex_col: Vec<f64> = keep
            .iter()
            .map(|&i| if sex[i] == Sex::Male { 1.0 } else { 0.0 })
            .collect();
        null_cols.push(sex_col.clone());
        full_cols.push(sex_col);
    }
    let p_br: Vec<f64> = keep.iter().map(|&i| probs[i][1]).collect();
    let p_rr: Vec<f64> = keep.iter().map(|&i| probs[i][2]).collect();
    full_cols.push(p_br.clone());
    full_cols.push(p_rr.clone());
    if interactive {
        if let Some(sex) = sex {
            let sex_f = |i: &usize| if sex[keep[*i]] == Sex::Male { 1.0 } else { 0.0 };
            full_cols.push((0..n).map(|i| sex_f(&i) * p_br[i]).collect());
            full_cols.push((0..n).map(|i| sex_f(&i) * p_rr[i]).collect());
        }
    }

    let (rss0, _) = least_squares_rss(&null_cols, &y);
    let (rss1, deficient) = least_squares_rss(&full_cols, &y);

    let lod = if rss0 <= 0.0 {
        0.0
    } else if rss1 <= 0.0 {
        f64::INFINITY
    } else {
        ((n as f64) / 2.0 * (rss0 / rss1).log10()).max(0.0)
    };
    HkFit {
        lod,
        rank_deficient: deficient,
        n,
    }
}

/// Residual sum of squares of the least-squares fit of `y` on the given
/// columns, via SVD so rank-deficient designs fall back to the minimum-norm
/// solution. Returns (RSS, rank_deficient).
fn least_squares_rss(cols: &[Vec<f64>], y: &DVector<f64>) -> (f64, bool) {
    let n = y.len();
    let p = cols.len();
    let x = DMatrix::from_fn(n, p, |r, c| cols[c][r]);
    let svd = x.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = max_sv * (n.max(p) as f64) * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let beta = svd
        .solve(y, tol)
        .expect("SVD least-squares solve cannot fail when U and V are computed");
    let residual = y - x * beta;
    (residual.norm_squared(), rank < p)
}
