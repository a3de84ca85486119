//! Alignment of expression arrays across tissues.
//!
//! For each tissue pair, probes whose between-tissue correlation across
//! samples is high form the comparison set; correlations between samples
//! over that set form a similarity matrix, and the per-tissue median across
//! pairs drives the relabel decisions. Within-tissue correlations over the
//! same probes expose duplicate arrays.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::decide::{decide_from_similarity, DecisionParams};
use crate::error::Result;
use crate::types::{
    Evidence, ExpressionSet, RelabelDecision, ScoreRange, SimilarityMatrix, Verdict,
};

/// Pearson correlation over pairwise-complete entries.
///
/// Returns `None` with fewer than three complete pairs or when either side
/// has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    debug_assert_eq!(x.len(), y.len());
    let mut n = 0.0;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        if a.is_nan() || b.is_nan() {
            continue;
        }
        n += 1.0;
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    if n < 3.0 {
        return None;
    }
    let vx = sxx - sx * sx / n;
    let vy = syy - sy * sy / n;
    if vx <= 0.0 || vy <= 0.0 {
        return None;
    }
    let r = (sxy - sx * sy / n) / (vx * vy).sqrt();
    Some(r.clamp(-1.0, 1.0))
}

/// Probes correlated between a pair of tissues, with their correlations.
#[derive(Clone, Debug)]
pub struct TissuePairProbes {
    pub tissue_s: String,
    pub tissue_t: String,
    pub probe_ids: Vec<String>,
    pub correlations: Vec<f64>,
}

/// Selects probes shared by both tissues whose between-tissue correlation
/// across common samples exceeds `threshold`. Samples missing a probe in
/// either tissue are omitted from that probe's correlation.
pub fn select_correlated_probes(
    expr_s: &ExpressionSet,
    expr_t: &ExpressionSet,
    threshold: f64,
) -> TissuePairProbes {
    let shared_samples: Vec<(usize, usize)> = expr_s
        .sample_ids()
        .iter()
        .enumerate()
        .filter_map(|(i, id)| expr_t.sample_pos(id).map(|j| (i, j)))
        .collect();

    let selected: Vec<(String, f64)> = expr_s
        .probe_ids()
        .par_iter()
        .enumerate()
        .filter_map(|(ps, probe_id)| {
            let pt = expr_t.probe_pos(probe_id)?;
            let x: Vec<f64> = shared_samples.iter().map(|&(i, _)| expr_s.value(i, ps)).collect();
            let y: Vec<f64> = shared_samples.iter().map(|&(_, j)| expr_t.value(j, pt)).collect();
            match pearson(&x, &y) {
                Some(r) if r > threshold => Some((probe_id.clone(), r)),
                _ => None,
            }
        })
        .collect();

    TissuePairProbes {
        tissue_s: expr_s.tissue().to_string(),
        tissue_t: expr_t.tissue().to_string(),
        probe_ids: selected.iter().map(|(id, _)| id.clone()).collect(),
        correlations: selected.iter().map(|(_, r)| *r).collect(),
    }
}

/// Correlation between every sample of tissue s and every sample of tissue
/// t, across the selected probes.
pub fn cross_tissue_similarity(
    expr_s: &ExpressionSet,
    expr_t: &ExpressionSet,
    probes: &TissuePairProbes,
) -> Result<SimilarityMatrix> {
    let cols_s: Vec<usize> = probes
        .probe_ids
        .iter()
        .filter_map(|id| expr_s.probe_pos(id))
        .collect();
    let cols_t: Vec<usize> = probes
        .probe_ids
        .iter()
        .filter_map(|id| expr_t.probe_pos(id))
        .collect();
    assert_eq!(
        cols_s.len(),
        cols_t.len(),
        "selected probes must exist in both tissues"
    );

    let n_s = expr_s.n_samples();
    let n_t = expr_t.n_samples();

    // Dense per-sample vectors over the selected probes.
    let vecs_t: Vec<Vec<f64>> = (0..n_t)
        .map(|j| cols_t.iter().map(|&p| expr_t.value(j, p)).collect())
        .collect();

    let vecs_t = &vecs_t;
    let scores: Vec<f64> = (0..n_s)
        .into_par_iter()
        .flat_map_iter(|i| {
            let vi: Vec<f64> = cols_s.iter().map(|&p| expr_s.value(i, p)).collect();
            (0..n_t).map(move |j| pearson(&vi, &vecs_t[j]).unwrap_or(f64::NAN))
        })
        .collect();

    SimilarityMatrix::new(
        expr_s.sample_ids().to_vec(),
        expr_t.sample_ids().to_vec(),
        scores,
        ScoreRange::Correlation,
    )
}

/// Entrywise median across the cross-tissue similarity matrices of one
/// tissue. Rows are the tissue's samples; columns are the union of sample
/// labels seen in the other tissues; a cell is missing when no tissue pair
/// covers it.
pub fn combine_median(parts: &[SimilarityMatrix]) -> Result<SimilarityMatrix> {
    assert!(!parts.is_empty(), "need at least one tissue pair");
    let row_ids = parts[0].row_ids().to_vec();
    for p in parts {
        assert_eq!(p.row_ids(), row_ids.as_slice(), "rows must agree across pairs");
    }

    let col_union: BTreeSet<String> = parts
        .iter()
        .flat_map(|p| p.col_ids().iter().cloned())
        .collect();
    let col_ids: Vec<String> = col_union.into_iter().collect();

    let col_maps: Vec<Vec<Option<usize>>> = parts
        .iter()
        .map(|p| col_ids.iter().map(|id| p.col_pos(id)).collect())
        .collect();

    let mut scores = Vec::with_capacity(row_ids.len() * col_ids.len());
    let mut cell = Vec::with_capacity(parts.len());
    for row in 0..row_ids.len() {
        for (c, _) in col_ids.iter().enumerate() {
            cell.clear();
            for (p, part) in parts.iter().enumerate() {
                if let Some(col) = col_maps[p][c] {
                    let v = part.get(row, col);
                    if !v.is_nan() {
                        cell.push(v);
                    }
                }
            }
            scores.push(median(&mut cell));
        }
    }

    SimilarityMatrix::new(row_ids, col_ids, scores, ScoreRange::Correlation)
}

/// Median of a scratch buffer; NaN when empty, midpoint for even counts.
fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Relabel decisions for one tissue from its median similarity matrix.
pub fn decide_expression_labels(
    sim: &SimilarityMatrix,
    self_min: f64,
    other_min: f64,
    gap_min: f64,
) -> Vec<RelabelDecision> {
    decide_from_similarity(
        sim,
        &DecisionParams {
            self_min,
            other_min,
            gap_min,
        },
    )
}

/// An unordered candidate-duplicate pair within one tissue.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DuplicatePair {
    pub a: String,
    pub b: String,
    pub correlation: f64,
}

/// Within-tissue between-sample correlations over the given probes; pairs
/// at or above `dup_min` are candidate duplicates.
pub fn detect_within_tissue_duplicates(
    expr: &ExpressionSet,
    probe_ids: &[String],
    dup_min: f64,
) -> Vec<DuplicatePair> {
    let cols: Vec<usize> = probe_ids
        .iter()
        .filter_map(|id| expr.probe_pos(id))
        .collect();
    let n = expr.n_samples();
    let vecs: Vec<Vec<f64>> = (0..n)
        .map(|i| cols.iter().map(|&p| expr.value(i, p)).collect())
        .collect();

    let mut pairs: Vec<DuplicatePair> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let vecs = &vecs;
            let expr = &expr;
            (i + 1..n).filter_map(move |j| match pearson(&vecs[i], &vecs[j]) {
                Some(r) if r >= dup_min => Some(DuplicatePair {
                    a: expr.sample_ids()[i].clone(),
                    b: expr.sample_ids()[j].clone(),
                    correlation: r,
                }),
                _ => None,
            })
        })
        .collect();
    pairs.sort_by(|x, y| x.a.cmp(&y.a).then(x.b.cmp(&y.b)));
    pairs
}

/// Resolves duplicate pairs against the per-sample decisions: the member
/// whose label agrees better with the other tissues (higher self
/// similarity) keeps it; the other becomes `duplicate` of the retained
/// sample. Prevents a duplicated array from relabel-colliding with the
/// retained one.
pub fn reconcile_duplicates(
    decisions: &mut [RelabelDecision],
    duplicates: &[DuplicatePair],
) {
    let index: BTreeMap<String, usize> = decisions
        .iter()
        .enumerate()
        .map(|(i, d)| (d.sample_id.clone(), i))
        .collect();
    for pair in duplicates {
        let (Some(&ia), Some(&ib)) = (index.get(&pair.a), index.get(&pair.b)) else {
            continue;
        };
        let self_of = |i: usize| {
            decisions[i]
                .evidence
                .self_similarity
                .unwrap_or(f64::NEG_INFINITY)
        };
        // Higher self similarity keeps the label; ties break lexicographically.
        let (keep, dup) = if self_of(ia) > self_of(ib)
            || (self_of(ia) == self_of(ib) && pair.a < pair.b)
        {
            (ia, ib)
        } else {
            (ib, ia)
        };
        let retained = decisions[keep].sample_id.clone();
        let dup_id = decisions[dup].sample_id.clone();
        let evidence = decisions[dup].evidence.clone();
        decisions[dup] = RelabelDecision::duplicate(dup_id, retained, evidence)
            .with_note(format!("within-tissue correlation {:.4}", pair.correlation));
    }
}

/// Everything the expression alignment produces for one tissue.
#[derive(Clone, Debug)]
pub struct TissueAlignmentResult {
    pub tissue: String,
    /// Median similarity across tissue pairs (r^s).
    pub similarity: SimilarityMatrix,
    pub decisions: Vec<RelabelDecision>,
    pub duplicates: Vec<DuplicatePair>,
    /// Union of selected probes across pairs involving this tissue.
    pub selected_probes: Vec<String>,
    /// Per-pair selected probe counts, keyed by the other tissue.
    pub pair_probe_counts: BTreeMap<String, usize>,
}

/// Full expression alignment over a set of tissues.
pub fn align_expression(
    tissues: &[ExpressionSet],
    probe_corr_min: f64,
    self_min: f64,
    other_min: f64,
    gap_min: f64,
    dup_min: f64,
) -> Result<Vec<TissueAlignmentResult>> {
    let mut results = Vec::with_capacity(tissues.len());
    for (s, expr_s) in tissues.iter().enumerate() {
        let mut parts = Vec::new();
        let mut selected_union: BTreeSet<String> = BTreeSet::new();
        let mut pair_probe_counts = BTreeMap::new();
        for (t, expr_t) in tissues.iter().enumerate() {
            if s == t {
                continue;
            }
            let probes = select_correlated_probes(expr_s, expr_t, probe_corr_min);
            pair_probe_counts.insert(expr_t.tissue().to_string(), probes.probe_ids.len());
            selected_union.extend(probes.probe_ids.iter().cloned());
            if !probes.probe_ids.is_empty() {
                parts.push(cross_tissue_similarity(expr_s, expr_t, &probes)?);
            }
        }
        let selected_probes: Vec<String> = selected_union.into_iter().collect();

        let (similarity, mut decisions) = if parts.is_empty() {
            // No informative probes against any tissue: everything is
            // unverifiable.
            let sim = SimilarityMatrix::new(
                expr_s.sample_ids().to_vec(),
                Vec::new(),
                Vec::new(),
                ScoreRange::Correlation,
            )?;
            let decisions = expr_s
                .sample_ids()
                .iter()
                .map(|id| RelabelDecision::unverifiable(id, Evidence::default()))
                .collect();
            (sim, decisions)
        } else {
            let sim = combine_median(&parts)?;
            let decisions = decide_expression_labels(&sim, self_min, other_min, gap_min);
            (sim, decisions)
        };

        let duplicates = detect_within_tissue_duplicates(expr_s, &selected_probes, dup_min);
        reconcile_duplicates(&mut decisions, &duplicates);

        debug_assert!(decisions
            .iter()
            .filter(|d| d.verdict == Verdict::Fixable)
            .all(|d| d.new_label.is_some()));

        results.push(TissueAlignmentResult {
            tissue: expr_s.tissue().to_string(),
            similarity,
            decisions,
            duplicates,
            selected_probes,
            pair_probe_counts,
        });
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn expr(tissue: &str, samples: &[&str], probes: &[&str], values: Vec<f64>) -> ExpressionSet {
        ExpressionSet::new(
            tissue,
            samples.iter().map(|s| s.to_string()).collect(),
            probes.iter().map(|s| s.to_string()).collect(),
            values,
        )
        .unwrap()
    }

    #[test]
    fn pearson_basics() {
        assert_abs_diff_eq!(
            pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
        // Covariance 1 over sd product 2.
        assert_abs_diff_eq!(
            pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pearson_insufficient_or_degenerate() {
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_none());
        assert!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_none());
        assert!(pearson(&[1.0, f64::NAN, 3.0, 4.0], &[1.0, 2.0, f64::NAN, 4.0]).is_none());
    }

    #[test]
    fn identical_matrices_have_unit_diagonal() {
        let values = vec![
            0.1, 0.9, 0.3, //
            0.8, 0.2, 0.7, //
            0.4, 0.6, 0.5,
        ];
        let a = expr("a", &["s1", "s2", "s3"], &["p1", "p2", "p3"], values.clone());
        let b = expr("b", &["s1", "s2", "s3"], &["p1", "p2", "p3"], values);
        let probes = TissuePairProbes {
            tissue_s: "a".into(),
            tissue_t: "b".into(),
            probe_ids: vec!["p1".into(), "p2".into(), "p3".into()],
            correlations: vec![1.0, 1.0, 1.0],
        };
        let sim = cross_tissue_similarity(&a, &b, &probes).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(sim.get(i, i), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cross_tissue_similarity_is_transpose_symmetric() {
        let va = vec![0.1, 0.9, 0.3, 0.8, 0.2, 0.7, 0.4, 0.6, 0.5, 0.15, 0.85, 0.35];
        let vb = vec![0.2, 0.7, 0.1, 0.9, 0.25, 0.65, 0.45, 0.55, 0.6, 0.1, 0.95, 0.4];
        let a = expr("a", &["s1", "s2", "s3", "s4"], &["p1", "p2", "p3"], va);
        let b = expr("b", &["s1", "s2", "s3", "s4"], &["p1", "p2", "p3"], vb);
        let probes = TissuePairProbes {
            tissue_s: "a".into(),
            tissue_t: "b".into(),
            probe_ids: vec!["p1".into(), "p2".into(), "p3".into()],
            correlations: vec![1.0, 1.0, 1.0],
        };
        let st = cross_tissue_similarity(&a, &b, &probes).unwrap();
        let ts = cross_tissue_similarity(&b, &a, &probes).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(st.get(i, j), ts.get(j, i), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn swapping_rows_permutes_columns() {
        let va = vec![0.1, 0.9, 0.3, 0.8, 0.2, 0.7, 0.4, 0.6, 0.5];
        let mut vb = va.clone();
        let a = expr("a", &["s1", "s2", "s3"], &["p1", "p2", "p3"], va);
        let b_plain = expr("b", &["s1", "s2", "s3"], &["p1", "p2", "p3"], vb.clone());
        vb.swap(0, 3);
        vb.swap(1, 4);
        vb.swap(2, 5);
        let b_swapped = expr("b", &["s1", "s2", "s3"], &["p1", "p2", "p3"], vb);
        let probes = TissuePairProbes {
            tissue_s: "a".into(),
            tissue_t: "b".into(),
            probe_ids: vec!["p1".into(), "p2".into(), "p3".into()],
            correlations: vec![1.0, 1.0, 1.0],
        };
        let plain = cross_tissue_similarity(&a, &b_plain, &probes).unwrap();
        let swapped = cross_tissue_similarity(&a, &b_swapped, &probes).unwrap();
        for i in 0..3 {
            // Columns s1 and s2 of the swapped matrix carry each other's values.
            assert_eq!(plain.get(i, 0), swapped.get(i, 1));
            assert_eq!(plain.get(i, 1), swapped.get(i, 0));
            assert_eq!(plain.get(i, 2), swapped.get(i, 2));
        }
    }

    #[test]
    fn median_combination() {
        let mk = |v: f64| {
            SimilarityMatrix::new(
                vec!["s1".into()],
                vec!["s1".into()],
                vec![v],
                ScoreRange::Correlation,
            )
            .unwrap()
        };
        // Median of one equals that value.
        let one = combine_median(&[mk(0.42)]).unwrap();
        assert_abs_diff_eq!(one.get(0, 0), 0.42, epsilon = 1e-12);
        // Odd count takes the middle.
        let odd = combine_median(&[mk(0.2), mk(0.8), mk(0.9)]).unwrap();
        assert_abs_diff_eq!(odd.get(0, 0), 0.8, epsilon = 1e-12);
        // Even count takes the midpoint.
        let even = combine_median(&[mk(0.2), mk(0.8)]).unwrap();
        assert_abs_diff_eq!(even.get(0, 0), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn duplicate_detection_on_identical_rows() {
        let values = vec![
            0.1, 0.9, 0.3, 0.7, //
            0.1, 0.9, 0.3, 0.7, //
            0.8, 0.1, 0.6, 0.2,
        ];
        let e = expr("islet", &["a", "b", "c"], &["p1", "p2", "p3", "p4"], values);
        let probes: Vec<String> = vec!["p1".into(), "p2".into(), "p3".into(), "p4".into()];
        let dups = detect_within_tissue_duplicates(&e, &probes, 0.95);
        assert_eq!(dups.len(), 1);
        assert_eq!((dups[0].a.as_str(), dups[0].b.as_str()), ("a", "b"));
        assert_abs_diff_eq!(dups[0].correlation, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn reconcile_marks_lower_self_as_duplicate() {
        let mut decisions = vec![
            RelabelDecision::correct(
                "a",
                Evidence {
                    self_similarity: Some(0.95),
                    ..Default::default()
                },
            ),
            RelabelDecision::fixable(
                "b",
                "a",
                Evidence {
                    self_similarity: Some(0.2),
                    max_similarity: Some(0.97),
                    second_similarity: Some(0.3),
                    argmax_id: Some("a".into()),
                },
            ),
        ];
        let dups = vec![DuplicatePair {
            a: "a".into(),
            b: "b".into(),
            correlation: 0.998,
        }];
        reconcile_duplicates(&mut decisions, &dups);
        assert_eq!(decisions[0].verdict, Verdict::Correct);
        assert_eq!(decisions[1].verdict, Verdict::Duplicate);
        assert_eq!(decisions[1].new_label.as_deref(), Some("a"));
    }
}
