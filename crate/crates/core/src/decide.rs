//! The similarity-matrix decision rule shared by the expression and DNA
//! alignments.
//!
//! A row with a small diagonal value but a large off-diagonal maximum is a
//! mix-up; the correct label is the column of the maximum, accepted only
//! when it stands well above the second-highest value. Rows whose top two
//! candidates are both strong but nearly tied look like sample mixtures and
//! are flagged rather than relabeled.

use crate::types::{Evidence, RelabelDecision, SimilarityMatrix};

/// Thresholds of the decision rule.
#[derive(Clone, Copy, Debug)]
pub struct DecisionParams {
    /// Self similarity below this marks a potential mix-up.
    pub self_min: f64,
    /// Best off-diagonal similarity required to assign a new label.
    pub other_min: f64,
    /// Required margin between the best and second-best off-diagonal value.
    pub gap_min: f64,
}

pub const MIXTURE_NOTE: &str = "possible mixture: top two candidates nearly tied";

/// Applies the decision rule to every row of a similarity matrix.
///
/// Decisions depend only on each row's diagonal and off-diagonal values, so
/// the output is invariant to row/column order; ties in the off-diagonal
/// argmax resolve to the lexicographically smaller column label.
pub fn decide_from_similarity(
    sim: &SimilarityMatrix,
    params: &DecisionParams,
) -> Vec<RelabelDecision> {
    (0..sim.n_rows())
        .map(|row| decide_row(sim, row, params))
        .collect()
}

fn decide_row(sim: &SimilarityMatrix, row: usize, params: &DecisionParams) -> RelabelDecision {
    let row_id = &sim.row_ids()[row];
    let self_sim = sim.self_similarity(row);

    let mut best: Option<(f64, usize)> = None;
    let mut second: Option<f64> = None;
    for (col, col_id) in sim.col_ids().iter().enumerate() {
        if col_id == row_id {
            continue;
        }
        let v = sim.get(row, col);
        if v.is_nan() {
            continue;
        }
        let replaces_best = match best {
            None => true,
            Some((bv, bc)) => v > bv || (v == bv && col_id < &sim.col_ids()[bc]),
        };
        if replaces_best {
            if let Some((bv, _)) = best {
                if second.is_none_or(|s| bv > s) {
                    second = Some(bv);
                }
            }
            best = Some((v, col));
        } else if second.is_none_or(|s| v > s) {
            second = Some(v);
        }
    }

    let evidence = Evidence {
        self_similarity: self_sim,
        max_similarity: best.map(|(v, _)| v),
        second_similarity: second,
        argmax_id: best.map(|(_, c)| sim.col_ids()[c].clone()),
    };

    let mixture = match (best, second) {
        (Some((m, _)), Some(s)) => {
            m >= params.other_min && s >= params.other_min && (m - s) < params.gap_min
        }
        _ => false,
    };

    match (self_sim, best) {
        (Some(_), None) => RelabelDecision::correct(row_id, evidence),
        (Some(s), Some((m, argmax_col))) => {
            if s >= m || s >= params.self_min {
                RelabelDecision::correct(row_id, evidence)
            } else if mixture {
                RelabelDecision::unfixable(row_id, evidence).with_note(MIXTURE_NOTE)
            } else if m >= params.other_min
                && second.is_none_or(|sec| m - sec >= params.gap_min)
            {
                let new_label = sim.col_ids()[argmax_col].clone();
                RelabelDecision::fixable(row_id, new_label, evidence)
            } else {
                RelabelDecision::unfixable(row_id, evidence)
            }
        }
        (None, Some((m, argmax_col))) => {
            if mixture {
                RelabelDecision::unverifiable(row_id, evidence).with_note(MIXTURE_NOTE)
            } else if m >= params.other_min {
                let new_label = sim.col_ids()[argmax_col].clone();
                RelabelDecision::fixable(row_id, new_label, evidence)
            } else {
                RelabelDecision::unverifiable(row_id, evidence)
            }
        }
        (None, None) => RelabelDecision::unverifiable(row_id, evidence),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ScoreRange, Verdict};

    const PARAMS: DecisionParams = DecisionParams {
        self_min: 0.8,
        other_min: 0.8,
        gap_min: 0.1,
    };

    fn matrix(row_ids: &[&str], col_ids: &[&str], scores: Vec<f64>) -> SimilarityMatrix {
        SimilarityMatrix::new(
            row_ids.iter().map(|s| s.to_string()).collect(),
            col_ids.iter().map(|s| s.to_string()).collect(),
            scores,
            ScoreRange::Correlation,
        )
        .unwrap()
    }

    #[test]
    fn high_self_is_correct() {
        let sim = matrix(&["a"], &["a", "b"], vec![0.95, 0.4]);
        let d = &decide_from_similarity(&sim, &PARAMS)[0];
        assert_eq!(d.verdict, Verdict::Correct);
        assert_eq!(d.evidence.max_similarity, Some(0.4));
    }

    #[test]
    fn low_self_strong_gap_is_fixable() {
        let sim = matrix(
            &["Mouse3655"],
            &["Mouse3655", "Mouse3659", "Mouse3700"],
            vec![0.3, 0.93, 0.45],
        );
        let d = &decide_from_similarity(&sim, &PARAMS)[0];
        assert_eq!(d.verdict, Verdict::Fixable);
        assert_eq!(d.new_label.as_deref(), Some("Mouse3659"));
        assert_eq!(d.evidence.second_similarity, Some(0.45));
    }

    #[test]
    fn low_self_weak_candidates_is_unfixable() {
        let sim = matrix(&["a"], &["a", "b", "c"], vec![0.3, 0.6, 0.2]);
        let d = &decide_from_similarity(&sim, &PARAMS)[0];
        assert_eq!(d.verdict, Verdict::Unfixable);
    }

    #[test]
    fn near_tied_strong_candidates_flag_mixture() {
        let sim = matrix(&["a"], &["a", "b", "c"], vec![0.3, 0.93, 0.91]);
        let d = &decide_from_similarity(&sim, &PARAMS)[0];
        assert_eq!(d.verdict, Verdict::Unfixable);
        assert_eq!(d.note.as_deref(), Some(MIXTURE_NOTE));
    }

    #[test]
    fn missing_self_with_strong_match_is_fixable() {
        let sim = matrix(&["a"], &["b", "c"], vec![0.9, 0.2]);
        let d = &decide_from_similarity(&sim, &PARAMS)[0];
        assert_eq!(d.verdict, Verdict::Fixable);
        assert_eq!(d.new_label.as_deref(), Some("b"));
    }

    #[test]
    fn missing_self_without_match_is_unverifiable() {
        let sim = matrix(&["a"], &["b", "c"], vec![0.5, 0.2]);
        let d = &decide_from_similarity(&sim, &PARAMS)[0];
        assert_eq!(d.verdict, Verdict::Unverifiable);
    }

    #[test]
    fn all_missing_row_is_unverifiable() {
        let sim = matrix(&["a"], &["b"], vec![f64::NAN]);
        let d = &decide_from_similarity(&sim, &PARAMS)[0];
        assert_eq!(d.verdict, Verdict::Unverifiable);
        assert_eq!(d.evidence.max_similarity, None);
    }

    #[test]
    fn self_above_threshold_but_below_max_stays_correct() {
        // Slightly off the diagonal but not a small self similarity: kept.
        let sim = matrix(&["a"], &["a", "b"], vec![0.85, 0.9]);
        let d = &decide_from_similarity(&sim, &PARAMS)[0];
        assert_eq!(d.verdict, Verdict::Correct);
    }

    #[test]
    fn argmax_tie_resolves_lexicographically() {
        let sim = matrix(&["a"], &["a", "d", "b"], vec![0.1, 0.9, 0.9]);
        let d = &decide_from_similarity(&sim, &PARAMS)[0];
        // Mixture rule would fire (tied strong candidates).
        assert_eq!(d.evidence.argmax_id.as_deref(), Some("b"));
    }

    #[test]
    fn decisions_invariant_to_column_order() {
        let a = matrix(&["x"], &["x", "y", "z"], vec![0.2, 0.95, 0.4]);
        let b = matrix(&["x"], &["z", "x", "y"], vec![0.4, 0.2, 0.95]);
        let da = &decide_from_similarity(&a, &PARAMS)[0];
        let db = &decide_from_similarity(&b, &PARAMS)[0];
        assert_eq!(da.verdict, db.verdict);
        assert_eq!(da.new_label, db.new_label);
        assert_eq!(da.evidence, db.evidence);
    }
}
