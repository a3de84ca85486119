//! Alignment of DNA samples to mRNA samples through eQTL genotypes.
//!
//! For each strong local-eQTL, the genotype with maximal multipoint
//! probability (when decisive) is the observed genotype of a DNA sample,
//! and a k-nearest-neighbor classifier over the corresponding probe
//! expression predicts the eQTL genotype of an mRNA sample. The proportion
//! of matches between observed and inferred genotypes, pooled over eQTL and
//! tissues, measures DNA-to-mRNA similarity.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::decide::{decide_from_similarity, DecisionParams};
use crate::error::Result;
use crate::genoprob::GenoProbTensor;
use crate::qtl::LocalEqtl;
use crate::types::{
    ExpressionSet, Genotype, GenotypeMatrix, RelabelDecision, ScoreRange, SimilarityMatrix,
    GENOTYPE_STATES,
};

/// Observed eQTL genotypes: the argmax genotype where the maximal
/// multipoint probability strictly exceeds `p_min`, else Missing.
/// Output is eQTL-major: `out[e * n_samples + i]`.
pub fn observe_eqtl_genotypes(
    probs: &GenoProbTensor,
    eqtl: &[LocalEqtl],
    p_min: f64,
) -> Vec<Genotype> {
    let n_samples = probs
        .chromosomes
        .first()
        .map(|c| c.n_samples)
        .unwrap_or(0);
    let mut out = Vec::with_capacity(eqtl.len() * n_samples);
    for e in eqtl {
        let chrom = &probs.chromosomes[e.chrom_index];
        for sample in 0..n_samples {
            let p = chrom.get(sample, e.locus_index);
            let (argmax, max) = p
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, v)| (i, *v))
                .unwrap();
            out.push(if max > p_min {
                GENOTYPE_STATES[argmax]
            } else {
                Genotype::Missing
            });
        }
    }
    out
}

/// k-nearest-neighbor classifier in the 1–3 dimensional expression space of
/// one eQTL's probes.
#[derive(Clone, Debug)]
pub struct KnnClassifier {
    k: usize,
    vote_min: f64,
    /// (coordinates, label, sample id); the id breaks distance ties so
    /// classification is deterministic.
    points: Vec<(Vec<f64>, Genotype, String)>,
}

impl KnnClassifier {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_training(&self) -> usize {
        self.points.len()
    }
}

/// Builds a classifier from labeled training points, or `None` (with a
/// warning) when fewer than `k` labeled samples are available.
pub fn fit_knn(
    points: Vec<(Vec<f64>, Genotype, String)>,
    k: usize,
    vote_min: f64,
) -> Option<KnnClassifier> {
    if points.len() < k {
        log::warn!(
            "eQTL classifier dropped: {} labeled samples for k = {k}",
            points.len()
        );
        return None;
    }
    Some(KnnClassifier {
        k,
        vote_min,
        points,
    })
}

/// Majority label among the k nearest training points by Euclidean
/// distance, provided its vote share strictly exceeds `vote_min`; queries
/// with any missing coordinate return Missing.
pub fn infer_genotype(clf: &KnnClassifier, query: &[f64]) -> Genotype {
    if query.iter().any(|v| v.is_nan()) {
        return Genotype::Missing;
    }
    let mut dists: Vec<(f64, &str, Genotype)> = clf
        .points
        .iter()
        .map(|(coords, label, id)| {
            let d: f64 = coords
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d, id.as_str(), *label)
        })
        .collect();
    dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(b.1)));

    let mut counts = [0usize; 3];
    for &(_, _, label) in dists.iter().take(clf.k) {
        counts[label.state_index().expect("training labels are never Missing")] += 1;
    }
    let (argmax, max) = counts
        .iter()
        .enumerate()
        .max_by_key(|&(_, c)| *c)
        .map(|(i, c)| (i, *c))
        .unwrap();
    if (max as f64) / (clf.k as f64) > clf.vote_min {
        GENOTYPE_STATES[argmax]
    } else {
        Genotype::Missing
    }
}

/// Proportion of matches over positions where both genotypes are observed;
/// `None` when there are no comparisons.
pub fn match_proportion(observed: &[Genotype], inferred: &[Genotype]) -> Option<f64> {
    debug_assert_eq!(observed.len(), inferred.len());
    let mut matches = 0usize;
    let mut comparisons = 0usize;
    for (&o, &i) in observed.iter().zip(inferred) {
        if o.is_missing() || i.is_missing() {
            continue;
        }
        comparisons += 1;
        if o == i {
            matches += 1;
        }
    }
    if comparisons == 0 {
        None
    } else {
        Some(matches as f64 / comparisons as f64)
    }
}

/// Observed and inferred eQTL genotypes for one tissue after the two-pass
/// classifier fit.
#[derive(Clone, Debug)]
pub struct TissueGenoAlignment {
    pub tissue: String,
    pub eqtl: Vec<LocalEqtl>,
    /// DNA sample ids, in genotype-matrix order.
    pub dna_ids: Vec<String>,
    /// mRNA sample ids, in expression-set order.
    pub mrna_ids: Vec<String>,
    /// eQTL-major observed genotypes: `observed[e * dna_ids.len() + i]`.
    pub observed: Vec<Genotype>,
    /// eQTL-major inferred genotypes: `inferred[e * mrna_ids.len() + j]`.
    pub inferred: Vec<Genotype>,
    /// Locus ids of eQTL dropped for lack of training samples.
    pub dropped_eqtl: Vec<String>,
    /// Samples excluded from second-pass training (self match < filter).
    pub filtered_samples: Vec<String>,
}

impl TissueGenoAlignment {
    pub fn observed_column(&self, dna_index: usize) -> Vec<Genotype> {
        (0..self.eqtl.len())
            .map(|e| self.observed[e * self.dna_ids.len() + dna_index])
            .collect()
    }

    pub fn inferred_column(&self, mrna_index: usize) -> Vec<Genotype> {
        (0..self.eqtl.len())
            .map(|e| self.inferred[e * self.mrna_ids.len() + mrna_index])
            .collect()
    }

    /// Per-tissue DNA × mRNA match-proportion matrix.
    pub fn similarity(&self) -> Result<SimilarityMatrix> {
        let n_dna = self.dna_ids.len();
        let n_mrna = self.mrna_ids.len();
        let scores: Vec<f64> = (0..n_dna)
            .into_par_iter()
            .flat_map_iter(|i| {
                let obs = self.observed_column(i);
                (0..n_mrna).map(move |j| {
                    match_proportion(&obs, &self.inferred_column(j)).unwrap_or(f64::NAN)
                })
            })
            .collect();
        SimilarityMatrix::new(
            self.dna_ids.clone(),
            self.mrna_ids.clone(),
            scores,
            ScoreRange::Proportion,
        )
    }
}

fn knn_training_points(
    expr: &ExpressionSet,
    probe_cols: &[usize],
    geno_row_of: &[Option<usize>],
    observed: &[Genotype],
    exclude: &BTreeSet<usize>,
) -> Vec<(Vec<f64>, Genotype, String)> {
    let mut points = Vec::new();
    for (j, geno_row) in geno_row_of.iter().enumerate() {
        let Some(g) = geno_row else { continue };
        if exclude.contains(g) {
            continue;
        }
        let label = observed[*g];
        if label.is_missing() {
            continue;
        }
        let coords: Vec<f64> = probe_cols.iter().map(|&p| expr.value(j, p)).collect();
        if coords.iter().any(|v| v.is_nan()) {
            continue;
        }
        points.push((coords, label, expr.sample_ids()[j].clone()));
    }
    points
}

/// Builds the final observed/inferred genotype grids for one tissue.
///
/// The first pass trains each eQTL classifier on every sample with an
/// observed genotype; samples whose observed/inferred self match falls
/// below `filter_min` are then excluded and every classifier refit, so
/// clearly mislabeled samples do not pollute the training sets. All mRNA
/// samples (including excluded ones) receive final inferred genotypes.
#[allow(clippy::too_many_arguments)]
pub fn two_pass_classifiers(
    expr: &ExpressionSet,
    geno: &GenotypeMatrix,
    probs: &GenoProbTensor,
    eqtl: Vec<LocalEqtl>,
    p_min: f64,
    k: usize,
    vote_min: f64,
    filter_min: f64,
) -> TissueGenoAlignment {
    let observed_all = observe_eqtl_genotypes(probs, &eqtl, p_min);
    let n_dna = geno.n_samples();
    let n_mrna = expr.n_samples();

    let geno_row_of: Vec<Option<usize>> = expr
        .sample_ids()
        .iter()
        .map(|id| geno.sample_pos(id))
        .collect();

    let probe_cols: Vec<Vec<usize>> = eqtl
        .iter()
        .map(|e| {
            e.probe_ids
                .iter()
                .filter_map(|id| expr.probe_pos(id))
                .collect()
        })
        .collect();

    let infer_pass = |exclude: &BTreeSet<usize>| -> Vec<Option<Vec<Genotype>>> {
        eqtl.par_iter()
            .enumerate()
            .map(|(e, _)| {
                let observed_e = &observed_all[e * n_dna..(e + 1) * n_dna];
                let points =
                    knn_training_points(expr, &probe_cols[e], &geno_row_of, observed_e, exclude);
                let clf = fit_knn(points, k, vote_min)?;
                let inferred: Vec<Genotype> = (0..n_mrna)
                    .map(|j| {
                        let coords: Vec<f64> =
                            probe_cols[e].iter().map(|&p| expr.value(j, p)).collect();
                        infer_genotype(&clf, &coords)
                    })
                    .collect();
                Some(inferred)
            })
            .collect()
    };

    // Pass one: all labeled samples train.
    let pass1 = infer_pass(&BTreeSet::new());

    // Self match per sample present in both grids, over first-pass calls.
    let mut exclude = BTreeSet::new();
    let mut filtered_samples = Vec::new();
    for (j, geno_row) in geno_row_of.iter().enumerate() {
        let Some(g) = geno_row else { continue };
        let mut obs = Vec::new();
        let mut inf = Vec::new();
        for (e, inferred_e) in pass1.iter().enumerate() {
            if let Some(inferred_e) = inferred_e {
                obs.push(observed_all[e * n_dna + g]);
                inf.push(inferred_e[j]);
            }
        }
        if let Some(p) = match_proportion(&obs, &inf) {
            if p < filter_min {
                exclude.insert(*g);
                filtered_samples.push(expr.sample_ids()[j].clone());
            }
        }
    }

    // Pass two: refit without the suspect samples; a clean first pass is a
    // fixed point since the training sets are unchanged.
    let pass2 = if exclude.is_empty() {
        pass1
    } else {
        infer_pass(&exclude)
    };

    // Keep only eQTL whose classifier survived both passes.
    let mut kept_eqtl = Vec::new();
    let mut dropped_eqtl = Vec::new();
    let mut observed = Vec::new();
    let mut inferred = Vec::new();
    for ((e, eq), inferred_e) in eqtl.into_iter().enumerate().zip(&pass2) {
        match inferred_e {
            Some(inf) => {
                observed.extend_from_slice(&observed_all[e * n_dna..(e + 1) * n_dna]);
                inferred.extend_from_slice(inf);
                kept_eqtl.push(eq);
            }
            None => dropped_eqtl.push(eq.locus_id.clone()),
        }
    }

    TissueGenoAlignment {
        tissue: expr.tissue().to_string(),
        eqtl: kept_eqtl,
        dna_ids: geno.sample_ids().to_vec(),
        mrna_ids: expr.sample_ids().to_vec(),
        observed,
        inferred,
        dropped_eqtl,
        filtered_samples,
    }
}

/// Pools matches and comparisons across all eQTL of all tissues into one
/// DNA × mRNA similarity matrix. Rows are DNA samples; columns are the
/// union of mRNA sample labels across tissues.
pub fn combine_tissues(alignments: &[TissueGenoAlignment]) -> Result<SimilarityMatrix> {
    assert!(!alignments.is_empty(), "need at least one tissue");
    let dna_ids = alignments[0].dna_ids.clone();
    for a in alignments {
        assert_eq!(a.dna_ids, dna_ids, "tissues must share the DNA panel");
    }
    let col_union: BTreeSet<String> = alignments
        .iter()
        .flat_map(|a| a.mrna_ids.iter().cloned())
        .collect();
    let col_ids: Vec<String> = col_union.into_iter().collect();

    // Per tissue, the column index of each output label, if assayed there.
    let col_maps: Vec<Vec<Option<usize>>> = alignments
        .iter()
        .map(|a| {
            let index: std::collections::HashMap<&str, usize> = a
                .mrna_ids
                .iter()
                .enumerate()
                .map(|(j, id)| (id.as_str(), j))
                .collect();
            col_ids.iter().map(|id| index.get(id.as_str()).copied()).collect()
        })
        .collect();

    let n_cols = col_ids.len();
    let col_maps = &col_maps;
    let scores: Vec<f64> = (0..dna_ids.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let obs_cols: Vec<Vec<Genotype>> =
                alignments.iter().map(|a| a.observed_column(i)).collect();
            (0..n_cols).map(move |c| {
                let mut matches = 0usize;
                let mut comparisons = 0usize;
                for (t, a) in alignments.iter().enumerate() {
                    let Some(j) = col_maps[t][c] else { continue };
                    for (e, &o) in obs_cols[t].iter().enumerate() {
                        let inf = a.inferred[e * a.mrna_ids.len() + j];
                        if o.is_missing() || inf.is_missing() {
                            continue;
                        }
                        comparisons += 1;
                        if o == inf {
                            matches += 1;
                        }
                    }
                }
                if comparisons == 0 {
                    f64::NAN
                } else {
                    matches as f64 / comparisons as f64
                }
            })
        })
        .collect();

    SimilarityMatrix::new(dna_ids, col_ids, scores, ScoreRange::Proportion)
}

/// Relabel decisions for DNA samples from the combined similarity matrix.
pub fn decide_dna_labels(
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genoprob::ChromProbs;

    fn classifier_with_labels(labels: &[(Genotype, usize)], k: usize) -> KnnClassifier {
        // Training points on a line; distances from the origin order them
        // exactly as listed.
        let mut points = Vec::new();
        let mut idx = 0;
        for &(label, count) in labels {
            for _ in 0..count {
                points.push((vec![idx as f64], label, format!("s{idx:03}")));
                idx += 1;
            }
        }
        fit_knn(points, k, 0.8).unwrap()
    }

    #[test]
    fn vote_share_boundary_is_strict() {
        // 32/40 = exactly 80%: unassigned.
        let clf = classifier_with_labels(&[(Genotype::BB, 32), (Genotype::BR, 8)], 40);
        assert_eq!(infer_genotype(&clf, &[0.0]), Genotype::Missing);
        // 33/40 = 82.5%: assigned.
        let clf = classifier_with_labels(&[(Genotype::BB, 33), (Genotype::BR, 7)], 40);
        assert_eq!(infer_genotype(&clf, &[0.0]), Genotype::BB);
        // 36/40 = 90%: assigned.
        let clf = classifier_with_labels(&[(Genotype::BB, 36), (Genotype::BR, 4)], 40);
        assert_eq!(infer_genotype(&clf, &[0.0]), Genotype::BB);
    }

    #[test]
    fn missing_coordinate_infers_missing() {
        let clf = classifier_with_labels(&[(Genotype::BB, 40)], 40);
        assert_eq!(infer_genotype(&clf, &[f64::NAN]), Genotype::Missing);
    }

    #[test]
    fn too_few_training_points_drops_classifier() {
        let points = vec![(vec![0.0], Genotype::BB, "a".to_string())];
        assert!(fit_knn(points, 40, 0.8).is_none());
    }

    #[test]
    fn forty_training_points_use_the_full_set() {
        let clf = classifier_with_labels(&[(Genotype::RR, 34), (Genotype::BB, 6)], 40);
        assert_eq!(clf.n_training(), 40);
        // Query far away still sees all 40 points.
        assert_eq!(infer_genotype(&clf, &[1e6]), Genotype::RR);
    }

    #[test]
    fn distance_ties_break_by_sample_id() {
        // Two points at the same coordinate with different labels; k = 1.
        let points = vec![
            (vec![0.0], Genotype::RR, "s2".to_string()),
            (vec![0.0], Genotype::BB, "s1".to_string()),
        ];
        let clf = fit_knn(points, 1, 0.5).unwrap();
        assert_eq!(infer_genotype(&clf, &[0.0]), Genotype::BB);
    }

    #[test]
    fn affine_rescaling_preserves_inference() {
        let labels = [(Genotype::BB, 20), (Genotype::RR, 20)];
        let clf = classifier_with_labels(&labels, 5);
        let scaled_points: Vec<(Vec<f64>, Genotype, String)> = clf
            .points
            .iter()
            .map(|(c, l, id)| (vec![3.0 * c[0] + 7.0], *l, id.clone()))
            .collect();
        let scaled = fit_knn(scaled_points, 5, 0.8).unwrap();
        for q in [0.0, 5.0, 19.0, 25.0, 39.0] {
            assert_eq!(
                infer_genotype(&clf, &[q]),
                infer_genotype(&scaled, &[3.0 * q + 7.0])
            );
        }
    }

    #[test]
    fn match_proportion_counts_only_complete_pairs() {
        let a = vec![Genotype::BB; 80];
        assert_eq!(match_proportion(&a, &a), Some(1.0));

        let mut b = a.clone();
        for g in b.iter_mut().take(40) {
            *g = Genotype::RR;
        }
        assert_eq!(match_proportion(&a, &b), Some(0.5));

        let all_missing = vec![Genotype::Missing; 80];
        assert_eq!(match_proportion(&all_missing, &a), None);
    }

    #[test]
    fn observe_respects_probability_threshold() {
        let eqtl = vec![LocalEqtl {
            tissue: "islet".into(),
            chrom: "1".into(),
            chrom_index: 0,
            locus_index: 0,
            locus_id: "m0".into(),
            pos_cm: 0.0,
            probe_ids: vec!["p0".into()],
            lods: vec![150.0],
        }];
        let probs = GenoProbTensor {
            chromosomes: vec![chrom_probs(
                "1",
                vec![
                    [1.0, 0.0, 0.0],
                    [0.98, 0.015, 0.005],
                    [0.995, 0.004, 0.001],
                ],
            )],
        };
        let observed = observe_eqtl_genotypes(&probs, &eqtl, 0.99);
        assert_eq!(observed, vec![Genotype::BB, Genotype::Missing, Genotype::BB]);
    }

    #[test]
    fn combine_single_tissue_is_identity() {
        let eqtl = vec![LocalEqtl {
            tissue: "islet".into(),
            chrom: "1".into(),
            chrom_index: 0,
            locus_index: 0,
            locus_id: "m0".into(),
            pos_cm: 0.0,
            probe_ids: vec!["p0".into()],
            lods: vec![150.0],
        }];
        let alignment = TissueGenoAlignment {
            tissue: "islet".into(),
            eqtl,
            dna_ids: vec!["a".into(), "b".into()],
            mrna_ids: vec!["a".into(), "b".into()],
            observed: vec![Genotype::BB, Genotype::RR],
            inferred: vec![Genotype::BB, Genotype::BR],
            dropped_eqtl: Vec::new(),
            filtered_samples: Vec::new(),
        };
        let single = alignment.similarity().unwrap();
        let combined = combine_tissues(std::slice::from_ref(&alignment)).unwrap();
        for (i, row_id) in single.row_ids().iter().enumerate() {
            let ci = combined.row_ids().iter().position(|r| r == row_id).unwrap();
            for (j, col_id) in single.col_ids().iter().enumerate() {
                let cj = combined.col_pos(col_id).unwrap();
                let (a, b) = (single.get(i, j), combined.get(ci, cj));
                assert!(a == b || (a.is_nan() && b.is_nan()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn combine_pools_counts_rather_than_averaging() {
        // Tissue A: 1 of 2 matches; tissue B: 2 of 2. Pooled: 3/4, not the
        // mean of 0.5 and 1.0 weighted per tissue count.
        let mk = |observed: Vec<Genotype>, inferred: Vec<Genotype>, n_eqtl: usize| {
            TissueGenoAlignment {
                tissue: format!("t{n_eqtl}"),
                eqtl: (0..n_eqtl)
                    .map(|e| LocalEqtl {
                        tissue: "t".into(),
                        chrom: "1".into(),
                        chrom_index: 0,
                        locus_index: e,
                        locus_id: format!("m{e}"),
                        pos_cm: e as f64,
                        probe_ids: vec![format!("p{e}")],
                        lods: vec![150.0],
                    })
                    .collect(),
                dna_ids: vec!["a".into()],
                mrna_ids: vec!["a".into()],
                observed,
                inferred,
                dropped_eqtl: Vec::new(),
                filtered_samples: Vec::new(),
            }
        };
        use Genotype::*;
        let t1 = mk(vec![BB, BB], vec![BB, RR], 2);
        let t2 = mk(vec![RR, RR], vec![RR, RR], 2);
        let combined = combine_tissues(&[t1, t2]).unwrap();
        assert!((combined.get(0, 0) - 0.75).abs() < 1e-12);
    }

    fn chrom_probs(name: &str, rows: Vec<[f64; 3]>) -> ChromProbs {
        let n_samples = rows.len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        ChromProbs::from_raw(name.to_string(), n_samples, 1, flat)
    }
}
