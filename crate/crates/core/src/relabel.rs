//! Merging relabel decisions into a corrected dataset, plus the independent
//! consistency checks: X-chromosome sex, expression-based sex, and DNA
//! duplicates.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::Exclusions;
use crate::error::{Error, Result};
use crate::types::{
    Dataset, ExpressionSet, Genotype, GenotypeMatrix, RelabelDecision, Sex, Verdict,
};

/// A pair of DNA samples whose typed genotypes are nearly identical.
#[derive(Clone, Debug, Serialize)]
pub struct GenotypeDuplicate {
    pub a: String,
    pub b: String,
    pub matches: usize,
    pub typed_in_both: usize,
    pub identity: f64,
}

/// Unordered pairs of samples with genotype identity (exact matches over
/// markers typed in both) at or above `identity_min`.
pub fn find_genotype_duplicates(
    geno: &GenotypeMatrix,
    identity_min: f64,
) -> Vec<GenotypeDuplicate> {
    let n = geno.n_samples();
    let mut pairs: Vec<GenotypeDuplicate> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (i + 1..n).filter_map(move |j| {
                let mut matches = 0usize;
                let mut typed = 0usize;
                for (&a, &b) in geno.row(i).iter().zip(geno.row(j)) {
                    if a.is_missing() || b.is_missing() {
                        continue;
                    }
                    typed += 1;
                    if a == b {
                        matches += 1;
                    }
                }
                if typed == 0 {
                    return None;
                }
                let identity = matches as f64 / typed as f64;
                if identity >= identity_min {
                    Some(GenotypeDuplicate {
                        a: geno.sample_ids()[i].clone(),
                        b: geno.sample_ids()[j].clone(),
                        matches,
                        typed_in_both: typed,
                        identity,
                    })
                } else {
                    None
                }
            })
        })
        .collect();
    pairs.sort_by(|x, y| x.a.cmp(&y.a).then(x.b.cmp(&y.b)));
    pairs
}

/// Rewrites colliding decisions for genotype-duplicate pairs: when both
/// members resolve to the same label, the row already carrying it (or,
/// failing that, the higher self similarity) is retained and the other
/// becomes `duplicate` of the retained sample.
pub fn reconcile_genotype_duplicates(
    decisions: &mut [RelabelDecision],
    pairs: &[GenotypeDuplicate],
) {
    let index: BTreeMap<String, usize> = decisions
        .iter()
        .enumerate()
        .map(|(i, d)| (d.sample_id.clone(), i))
        .collect();
    let final_label = |d: &RelabelDecision| -> Option<String> {
        match d.verdict {
            Verdict::Correct => Some(d.sample_id.clone()),
            Verdict::Fixable => d.new_label.clone(),
            _ => None,
        }
    };
    for pair in pairs {
        let (Some(&ia), Some(&ib)) = (index.get(&pair.a), index.get(&pair.b)) else {
            continue;
        };
        let (fa, fb) = (final_label(&decisions[ia]), final_label(&decisions[ib]));
        let (Some(fa), Some(fb)) = (fa, fb) else { continue };
        if fa != fb {
            continue;
        }
        // Prefer keeping the row whose label already matches the target.
        let keep_a = if (decisions[ia].verdict == Verdict::Correct)
            != (decisions[ib].verdict == Verdict::Correct)
        {
            decisions[ia].verdict == Verdict::Correct
        } else {
            let self_of = |i: usize| {
                decisions[i]
                    .evidence
                    .self_similarity
                    .unwrap_or(f64::NEG_INFINITY)
            };
            self_of(ia) > self_of(ib) || (self_of(ia) == self_of(ib) && pair.a < pair.b)
        };
        let (keep, dup) = if keep_a { (ia, ib) } else { (ib, ia) };
        let retained = final_label(&decisions[keep]).expect("retained member has a final label");
        let dup_id = decisions[dup].sample_id.clone();
        let evidence = decisions[dup].evidence.clone();
        decisions[dup] = RelabelDecision::duplicate(dup_id, retained, evidence).with_note(format!(
            "genotype identity {:.4} ({}/{} markers)",
            pair.identity, pair.matches, pair.typed_in_both
        ));
    }
}

/// Per-sample outcome of the X-chromosome / recorded-sex comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum XSexFinding {
    Consistent,
    /// Multiple incompatible calls: the sample's sex and genotypes disagree.
    SwapSuspect,
    /// A single incompatible call, likely a genotyping error.
    SingleError,
    /// No informative calls (all missing, all RR, or unknown sex).
    Uninformative,
}

/// Compares each sample's X-chromosome calls with its recorded sex.
///
/// Females should be RR or BR on the X; males are hemizygous and recorded as
/// BB or RR. Samples whose non-missing X calls are all RR are compatible
/// with either sex. Up to `single_error_max` incompatible calls (default 1)
/// are attributed to genotyping error; more mark a suspected swap.
pub fn check_x_sex(
    geno: &GenotypeMatrix,
    x_marker_ids: &[String],
    single_error_max: usize,
) -> Vec<(String, XSexFinding)> {
    let cols: Vec<usize> = x_marker_ids
        .iter()
        .filter_map(|id| geno.marker_pos(id))
        .collect();
    (0..geno.n_samples())
        .map(|i| {
            let id = geno.sample_ids()[i].clone();
            let incompatible_code = match geno.sex(i) {
                Sex::Female => Genotype::BB,
                Sex::Male => Genotype::BR,
                Sex::Unknown => return (id, XSexFinding::Uninformative),
            };
            let mut informative = 0usize;
            let mut incompatible = 0usize;
            let mut non_rr = 0usize;
            for &c in &cols {
                let call = geno.call(i, c);
                if call.is_missing() {
                    continue;
                }
                informative += 1;
                if call != Genotype::RR {
                    non_rr += 1;
                }
                if call == incompatible_code {
                    incompatible += 1;
                }
            }
            let finding = if informative == 0 || (incompatible == 0 && non_rr == 0) {
                XSexFinding::Uninformative
            } else if incompatible == 0 {
                XSexFinding::Consistent
            } else if incompatible <= single_error_max {
                XSexFinding::SingleError
            } else {
                XSexFinding::SwapSuspect
            };
            (id, finding)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InferredSex {
    Female,
    Male,
    Ambiguous,
}

/// Infers each sample's sex from Xist expression versus mean Y-chromosome
/// expression by a deterministic 2-means split; points within 10% of the
/// inter-center distance of the decision boundary are ambiguous, as is
/// everything when the named probes are absent.
pub fn infer_expression_sex(
    expr: &ExpressionSet,
    xist_probe: &str,
    y_probes: &[String],
) -> Vec<(String, InferredSex)> {
    let all_ambiguous = || {
        expr.sample_ids()
            .iter()
            .map(|id| (id.clone(), InferredSex::Ambiguous))
            .collect::<Vec<_>>()
    };
    let Some(xist_col) = expr.probe_pos(xist_probe) else {
        return all_ambiguous();
    };
    let y_cols: Vec<usize> = y_probes
        .iter()
        .filter_map(|id| expr.probe_pos(id))
        .collect();
    if y_cols.is_empty() {
        return all_ambiguous();
    }

    // (xist, mean-Y) coordinates; NaN when either axis is unmeasured.
    let points: Vec<(f64, f64)> = (0..expr.n_samples())
        .map(|i| {
            let x = expr.value(i, xist_col);
            let ys: Vec<f64> = y_cols
                .iter()
                .map(|&c| expr.value(i, c))
                .filter(|v| !v.is_nan())
                .collect();
            let y = if ys.is_empty() {
                f64::NAN
            } else {
                ys.iter().sum::<f64>() / ys.len() as f64
            };
            (x, y)
        })
        .collect();

    let usable: Vec<usize> = (0..points.len())
        .filter(|&i| !points[i].0.is_nan() && !points[i].1.is_nan())
        .collect();
    if usable.len() < 2 {
        return all_ambiguous();
    }

    // Deterministic 2-means: seed centers at the extreme Xist values.
    let lo = *usable
        .iter()
        .min_by(|&&a, &&b| {
            points[a]
                .0
                .partial_cmp(&points[b].0)
                .unwrap()
                .then(expr.sample_ids()[a].cmp(&expr.sample_ids()[b]))
        })
        .unwrap();
    let hi = *usable
        .iter()
        .max_by(|&&a, &&b| {
            points[a]
                .0
                .partial_cmp(&points[b].0)
                .unwrap()
                .then(expr.sample_ids()[b].cmp(&expr.sample_ids()[a]))
        })
        .unwrap();
    let mut centers = [points[lo], points[hi]];
    let mut assignment = vec![0usize; points.len()];
    for _ in 0..100 {
        let mut changed = false;
        for &i in &usable {
            let d0 = dist2(points[i], centers[0]);
            let d1 = dist2(points[i], centers[1]);
            let a = usize::from(d1 < d0);
            if assignment[i] != a {
                assignment[i] = a;
                changed = true;
            }
        }
        let mut sums = [(0.0, 0.0, 0usize); 2];
        for &i in &usable {
            let a = assignment[i];
            sums[a].0 += points[i].0;
            sums[a].1 += points[i].1;
            sums[a].2 += 1;
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s.2 > 0 {
                *c = (s.0 / s.2 as f64, s.1 / s.2 as f64);
            }
        }
        if !changed {
            break;
        }
    }

    // Female cluster: higher Xist center.
    let female = if centers[0].0 >= centers[1].0 { 0 } else { 1 };
    let male = 1 - female;
    let axis = (
        centers[female].0 - centers[male].0,
        centers[female].1 - centers[male].1,
    );
    let center_dist = (axis.0 * axis.0 + axis.1 * axis.1).sqrt();
    if center_dist == 0.0 {
        return all_ambiguous();
    }
    let midpoint = (
        0.5 * (centers[female].0 + centers[male].0),
        0.5 * (centers[female].1 + centers[male].1),
    );

    (0..points.len())
        .map(|i| {
            let id = expr.sample_ids()[i].clone();
            let (x, y) = points[i];
            if x.is_nan() || y.is_nan() {
                return (id, InferredSex::Ambiguous);
            }
            // Signed distance to the perpendicular bisector; the female side
            // is positive.
            let s = ((x - midpoint.0) * axis.0 + (y - midpoint.1) * axis.1) / center_dist;
            let sex = if s.abs() < 0.1 * center_dist {
                InferredSex::Ambiguous
            } else if s > 0.0 {
                InferredSex::Female
            } else {
                InferredSex::Male
            };
            (id, sex)
        })
        .collect()
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

/// A dataset plus the original label of every surviving row, so that
/// re-applying the same decisions is a no-op.
#[derive(Clone, Debug)]
pub struct CorrectedDataset {
    pub dataset: Dataset,
    /// Original label of each genotype row, aligned with
    /// `dataset.geno.sample_ids()`.
    pub dna_origins: Vec<String>,
    /// Original label of each expression row, per tissue.
    pub expr_origins: Vec<Vec<String>>,
}

impl CorrectedDataset {
    pub fn pristine(dataset: Dataset) -> Self {
        let dna_origins = dataset.geno.sample_ids().to_vec();
        let expr_origins = dataset
            .expression
            .iter()
            .map(|e| e.sample_ids().to_vec())
            .collect();
        CorrectedDataset {
            dataset,
            dna_origins,
            expr_origins,
        }
    }
}

/// Counts and row-level actions taken on one grid.
#[derive(Clone, Debug, Default, Serialize)]
pub struct GridSummary {
    pub rows: usize,
    pub correct: usize,
    pub fixable: usize,
    pub unfixable: usize,
    pub unverifiable: usize,
    pub duplicate: usize,
    /// origin label → final label, for every relabeled row.
    pub relabeled: Vec<(String, String)>,
    /// duplicate label → retained label, for merged/dropped duplicates.
    pub duplicates_resolved: Vec<(String, String)>,
    pub dropped: Vec<String>,
}

impl GridSummary {
    fn count(&mut self, verdict: Verdict) {
        match verdict {
            Verdict::Correct => self.correct += 1,
            Verdict::Fixable => self.fixable += 1,
            Verdict::Unfixable => self.unfixable += 1,
            Verdict::Unverifiable => self.unverifiable += 1,
            Verdict::Duplicate => self.duplicate += 1,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CorrectionSummary {
    pub expression: BTreeMap<String, GridSummary>,
    pub dna: GridSummary,
    /// Samples relabeled in more than one expression tissue.
    pub multi_tissue_samples: Vec<String>,
}

enum RowAction {
    Keep,
    Relabel(String),
    /// Merge this row into the retained label (expression duplicates).
    MergeInto(String),
    Drop,
}

/// Applies expression and DNA decisions, producing a corrected dataset.
///
/// Expression rows are relabeled per fixable decisions, duplicate arrays are
/// merged (entrywise mean) under the retained label, and mixture-flagged
/// arrays are dropped. DNA rows are relabeled per fixable decisions;
/// unfixable, unverifiable, duplicate, and excluded rows are dropped. A
/// relabeled DNA row takes the recorded sex of its new label, since sex is a
/// property of the animal, not of the tube. Two rows resolving to one label
/// is a hard error naming both sources.
///
/// Decisions are matched against row *origins*, so applying the same
/// decisions to an already-corrected dataset changes nothing.
pub fn apply_corrections(
    input: &CorrectedDataset,
    expr_decisions: &BTreeMap<String, Vec<RelabelDecision>>,
    dna_decisions: &[RelabelDecision],
    exclusions: &Exclusions,
) -> Result<(CorrectedDataset, CorrectionSummary)> {
    let mut summary = CorrectionSummary::default();
    let mut relabel_history: BTreeMap<String, usize> = BTreeMap::new();

    // Expression grids.
    let mut corrected_expression = Vec::with_capacity(input.dataset.expression.len());
    let mut corrected_expr_origins = Vec::with_capacity(input.dataset.expression.len());
    for (t, expr) in input.dataset.expression.iter().enumerate() {
        let decisions = expr_decisions.get(expr.tissue());
        let excluded: BTreeSet<&String> = exclusions
            .expression
            .get(expr.tissue())
            .map(|v| v.iter().collect())
            .unwrap_or_default();
        let (set, origins, grid_summary) = apply_to_expression(
            expr,
            &input.expr_origins[t],
            decisions.map(|d| d.as_slice()).unwrap_or(&[]),
            &excluded,
        )?;
        for (origin, _) in &grid_summary.relabeled {
            *relabel_history.entry(origin.clone()).or_insert(0) += 1;
        }
        summary
            .expression
            .insert(expr.tissue().to_string(), grid_summary);
        corrected_expression.push(set);
        corrected_expr_origins.push(origins);
    }
    summary.multi_tissue_samples = relabel_history
        .into_iter()
        .filter(|(_, n)| *n > 1)
        .map(|(id, _)| id)
        .collect();

    // DNA grid.
    let (geno, dna_origins, dna_summary) = apply_to_genotypes(
        &input.dataset.geno,
        &input.dna_origins,
        dna_decisions,
        &exclusions.dna.iter().collect(),
    )?;
    summary.dna = dna_summary;

    let corrected = CorrectedDataset {
        dataset: Dataset {
            geno,
            map: input.dataset.map.clone(),
            expression: corrected_expression,
            annotation: input.dataset.annotation.clone(),
            plate: input.dataset.plate.clone(),
        },
        dna_origins,
        expr_origins: corrected_expr_origins,
    };
    Ok((corrected, summary))
}

fn decision_lookup(decisions: &[RelabelDecision]) -> HashMap<&str, &RelabelDecision> {
    decisions
        .iter()
        .map(|d| (d.sample_id.as_str(), d))
        .collect()
}

fn detect_collisions(
    grid: &str,
    final_labels: &[(String, String)], // (origin, final)
) -> Result<()> {
    let mut seen: HashMap<&str, &str> = HashMap::new();
    for (origin, label) in final_labels {
        if let Some(prev) = seen.insert(label.as_str(), origin.as_str()) {
            return Err(Error::RelabelCollision {
                grid: grid.to_string(),
                a: prev.to_string(),
                b: origin.clone(),
                label: label.clone(),
            });
        }
    }
    Ok(())
}

fn apply_to_expression(
    expr: &ExpressionSet,
    origins: &[String],
    decisions: &[RelabelDecision],
    excluded: &BTreeSet<&String>,
) -> Result<(ExpressionSet, Vec<String>, GridSummary)> {
    let lookup = decision_lookup(decisions);
    let mut summary = GridSummary {
        rows: expr.n_samples(),
        ..Default::default()
    };
    for d in decisions {
        summary.count(d.verdict);
    }

    let n = expr.n_samples();
    let mut actions: Vec<RowAction> = Vec::with_capacity(n);
    for (row, origin) in origins.iter().enumerate() {
        let current = &expr.sample_ids()[row];
        if excluded.contains(current) || excluded.contains(origin) {
            summary.dropped.push(origin.clone());
            actions.push(RowAction::Drop);
            continue;
        }
        let action = match lookup.get(origin.as_str()) {
            Some(d) => match d.verdict {
                Verdict::Fixable => {
                    let new_label = d.new_label.clone().expect("fixable carries a label");
                    summary.relabeled.push((origin.clone(), new_label.clone()));
                    RowAction::Relabel(new_label)
                }
                Verdict::Duplicate => {
                    let retained = d.new_label.clone().expect("duplicate names the retained");
                    summary
                        .duplicates_resolved
                        .push((origin.clone(), retained.clone()));
                    RowAction::MergeInto(retained)
                }
                Verdict::Unfixable if d.note.as_deref() == Some(crate::decide::MIXTURE_NOTE) => {
                    // Mixture-flagged arrays are dropped.
                    summary.dropped.push(origin.clone());
                    RowAction::Drop
                }
                _ => RowAction::Keep,
            },
            None => RowAction::Keep,
        };
        actions.push(action);
    }

    // Final label per surviving row.
    let mut rows: Vec<(usize, String, String)> = Vec::new(); // (row, origin, final label)
    for (row, action) in actions.iter().enumerate() {
        match action {
            RowAction::Keep => {
                rows.push((row, origins[row].clone(), expr.sample_ids()[row].clone()))
            }
            RowAction::Relabel(label) => rows.push((row, origins[row].clone(), label.clone())),
            RowAction::MergeInto(_) | RowAction::Drop => {}
        }
    }
    let label_pairs: Vec<(String, String)> = rows
        .iter()
        .map(|(_, o, l)| (o.clone(), l.clone()))
        .collect();
    detect_collisions(&format!("expression/{}", expr.tissue()), &label_pairs)?;

    // Merge duplicate rows into their retained row, averaging present values.
    let label_of: HashMap<&str, usize> = rows
        .iter()
        .enumerate()
        .map(|(k, (_, _, label))| (label.as_str(), k))
        .collect();
    let p = expr.n_probes();
    let mut values: Vec<f64> = Vec::with_capacity(rows.len() * p);
    for (row, _, _) in &rows {
        values.extend_from_slice(expr.row(*row));
    }
    for (row, action) in actions.iter().enumerate() {
        if let RowAction::MergeInto(retained) = action {
            let Some(&target) = label_of.get(retained.as_str()) else {
                log::warn!(
                    "duplicate row '{}' names retained label '{}' which is not present; dropping",
                    origins[row],
                    retained
                );
                continue;
            };
            let dup = expr.row(row);
            let base = target * p;
            for (k, &d) in dup.iter().enumerate() {
                let cur = values[base + k];
                values[base + k] = match (cur.is_nan(), d.is_nan()) {
                    (true, true) => f64::NAN,
                    (true, false) => d,
                    (false, true) => cur,
                    (false, false) => 0.5 * (cur + d),
                };
            }
        }
    }

    let set = ExpressionSet::new(
        expr.tissue(),
        rows.iter().map(|(_, _, label)| label.clone()).collect(),
        expr.probe_ids().to_vec(),
        values,
    )?;
    let new_origins = rows.into_iter().map(|(_, origin, _)| origin).collect();
    Ok((set, new_origins, summary))
}

fn apply_to_genotypes(
    geno: &GenotypeMatrix,
    origins: &[String],
    decisions: &[RelabelDecision],
    excluded: &BTreeSet<&String>,
) -> Result<(GenotypeMatrix, Vec<String>, GridSummary)> {
    let lookup = decision_lookup(decisions);
    let mut summary = GridSummary {
        rows: geno.n_samples(),
        ..Default::default()
    };
    for d in decisions {
        summary.count(d.verdict);
    }

    // Sex is keyed by the animal's label.
    let sex_of_label: HashMap<&str, Sex> = geno
        .sample_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), geno.sex(i)))
        .collect();

    let mut rows: Vec<(usize, String, String)> = Vec::new();
    for (row, origin) in origins.iter().enumerate() {
        let current = &geno.sample_ids()[row];
        if excluded.contains(current) || excluded.contains(origin) {
            summary.dropped.push(origin.clone());
            continue;
        }
        match lookup.get(origin.as_str()) {
            Some(d) => match d.verdict {
                Verdict::Fixable => {
                    let new_label = d.new_label.clone().expect("fixable carries a label");
                    summary.relabeled.push((origin.clone(), new_label.clone()));
                    rows.push((row, origin.clone(), new_label));
                }
                Verdict::Duplicate => {
                    let retained = d.new_label.clone().expect("duplicate names the retained");
                    summary.duplicates_resolved.push((origin.clone(), retained));
                    summary.dropped.push(origin.clone());
                }
                Verdict::Unfixable | Verdict::Unverifiable => {
                    summary.dropped.push(origin.clone());
                }
                Verdict::Correct => rows.push((row, origin.clone(), current.clone())),
            },
            None => rows.push((row, origin.clone(), current.clone())),
        }
    }

    let label_pairs: Vec<(String, String)> = rows
        .iter()
        .map(|(_, o, l)| (o.clone(), l.clone()))
        .collect();
    detect_collisions("dna", &label_pairs)?;

    let m = geno.n_markers();
    let mut calls = Vec::with_capacity(rows.len() * m);
    let mut sex = Vec::with_capacity(rows.len());
    for (row, _, label) in &rows {
        calls.extend_from_slice(geno.row(*row));
        sex.push(
            sex_of_label
                .get(label.as_str())
                .copied()
                .unwrap_or(Sex::Unknown),
        );
    }
    let matrix = GenotypeMatrix::new(
        rows.iter().map(|(_, _, label)| label.clone()).collect(),
        geno.marker_ids().to_vec(),
        sex,
        calls,
    )?;
    let new_origins = rows.into_iter().map(|(_, origin, _)| origin).collect();
    Ok((matrix, new_origins, summary))
}

/// One expression-sex disagreement surviving in a dataset.
#[derive(Clone, Debug, Serialize)]
pub struct ExpressionSexMismatch {
    pub tissue: String,
    pub sample_id: String,
    pub recorded: Sex,
    pub inferred: InferredSex,
}

/// Residual sex inconsistencies in a (corrected) dataset.
#[derive(Clone, Debug, Default, Serialize)]
pub struct AuditReport {
    pub x_sex_swap_suspects: Vec<String>,
    pub x_sex_single_errors: Vec<String>,
    pub expression_sex_mismatches: Vec<ExpressionSexMismatch>,
}

impl AuditReport {
    /// Genuine inconsistencies; single incompatible calls are attributed to
    /// genotyping error and excluded.
    pub fn inconsistency_count(&self) -> usize {
        self.x_sex_swap_suspects.len() + self.expression_sex_mismatches.len()
    }
}

/// Re-runs the sex-consistency checks on a dataset (typically corrected).
pub fn post_correction_audit(
    dataset: &Dataset,
    xist_probe: Option<&str>,
    y_probes: &[String],
    single_error_max: usize,
) -> AuditReport {
    let mut report = AuditReport::default();

    if let Some(x) = dataset.map.x_chromosome() {
        let x_markers: Vec<String> = x.loci.iter().map(|l| l.marker_id.clone()).collect();
        for (id, finding) in check_x_sex(&dataset.geno, &x_markers, single_error_max) {
            match finding {
                XSexFinding::SwapSuspect => report.x_sex_swap_suspects.push(id),
                XSexFinding::SingleError => report.x_sex_single_errors.push(id),
                _ => {}
            }
        }
    }

    if let Some(xist) = xist_probe {
        let sex_of_label: HashMap<&str, Sex> = dataset
            .geno
            .sample_ids()
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), dataset.geno.sex(i)))
            .collect();
        for expr in &dataset.expression {
            for (id, inferred) in infer_expression_sex(expr, xist, y_probes) {
                let Some(&recorded) = sex_of_label.get(id.as_str()) else {
                    continue;
                };
                let mismatch = matches!(
                    (recorded, inferred),
                    (Sex::Female, InferredSex::Male) | (Sex::Male, InferredSex::Female)
                );
                if mismatch {
                    report.expression_sex_mismatches.push(ExpressionSexMismatch {
                        tissue: expr.tissue().to_string(),
                        sample_id: id,
                        recorded,
                        inferred,
                    });
                }
            }
        }
    }

    report
}

#[cfg(test)]
pub(crate) fn evidence(
    self_sim: Option<f64>,
    max: Option<f64>,
    second: Option<f64>,
) -> crate::types::Evidence {
    crate::types::Evidence {
        self_similarity: self_sim,
        max_similarity: max,
        second_similarity: second,
        argmax_id: None,
    }
}
