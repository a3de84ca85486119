//! End-to-end orchestration: validation, expression alignment, expression
//! correction, DNA alignment on the corrected expression, DNA correction,
//! plate forensics, sex audits, and before/after trait scans.

use std::collections::BTreeMap;

use crate::config::{Exclusions, SexProbes, Thresholds, WellOrder};
use crate::error::Result;
use crate::expralign::{align_expression, DuplicatePair};
use crate::genoalign::{combine_tissues, decide_dna_labels, two_pass_classifiers, TissueGenoAlignment};
use crate::genoprob::{calc_genoprob, insert_pseudomarkers, GenoProbTensor, PositionGrid};
use crate::plate::{detect_patterns, PlateFindings};
use crate::qtl::{genome_scan, normal_quantile_transform, select_local_eqtl, ScanResult};
use crate::relabel::{
    apply_corrections, find_genotype_duplicates, post_correction_audit,
    reconcile_genotype_duplicates, AuditReport, CorrectedDataset, CorrectionSummary,
    GenotypeDuplicate,
};
use crate::sim::{score_recovery, GroundTruth, RecoveryMetrics};
use crate::types::{Dataset, RelabelDecision, SimilarityMatrix, TraitTable};
use crate::validate::{validate_dataset, ValidationReport};

/// Everything the pipeline needs besides the data.
#[derive(Clone, Debug, Default)]
pub struct PipelineConfig {
    pub thresholds: Thresholds,
    pub sex_probes: SexProbes,
    pub exclusions: Exclusions,
    pub well_order: WellOrder,
}

/// Expression-alignment outputs for all tissues.
#[derive(Clone, Debug)]
pub struct ExpressionStage {
    pub decisions: BTreeMap<String, Vec<RelabelDecision>>,
    pub duplicates: BTreeMap<String, Vec<DuplicatePair>>,
    pub similarities: BTreeMap<String, SimilarityMatrix>,
    /// Selected probe counts per tissue pair, for reporting.
    pub pair_probe_counts: BTreeMap<String, BTreeMap<String, usize>>,
}

/// DNA-alignment outputs.
#[derive(Clone, Debug)]
pub struct DnaStage {
    pub alignments: Vec<TissueGenoAlignment>,
    pub similarities: BTreeMap<String, SimilarityMatrix>,
    pub combined: SimilarityMatrix,
    pub decisions: Vec<RelabelDecision>,
    pub genotype_duplicates: Vec<GenotypeDuplicate>,
}

/// Runs the cross-tissue expression alignment.
pub fn run_expression_alignment(
    dataset: &Dataset,
    config: &PipelineConfig,
) -> Result<ExpressionStage> {
    let t = &config.thresholds;
    let results = align_expression(
        &dataset.expression,
        t.probe_corr_min,
        t.expr_self_min,
        t.expr_other_min,
        t.expr_gap_min,
        t.expr_dup_min,
    )?;
    let mut stage = ExpressionStage {
        decisions: BTreeMap::new(),
        duplicates: BTreeMap::new(),
        similarities: BTreeMap::new(),
        pair_probe_counts: BTreeMap::new(),
    };
    for r in results {
        stage.decisions.insert(r.tissue.clone(), r.decisions);
        stage.duplicates.insert(r.tissue.clone(), r.duplicates);
        stage.similarities.insert(r.tissue.clone(), r.similarity);
        stage
            .pair_probe_counts
            .insert(r.tissue.clone(), r.pair_probe_counts);
    }
    Ok(stage)
}

/// Runs the DNA-to-mRNA alignment. `dataset` should already carry corrected
/// expression labels.
pub fn run_dna_alignment(dataset: &Dataset, config: &PipelineConfig) -> Result<DnaStage> {
    let t = &config.thresholds;
    let grid = insert_pseudomarkers(&dataset.map, t.pseudomarker_step_cm);
    let probs = calc_genoprob(&dataset.geno, &grid, t.genotype_error_rate)?;

    let mut alignments = Vec::new();
    for expr in &dataset.expression {
        let eqtl = select_local_eqtl(
            expr,
            &dataset.annotation,
            &probs,
            &grid,
            &dataset.geno,
            t.lod_select,
        );
        alignments.push(two_pass_classifiers(
            expr,
            &dataset.geno,
            &probs,
            eqtl,
            t.observed_p_min,
            t.knn_k,
            t.knn_vote_min,
            t.match_filter_min,
        ));
    }

    let mut similarities = BTreeMap::new();
    for a in &alignments {
        similarities.insert(a.tissue.clone(), a.similarity()?);
    }
    let combined = combine_tissues(&alignments)?;
    let mut decisions = decide_dna_labels(
        &combined,
        t.dna_self_min,
        t.dna_other_min,
        t.dna_gap_min,
    );
    let genotype_duplicates = find_genotype_duplicates(&dataset.geno, t.duplicate_identity_min);
    reconcile_genotype_duplicates(&mut decisions, &genotype_duplicates);

    Ok(DnaStage {
        alignments,
        similarities,
        combined,
        decisions,
        genotype_duplicates,
    })
}

/// One before/after pair of genome scans for a trait.
#[derive(Clone, Debug)]
pub struct TraitScans {
    pub trait_name: String,
    pub before: ScanResult,
    pub after: ScanResult,
}

/// Scans a trait on a dataset: normal-quantile transform, sex as an
/// interactive covariate. A dataset with no measured samples yields an
/// empty scan rather than an error.
pub fn scan_trait(
    dataset: &Dataset,
    traits: &TraitTable,
    trait_name: &str,
    grid: &PositionGrid,
    probs: &GenoProbTensor,
) -> Result<ScanResult> {
    let trait_idx = traits.trait_pos(trait_name).ok_or_else(|| {
        crate::error::Error::invalid("trait", format!("unknown trait '{trait_name}'"))
    })?;
    let raw: Vec<f64> = dataset
        .geno
        .sample_ids()
        .iter()
        .map(|id| traits.value_for(id, trait_idx).unwrap_or(f64::NAN))
        .collect();
    if raw.iter().all(|v| v.is_nan()) {
        log::warn!("trait '{trait_name}': no measured samples, skipping scan");
        return Ok(ScanResult::default());
    }
    let pheno = normal_quantile_transform(&raw)?;
    Ok(genome_scan(
        &pheno,
        probs,
        grid,
        Some(dataset.geno.sexes()),
        true,
    ))
}

/// Full pipeline output.
pub struct PipelineOutputs {
    pub validation: ValidationReport,
    pub audit_before: AuditReport,
    pub expression: ExpressionStage,
    pub dna: DnaStage,
    pub corrected: CorrectedDataset,
    pub summary: CorrectionSummary,
    pub plate_findings: PlateFindings,
    pub audit_after: AuditReport,
    pub scans: Vec<TraitScans>,
    pub recovery: Option<RecoveryMetrics>,
}

/// Runs the entire pipeline in its canonical order: exclusions first, then
/// expression alignment and correction, then DNA alignment on the corrected
/// expression, then DNA correction, forensics, audits, and trait scans.
pub fn run_all(
    dataset: &Dataset,
    traits: Option<&TraitTable>,
    ground_truth: Option<&GroundTruth>,
    config: &PipelineConfig,
) -> Result<PipelineOutputs> {
    let validation = validate_dataset(dataset);
    let xist = config.sex_probes.xist.as_deref();
    let audit_before = post_correction_audit(
        dataset,
        xist,
        &config.sex_probes.y,
        config.thresholds.sex_error_calls_max,
    );

    // Drop excluded rows before any alignment.
    let pristine = CorrectedDataset::pristine(dataset.clone());
    let (cleaned, _) = apply_corrections(&pristine, &BTreeMap::new(), &[], &config.exclusions)?;

    // Expression alignment and correction.
    let expression = run_expression_alignment(&cleaned.dataset, config)?;
    let (expr_corrected, expr_summary) = apply_corrections(
        &cleaned,
        &expression.decisions,
        &[],
        &Exclusions::default(),
    )?;

    // DNA alignment against the corrected expression, then DNA correction.
    let dna = run_dna_alignment(&expr_corrected.dataset, config)?;
    let (corrected, dna_summary) = apply_corrections(
        &expr_corrected,
        &BTreeMap::new(),
        &dna.decisions,
        &Exclusions::default(),
    )?;
    let summary = CorrectionSummary {
        expression: expr_summary.expression,
        dna: dna_summary.dna,
        multi_tissue_samples: expr_summary.multi_tissue_samples,
    };

    let plate_findings = detect_patterns(&dna.decisions, &dataset.plate, config.well_order);
    let audit_after = post_correction_audit(
        &corrected.dataset,
        xist,
        &config.sex_probes.y,
        config.thresholds.sex_error_calls_max,
    );

    // Before/after scans for every trait.
    let mut scans = Vec::new();
    if let Some(traits) = traits {
        let grid = insert_pseudomarkers(&dataset.map, config.thresholds.pseudomarker_step_cm);
        let probs_before = calc_genoprob(
            &dataset.geno,
            &grid,
            config.thresholds.genotype_error_rate,
        )?;
        let probs_after = calc_genoprob(
            &corrected.dataset.geno,
            &grid,
            config.thresholds.genotype_error_rate,
        )?;
        for trait_name in traits.trait_names() {
            let before = scan_trait(dataset, traits, trait_name, &grid, &probs_before)?;
            let after = scan_trait(&corrected.dataset, traits, trait_name, &grid, &probs_after)?;
            scans.push(TraitScans {
                trait_name: trait_name.clone(),
                before,
                after,
            });
        }
    }

    let recovery =
        ground_truth.map(|truth| score_recovery(&expression.decisions, &dna.decisions, truth));

    Ok(PipelineOutputs {
        validation,
        audit_before,
        expression,
        dna,
        corrected,
        summary,
        plate_findings,
        audit_after,
        scans,
        recovery,
    })
}
