//! Pipeline thresholds. Every value can be overridden in the manifest and
//! is echoed into the report header of the decisions file.

use serde::{Deserialize, Serialize};

/// All numeric knobs of the pipeline, with their standard defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Between-tissue probe correlation required for the expression-alignment
    /// probe subset.
    pub probe_corr_min: f64,
    /// Expression decisions: self similarity below this marks a potential
    /// mix-up.
    pub expr_self_min: f64,
    /// Expression decisions: best off-diagonal similarity required to relabel.
    pub expr_other_min: f64,
    /// Expression decisions: required margin between the best and
    /// second-best off-diagonal similarity.
    pub expr_gap_min: f64,
    /// Within-tissue correlation marking candidate duplicate arrays.
    pub expr_dup_min: f64,
    /// DNA decisions: self similarity below this marks a potential mix-up.
    pub dna_self_min: f64,
    /// DNA decisions: best off-diagonal similarity required to relabel.
    pub dna_other_min: f64,
    /// DNA decisions: required margin between best and second-best.
    pub dna_gap_min: f64,
    /// Single-position LOD required to accept a probe as a strong local-eQTL.
    pub lod_select: f64,
    /// Neighbors in the eQTL genotype classifier.
    pub knn_k: usize,
    /// Vote share that must be strictly exceeded to assign an inferred
    /// genotype.
    pub knn_vote_min: f64,
    /// Samples with observed/inferred self match below this are dropped from
    /// classifier training in the second pass.
    pub match_filter_min: f64,
    /// Multipoint probability a genotype must exceed to count as observed.
    pub observed_p_min: f64,
    /// Maximum spacing of the evaluation grid, in cM.
    pub pseudomarker_step_cm: f64,
    /// Assumed genotyping error rate of the HMM.
    pub genotype_error_rate: f64,
    /// Genotype identity above which two DNA samples are duplicates.
    pub duplicate_identity_min: f64,
    /// Peak LOD required to call a QTL in verification scans.
    pub lod_peak: f64,
    /// Incompatible X-chromosome calls required to suspect a sex swap
    /// (exactly one is attributed to genotyping error).
    pub sex_error_calls_max: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            probe_corr_min: 0.75,
            expr_self_min: 0.8,
            expr_other_min: 0.8,
            expr_gap_min: 0.1,
            expr_dup_min: 0.95,
            dna_self_min: 0.8,
            dna_other_min: 0.8,
            dna_gap_min: 0.2,
            lod_select: 100.0,
            knn_k: 40,
            knn_vote_min: 0.8,
            match_filter_min: 0.7,
            observed_p_min: 0.99,
            pseudomarker_step_cm: 0.5,
            genotype_error_rate: 0.002,
            duplicate_identity_min: 0.98,
            lod_peak: 5.0,
            sex_error_calls_max: 1,
        }
    }
}

/// Well traversal order used when looking for plate shift runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WellOrder {
    /// A01, B01, .., H01, A02, .. — the usual fill order of a pipetting run.
    #[default]
    ColumnMajor,
    RowMajor,
}

/// Probes used for the expression-based sex check.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SexProbes {
    /// Probe for the X-inactivation transcript, high in females.
    pub xist: Option<String>,
    /// Y-chromosome probes, high in males.
    #[serde(default)]
    pub y: Vec<String>,
}

impl SexProbes {
    pub fn is_configured(&self) -> bool {
        self.xist.is_some() && !self.y.is_empty()
    }
}

/// Samples excluded from the corrected output (poorly behaved data, known
/// ahead of time).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exclusions {
    /// DNA sample ids to drop.
    pub dna: Vec<String>,
    /// Per-tissue expression sample ids to drop.
    pub expression: std::collections::BTreeMap<String, Vec<String>>,
}
