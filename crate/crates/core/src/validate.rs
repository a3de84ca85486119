//! Cross-reference validation of a parsed dataset.
//!
//! Validation never mutates or rejects: every finding becomes a report
//! entry. Info entries are expected states of real datasets (samples
//! assayed in one modality only); warnings mark data the pipeline will
//! skip or distrust.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::types::Dataset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationEntry {
    pub severity: Severity,
    pub kind: &'static str,
    pub message: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub entries: Vec<ValidationEntry>,
}

impl ValidationReport {
    fn push(&mut self, severity: Severity, kind: &'static str, message: String) {
        self.entries.push(ValidationEntry {
            severity,
            kind,
            message,
        });
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries above info level.
    pub fn defect_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.severity > Severity::Info)
            .count()
    }
}

/// Checks that every entity referenced across the dataset is either present
/// or flagged: markers against the map, probes against the annotation,
/// samples across genotypes/expression/plate, and all-missing genotype
/// rows. Pure: identical inputs give identical reports.
pub fn validate_dataset(dataset: &Dataset) -> ValidationReport {
    let mut report = ValidationReport::default();
    let geno = &dataset.geno;

    for marker in geno.marker_ids() {
        if !dataset.map.contains_marker(marker) {
            report.push(
                Severity::Warning,
                "unmapped marker",
                format!("marker '{marker}' is not on the genetic map"),
            );
        }
    }
    for chrom in dataset.map.chromosomes() {
        for locus in &chrom.loci {
            if geno.marker_pos(&locus.marker_id).is_none() {
                report.push(
                    Severity::Info,
                    "ungenotyped marker",
                    format!("map marker '{}' has no genotype column", locus.marker_id),
                );
            }
        }
    }

    let chrom_names: BTreeSet<&str> = dataset
        .map
        .chromosomes()
        .iter()
        .map(|c| c.name.as_str())
        .collect();
    for expr in &dataset.expression {
        for sample in expr.sample_ids() {
            if geno.sample_pos(sample).is_none() {
                report.push(
                    Severity::Info,
                    "expression-only sample",
                    format!(
                        "sample '{sample}' in tissue {} was never genotyped",
                        expr.tissue()
                    ),
                );
            }
        }
        for probe in expr.probe_ids() {
            match dataset.annotation.get(probe) {
                None => report.push(
                    Severity::Info,
                    "unannotated probe",
                    format!("probe '{probe}' in tissue {} has no annotation", expr.tissue()),
                ),
                Some(locus) => {
                    if let Some(chrom) = &locus.chromosome {
                        if !chrom_names.contains(chrom.as_str()) {
                            report.push(
                                Severity::Warning,
                                "probe on unknown chromosome",
                                format!("probe '{probe}' is annotated on '{chrom}', not on the map"),
                            );
                        }
                    }
                }
            }
        }
    }

    for (i, sample) in geno.sample_ids().iter().enumerate() {
        if geno.row(i).iter().all(|g| g.is_missing()) {
            report.push(
                Severity::Warning,
                "no-call sample",
                format!("sample '{sample}' has no genotype calls"),
            );
        }
        if !dataset.plate.is_empty() && dataset.plate.position_of(sample).is_none() {
            report.push(
                Severity::Info,
                "sample without well",
                format!("sample '{sample}' has no plate position"),
            );
        }
    }
    for entry in dataset.plate.entries() {
        if geno.sample_pos(&entry.sample_id).is_none() {
            report.push(
                Severity::Info,
                "well sample not genotyped",
                format!(
                    "plate {} well {} holds '{}', which has no genotype row",
                    entry.plate_id, entry.well, entry.sample_id
                ),
            );
        }
    }

    report
}
