//! Whole-genome LOD curves, peaks, and 2-LOD support intervals.

use std::collections::BTreeMap;

use crate::genoprob::{GenoProbTensor, PositionGrid};
use crate::qtl::hk::hk_lod_at;
use crate::types::Sex;

#[derive(Clone, Debug)]
pub struct LocusLod {
    pub locus_id: String,
    pub pos_cm: f64,
    pub lod: f64,
}

#[derive(Clone, Debug)]
pub struct ChromScan {
    pub chrom: String,
    pub loci: Vec<LocusLod>,
    pub peak_index: usize,
    pub peak_lod: f64,
    /// cM range of the 2-LOD support interval around the peak.
    pub support_interval: (f64, f64),
}

#[derive(Clone, Debug, Default)]
pub struct ScanResult {
    pub chromosomes: Vec<ChromScan>,
}

impl ScanResult {
    /// Highest peak across chromosomes.
    pub fn max_peak_lod(&self) -> f64 {
        self.chromosomes
            .iter()
            .map(|c| c.peak_lod)
            .fold(0.0, f64::max)
    }

    pub fn chromosome(&self, name: &str) -> Option<&ChromScan> {
        self.chromosomes.iter().find(|c| c.chrom == name)
    }
}

/// Runs Haley-Knott regression at every grid locus of every autosome.
///
/// The support interval spans the outermost grid loci on the chromosome
/// whose LOD is within 2 of the peak; it always contains the peak locus.
pub fn genome_scan(
    pheno: &[f64],
    probs: &GenoProbTensor,
    grid: &PositionGrid,
    sex: Option<&[Sex]>,
    interactive: bool,
) -> ScanResult {
    let chromosomes = probs
        .chromosomes
        .iter()
        .map(|chrom| {
            let grid_chrom = grid
                .chromosome(&chrom.name)
                .expect("tensor chromosome missing from grid");
            let loci: Vec<LocusLod> = (0..chrom.n_loci)
                .map(|locus| {
                    let rows: Vec<[f64; 3]> =
                        (0..chrom.n_samples).map(|s| chrom.get(s, locus)).collect();
                    let fit = hk_lod_at(pheno, &rows, sex, interactive);
                    LocusLod {
                        locus_id: grid_chrom.loci[locus].id.clone(),
                        pos_cm: grid_chrom.loci[locus].pos_cm,
                        lod: fit.lod,
                    }
                })
                .collect();

            let peak_index = loci
                .iter()
                .enumerate()
                .max_by(|(ia, a), (ib, b)| {
                    a.lod
                        .partial_cmp(&b.lod)
                        .unwrap()
                        .then(ib.cmp(ia)) // ties resolve to the lower position
                })
                .map(|(i, _)| i)
                .unwrap_or(0);
            let peak_lod = loci.get(peak_index).map(|l| l.lod).unwrap_or(0.0);

            let threshold = peak_lod - 2.0;
            let lo = loci
                .iter()
                .position(|l| l.lod >= threshold)
                .unwrap_or(peak_index);
            let hi = loci
                .iter()
                .rposition(|l| l.lod >= threshold)
                .unwrap_or(peak_index);
            let support_interval = (loci[lo].pos_cm, loci[hi].pos_cm);

            ChromScan {
                chrom: chrom.name.clone(),
                loci,
                peak_index,
                peak_lod,
                support_interval,
            }
        })
        .collect();
    ScanResult { chromosomes }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EqtlClass {
    Local,
    Trans,
    None,
}

/// Classifies each chromosome's peak relative to the probe position:
/// a peak at or above `lod_peak` is local when the probe's own chromosome
/// carries it and the support interval contains the probe, trans otherwise.
/// Unlocated probes classify as `None` everywhere.
pub fn classify_local_trans(
    scan: &ScanResult,
    probe_location: Option<(&str, f64)>,
    lod_peak: f64,
) -> BTreeMap<String, EqtlClass> {
    scan.chromosomes
        .iter()
        .map(|chrom| {
            let class = match probe_location {
                None => EqtlClass::None,
                Some((probe_chrom, probe_pos)) => {
                    if chrom.peak_lod < lod_peak {
                        EqtlClass::None
                    } else if chrom.chrom == probe_chrom
                        && probe_pos >= chrom.support_interval.0
                        && probe_pos <= chrom.support_interval.1
                    {
                        EqtlClass::Local
                    } else {
                        EqtlClass::Trans
                    }
                }
            };
            (chrom.chrom.clone(), class)
        })
        .collect()
}
