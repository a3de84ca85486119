//! Core domain types shared by every stage of the pipeline.
//!
//! All types are immutable after construction; corrections and other
//! transformations build new values rather than mutating in place, so
//! everything here is safe to share across threads.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// F2 genotype call. `B` is the B6 allele, `R` the BTBR allele; hemizygous
/// males on the X are recorded as the corresponding homozygote.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Genotype {
    BB,
    BR,
    RR,
    Missing,
}

/// The three informative states, indexed 0..3 throughout the HMM and
/// classifier code.
pub const GENOTYPE_STATES: [Genotype; 3] = [Genotype::BB, Genotype::BR, Genotype::RR];

impl Genotype {
    pub fn is_missing(self) -> bool {
        self == Genotype::Missing
    }

    /// Index into [`GENOTYPE_STATES`], or `None` for Missing.
    pub fn state_index(self) -> Option<usize> {
        match self {
            Genotype::BB => Some(0),
            Genotype::BR => Some(1),
            Genotype::RR => Some(2),
            Genotype::Missing => None,
        }
    }

    /// Additive dosage of the R allele centered at the heterozygote:
    /// BB → −1, BR → 0, RR → +1.
    pub fn additive_dosage(self) -> Option<f64> {
        match self {
            Genotype::BB => Some(-1.0),
            Genotype::BR => Some(0.0),
            Genotype::RR => Some(1.0),
            Genotype::Missing => None,
        }
    }

    pub fn from_token(token: &str) -> Option<Genotype> {
        match token {
            "BB" => Some(Genotype::BB),
            "BR" => Some(Genotype::BR),
            "RR" => Some(Genotype::RR),
            "-" => Some(Genotype::Missing),
            _ => None,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Genotype::BB => "BB",
            Genotype::BR => "BR",
            Genotype::RR => "RR",
            Genotype::Missing => "-",
        }
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Female,
    Male,
    Unknown,
}

impl Sex {
    pub fn from_token(token: &str) -> Option<Sex> {
        match token.to_ascii_lowercase().as_str() {
            "f" | "female" => Some(Sex::Female),
            "m" | "male" => Some(Sex::Male),
            "-" | "?" | "unknown" | "" => Some(Sex::Unknown),
            _ => None,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Sex::Female => "f",
            Sex::Male => "m",
            Sex::Unknown => "-",
        }
    }
}

fn build_unique_index(ids: &[String], what: &'static str) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if index.insert(id.clone(), i).is_some() {
            return Err(Error::invalid(what, format!("duplicate id '{id}'")));
        }
    }
    Ok(index)
}

/// Dense samples × markers grid of genotype calls with per-sample sex.
#[derive(Clone, Debug)]
pub struct GenotypeMatrix {
    sample_ids: Vec<String>,
    marker_ids: Vec<String>,
    sex: Vec<Sex>,
    calls: Vec<Genotype>,
    sample_index: HashMap<String, usize>,
    marker_index: HashMap<String, usize>,
}

impl GenotypeMatrix {
    pub fn new(
        sample_ids: Vec<String>,
        marker_ids: Vec<String>,
        sex: Vec<Sex>,
        calls: Vec<Genotype>,
    ) -> Result<Self> {
        let sample_index = build_unique_index(&sample_ids, "genotype sample ids")?;
        let marker_index = build_unique_index(&marker_ids, "genotype marker ids")?;
        if sex.len() != sample_ids.len() {
            return Err(Error::invalid(
                "genotype matrix",
                format!("{} sex entries for {} samples", sex.len(), sample_ids.len()),
            ));
        }
        if calls.len() != sample_ids.len() * marker_ids.len() {
            return Err(Error::invalid(
                "genotype matrix",
                format!(
                    "{} calls for {} samples x {} markers",
                    calls.len(),
                    sample_ids.len(),
                    marker_ids.len()
                ),
            ));
        }
        Ok(GenotypeMatrix {
            sample_ids,
            marker_ids,
            sex,
            calls,
            sample_index,
            marker_index,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_markers(&self) -> usize {
        self.marker_ids.len()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn marker_ids(&self) -> &[String] {
        &self.marker_ids
    }

    pub fn sample_pos(&self, id: &str) -> Option<usize> {
        self.sample_index.get(id).copied()
    }

    pub fn marker_pos(&self, id: &str) -> Option<usize> {
        self.marker_index.get(id).copied()
    }

    pub fn sex(&self, sample: usize) -> Sex {
        self.sex[sample]
    }

    pub fn sexes(&self) -> &[Sex] {
        &self.sex
    }

    pub fn call(&self, sample: usize, marker: usize) -> Genotype {
        self.calls[sample * self.marker_ids.len() + marker]
    }

    pub fn row(&self, sample: usize) -> &[Genotype] {
        let m = self.marker_ids.len();
        &self.calls[sample * m..(sample + 1) * m]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChromosomeKind {
    Autosome,
    X,
}

#[derive(Clone, Debug)]
pub struct MapLocus {
    pub marker_id: String,
    pub pos_cm: f64,
}

#[derive(Clone, Debug)]
pub struct Chromosome {
    pub name: String,
    pub kind: ChromosomeKind,
    pub loci: Vec<MapLocus>,
}

/// Ordered marker positions per chromosome, in centiMorgans.
#[derive(Clone, Debug)]
pub struct GeneticMap {
    chromosomes: Vec<Chromosome>,
    marker_lookup: HashMap<String, (usize, usize)>,
}

impl GeneticMap {
    pub fn new(chromosomes: Vec<Chromosome>) -> Result<Self> {
        let mut marker_lookup = HashMap::new();
        for (ci, chrom) in chromosomes.iter().enumerate() {
            let mut prev = f64::NEG_INFINITY;
            for (li, locus) in chrom.loci.iter().enumerate() {
                if !locus.pos_cm.is_finite() {
                    return Err(Error::invalid(
                        "genetic map",
                        format!("non-finite position for marker '{}'", locus.marker_id),
                    ));
                }
                if locus.pos_cm < prev {
                    return Err(Error::invalid(
                        "genetic map",
                        format!(
                            "positions decrease on chromosome {} at marker '{}'",
                            chrom.name, locus.marker_id
                        ),
                    ));
                }
                prev = locus.pos_cm;
                if marker_lookup
                    .insert(locus.marker_id.clone(), (ci, li))
                    .is_some()
                {
                    return Err(Error::invalid(
                        "genetic map",
                        format!("marker '{}' appears on more than one chromosome", locus.marker_id),
                    ));
                }
            }
        }
        Ok(GeneticMap {
            chromosomes,
            marker_lookup,
        })
    }

    pub fn chromosomes(&self) -> &[Chromosome] {
        &self.chromosomes
    }

    pub fn autosomes(&self) -> impl Iterator<Item = &Chromosome> {
        self.chromosomes
            .iter()
            .filter(|c| c.kind == ChromosomeKind::Autosome)
    }

    pub fn x_chromosome(&self) -> Option<&Chromosome> {
        self.chromosomes.iter().find(|c| c.kind == ChromosomeKind::X)
    }

    pub fn contains_marker(&self, marker_id: &str) -> bool {
        self.marker_lookup.contains_key(marker_id)
    }

    /// Chromosome name and position of a mapped marker.
    pub fn marker_position(&self, marker_id: &str) -> Option<(&str, f64)> {
        self.marker_lookup.get(marker_id).map(|&(ci, li)| {
            let chrom = &self.chromosomes[ci];
            (chrom.name.as_str(), chrom.loci[li].pos_cm)
        })
    }
}

/// Per-tissue samples × probes expression grid. Missing measurements are
/// stored as NaN; every non-NaN value is finite.
#[derive(Clone, Debug)]
pub struct ExpressionSet {
    tissue: String,
    sample_ids: Vec<String>,
    probe_ids: Vec<String>,
    values: Vec<f64>,
    sample_index: HashMap<String, usize>,
    probe_index: HashMap<String, usize>,
}

impl ExpressionSet {
    pub fn new(
        tissue: impl Into<String>,
        sample_ids: Vec<String>,
        probe_ids: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let tissue = tissue.into();
        let sample_index = build_unique_index(&sample_ids, "expression sample ids")?;
        let probe_index = build_unique_index(&probe_ids, "expression probe ids")?;
        if values.len() != sample_ids.len() * probe_ids.len() {
            return Err(Error::invalid(
                "expression set",
                format!(
                    "{} values for {} samples x {} probes in tissue {}",
                    values.len(),
                    sample_ids.len(),
                    probe_ids.len(),
                    tissue
                ),
            ));
        }
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::invalid(
                "expression set",
                format!("non-finite expression value in tissue {tissue}"),
            ));
        }
        Ok(ExpressionSet {
            tissue,
            sample_ids,
            probe_ids,
            values,
            sample_index,
            probe_index,
        })
    }

    pub fn tissue(&self) -> &str {
        &self.tissue
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_probes(&self) -> usize {
        self.probe_ids.len()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn probe_ids(&self) -> &[String] {
        &self.probe_ids
    }

    pub fn sample_pos(&self, id: &str) -> Option<usize> {
        self.sample_index.get(id).copied()
    }

    pub fn probe_pos(&self, id: &str) -> Option<usize> {
        self.probe_index.get(id).copied()
    }

    /// NaN when the measurement is missing.
    pub fn value(&self, sample: usize, probe: usize) -> f64 {
        self.values[sample * self.probe_ids.len() + probe]
    }

    pub fn row(&self, sample: usize) -> &[f64] {
        let p = self.probe_ids.len();
        &self.values[sample * p..(sample + 1) * p]
    }
}

/// Genomic location of an array probe on the genetic map; probes without a
/// known location carry no chromosome.
#[derive(Clone, Debug, Default)]
pub struct ProbeAnnotation {
    entries: BTreeMap<String, ProbeLocus>,
}

#[derive(Clone, Debug)]
pub struct ProbeLocus {
    pub chromosome: Option<String>,
    pub pos_cm: Option<f64>,
}

impl ProbeAnnotation {
    pub fn new(entries: BTreeMap<String, ProbeLocus>) -> Self {
        ProbeAnnotation { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, probe_id: &str) -> Option<&ProbeLocus> {
        self.entries.get(probe_id)
    }

    /// Chromosome and position for probes with a known location.
    pub fn located(&self, probe_id: &str) -> Option<(&str, f64)> {
        self.entries.get(probe_id).and_then(|locus| {
            match (&locus.chromosome, locus.pos_cm) {
                (Some(chrom), Some(pos)) => Some((chrom.as_str(), pos)),
                _ => None,
            }
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ProbeLocus)> {
        self.entries.iter()
    }
}

/// A 96-well plate coordinate, row A–H and column 01–12.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Well {
    row: u8,
    col: u8,
}

impl Well {
    pub fn new(row: u8, col: u8) -> Option<Well> {
        if row < 8 && col < 12 {
            Some(Well { row, col })
        } else {
            None
        }
    }

    /// Parses labels of the form `A01`..`H12`.
    pub fn parse(label: &str) -> Option<Well> {
        let bytes = label.as_bytes();
        if bytes.len() != 3 {
            return None;
        }
        let row = bytes[0];
        if !(b'A'..=b'H').contains(&row) {
            return None;
        }
        let col: u8 = label[1..].parse().ok()?;
        if !(1..=12).contains(&col) {
            return None;
        }
        Well::new(row - b'A', col - 1)
    }

    pub fn row(&self) -> u8 {
        self.row
    }

    pub fn col(&self) -> u8 {
        self.col
    }

    /// Index in column-major fill order: A01, B01, .., H01, A02, ..
    pub fn column_major_index(&self) -> usize {
        self.col as usize * 8 + self.row as usize
    }

    /// Index in row-major fill order: A01, A02, .., A12, B01, ..
    pub fn row_major_index(&self) -> usize {
        self.row as usize * 12 + self.col as usize
    }

    pub fn from_column_major_index(index: usize) -> Option<Well> {
        if index < 96 {
            Well::new((index % 8) as u8, (index / 8) as u8)
        } else {
            None
        }
    }
}

impl fmt::Display for Well {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:02}", (b'A' + self.row) as char, self.col + 1)
    }
}

#[derive(Clone, Debug)]
pub struct PlateAssignment {
    pub sample_id: String,
    pub plate_id: String,
    pub well: Well,
}

/// Mapping of samples to genotyping-plate wells; each (plate, well) pair
/// holds at most one sample.
#[derive(Clone, Debug, Default)]
pub struct PlateLayout {
    entries: Vec<PlateAssignment>,
    by_sample: HashMap<String, usize>,
}

impl PlateLayout {
    pub fn new(entries: Vec<PlateAssignment>) -> Result<Self> {
        let mut by_sample = HashMap::with_capacity(entries.len());
        let mut seen_wells: HashMap<(String, Well), String> = HashMap::new();
        for (i, entry) in entries.iter().enumerate() {
            if by_sample.insert(entry.sample_id.clone(), i).is_some() {
                return Err(Error::invalid(
                    "plate layout",
                    format!("duplicate sample id '{}'", entry.sample_id),
                ));
            }
            if let Some(prev) = seen_wells.insert(
                (entry.plate_id.clone(), entry.well),
                entry.sample_id.clone(),
            ) {
                return Err(Error::invalid(
                    "plate layout",
                    format!(
                        "well {} on plate {} assigned to both '{}' and '{}'",
                        entry.well, entry.plate_id, prev, entry.sample_id
                    ),
                ));
            }
        }
        Ok(PlateLayout { entries, by_sample })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[PlateAssignment] {
        &self.entries
    }

    pub fn position_of(&self, sample_id: &str) -> Option<&PlateAssignment> {
        self.by_sample.get(sample_id).map(|&i| &self.entries[i])
    }

    /// Distinct plate ids in lexicographic order.
    pub fn plate_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.entries.iter().map(|e| e.plate_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Declared range of a similarity score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreRange {
    /// Pearson correlations in [−1, 1].
    Correlation,
    /// Match proportions in [0, 1].
    Proportion,
}

impl ScoreRange {
    pub fn contains(self, v: f64) -> bool {
        match self {
            ScoreRange::Correlation => (-1.0..=1.0).contains(&v),
            ScoreRange::Proportion => (0.0..=1.0).contains(&v),
        }
    }
}

/// Row-labeled × column-labeled similarity scores; NaN marks cells that
/// could not be computed.
#[derive(Clone, Debug)]
pub struct SimilarityMatrix {
    row_ids: Vec<String>,
    col_ids: Vec<String>,
    scores: Vec<f64>,
    range: ScoreRange,
    col_index: HashMap<String, usize>,
}

impl SimilarityMatrix {
    pub fn new(
        row_ids: Vec<String>,
        col_ids: Vec<String>,
        scores: Vec<f64>,
        range: ScoreRange,
    ) -> Result<Self> {
        build_unique_index(&row_ids, "similarity row ids")?;
        let col_index = build_unique_index(&col_ids, "similarity column ids")?;
        if scores.len() != row_ids.len() * col_ids.len() {
            return Err(Error::invalid(
                "similarity matrix",
                format!(
                    "{} scores for {} rows x {} columns",
                    scores.len(),
                    row_ids.len(),
                    col_ids.len()
                ),
            ));
        }
        // Tolerance for scores that land a few ulps outside the range.
        const SLOP: f64 = 1e-12;
        let (lo, hi) = match range {
            ScoreRange::Correlation => (-1.0, 1.0),
            ScoreRange::Proportion => (0.0, 1.0),
        };
        for &s in &scores {
            if s.is_nan() {
                continue;
            }
            if s < lo - SLOP || s > hi + SLOP {
                return Err(Error::invalid(
                    "similarity matrix",
                    format!("score {s} outside declared range"),
                ));
            }
        }
        Ok(SimilarityMatrix {
            row_ids,
            col_ids,
            scores,
            range,
            col_index,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_ids.len()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[String] {
        &self.col_ids
    }

    pub fn range(&self) -> ScoreRange {
        self.range
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.scores[row * self.col_ids.len() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let c = self.col_ids.len();
        &self.scores[row * c..(row + 1) * c]
    }

    pub fn col_pos(&self, id: &str) -> Option<usize> {
        self.col_index.get(id).copied()
    }

    /// Diagonal entry for a row: the column carrying the same label, if any.
    pub fn self_similarity(&self, row: usize) -> Option<f64> {
        let col = self.col_pos(&self.row_ids[row])?;
        let v = self.get(row, col);
        if v.is_nan() {
            None
        } else {
            Some(v)
        }
    }
}

/// Clinical trait values keyed by sample; NaN marks missing measurements.
#[derive(Clone, Debug)]
pub struct TraitTable {
    sample_ids: Vec<String>,
    trait_names: Vec<String>,
    values: Vec<f64>,
    sample_index: HashMap<String, usize>,
}

impl TraitTable {
    pub fn new(
        sample_ids: Vec<String>,
        trait_names: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let sample_index = build_unique_index(&sample_ids, "trait sample ids")?;
        build_unique_index(&trait_names, "trait names")?;
        if values.len() != sample_ids.len() * trait_names.len() {
            return Err(Error::invalid(
                "trait table",
                format!(
                    "{} values for {} samples x {} traits",
                    values.len(),
                    sample_ids.len(),
                    trait_names.len()
                ),
            ));
        }
        Ok(TraitTable {
            sample_ids,
            trait_names,
            values,
            sample_index,
        })
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn trait_names(&self) -> &[String] {
        &self.trait_names
    }

    pub fn get(&self, sample: usize, trait_idx: usize) -> f64 {
        self.values[sample * self.trait_names.len() + trait_idx]
    }

    pub fn value_for(&self, sample_id: &str, trait_idx: usize) -> Option<f64> {
        self.sample_index
            .get(sample_id)
            .map(|&i| self.get(i, trait_idx))
    }

    pub fn trait_pos(&self, name: &str) -> Option<usize> {
        self.trait_names.iter().position(|t| t == name)
    }
}

/// A complete parsed dataset: the unit the pipeline operates on.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub geno: GenotypeMatrix,
    pub map: GeneticMap,
    pub expression: Vec<ExpressionSet>,
    pub annotation: ProbeAnnotation,
    pub plate: PlateLayout,
}

impl Dataset {
    pub fn tissue(&self, name: &str) -> Option<&ExpressionSet> {
        self.expression.iter().find(|e| e.tissue() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Correct,
    Fixable,
    Unfixable,
    Unverifiable,
    Duplicate,
}

/// Similarity evidence backing a relabel verdict.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub self_similarity: Option<f64>,
    pub max_similarity: Option<f64>,
    pub second_similarity: Option<f64>,
    pub argmax_id: Option<String>,
}

/// Per-sample outcome of a similarity-matrix decision.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelabelDecision {
    pub sample_id: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub new_label: Option<String>,
    pub evidence: Evidence,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl RelabelDecision {
    pub fn correct(sample_id: impl Into<String>, evidence: Evidence) -> Self {
        RelabelDecision {
            sample_id: sample_id.into(),
            verdict: Verdict::Correct,
            new_label: None,
            evidence,
            note: None,
        }
    }

    pub fn fixable(
        sample_id: impl Into<String>,
        new_label: impl Into<String>,
        evidence: Evidence,
    ) -> Self {
        let sample_id = sample_id.into();
        let new_label = new_label.into();
        assert_ne!(sample_id, new_label, "fixable decision must change the label");
        RelabelDecision {
            sample_id,
            verdict: Verdict::Fixable,
            new_label: Some(new_label),
            evidence,
            note: None,
        }
    }

    pub fn unfixable(sample_id: impl Into<String>, evidence: Evidence) -> Self {
        RelabelDecision {
            sample_id: sample_id.into(),
            verdict: Verdict::Unfixable,
            new_label: None,
            evidence,
            note: None,
        }
    }

    pub fn unverifiable(sample_id: impl Into<String>, evidence: Evidence) -> Self {
        RelabelDecision {
            sample_id: sample_id.into(),
            verdict: Verdict::Unverifiable,
            new_label: None,
            evidence,
            note: None,
        }
    }

    /// `retained` names the sample that keeps the label.
    pub fn duplicate(
        sample_id: impl Into<String>,
        retained: impl Into<String>,
        evidence: Evidence,
    ) -> Self {
        RelabelDecision {
            sample_id: sample_id.into(),
            verdict: Verdict::Duplicate,
            new_label: Some(retained.into()),
            evidence,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genotype_tokens_round_trip() {
        for g in [Genotype::BB, Genotype::BR, Genotype::RR, Genotype::Missing] {
            assert_eq!(Genotype::from_token(g.token()), Some(g));
        }
        assert_eq!(Genotype::from_token("AB"), None);
    }

    #[test]
    fn genotype_matrix_rejects_duplicate_sample() {
        let err = GenotypeMatrix::new(
            vec!["Mouse3259".into(), "Mouse3259".into()],
            vec!["m1".into()],
            vec![Sex::Female, Sex::Male],
            vec![Genotype::BB, Genotype::RR],
        )
        .unwrap_err();
        assert!(err.to_string().contains("Mouse3259"));
    }

    #[test]
    fn genetic_map_rejects_decreasing_positions() {
        let err = GeneticMap::new(vec![Chromosome {
            name: "1".into(),
            kind: ChromosomeKind::Autosome,
            loci: vec![
                MapLocus {
                    marker_id: "a".into(),
                    pos_cm: 5.0,
                },
                MapLocus {
                    marker_id: "b".into(),
                    pos_cm: 3.0,
                },
            ],
        }])
        .unwrap_err();
        assert!(err.to_string().contains("chromosome 1"));
    }

    #[test]
    fn genetic_map_allows_tied_positions() {
        let map = GeneticMap::new(vec![Chromosome {
            name: "1".into(),
            kind: ChromosomeKind::Autosome,
            loci: vec![
                MapLocus {
                    marker_id: "a".into(),
                    pos_cm: 5.0,
                },
                MapLocus {
                    marker_id: "b".into(),
                    pos_cm: 5.0,
                },
            ],
        }]);
        assert!(map.is_ok());
    }

    #[test]
    fn well_parsing() {
        let w = Well::parse("A01").unwrap();
        assert_eq!((w.row(), w.col()), (0, 0));
        assert_eq!(w.column_major_index(), 0);
        let w = Well::parse("H12").unwrap();
        assert_eq!(w.column_major_index(), 95);
        assert_eq!(w.to_string(), "H12");
        assert!(Well::parse("I01").is_none());
        assert!(Well::parse("A13").is_none());
        assert!(Well::parse("A00").is_none());
        assert!(Well::parse("A1").is_none());
    }

    #[test]
    fn well_column_major_order() {
        // A01 -> 0, B01 -> 1, A02 -> 8.
        assert_eq!(Well::parse("B01").unwrap().column_major_index(), 1);
        assert_eq!(Well::parse("A02").unwrap().column_major_index(), 8);
        for i in 0..96 {
            assert_eq!(
                Well::from_column_major_index(i).unwrap().column_major_index(),
                i
            );
        }
    }

    #[test]
    fn plate_layout_rejects_reused_well() {
        let err = PlateLayout::new(vec![
            PlateAssignment {
                sample_id: "a".into(),
                plate_id: "p1".into(),
                well: Well::parse("A01").unwrap(),
            },
            PlateAssignment {
                sample_id: "b".into(),
                plate_id: "p1".into(),
                well: Well::parse("A01").unwrap(),
            },
        ])
        .unwrap_err();
        assert!(err.to_string().contains("A01"));
    }

    #[test]
    fn similarity_matrix_diagonal_by_label() {
        let m = SimilarityMatrix::new(
            vec!["s1".into(), "s2".into()],
            vec!["s2".into(), "s1".into(), "s3".into()],
            vec![0.1, 0.9, 0.2, 0.8, 0.3, f64::NAN],
            ScoreRange::Correlation,
        )
        .unwrap();
        assert_eq!(m.self_similarity(0), Some(0.9));
        assert_eq!(m.self_similarity(1), Some(0.8));
    }

    #[test]
    fn similarity_matrix_rejects_out_of_range() {
        let err = SimilarityMatrix::new(
            vec!["s1".into()],
            vec!["s1".into()],
            vec![1.5],
            ScoreRange::Proportion,
        );
        assert!(err.is_err());
    }

    #[test]
    #[should_panic(expected = "must change the label")]
    fn fixable_requires_new_label() {
        let _ = RelabelDecision::fixable("a", "a", Evidence::default());
    }
}
