//! File formats: CSV parsers for every input, CSV/JSON/SVG writers for
//! every result, and the TOML manifest tying a dataset together.
//!
//! All CSVs are UTF-8 with a header row and comma separators; identifiers
//! are restricted to `[A-Za-z0-9_.-]`, so no quoting is ever needed.
//! Missing expression is `NA`, missing genotype is `-`. Numbers are written
//! with Rust's shortest round-trip formatting, so parse∘write is the
//! identity on every domain object.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{Exclusions, SexProbes, Thresholds, WellOrder};
use crate::error::{Error, Result};
use crate::expralign::DuplicatePair;
use crate::plate::PlateFindings;
use crate::qtl::ScanResult;
use crate::relabel::{AuditReport, CorrectionSummary, GenotypeDuplicate};
use crate::sim::{GroundTruth, RecoveryMetrics, SimConfig};
use crate::types::{
    Chromosome, ChromosomeKind, Dataset, ExpressionSet, GeneticMap, Genotype, GenotypeMatrix,
    MapLocus, PlateAssignment, PlateLayout, ProbeAnnotation, ProbeLocus, RelabelDecision, Sex,
    SimilarityMatrix, TraitTable, Well,
};

const ID_CHARS: &str = "identifiers may contain only [A-Za-z0-9_.-]";

fn valid_id(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

fn read_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            Error::parse(path.display().to_string(), i + 1, e.to_string())
        })?;
        rows.push(record.iter().map(|s| s.to_string()).collect());
    }
    if rows.is_empty() {
        return Err(Error::parse(
            path.display().to_string(),
            1,
            "empty file; expected a header row",
        ));
    }
    let width = rows[0].len();
    for (i, row) in rows.iter().enumerate().skip(1) {
        if row.len() != width {
            return Err(Error::parse(
                path.display().to_string(),
                i + 1,
                format!("ragged row: {} fields, header has {width}", row.len()),
            ));
        }
    }
    Ok(rows)
}

fn check_ids<'a>(
    path: &Path,
    ids: impl Iterator<Item = (usize, &'a str)>,
) -> Result<()> {
    for (row, id) in ids {
        if !valid_id(id) {
            return Err(Error::parse(
                path.display().to_string(),
                row,
                format!("invalid identifier '{id}': {ID_CHARS}"),
            ));
        }
    }
    Ok(())
}

/// Parses the genotype CSV: header `id,sex,<marker>...`, cells in
/// {BB,BR,RR,-}, sex in {f,m,-}.
pub fn parse_genotypes(path: &Path) -> Result<GenotypeMatrix> {
    let rows = read_rows(path)?;
    let header = &rows[0];
    if header.len() < 2 || header[0] != "id" || header[1] != "sex" {
        return Err(Error::parse(
            path.display().to_string(),
            1,
            "genotype header must start with 'id,sex'",
        ));
    }
    let marker_ids: Vec<String> = header[2..].to_vec();
    check_ids(path, marker_ids.iter().map(|m| (1, m.as_str())))?;

    let mut sample_ids = Vec::new();
    let mut sexes = Vec::new();
    let mut calls = Vec::with_capacity((rows.len() - 1) * marker_ids.len());
    let mut seen = std::collections::HashSet::new();
    for (i, row) in rows.iter().enumerate().skip(1) {
        let line = i + 1;
        let id = &row[0];
        check_ids(path, std::iter::once((line, id.as_str())))?;
        if !seen.insert(id.clone()) {
            return Err(Error::parse(
                path.display().to_string(),
                line,
                format!("duplicate sample id '{id}'"),
            ));
        }
        let sex = Sex::from_token(&row[1]).ok_or_else(|| {
            Error::parse(
                path.display().to_string(),
                line,
                format!("unknown sex token '{}'", row[1]),
            )
        })?;
        for (j, cell) in row[2..].iter().enumerate() {
            let g = Genotype::from_token(cell).ok_or_else(|| {
                Error::parse(
                    path.display().to_string(),
                    line,
                    format!(
                        "unknown genotype token '{cell}' at row {line}, marker {}",
                        marker_ids[j]
                    ),
                )
            })?;
            calls.push(g);
        }
        sample_ids.push(id.clone());
        sexes.push(sex);
    }
    GenotypeMatrix::new(sample_ids, marker_ids, sexes, calls)
}

pub fn write_genotypes(geno: &GenotypeMatrix, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("id,sex");
    for m in geno.marker_ids() {
        let _ = write!(out, ",{m}");
    }
    out.push('\n');
    for i in 0..geno.n_samples() {
        let _ = write!(out, "{},{}", geno.sample_ids()[i], geno.sex(i).token());
        for &g in geno.row(i) {
            let _ = write!(out, ",{}", g.token());
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses an expression CSV: header `id,<probe>...`, cells numeric or `NA`.
pub fn parse_expression(path: &Path, tissue: &str) -> Result<ExpressionSet> {
    let rows = read_rows(path)?;
    let header = &rows[0];
    if header.is_empty() || header[0] != "id" {
        return Err(Error::parse(
            path.display().to_string(),
            1,
            "expression header must start with 'id'",
        ));
    }
    let probe_ids: Vec<String> = header[1..].to_vec();
    check_ids(path, probe_ids.iter().map(|p| (1, p.as_str())))?;

    let mut sample_ids = Vec::new();
    let mut values = Vec::with_capacity((rows.len() - 1) * probe_ids.len());
    for (i, row) in rows.iter().enumerate().skip(1) {
        let line = i + 1;
        check_ids(path, std::iter::once((line, row[0].as_str())))?;
        sample_ids.push(row[0].clone());
        for (j, cell) in row[1..].iter().enumerate() {
            if cell == "NA" {
                values.push(f64::NAN);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::parse(
                        path.display().to_string(),
                        line,
                        format!("non-numeric cell '{cell}' for probe {}", probe_ids[j]),
                    )
                })?;
                values.push(v);
            }
        }
    }
    ExpressionSet::new(tissue, sample_ids, probe_ids, values)
}

pub fn write_expression(expr: &ExpressionSet, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("id");
    for p in expr.probe_ids() {
        let _ = write!(out, ",{p}");
    }
    out.push('\n');
    for i in 0..expr.n_samples() {
        let _ = write!(out, "{}", expr.sample_ids()[i]);
        for &v in expr.row(i) {
            if v.is_nan() {
                out.push_str(",NA");
            } else {
                let _ = write!(out, ",{v}");
            }
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses the genetic map CSV: `marker,chr,pos_cM`, positions nondecreasing
/// within each chromosome; chromosome `X` is the X chromosome.
pub fn parse_map(path: &Path) -> Result<GeneticMap> {
    let rows = read_rows(path)?;
    if rows[0] != ["marker", "chr", "pos_cM"] {
        return Err(Error::parse(
            path.display().to_string(),
            1,
            "map header must be 'marker,chr,pos_cM'",
        ));
    }
    let mut chromosomes: Vec<Chromosome> = Vec::new();
    for (i, row) in rows.iter().enumerate().skip(1) {
        let line = i + 1;
        check_ids(path, [(line, row[0].as_str()), (line, row[1].as_str())].into_iter())?;
        let pos: f64 = row[2].parse().map_err(|_| {
            Error::parse(
                path.display().to_string(),
                line,
                format!("non-numeric position '{}'", row[2]),
            )
        })?;
        let chrom_name = &row[1];
        if chromosomes.last().map(|c| &c.name) != Some(chrom_name) {
            if chromosomes.iter().any(|c| &c.name == chrom_name) {
                return Err(Error::parse(
                    path.display().to_string(),
                    line,
                    format!("chromosome {chrom_name} appears in two separate blocks"),
                ));
            }
            let kind = if chrom_name.eq_ignore_ascii_case("x") {
                ChromosomeKind::X
            } else {
                ChromosomeKind::Autosome
            };
            chromosomes.push(Chromosome {
                name: chrom_name.clone(),
                kind,
                loci: Vec::new(),
            });
        }
        let chrom = chromosomes.last_mut().expect("just pushed");
        if let Some(last) = chrom.loci.last() {
            if pos < last.pos_cm {
                return Err(Error::parse(
                    path.display().to_string(),
                    line,
                    format!(
                        "positions decrease on chromosome {chrom_name}: {} after {}",
                        pos, last.pos_cm
                    ),
                ));
            }
        }
        chrom.loci.push(MapLocus {
            marker_id: row[0].clone(),
            pos_cm: pos,
        });
    }
    GeneticMap::new(chromosomes)
}

pub fn write_map(map: &GeneticMap, path: &Path) -> Result<()> {
    let mut out = String::from("marker,chr,pos_cM\n");
    for chrom in map.chromosomes() {
        for locus in &chrom.loci {
            let _ = writeln!(out, "{},{},{}", locus.marker_id, chrom.name, locus.pos_cm);
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses the plate CSV: `id,plate,well`, wells matching
/// `[A-H](0[1-9]|1[0-2])`.
pub fn parse_plate(path: &Path) -> Result<PlateLayout> {
    let rows = read_rows(path)?;
    if rows[0] != ["id", "plate", "well"] {
        return Err(Error::parse(
            path.display().to_string(),
            1,
            "plate header must be 'id,plate,well'",
        ));
    }
    let mut entries = Vec::new();
    for (i, row) in rows.iter().enumerate().skip(1) {
        let line = i + 1;
        check_ids(path, [(line, row[0].as_str()), (line, row[1].as_str())].into_iter())?;
        let well = Well::parse(&row[2]).ok_or_else(|| {
            Error::parse(
                path.display().to_string(),
                line,
                format!("invalid well '{}'", row[2]),
            )
        })?;
        entries.push(PlateAssignment {
            sample_id: row[0].clone(),
            plate_id: row[1].clone(),
            well,
        });
    }
    PlateLayout::new(entries)
}

pub fn write_plate(layout: &PlateLayout, path: &Path) -> Result<()> {
    let mut out = String::from("id,plate,well\n");
    for e in layout.entries() {
        let _ = writeln!(out, "{},{},{}", e.sample_id, e.plate_id, e.well);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses the probe annotation CSV: `probe,chr,pos_cM`; an empty chr means
/// the probe has no known location.
pub fn parse_probe_annotation(path: &Path) -> Result<ProbeAnnotation> {
    let rows = read_rows(path)?;
    if rows[0] != ["probe", "chr", "pos_cM"] {
        return Err(Error::parse(
            path.display().to_string(),
            1,
            "annotation header must be 'probe,chr,pos_cM'",
        ));
    }
    let mut entries = BTreeMap::new();
    for (i, row) in rows.iter().enumerate().skip(1) {
        let line = i + 1;
        check_ids(path, std::iter::once((line, row[0].as_str())))?;
        let locus = if row[1].is_empty() {
            ProbeLocus {
                chromosome: None,
                pos_cm: None,
            }
        } else {
            let pos: f64 = row[2].parse().map_err(|_| {
                Error::parse(
                    path.display().to_string(),
                    line,
                    format!("non-numeric position '{}'", row[2]),
                )
            })?;
            ProbeLocus {
                chromosome: Some(row[1].clone()),
                pos_cm: Some(pos),
            }
        };
        if entries.insert(row[0].clone(), locus).is_some() {
            return Err(Error::parse(
                path.display().to_string(),
                line,
                format!("duplicate probe id '{}'", row[0]),
            ));
        }
    }
    Ok(ProbeAnnotation::new(entries))
}

pub fn write_probe_annotation(annot: &ProbeAnnotation, path: &Path) -> Result<()> {
    let mut out = String::from("probe,chr,pos_cM\n");
    for (probe, locus) in annot.iter() {
        match (&locus.chromosome, locus.pos_cm) {
            (Some(chrom), Some(pos)) => {
                let _ = writeln!(out, "{probe},{chrom},{pos}");
            }
            _ => {
                let _ = writeln!(out, "{probe},,");
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses a trait CSV: header `id,<trait>...`, cells numeric or `NA`.
pub fn parse_traits(path: &Path) -> Result<TraitTable> {
    let rows = read_rows(path)?;
    if rows[0].is_empty() || rows[0][0] != "id" {
        return Err(Error::parse(
            path.display().to_string(),
            1,
            "trait header must start with 'id'",
        ));
    }
    let trait_names: Vec<String> = rows[0][1..].to_vec();
    let mut sample_ids = Vec::new();
    let mut values = Vec::new();
    for (i, row) in rows.iter().enumerate().skip(1) {
        let line = i + 1;
        check_ids(path, std::iter::once((line, row[0].as_str())))?;
        sample_ids.push(row[0].clone());
        for cell in &row[1..] {
            if cell == "NA" {
                values.push(f64::NAN);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::parse(
                        path.display().to_string(),
                        line,
                        format!("non-numeric trait value '{cell}'"),
                    )
                })?;
                values.push(v);
            }
        }
    }
    TraitTable::new(sample_ids, trait_names, values)
}

pub fn write_traits(traits: &TraitTable, path: &Path) -> Result<()> {
    let mut out = String::from("id");
    for t in traits.trait_names() {
        let _ = write!(out, ",{t}");
    }
    out.push('\n');
    for (i, id) in traits.sample_ids().iter().enumerate() {
        let _ = write!(out, "{id}");
        for t in 0..traits.trait_names().len() {
            let v = traits.get(i, t);
            if v.is_nan() {
                out.push_str(",NA");
            } else {
                let _ = write!(out, ",{v}");
            }
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes a similarity matrix as CSV with row labels in the first column.
pub fn write_similarity(sim: &SimilarityMatrix, path: &Path) -> Result<()> {
    let mut out = String::from("id");
    for c in sim.col_ids() {
        let _ = write!(out, ",{c}");
    }
    out.push('\n');
    for (i, id) in sim.row_ids().iter().enumerate() {
        let _ = write!(out, "{id}");
        for j in 0..sim.n_cols() {
            let v = sim.get(i, j);
            if v.is_nan() {
                out.push_str(",NA");
            } else {
                let _ = write!(out, ",{v}");
            }
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes LOD curves as `locus,chr,pos_cM,lod`.
pub fn write_scan_csv(scan: &ScanResult, path: &Path) -> Result<()> {
    let mut out = String::from("locus,chr,pos_cM,lod\n");
    for chrom in &scan.chromosomes {
        for locus in &chrom.loci {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                locus.locus_id, chrom.chrom, locus.pos_cm, locus.lod
            );
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::invalid("json", e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_ground_truth(truth: &GroundTruth, path: &Path) -> Result<()> {
    write_json(truth, path)
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::parse(path.display().to_string(), e.line(), e.to_string()))
}

pub fn write_plate_findings(findings: &PlateFindings, path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a> {
        schema_version: u32,
        #[serde(flatten)]
        findings: &'a PlateFindings,
    }
    write_json(
        &Doc {
            schema_version: 1,
            findings,
        },
        path,
    )
}

/// The decisions document: thresholds echoed first, then per-grid verdicts
/// and supporting reports.
#[derive(Serialize)]
pub struct DecisionsReport<'a> {
    pub schema_version: u32,
    pub config: &'a Thresholds,
    pub expression_decisions: &'a BTreeMap<String, Vec<RelabelDecision>>,
    pub dna_decisions: &'a [RelabelDecision],
    pub expression_duplicates: &'a BTreeMap<String, Vec<DuplicatePair>>,
    pub genotype_duplicates: &'a [GenotypeDuplicate],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correction_summary: Option<&'a CorrectionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit_before: Option<&'a AuditReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit_after: Option<&'a AuditReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovery: Option<&'a RecoveryMetrics>,
}

pub fn write_decisions(report: &DecisionsReport, path: &Path) -> Result<()> {
    write_json(report, path)
}

/// Result files of a pipeline run, written under one directory:
/// decisions JSON, per-tissue and combined similarity CSVs, plate findings
/// JSON, and corrected dataset CSVs in the input formats.
pub struct ReportFiles<'a> {
    pub decisions: DecisionsReport<'a>,
    pub expr_similarities: &'a BTreeMap<String, SimilarityMatrix>,
    pub dna_similarities: &'a BTreeMap<String, SimilarityMatrix>,
    pub dna_combined: Option<&'a SimilarityMatrix>,
    pub plate_findings: Option<&'a PlateFindings>,
    pub corrected: Option<&'a Dataset>,
}

pub fn write_report(files: &ReportFiles, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    let mut emit = |p: PathBuf| written.push(p);

    let decisions_path = out_dir.join("decisions.json");
    write_decisions(&files.decisions, &decisions_path)?;
    emit(decisions_path);

    for (tissue, sim) in files.expr_similarities {
        let p = out_dir.join(format!("similarity_expr_{tissue}.csv"));
        write_similarity(sim, &p)?;
        emit(p);
    }
    for (tissue, sim) in files.dna_similarities {
        let p = out_dir.join(format!("similarity_dna_{tissue}.csv"));
        write_similarity(sim, &p)?;
        emit(p);
    }
    if let Some(sim) = files.dna_combined {
        let p = out_dir.join("similarity_dna_combined.csv");
        write_similarity(sim, &p)?;
        emit(p);
    }
    if let Some(findings) = files.plate_findings {
        let p = out_dir.join("plate_findings.json");
        write_plate_findings(findings, &p)?;
        emit(p);
    }
    if let Some(dataset) = files.corrected {
        let p = out_dir.join("corrected_genotypes.csv");
        write_genotypes(&dataset.geno, &p)?;
        emit(p);
        for expr in &dataset.expression {
            let p = out_dir.join(format!("corrected_expr_{}.csv", expr.tissue()));
            write_expression(expr, &p)?;
            emit(p);
        }
    }
    Ok(written)
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestPaths {
    pub genotypes: PathBuf,
    pub map: PathBuf,
    pub plate: PathBuf,
    pub probe_annotation: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traits: Option<PathBuf>,
    /// Tissue name → expression CSV. Tissues are processed in the
    /// lexicographic order of this table.
    pub expression: BTreeMap<String, PathBuf>,
}

/// The declarative description of a dataset: file paths plus every
/// threshold override.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub paths: ManifestPaths,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub sex_probes: SexProbes,
    #[serde(default)]
    pub exclusions: Exclusions,
    #[serde(default)]
    pub well_order: WellOrder,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimConfig>,
}

fn default_schema_version() -> u32 {
    1
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: DatasetManifest = toml::from_str(&text).map_err(|e| Error::Manifest {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if manifest.paths.expression.is_empty() {
            return Err(Error::Manifest {
                path: path.display().to_string(),
                message: "at least one expression tissue is required".into(),
            });
        }
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self).map_err(|e| Error::Manifest {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Loads every referenced file; relative paths resolve against
    /// `base_dir` (normally the manifest's directory).
    pub fn load_dataset(&self, base_dir: &Path) -> Result<(Dataset, Option<TraitTable>)> {
        let resolve = |p: &PathBuf| -> PathBuf {
            if p.is_absolute() {
                p.clone()
            } else {
                base_dir.join(p)
            }
        };
        let geno = parse_genotypes(&resolve(&self.paths.genotypes))?;
        let map = parse_map(&resolve(&self.paths.map))?;
        let plate = parse_plate(&resolve(&self.paths.plate))?;
        let annotation = parse_probe_annotation(&resolve(&self.paths.probe_annotation))?;
        let mut expression = Vec::new();
        for (tissue, path) in &self.paths.expression {
            expression.push(parse_expression(&resolve(path), tissue)?);
        }
        let traits = match &self.paths.traits {
            Some(p) => Some(parse_traits(&resolve(p))?),
            None => None,
        };
        Ok((
            Dataset {
                geno,
                map,
                expression,
                annotation,
                plate,
            },
            traits,
        ))
    }
}

/// Writes a simulated dataset plus a ready-to-run manifest and the ground
/// truth. Returns the manifest path.
pub fn write_simulated_dataset(
    dataset: &Dataset,
    traits: &TraitTable,
    truth: &GroundTruth,
    config: &SimConfig,
    sex_probes: &SexProbes,
    dir: &Path,
) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_genotypes(&dataset.geno, &dir.join("genotypes.csv"))?;
    write_map(&dataset.map, &dir.join("map.csv"))?;
    write_plate(&dataset.plate, &dir.join("plate.csv"))?;
    write_probe_annotation(&dataset.annotation, &dir.join("probes.csv"))?;
    write_traits(traits, &dir.join("traits.csv"))?;
    let mut expression = BTreeMap::new();
    for expr in &dataset.expression {
        let name = format!("expr_{}.csv", expr.tissue());
        write_expression(expr, &dir.join(&name))?;
        expression.insert(expr.tissue().to_string(), PathBuf::from(name));
    }
    write_ground_truth(truth, &dir.join("ground_truth.json"))?;

    let manifest = DatasetManifest {
        schema_version: 1,
        paths: ManifestPaths {
            genotypes: "genotypes.csv".into(),
            map: "map.csv".into(),
            plate: "plate.csv".into(),
            probe_annotation: "probes.csv".into(),
            traits: Some("traits.csv".into()),
            expression,
        },
        thresholds: Thresholds::default(),
        sex_probes: sex_probes.clone(),
        exclusions: Exclusions::default(),
        well_order: WellOrder::ColumnMajor,
        simulate: Some(config.clone()),
    };
    let path = dir.join("manifest.toml");
    manifest.save(&path)?;
    Ok(path)
}
