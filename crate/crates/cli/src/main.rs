//! lineup-forge: detect and correct sample mix-ups in matched
//! genotype/gene-expression datasets.
//!
//! Logs go to standard error; data goes to files or standard output.
//! Exit status: 0 on success, 1 on input errors, 2 on internal errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lineup_core::config::Exclusions;
use lineup_core::io::{self, DatasetManifest, DecisionsReport, ReportFiles};
use lineup_core::pipeline::{self, PipelineConfig, PipelineOutputs};
use lineup_core::plate::emit_plate_diagram;
use lineup_core::relabel::{apply_corrections, CorrectedDataset};
use lineup_core::sim::{
    inject_mixups, simulate_cross, simulate_expression, simulated_sex_probes, SimConfig,
};
use lineup_core::types::{Dataset, TraitTable};
use lineup_core::validate::validate_dataset;
use lineup_core::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "lineup-forge",
    version,
    about = "Sample mix-up detection and correction for genotype/expression datasets"
)]
struct Cli {
    /// Cap worker parallelism; results do not depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic intercross dataset with injected mix-ups.
    Simulate {
        /// Simulation config TOML; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for the dataset, manifest, and ground truth.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check dataset cross-references; prints the report as JSON.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Detect mix-ups among the expression arrays.
    AlignExpr {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detect mix-ups among the DNA samples (corrects expression labels
    /// first unless --no-expr-fix).
    AlignDna {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Align DNA against the uncorrected expression labels.
        #[arg(long)]
        no_expr_fix: bool,
    },
    /// Apply all decisions and write the corrected dataset.
    Correct {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify plate error patterns and draw per-plate SVG diagrams.
    Forensics {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Genome scans before and after correction, one CSV pair per trait.
    Scan {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Trait to scan (default: every trait in the traits file).
        #[arg(long = "trait")]
        trait_name: Option<String>,
    },
    /// The entire pipeline: validate, align, correct, forensics, scans.
    RunAll {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            // Unknown flags and malformed invocations are input errors.
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not set thread count: {e}");
        }
    }

    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let input = e
                .downcast_ref::<CoreError>()
                .map(CoreError::is_input_error)
                .unwrap_or(false);
            ExitCode::from(if input { 1 } else { 2 })
        }
    }
}

fn load_manifest(path: &Path) -> anyhow::Result<(DatasetManifest, Dataset, Option<TraitTable>)> {
    let manifest = DatasetManifest::load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let (dataset, traits) = manifest.load_dataset(base)?;
    Ok((manifest, dataset, traits))
}

fn pipeline_config(manifest: &DatasetManifest) -> PipelineConfig {
    PipelineConfig {
        thresholds: manifest.thresholds.clone(),
        sex_probes: manifest.sex_probes.clone(),
        exclusions: manifest.exclusions.clone(),
        well_order: manifest.well_order,
    }
}

/// Ground truth sitting beside the manifest is scored automatically.
fn sibling_ground_truth(manifest_path: &Path) -> Option<lineup_core::sim::GroundTruth> {
    let p = manifest_path.parent()?.join("ground_truth.json");
    if !p.exists() {
        return None;
    }
    match io::read_ground_truth(&p) {
        Ok(t) => {
            log::info!("scoring against {}", p.display());
            Some(t)
        }
        Err(e) => {
            log::warn!("ignoring unreadable ground truth {}: {e}", p.display());
            None
        }
    }
}

/// Shared writer for the full-pipeline subcommands.
fn write_outputs(
    outputs: &PipelineOutputs,
    manifest: &DatasetManifest,
    dataset: &Dataset,
    out: &Path,
    with_corrected: bool,
    with_forensics: bool,
    with_scans: bool,
) -> anyhow::Result<()> {
    let files = ReportFiles {
        decisions: DecisionsReport {
            schema_version: 1,
            config: &manifest.thresholds,
            expression_decisions: &outputs.expression.decisions,
            dna_decisions: &outputs.dna.decisions,
            expression_duplicates: &outputs.expression.duplicates,
            genotype_duplicates: &outputs.dna.genotype_duplicates,
            correction_summary: Some(&outputs.summary),
            audit_before: Some(&outputs.audit_before),
            audit_after: Some(&outputs.audit_after),
            recovery: outputs.recovery.as_ref(),
        },
        expr_similarities: &outputs.expression.similarities,
        dna_similarities: &outputs.dna.similarities,
        dna_combined: Some(&outputs.dna.combined),
        plate_findings: with_forensics.then_some(&outputs.plate_findings),
        corrected: with_corrected.then_some(&outputs.corrected.dataset),
    };
    for p in io::write_report(&files, out)? {
        log::info!("wrote {}", p.display());
    }
    if with_forensics {
        let svgs = emit_plate_diagram(
            &outputs.plate_findings,
            &outputs.dna.decisions,
            &dataset.plate,
            manifest.well_order,
            &out.join("plates"),
        )?;
        for p in &svgs {
            log::info!("wrote {}", p.display());
        }
    }
    if with_scans {
        for scans in &outputs.scans {
            let before = out.join(format!("scan_{}_before.csv", scans.trait_name));
            let after = out.join(format!("scan_{}_after.csv", scans.trait_name));
            io::write_scan_csv(&scans.before, &before)?;
            io::write_scan_csv(&scans.after, &after)?;
            log::info!(
                "trait {}: peak LOD {:.2} before, {:.2} after",
                scans.trait_name,
                scans.before.max_peak_lod(),
                scans.after.max_peak_lod()
            );
        }
    }
    Ok(())
}

/// Runs the full pipeline for the subcommands that need corrections.
fn full_pipeline(
    manifest_path: &Path,
    with_traits: bool,
) -> anyhow::Result<(DatasetManifest, Dataset, PipelineOutputs)> {
    let (manifest, dataset, traits) = load_manifest(manifest_path)?;
    let truth = sibling_ground_truth(manifest_path);
    let config = pipeline_config(&manifest);
    let traits = if with_traits { traits } else { None };
    let outputs = pipeline::run_all(&dataset, traits.as_ref(), truth.as_ref(), &config)?;
    Ok((manifest, dataset, outputs))
}

fn parse_sim_config(path: &Path) -> anyhow::Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
    let config: SimConfig = toml::from_str(&text).map_err(|e| CoreError::Manifest {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(config)
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Simulate { config, out } => {
            let mut sim_config = match config {
                Some(p) => parse_sim_config(&p)?,
                None => SimConfig::default(),
            };
            if let Ok(seed) = std::env::var("LINEUP_FORGE_SEED") {
                let seed: u64 = seed.parse().map_err(|_| {
                    CoreError::invalid("seed", format!("LINEUP_FORGE_SEED='{seed}'"))
                })?;
                log::info!("seed overridden by LINEUP_FORGE_SEED={seed}");
                sim_config.seed = seed;
            }
            let cross = simulate_cross(&sim_config)?;
            let expr = simulate_expression(&cross.truth, &cross.map, &sim_config)?;
            let clean = Dataset {
                geno: cross.observed,
                map: cross.map,
                expression: expr.tissues,
                annotation: expr.annotation,
                plate: cross.plate,
            };
            let (perturbed, truth) =
                inject_mixups(&clean, &sim_config.perturbations, &sim_config)?;
            let manifest_path = io::write_simulated_dataset(
                &perturbed,
                &expr.traits,
                &truth,
                &sim_config,
                &simulated_sex_probes(),
                &out,
            )?;
            log::info!("wrote {}", manifest_path.display());
            println!("{}", manifest_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { manifest } => {
            let (_, dataset, _) = load_manifest(&manifest)?;
            let report = validate_dataset(&dataset);
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::AlignExpr { manifest, out } => {
            let (manifest, dataset, _) = load_manifest(&manifest)?;
            let config = pipeline_config(&manifest);
            let pristine = CorrectedDataset::pristine(dataset);
            let (cleaned, _) =
                apply_corrections(&pristine, &BTreeMap::new(), &[], &config.exclusions)?;
            let stage = pipeline::run_expression_alignment(&cleaned.dataset, &config)?;
            let empty_dna_sims = BTreeMap::new();
            let files = ReportFiles {
                decisions: DecisionsReport {
                    schema_version: 1,
                    config: &manifest.thresholds,
                    expression_decisions: &stage.decisions,
                    dna_decisions: &[],
                    expression_duplicates: &stage.duplicates,
                    genotype_duplicates: &[],
                    correction_summary: None,
                    audit_before: None,
                    audit_after: None,
                    recovery: None,
                },
                expr_similarities: &stage.similarities,
                dna_similarities: &empty_dna_sims,
                dna_combined: None,
                plate_findings: None,
                corrected: None,
            };
            for p in io::write_report(&files, &out)? {
                log::info!("wrote {}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::AlignDna {
            manifest,
            out,
            no_expr_fix,
        } => {
            let (manifest, dataset, _) = load_manifest(&manifest)?;
            let config = pipeline_config(&manifest);
            let pristine = CorrectedDataset::pristine(dataset);
            let (cleaned, _) =
                apply_corrections(&pristine, &BTreeMap::new(), &[], &config.exclusions)?;

            let (expr_stage, aligned_input) = if no_expr_fix {
                (None, cleaned)
            } else {
                let stage = pipeline::run_expression_alignment(&cleaned.dataset, &config)?;
                let (fixed, _) =
                    apply_corrections(&cleaned, &stage.decisions, &[], &Exclusions::default())?;
                (Some(stage), fixed)
            };
            let dna = pipeline::run_dna_alignment(&aligned_input.dataset, &config)?;

            let empty_decisions = BTreeMap::new();
            let empty_dups = BTreeMap::new();
            let empty_sims = BTreeMap::new();
            let files = ReportFiles {
                decisions: DecisionsReport {
                    schema_version: 1,
                    config: &manifest.thresholds,
                    expression_decisions: expr_stage
                        .as_ref()
                        .map(|s| &s.decisions)
                        .unwrap_or(&empty_decisions),
                    dna_decisions: &dna.decisions,
                    expression_duplicates: expr_stage
                        .as_ref()
                        .map(|s| &s.duplicates)
                        .unwrap_or(&empty_dups),
                    genotype_duplicates: &dna.genotype_duplicates,
                    correction_summary: None,
                    audit_before: None,
                    audit_after: None,
                    recovery: None,
                },
                expr_similarities: expr_stage
                    .as_ref()
                    .map(|s| &s.similarities)
                    .unwrap_or(&empty_sims),
                dna_similarities: &dna.similarities,
                dna_combined: Some(&dna.combined),
                plate_findings: None,
                corrected: None,
            };
            for p in io::write_report(&files, &out)? {
                log::info!("wrote {}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Correct { manifest, out } => {
            let (manifest_doc, dataset, outputs) = full_pipeline(&manifest, false)?;
            write_outputs(&outputs, &manifest_doc, &dataset, &out, true, false, false)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Forensics { manifest, out } => {
            let (manifest_doc, dataset, outputs) = full_pipeline(&manifest, false)?;
            write_outputs(&outputs, &manifest_doc, &dataset, &out, false, true, false)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Scan {
            manifest,
            out,
            trait_name,
        } => {
            let (manifest_doc, dataset, traits) = load_manifest(&manifest)?;
            let Some(traits) = traits else {
                return Err(CoreError::Manifest {
                    path: manifest.display().to_string(),
                    message: "scan requires a traits file in the manifest".into(),
                }
                .into());
            };
            if let Some(name) = &trait_name {
                if traits.trait_pos(name).is_none() {
                    return Err(
                        CoreError::invalid("trait", format!("unknown trait '{name}'")).into(),
                    );
                }
            }
            let config = pipeline_config(&manifest_doc);
            let outputs = pipeline::run_all(&dataset, Some(&traits), None, &config)?;
            std::fs::create_dir_all(&out).map_err(|e| CoreError::io(&out, e))?;
            for scans in &outputs.scans {
                if trait_name
                    .as_ref()
                    .is_some_and(|name| name != &scans.trait_name)
                {
                    continue;
                }
                let before = out.join(format!("scan_{}_before.csv", scans.trait_name));
                let after = out.join(format!("scan_{}_after.csv", scans.trait_name));
                io::write_scan_csv(&scans.before, &before)?;
                io::write_scan_csv(&scans.after, &after)?;
                log::info!(
                    "trait {}: peak LOD {:.2} before, {:.2} after",
                    scans.trait_name,
                    scans.before.max_peak_lod(),
                    scans.after.max_peak_lod()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::RunAll { manifest, out } => {
            let (manifest_doc, dataset, outputs) = full_pipeline(&manifest, true)?;
            write_outputs(&outputs, &manifest_doc, &dataset, &out, true, true, true)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
