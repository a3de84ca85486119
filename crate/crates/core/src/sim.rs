//! Synthetic intercross datasets with known eQTL structure and injected,
//! ground-truthed sample mix-ups.
//!
//! The simulator and the genotype-probability HMM share one probabilistic
//! model: gametes are Markov chains along the marker grid with adjacent
//! recombination fractions from the Carter-Falconer map function. All
//! randomness derives from per-entity counter-based streams of the master
//! seed, so output is byte-identical for a fixed config regardless of
//! thread count or evaluation order.

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::SexProbes;
use crate::error::{Error, Result};
use crate::genoprob::cf_rec_fraction;
use crate::types::{
    Chromosome, ChromosomeKind, Dataset, ExpressionSet, GeneticMap, Genotype, GenotypeMatrix,
    MapLocus, PlateAssignment, PlateLayout, ProbeAnnotation, ProbeLocus, RelabelDecision, Sex,
    TraitTable, Verdict, Well,
};

/// One simulated autosome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChromSpec {
    pub name: String,
    pub length_cm: f64,
    pub n_markers: usize,
}

/// Everything needed to generate a dataset, including the perturbations to
/// inject. Identical config and seed give a byte-identical dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub n_samples: usize,
    pub chromosomes: Vec<ChromSpec>,
    /// Markers on the X chromosome (0 disables the X).
    pub x_markers: usize,
    pub x_length_cm: f64,
    pub tissues: Vec<String>,
    pub eqtl_probes_per_tissue: usize,
    pub cross_tissue_probes: usize,
    pub noise_probes: usize,
    pub eqtl_additive_effect: f64,
    pub eqtl_dominance_effect: f64,
    pub eqtl_noise_sd: f64,
    pub latent_sd: f64,
    pub tissue_noise_sd: f64,
    /// Separation of the Xist / Y-gene clusters between the sexes.
    pub sex_probe_effect: f64,
    pub sex_probe_noise_sd: f64,
    pub genotyping_error_rate: f64,
    pub genotype_missing_rate: f64,
    /// Additive effect of each per-chromosome trait QTL.
    pub trait_qtl_effect: f64,
    pub trait_noise_sd: f64,
    pub trait_sex_effect: f64,
    /// Noise added to a duplicated expression row.
    pub duplicate_noise_sd: f64,
    pub perturbations: Vec<Perturbation>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 1,
            n_samples: 500,
            chromosomes: (1..=5)
                .map(|c| ChromSpec {
                    name: c.to_string(),
                    length_cm: 100.0,
                    n_markers: 50,
                })
                .collect(),
            x_markers: 10,
            x_length_cm: 50.0,
            tissues: vec!["adipose".into(), "islet".into(), "liver".into()],
            eqtl_probes_per_tissue: 60,
            cross_tissue_probes: 100,
            noise_probes: 840,
            eqtl_additive_effect: 2.0,
            eqtl_dominance_effect: 0.0,
            eqtl_noise_sd: 0.25,
            latent_sd: 1.0,
            tissue_noise_sd: 0.3,
            sex_probe_effect: 1.0,
            sex_probe_noise_sd: 0.15,
            genotyping_error_rate: 0.002,
            genotype_missing_rate: 0.002,
            trait_qtl_effect: 0.5,
            trait_noise_sd: 1.0,
            trait_sex_effect: 0.5,
            duplicate_noise_sd: 0.05,
            perturbations: Vec::new(),
        }
    }
}

/// The probe ids the simulator uses for the sex check.
pub fn simulated_sex_probes() -> SexProbes {
    SexProbes {
        xist: Some("Xist".into()),
        y: vec![
            "Ddx3y".into(),
            "Uty".into(),
            "Eif2s3y".into(),
            "Kdm5d".into(),
        ],
    }
}

/// An injected mix-up. `grid` names either `"dna"` or a tissue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Perturbation {
    /// Exchange the data of two rows.
    Swap { grid: String, a: String, b: String },
    /// Rotate data: the row labeled `ids[k]` receives the data of
    /// `ids[k+1]` (wrapping), mirroring "labeled A is really B".
    Cycle { grid: String, ids: Vec<String> },
    /// The row labeled `target` becomes a copy of `source`; its own data is
    /// lost.
    Duplicate {
        grid: String,
        source: String,
        target: String,
    },
    /// Off-by-`offset` pipetting: the samples intended for `length`
    /// consecutive wells starting at `start_well` land `offset` wells away.
    /// Wells left without any dispensed sample become all-missing rows.
    /// DNA only.
    ShiftRun {
        plate: String,
        start_well: String,
        offset: i32,
        length: usize,
    },
    /// Remove a row entirely.
    Omit { grid: String, id: String },
}

/// What a (possibly perturbed) row actually contains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowContent {
    /// The data of the named sample.
    Sample(String),
    /// Nothing was dispensed here; the row is all-missing.
    Empty,
}

/// Complete row-level truth for every grid, plus the perturbation
/// inventory.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    /// DNA row label → true content.
    pub dna: BTreeMap<String, RowContent>,
    /// Tissue → (expression row label → true content).
    pub expression: BTreeMap<String, BTreeMap<String, RowContent>>,
    pub perturbations: Vec<Perturbation>,
}

/// Output of the cross simulation.
#[derive(Clone, Debug)]
pub struct SimulatedCross {
    /// Calls with genotyping error and missingness applied.
    pub observed: GenotypeMatrix,
    /// Error-free calls driving the expression simulation.
    pub truth: GenotypeMatrix,
    pub map: GeneticMap,
    pub plate: PlateLayout,
}

// Deterministic per-entity RNG streams.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(
        seed ^ splitmix(domain.wrapping_mul(0x9e37_79b9) ^ splitmix(index)),
    ))
}

fn sample_id(i: usize) -> String {
    format!("Mouse{:04}", i + 1)
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; one draw per call keeps streams simple.
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Simulates genotypes for an F2 intercross.
///
/// Each autosome gamete is a Markov chain over the marker grid; the X
/// follows the cross design: females carry one recombinant X plus one
/// all-R X (genotypes RR or BR), males are hemizygous for the recombinant X
/// and recorded as the matching homozygote. Sex alternates
/// female/male along the sample list, and samples fill 96-well plates in
/// column-major order.
pub fn simulate_cross(config: &SimConfig) -> Result<SimulatedCross> {
    let map = build_map(config)?;
    let n = config.n_samples;
    let n_markers: usize = map.chromosomes().iter().map(|c| c.loci.len()).sum();

    // Adjacent recombination fractions per chromosome.
    let chrom_recs: Vec<(ChromosomeKind, Vec<f64>)> = map
        .chromosomes()
        .iter()
        .map(|chrom| {
            let recs = chrom
                .loci
                .windows(2)
                .map(|w| cf_rec_fraction((w[1].pos_cm - w[0].pos_cm) / 100.0))
                .collect();
            (chrom.kind, recs)
        })
        .collect();

    let mut truth_calls = vec![Genotype::Missing; n * n_markers];
    let mut observed_calls = vec![Genotype::Missing; n * n_markers];
    for i in 0..n {
        let sex = if i % 2 == 0 { Sex::Female } else { Sex::Male };
        let mut rng = stream_rng(config.seed, 0, i as u64);
        let mut err_rng = stream_rng(config.seed, 1, i as u64);
        let mut col = 0usize;
        for (kind, recs) in &chrom_recs {
            let n_loci = recs.len() + 1;
            let row = match kind {
                ChromosomeKind::Autosome => {
                    let h1 = simulate_haplotype(&mut rng, recs);
                    let h2 = simulate_haplotype(&mut rng, recs);
                    h1.iter()
                        .zip(&h2)
                        .map(|(&a, &b)| match (a, b) {
                            (false, false) => Genotype::BB,
                            (true, true) => Genotype::RR,
                            _ => Genotype::BR,
                        })
                        .collect::<Vec<_>>()
                }
                ChromosomeKind::X => {
                    let maternal = simulate_haplotype(&mut rng, recs);
                    maternal
                        .iter()
                        .map(|&r_allele| match (sex, r_allele) {
                            // Second X is always R (from the F1 father).
                            (Sex::Female, true) => Genotype::RR,
                            (Sex::Female, false) => Genotype::BR,
                            // Hemizygous males recorded as homozygotes.
                            (_, true) => Genotype::RR,
                            (_, false) => Genotype::BB,
                        })
                        .collect()
                }
            };
            debug_assert_eq!(row.len(), n_loci);
            for (k, &g) in row.iter().enumerate() {
                truth_calls[i * n_markers + col + k] = g;
                observed_calls[i * n_markers + col + k] =
                    corrupt_call(g, config, *kind, sex, &mut err_rng);
            }
            col += n_loci;
        }
    }

    let ids: Vec<String> = (0..n).map(sample_id).collect();
    let sexes: Vec<Sex> = (0..n)
        .map(|i| if i % 2 == 0 { Sex::Female } else { Sex::Male })
        .collect();
    let marker_ids: Vec<String> = map
        .chromosomes()
        .iter()
        .flat_map(|c| c.loci.iter().map(|l| l.marker_id.clone()))
        .collect();

    let truth = GenotypeMatrix::new(ids.clone(), marker_ids.clone(), sexes.clone(), truth_calls)?;
    let observed = GenotypeMatrix::new(ids.clone(), marker_ids, sexes, observed_calls)?;

    let plate = PlateLayout::new(
        ids.iter()
            .enumerate()
            .map(|(i, id)| PlateAssignment {
                sample_id: id.clone(),
                plate_id: format!("p{:02}", i / 96 + 1),
                well: Well::from_column_major_index(i % 96).expect("index below 96"),
            })
            .collect(),
    )?;

    Ok(SimulatedCross {
        observed,
        truth,
        map,
        plate,
    })
}

fn build_map(config: &SimConfig) -> Result<GeneticMap> {
    let mut chromosomes = Vec::new();
    for spec in &config.chromosomes {
        if spec.n_markers == 0 {
            return Err(Error::invalid("sim config", "chromosome with no markers"));
        }
        let step = if spec.n_markers > 1 {
            spec.length_cm / (spec.n_markers - 1) as f64
        } else {
            0.0
        };
        chromosomes.push(Chromosome {
            name: spec.name.clone(),
            kind: ChromosomeKind::Autosome,
            loci: (0..spec.n_markers)
                .map(|j| MapLocus {
                    marker_id: format!("c{}_m{:03}", spec.name, j),
                    pos_cm: step * j as f64,
                })
                .collect(),
        });
    }
    if config.x_markers > 0 {
        let step = if config.x_markers > 1 {
            config.x_length_cm / (config.x_markers - 1) as f64
        } else {
            0.0
        };
        chromosomes.push(Chromosome {
            name: "X".into(),
            kind: ChromosomeKind::X,
            loci: (0..config.x_markers)
                .map(|j| MapLocus {
                    marker_id: format!("cX_m{:03}", j),
                    pos_cm: step * j as f64,
                })
                .collect(),
        });
    }
    GeneticMap::new(chromosomes)
}

/// One gamete as a vector of R-allele indicators.
fn simulate_haplotype(rng: &mut ChaCha8Rng, recs: &[f64]) -> Vec<bool> {
    let mut alleles = Vec::with_capacity(recs.len() + 1);
    alleles.push(rng.random::<bool>());
    for &r in recs {
        let prev = *alleles.last().expect("nonempty");
        let flip = rng.random::<f64>() < r;
        alleles.push(prev ^ flip);
    }
    alleles
}

fn corrupt_call(
    g: Genotype,
    config: &SimConfig,
    kind: ChromosomeKind,
    sex: Sex,
    rng: &mut ChaCha8Rng,
) -> Genotype {
    // Draw both variates unconditionally so downstream calls stay aligned
    // whatever the branch taken.
    let u_miss: f64 = rng.random();
    let u_err: f64 = rng.random();
    let u_which: f64 = rng.random();
    if u_miss < config.genotype_missing_rate {
        return Genotype::Missing;
    }
    if u_err < config.genotyping_error_rate {
        if kind == ChromosomeKind::X {
            // A miscalled X still reads as one of the codes the assay can
            // produce for this design; hemizygous males never read BR from
            // a stray heterozygous cluster on autosomes, but a bad call can
            // land anywhere. Keep the general three-code model off the X
            // only for the sexed codes: females flip between their two
            // compatible codes, males between theirs.
            return match (sex, g) {
                (Sex::Female, Genotype::RR) => Genotype::BR,
                (Sex::Female, _) => Genotype::RR,
                (_, Genotype::RR) => Genotype::BB,
                (_, _) => Genotype::RR,
            };
        }
        let states = [Genotype::BB, Genotype::BR, Genotype::RR];
        let wrong: Vec<Genotype> = states.iter().copied().filter(|&s| s != g).collect();
        return wrong[if u_which < 0.5 { 0 } else { 1 }];
    }
    g
}

/// Simulated expression panels plus probe annotation and a polygenic trait.
#[derive(Clone, Debug)]
pub struct SimulatedExpression {
    pub tissues: Vec<ExpressionSet>,
    pub annotation: ProbeAnnotation,
    pub traits: TraitTable,
}

/// Generates per-tissue expression driven by the true genotypes: strong
/// local-eQTL probes, cross-tissue probes sharing a per-sample latent
/// factor, independent noise probes, and sex-marker probes (Xist-like and
/// Y-like). Also builds a polygenic trait with one QTL per autosome and a
/// sex effect.
pub fn simulate_expression(
    truth: &GenotypeMatrix,
    map: &GeneticMap,
    config: &SimConfig,
) -> Result<SimulatedExpression> {
    let n = truth.n_samples();
    let autosomal_markers: Vec<(String, String, f64)> = map
        .autosomes()
        .flat_map(|c| {
            c.loci
                .iter()
                .map(|l| (l.marker_id.clone(), c.name.clone(), l.pos_cm))
        })
        .collect();
    if autosomal_markers.is_empty() {
        return Err(Error::invalid("sim config", "no autosomal markers"));
    }

    let sex_probes = simulated_sex_probes();
    let xist = sex_probes.xist.clone().expect("simulated xist probe");

    let mut annotation_entries: BTreeMap<String, ProbeLocus> = BTreeMap::new();
    let unlocated = ProbeLocus {
        chromosome: None,
        pos_cm: None,
    };

    let mut tissues = Vec::new();
    for (ti, tissue) in config.tissues.iter().enumerate() {
        let mut probe_ids: Vec<String> = Vec::new();
        // Tissue-specific strong local-eQTL probes, spread over the
        // autosomal markers with a per-tissue shift so tissues use
        // different loci.
        let stride = autosomal_markers.len() as f64 / config.eqtl_probes_per_tissue.max(1) as f64;
        let mut eqtl_marker_cols = Vec::new();
        for e in 0..config.eqtl_probes_per_tissue {
            let idx = ((e as f64 + 0.5) * stride) as usize + ti * 2;
            let idx = idx % autosomal_markers.len();
            let (marker_id, chrom, pos) = &autosomal_markers[idx];
            let probe_id = format!("{tissue}_eqtl_{e:03}");
            annotation_entries.insert(
                probe_id.clone(),
                ProbeLocus {
                    chromosome: Some(chrom.clone()),
                    pos_cm: Some(*pos),
                },
            );
            eqtl_marker_cols.push(
                truth
                    .marker_pos(marker_id)
                    .expect("simulated marker exists"),
            );
            probe_ids.push(probe_id);
        }
        for p in 0..config.cross_tissue_probes {
            let probe_id = format!("shared_{p:03}");
            annotation_entries
                .entry(probe_id.clone())
                .or_insert_with(|| unlocated.clone());
            probe_ids.push(probe_id);
        }
        for p in 0..config.noise_probes {
            let probe_id = format!("noise_{p:03}");
            annotation_entries
                .entry(probe_id.clone())
                .or_insert_with(|| unlocated.clone());
            probe_ids.push(probe_id);
        }
        for probe in std::iter::once(&xist).chain(sex_probes.y.iter()) {
            annotation_entries
                .entry(probe.clone())
                .or_insert_with(|| unlocated.clone());
            probe_ids.push(probe.clone());
        }

        let n_probes = probe_ids.len();
        let mut values = vec![0.0f64; n * n_probes];
        for i in 0..n {
            let mut eqtl_rng = stream_rng(config.seed, 2, (ti * n + i) as u64);
            let mut tissue_rng = stream_rng(config.seed, 4, (ti * n + i) as u64);
            let mut latent_rng = stream_rng(config.seed, 3, i as u64);
            let mut sex_rng = stream_rng(config.seed, 5, (ti * n + i) as u64);
            let row = &mut values[i * n_probes..(i + 1) * n_probes];
            let mut k = 0usize;
            for &col in &eqtl_marker_cols {
                let g = truth.call(i, col);
                let dosage = g.additive_dosage().unwrap_or(0.0);
                let dom = if g == Genotype::BR { 1.0 } else { 0.0 };
                row[k] = config.eqtl_additive_effect * dosage
                    + config.eqtl_dominance_effect * dom
                    + config.eqtl_noise_sd * standard_normal(&mut eqtl_rng);
                k += 1;
            }
            for _ in 0..config.cross_tissue_probes {
                // The latent stream is keyed by sample only, so every tissue
                // replays the same per-probe latent sequence.
                let latent = config.latent_sd * standard_normal(&mut latent_rng);
                row[k] = latent + config.tissue_noise_sd * standard_normal(&mut tissue_rng);
                k += 1;
            }
            for _ in 0..config.noise_probes {
                row[k] = standard_normal(&mut tissue_rng);
                k += 1;
            }
            let female = truth.sex(i) == Sex::Female;
            let (xist_mean, y_mean) = if female {
                (config.sex_probe_effect, 0.0)
            } else {
                (0.0, config.sex_probe_effect)
            };
            row[k] = xist_mean + config.sex_probe_noise_sd * standard_normal(&mut sex_rng);
            k += 1;
            for _ in 0..sex_probes.y.len() {
                row[k] = y_mean + config.sex_probe_noise_sd * standard_normal(&mut sex_rng);
                k += 1;
            }
            debug_assert_eq!(k, n_probes);
        }

        tissues.push(ExpressionSet::new(
            tissue.clone(),
            truth.sample_ids().to_vec(),
            probe_ids,
            values,
        )?);
    }

    // Polygenic trait: one QTL in the middle of each autosome plus a sex
    // effect.
    let trait_cols: Vec<usize> = map
        .autosomes()
        .filter_map(|c| {
            let mid = &c.loci[c.loci.len() / 2];
            truth.marker_pos(&mid.marker_id)
        })
        .collect();
    let mut trait_values = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = stream_rng(config.seed, 6, i as u64);
        let genetic: f64 = trait_cols
            .iter()
            .map(|&c| {
                config.trait_qtl_effect * truth.call(i, c).additive_dosage().unwrap_or(0.0)
            })
            .sum();
        let sex_term = if truth.sex(i) == Sex::Male {
            config.trait_sex_effect
        } else {
            0.0
        };
        trait_values.push(genetic + sex_term + config.trait_noise_sd * standard_normal(&mut rng));
    }
    let traits = TraitTable::new(
        truth.sample_ids().to_vec(),
        vec!["polygenic".into()],
        trait_values,
    )?;

    Ok(SimulatedExpression {
        tissues,
        annotation: ProbeAnnotation::new(annotation_entries),
        traits,
    })
}

/// Applies a perturbation list to a dataset, returning the perturbed
/// dataset and complete row-level ground truth. Two perturbations touching
/// the same row of the same grid is an error.
pub fn inject_mixups(
    dataset: &Dataset,
    perturbations: &[Perturbation],
    config: &SimConfig,
) -> Result<(Dataset, GroundTruth)> {
    let mut truth = GroundTruth {
        dna: dataset
            .geno
            .sample_ids()
            .iter()
            .map(|id| (id.clone(), RowContent::Sample(id.clone())))
            .collect(),
        expression: dataset
            .expression
            .iter()
            .map(|e| {
                (
                    e.tissue().to_string(),
                    e.sample_ids()
                        .iter()
                        .map(|id| (id.clone(), RowContent::Sample(id.clone())))
                        .collect(),
                )
            })
            .collect(),
        perturbations: perturbations.to_vec(),
    };

    // Mutable row storage per grid.
    let mut dna_rows: BTreeMap<String, Vec<Genotype>> = dataset
        .geno
        .sample_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), dataset.geno.row(i).to_vec()))
        .collect();
    let mut dna_omitted: BTreeSet<String> = BTreeSet::new();
    let mut expr_rows: BTreeMap<String, BTreeMap<String, Vec<f64>>> = dataset
        .expression
        .iter()
        .map(|e| {
            (
                e.tissue().to_string(),
                e.sample_ids()
                    .iter()
                    .enumerate()
                    .map(|(i, id)| (id.clone(), e.row(i).to_vec()))
                    .collect(),
            )
        })
        .collect();
    let mut expr_omitted: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();

    let mut touched: BTreeSet<(String, String)> = BTreeSet::new();
    let touch = |grid: &str, id: &str, touched: &mut BTreeSet<(String, String)>| -> Result<()> {
        if !touched.insert((grid.to_string(), id.to_string())) {
            return Err(Error::PerturbationConflict {
                grid: grid.to_string(),
                id: id.to_string(),
            });
        }
        Ok(())
    };

    let mut dup_count = 0u64;
    for p in perturbations {
        match p {
            Perturbation::Swap { grid, a, b } => {
                touch(grid, a, &mut touched)?;
                touch(grid, b, &mut touched)?;
                if grid == "dna" {
                    swap_rows(&mut dna_rows, &mut truth.dna, a, b)?;
                } else {
                    let rows = expr_rows
                        .get_mut(grid)
                        .ok_or_else(|| Error::invalid("perturbation", format!("unknown grid '{grid}'")))?;
                    let t = truth.expression.get_mut(grid).expect("tissue in truth");
                    swap_rows(rows, t, a, b)?;
                }
            }
            Perturbation::Cycle { grid, ids } => {
                if ids.len() < 2 {
                    return Err(Error::invalid("perturbation", "cycle needs at least 2 ids"));
                }
                for id in ids {
                    touch(grid, id, &mut touched)?;
                }
                if grid == "dna" {
                    cycle_rows(&mut dna_rows, &mut truth.dna, ids)?;
                } else {
                    let rows = expr_rows
                        .get_mut(grid)
                        .ok_or_else(|| Error::invalid("perturbation", format!("unknown grid '{grid}'")))?;
                    let t = truth.expression.get_mut(grid).expect("tissue in truth");
                    cycle_rows(rows, t, ids)?;
                }
            }
            Perturbation::Duplicate {
                grid,
                source,
                target,
            } => {
                touch(grid, target, &mut touched)?;
                if grid == "dna" {
                    let src = dna_rows
                        .get(source)
                        .ok_or_else(|| missing_row("dna", source))?
                        .clone();
                    *dna_rows.get_mut(target).ok_or_else(|| missing_row("dna", target))? = src;
                    let content = truth.dna[source].clone();
                    truth.dna.insert(target.clone(), content);
                } else {
                    let rows = expr_rows
                        .get_mut(grid)
                        .ok_or_else(|| Error::invalid("perturbation", format!("unknown grid '{grid}'")))?;
                    let mut src = rows
                        .get(source)
                        .ok_or_else(|| missing_row(grid, source))?
                        .clone();
                    // An unintended technical replicate re-measures the same
                    // material with fresh noise.
                    let mut rng = stream_rng(config.seed, 7, dup_count);
                    dup_count += 1;
                    for v in src.iter_mut() {
                        if !v.is_nan() {
                            *v += config.duplicate_noise_sd * standard_normal(&mut rng);
                        }
                    }
                    *rows.get_mut(target).ok_or_else(|| missing_row(grid, target))? = src;
                    let t = truth.expression.get_mut(grid).expect("tissue in truth");
                    let content = t[source].clone();
                    t.insert(target.clone(), content);
                }
            }
            Perturbation::ShiftRun {
                plate,
                start_well,
                offset,
                length,
            } => {
                let start = Well::parse(start_well).ok_or_else(|| {
                    Error::invalid("perturbation", format!("bad well '{start_well}'"))
                })?;
                let start_idx = start.column_major_index() as i32;
                // Samples intended for wells start..start+length-1.
                let occupant = |idx: i32| -> Result<String> {
                    let well = Well::from_column_major_index(idx as usize).ok_or_else(|| {
                        Error::invalid("perturbation", format!("well index {idx} out of range"))
                    })?;
                    dataset
                        .plate
                        .entries()
                        .iter()
                        .find(|e| e.plate_id == *plate && e.well == well)
                        .map(|e| e.sample_id.clone())
                        .ok_or_else(|| {
                            Error::invalid(
                                "perturbation",
                                format!("no sample at {plate}:{well}"),
                            )
                        })
                };
                let sources: Vec<String> = (0..*length as i32)
                    .map(|k| occupant(start_idx + k))
                    .collect::<Result<_>>()?;
                let targets: Vec<String> = (0..*length as i32)
                    .map(|k| occupant(start_idx + k + offset))
                    .collect::<Result<_>>()?;
                // Wells in the run that receive nothing end up all-missing.
                let emptied: Vec<String> = sources
                    .iter()
                    .filter(|s| !targets.contains(s))
                    .cloned()
                    .collect();
                for t in &targets {
                    touch("dna", t, &mut touched)?;
                }
                for e in &emptied {
                    touch("dna", e, &mut touched)?;
                }
                let source_rows: Vec<Vec<Genotype>> = sources
                    .iter()
                    .map(|s| {
                        dna_rows
                            .get(s)
                            .cloned()
                            .ok_or_else(|| missing_row("dna", s))
                    })
                    .collect::<Result<_>>()?;
                let source_contents: Vec<RowContent> =
                    sources.iter().map(|s| truth.dna[s].clone()).collect();
                for ((target, row), content) in
                    targets.iter().zip(source_rows).zip(source_contents)
                {
                    *dna_rows
                        .get_mut(target)
                        .ok_or_else(|| missing_row("dna", target))? = row;
                    truth.dna.insert(target.clone(), content);
                }
                for e in emptied {
                    let row = dna_rows.get_mut(&e).ok_or_else(|| missing_row("dna", &e))?;
                    row.fill(Genotype::Missing);
                    truth.dna.insert(e.clone(), RowContent::Empty);
                }
            }
            Perturbation::Omit { grid, id } => {
                touch(grid, id, &mut touched)?;
                if grid == "dna" {
                    dna_rows.remove(id).ok_or_else(|| missing_row("dna", id))?;
                    dna_omitted.insert(id.clone());
                    truth.dna.remove(id);
                } else {
                    let rows = expr_rows
                        .get_mut(grid)
                        .ok_or_else(|| Error::invalid("perturbation", format!("unknown grid '{grid}'")))?;
                    rows.remove(id).ok_or_else(|| missing_row(grid, id))?;
                    expr_omitted.entry(grid.clone()).or_default().insert(id.clone());
                    truth
                        .expression
                        .get_mut(grid)
                        .expect("tissue in truth")
                        .remove(id);
                }
            }
        }
    }

    // Rebuild the dataset preserving original row order.
    let kept_ids: Vec<String> = dataset
        .geno
        .sample_ids()
        .iter()
        .filter(|id| !dna_omitted.contains(*id))
        .cloned()
        .collect();
    let mut calls = Vec::with_capacity(kept_ids.len() * dataset.geno.n_markers());
    let mut sexes = Vec::with_capacity(kept_ids.len());
    for id in &kept_ids {
        calls.extend_from_slice(&dna_rows[id]);
        let i = dataset.geno.sample_pos(id).expect("kept id exists");
        sexes.push(dataset.geno.sex(i));
    }
    let geno = GenotypeMatrix::new(
        kept_ids,
        dataset.geno.marker_ids().to_vec(),
        sexes,
        calls,
    )?;

    let mut expression = Vec::with_capacity(dataset.expression.len());
    for e in &dataset.expression {
        let omitted = expr_omitted.get(e.tissue());
        let rows = &expr_rows[e.tissue()];
        let kept: Vec<String> = e
            .sample_ids()
            .iter()
            .filter(|id| omitted.is_none_or(|o| !o.contains(*id)))
            .cloned()
            .collect();
        let mut values = Vec::with_capacity(kept.len() * e.n_probes());
        for id in &kept {
            values.extend_from_slice(&rows[id]);
        }
        expression.push(ExpressionSet::new(
            e.tissue(),
            kept,
            e.probe_ids().to_vec(),
            values,
        )?);
    }

    let perturbed = Dataset {
        geno,
        map: dataset.map.clone(),
        expression,
        annotation: dataset.annotation.clone(),
        plate: dataset.plate.clone(),
    };
    Ok((perturbed, truth))
}

fn missing_row(grid: &str, id: &str) -> Error {
    Error::invalid("perturbation", format!("no row '{id}' in grid '{grid}'"))
}

fn swap_rows<T: Clone>(
    rows: &mut BTreeMap<String, Vec<T>>,
    truth: &mut BTreeMap<String, RowContent>,
    a: &str,
    b: &str,
) -> Result<()> {
    if !rows.contains_key(a) {
        return Err(missing_row("grid", a));
    }
    if !rows.contains_key(b) {
        return Err(missing_row("grid", b));
    }
    let row_a = rows[a].clone();
    let row_b = rows[b].clone();
    rows.insert(a.to_string(), row_b);
    rows.insert(b.to_string(), row_a);
    let ta = truth[a].clone();
    let tb = truth[b].clone();
    truth.insert(a.to_string(), tb);
    truth.insert(b.to_string(), ta);
    Ok(())
}

fn cycle_rows<T: Clone>(
    rows: &mut BTreeMap<String, Vec<T>>,
    truth: &mut BTreeMap<String, RowContent>,
    ids: &[String],
) -> Result<()> {
    for id in ids {
        if !rows.contains_key(id) {
            return Err(missing_row("grid", id));
        }
    }
    let old_rows: Vec<Vec<T>> = ids.iter().map(|id| rows[id].clone()).collect();
    let old_truth: Vec<RowContent> = ids.iter().map(|id| truth[id].clone()).collect();
    let k = ids.len();
    for (i, id) in ids.iter().enumerate() {
        // Row labeled ids[i] receives the data of ids[i+1].
        rows.insert(id.clone(), old_rows[(i + 1) % k].clone());
        truth.insert(id.clone(), old_truth[(i + 1) % k].clone());
    }
    Ok(())
}

/// Recovery metrics for a pipeline run against ground truth.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RecoveryMetrics {
    /// Perturbed rows with a recoverable true label (excludes duplicates
    /// and emptied rows).
    pub injected_mislabels: usize,
    /// Mislabels assigned exactly the true label.
    pub recovered: usize,
    /// Fixable or duplicate verdicts on rows that were never perturbed.
    pub false_relabels: usize,
    pub duplicates_injected: usize,
    pub duplicates_detected: usize,
    /// Rows emptied by a shift run.
    pub emptied_rows: usize,
    /// Emptied rows flagged unverifiable or unfixable.
    pub emptied_flagged: usize,
}

impl RecoveryMetrics {
    pub fn recovery_rate(&self) -> f64 {
        if self.injected_mislabels == 0 {
            1.0
        } else {
            self.recovered as f64 / self.injected_mislabels as f64
        }
    }

    pub fn merge(&mut self, other: &RecoveryMetrics) {
        self.injected_mislabels += other.injected_mislabels;
        self.recovered += other.recovered;
        self.false_relabels += other.false_relabels;
        self.duplicates_injected += other.duplicates_injected;
        self.duplicates_detected += other.duplicates_detected;
        self.emptied_rows += other.emptied_rows;
        self.emptied_flagged += other.emptied_flagged;
    }
}

/// Scores one grid's decisions against its truth map.
fn score_grid(
    decisions: &[RelabelDecision],
    truth: &BTreeMap<String, RowContent>,
    duplicate_targets: &BTreeMap<String, String>,
) -> RecoveryMetrics {
    let by_id: BTreeMap<&str, &RelabelDecision> = decisions
        .iter()
        .map(|d| (d.sample_id.as_str(), d))
        .collect();
    let mut m = RecoveryMetrics::default();
    for (label, content) in truth {
        let decision = by_id.get(label.as_str());
        match content {
            RowContent::Empty => {
                m.emptied_rows += 1;
                if let Some(d) = decision {
                    if matches!(d.verdict, Verdict::Unverifiable | Verdict::Unfixable) {
                        m.emptied_flagged += 1;
                    }
                }
            }
            RowContent::Sample(true_id) if true_id == label => {
                if let Some(d) = decision {
                    if matches!(d.verdict, Verdict::Fixable | Verdict::Duplicate) {
                        m.false_relabels += 1;
                    }
                }
            }
            RowContent::Sample(true_id) => {
                if let Some(retained) = duplicate_targets.get(label) {
                    m.duplicates_injected += 1;
                    if let Some(d) = decision {
                        if d.verdict == Verdict::Duplicate
                            && d.new_label.as_deref() == Some(retained.as_str())
                        {
                            m.duplicates_detected += 1;
                        }
                    }
                } else {
                    m.injected_mislabels += 1;
                    if let Some(d) = decision {
                        if d.verdict == Verdict::Fixable
                            && d.new_label.as_deref() == Some(true_id.as_str())
                        {
                            m.recovered += 1;
                        }
                    }
                }
            }
        }
    }
    m
}

/// Scores expression and DNA decisions against the ground truth.
pub fn score_recovery(
    expr_decisions: &BTreeMap<String, Vec<RelabelDecision>>,
    dna_decisions: &[RelabelDecision],
    truth: &GroundTruth,
) -> RecoveryMetrics {
    // Duplicate targets by grid, from the perturbation inventory.
    let mut dup_targets: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    for p in &truth.perturbations {
        if let Perturbation::Duplicate {
            grid,
            source,
            target,
        } = p
        {
            dup_targets
                .entry(grid.clone())
                .or_default()
                .insert(target.clone(), source.clone());
        }
    }
    let empty = BTreeMap::new();

    let mut metrics = score_grid(
        dna_decisions,
        &truth.dna,
        dup_targets.get("dna").unwrap_or(&empty),
    );
    for (tissue, t) in &truth.expression {
        if let Some(decisions) = expr_decisions.get(tissue) {
            metrics.merge(&score_grid(
                decisions,
                t,
                dup_targets.get(tissue).unwrap_or(&empty),
            ));
        }
    }
    metrics
}
