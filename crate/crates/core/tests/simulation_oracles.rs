//! Simulation-backed oracles: known correlation structure, known clusters,
//! known mix-ups, and null distributions.

use std::collections::{BTreeMap, BTreeSet};

use lineup_core::config::Exclusions;
use lineup_core::expralign::{
    align_expression, detect_within_tissue_duplicates, select_correlated_probes,
};
use lineup_core::genoalign::{fit_knn, infer_genotype, match_proportion, two_pass_classifiers};
use lineup_core::genoprob::{calc_genoprob, insert_pseudomarkers};
use lineup_core::io::{parse_expression, parse_genotypes, write_report, DecisionsReport, ReportFiles};
use lineup_core::pipeline::{run_all, run_dna_alignment, PipelineConfig};
use lineup_core::qtl::{genome_scan, hk_lod_at, select_local_eqtl};
use lineup_core::relabel::{apply_corrections, find_genotype_duplicates, CorrectedDataset};
use lineup_core::sim::{
    inject_mixups, simulate_cross, simulate_expression, simulated_sex_probes, ChromSpec,
    Perturbation, SimConfig,
};
use lineup_core::types::{Dataset, ExpressionSet, Genotype, Verdict};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn mouse(i: usize) -> String {
    format!("Mouse{:04}", i)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn small_sim_config(seed: u64) -> SimConfig {
    SimConfig {
        seed,
        n_samples: 250,
        chromosomes: (1..=3)
            .map(|c| ChromSpec {
                name: c.to_string(),
                length_cm: 100.0,
                n_markers: 30,
            })
            .collect(),
        eqtl_probes_per_tissue: 24,
        cross_tissue_probes: 40,
        noise_probes: 200,
        ..SimConfig::default()
    }
}

fn simulate(config: &SimConfig) -> Dataset {
    let cross = simulate_cross(config).unwrap();
    let expr = simulate_expression(&cross.truth, &cross.map, config).unwrap();
    Dataset {
        geno: cross.observed,
        map: cross.map,
        expression: expr.tissues,
        annotation: expr.annotation,
        plate: cross.plate,
    }
}

/// Two tissues where 50 probes share a per-sample latent factor
/// (between-tissue correlation ≈ 0.9) and 950 are independent noise: the
/// selected set contains the 50 with at most 2 false inclusions per seed.
#[test]
fn probe_selection_recovers_latent_block() {
    let n = 150;
    let mut total_false = 0usize;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let ids: Vec<String> = (0..n).map(mouse).collect();
        let probe_ids: Vec<String> = (0..1000).map(|p| format!("p{p:04}")).collect();
        let mut a = vec![0.0; n * 1000];
        let mut b = vec![0.0; n * 1000];
        for i in 0..n {
            for p in 0..1000 {
                if p < 50 {
                    // Shared latent with per-tissue noise: corr = 1/(1+2·0.111) ≈ 0.9.
                    let z = normal(&mut rng);
                    a[i * 1000 + p] = z + (1.0f64 / 9.0).sqrt() * normal(&mut rng);
                    b[i * 1000 + p] = z + (1.0f64 / 9.0).sqrt() * normal(&mut rng);
                } else {
                    a[i * 1000 + p] = normal(&mut rng);
                    b[i * 1000 + p] = normal(&mut rng);
                }
            }
        }
        let expr_a = ExpressionSet::new("a", ids.clone(), probe_ids.clone(), a).unwrap();
        let expr_b = ExpressionSet::new("b", ids.clone(), probe_ids.clone(), b).unwrap();
        let selected = select_correlated_probes(&expr_a, &expr_b, 0.75);
        let set: BTreeSet<&str> = selected.probe_ids.iter().map(|s| s.as_str()).collect();
        let missed = (0..50).filter(|p| !set.contains(format!("p{p:04}").as_str())).count();
        let false_inclusions = set
            .iter()
            .filter(|p| p[1..].parse::<usize>().unwrap() >= 50)
            .count();
        assert_eq!(missed, 0, "seed {seed}: latent probes missed");
        assert!(
            false_inclusions <= 2,
            "seed {seed}: {false_inclusions} noise probes selected"
        );
        total_false += false_inclusions;
        for r in &selected.correlations {
            assert!(*r > 0.75);
        }
    }
    assert!(total_false <= 2, "{total_false} false inclusions across seeds");
}

/// A duplicated row with independent noise (sd 0.05 on unit signal) is
/// detected; independent samples yield no pairs at 0.95 across 10 seeds.
#[test]
fn duplicate_detection_signal_and_null() {
    let probes: Vec<String> = (0..100).map(|p| format!("p{p:03}")).collect();
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let n = 100;
        let mut values = vec![0.0; n * 100];
        for i in 0..n {
            for p in 0..100 {
                values[i * 100 + p] = normal(&mut rng);
            }
        }
        // Row 1 duplicates row 0 with small re-measurement noise.
        for p in 0..100 {
            values[100 + p] = values[p] + 0.05 * normal(&mut rng);
        }
        let expr = ExpressionSet::new(
            "t",
            (0..n).map(mouse).collect(),
            probes.clone(),
            values,
        )
        .unwrap();
        let pairs = detect_within_tissue_duplicates(&expr, &probes, 0.95);
        assert_eq!(pairs.len(), 1, "seed {seed}: {pairs:?}");
        assert_eq!(pairs[0].a, mouse(0));
        assert_eq!(pairs[0].b, mouse(1));
        assert!(pairs[0].correlation > 0.99, "{}", pairs[0].correlation);

        // Null: drop the duplicate, expect silence.
        let mut null_values = Vec::new();
        for i in 0..n {
            if i == 1 {
                for _ in 0..100 {
                    null_values.push(normal(&mut rng));
                }
            } else {
                null_values.extend_from_slice(expr.row(i));
            }
        }
        let null_expr = ExpressionSet::new(
            "t",
            (0..n).map(mouse).collect(),
            probes.clone(),
            null_values,
        )
        .unwrap();
        let null_pairs = detect_within_tissue_duplicates(&null_expr, &probes, 0.95);
        assert!(null_pairs.is_empty(), "seed {seed}: {null_pairs:?}");
    }
}

/// Three well-separated expression clusters (sd 0.1, separation 1.0):
/// held-out points classify to the right genotype at ≥ 99%.
#[test]
fn knn_recovers_separated_clusters() {
    let mut rng = ChaCha8Rng::seed_from_u64(3000);
    let n = 500;
    let genotypes = [Genotype::BB, Genotype::BR, Genotype::RR];
    let mut points = Vec::new();
    let mut holdout = Vec::new();
    for i in 0..n {
        let g = genotypes[i % 3];
        let center = g.state_index().unwrap() as f64;
        let coord = vec![center + 0.1 * normal(&mut rng)];
        if i % 5 == 0 {
            holdout.push((coord, g));
        } else {
            points.push((coord, g, mouse(i)));
        }
    }
    let clf = fit_knn(points, 40, 0.8).unwrap();
    let correct = holdout
        .iter()
        .filter(|(coord, g)| infer_genotype(&clf, coord) == *g)
        .count();
    let accuracy = correct as f64 / holdout.len() as f64;
    assert!(accuracy >= 0.99, "held-out accuracy {accuracy}");
}

/// With 10% of DNA rows swapped, every swapped sample falls below the 0.7
/// self-match filter in pass one and is excluded from pass-two training; a
/// swapped pair scores > 0.9 against its true partner and below the filter
/// against itself.
#[test]
fn two_pass_filters_swapped_samples() {
    for seed in 0..10u64 {
        // The default five-chromosome genome: sibling genotype sharing at
        // the eQTL panel needs this many independent blocks to stay low.
        let config = SimConfig {
            seed: 4000 + seed,
            n_samples: 300,
            ..SimConfig::default()
        };
        let clean = simulate(&config);
        let mut perturbations = Vec::new();
        for k in 0..12usize {
            perturbations.push(Perturbation::Swap {
                grid: "dna".into(),
                a: mouse(2 * k + 1),
                b: mouse(2 * k + 2),
            });
        }
        let (dataset, _) = inject_mixups(&clean, &perturbations, &config).unwrap();
        let grid = insert_pseudomarkers(&dataset.map, 0.5);
        let probs = calc_genoprob(&dataset.geno, &grid, 0.002).unwrap();
        let expr = &dataset.expression[0];
        let eqtl = select_local_eqtl(expr, &dataset.annotation, &probs, &grid, &dataset.geno, 100.0);
        assert!(!eqtl.is_empty());
        let alignment =
            two_pass_classifiers(expr, &dataset.geno, &probs, eqtl, 0.99, 40, 0.8, 0.7);

        let swapped: BTreeSet<String> = (0..24).map(|k| mouse(k + 1)).collect();
        let filtered: BTreeSet<String> = alignment.filtered_samples.iter().cloned().collect();
        for s in &swapped {
            assert!(
                filtered.contains(s),
                "seed {seed}: swapped sample {s} not excluded from pass-two training"
            );
        }

        // The first swapped pair: row a holds b's DNA.
        let ia = alignment.dna_ids.iter().position(|x| x == &mouse(1)).unwrap();
        let jb = alignment.mrna_ids.iter().position(|x| x == &mouse(2)).unwrap();
        let ja = alignment.mrna_ids.iter().position(|x| x == &mouse(1)).unwrap();
        let cross = match_proportion(
            &alignment.observed_column(ia),
            &alignment.inferred_column(jb),
        )
        .unwrap();
        let self_match = match_proportion(
            &alignment.observed_column(ia),
            &alignment.inferred_column(ja),
        )
        .unwrap();
        assert!(cross > 0.9, "seed {seed}: cross match {cross}");
        assert!(self_match < 0.7, "seed {seed}: self match {self_match}");
    }
}

/// Unperturbed data is a fixed point: nothing is filtered, every sample's
/// observed/inferred self match stays high.
#[test]
fn two_pass_self_match_high_when_clean() {
    for seed in 0..20u64 {
        let config = small_sim_config(5000 + seed);
        let dataset = simulate(&config);
        let grid = insert_pseudomarkers(&dataset.map, 0.5);
        let probs = calc_genoprob(&dataset.geno, &grid, 0.002).unwrap();
        let expr = &dataset.expression[0];
        let eqtl = select_local_eqtl(expr, &dataset.annotation, &probs, &grid, &dataset.geno, 100.0);
        let alignment =
            two_pass_classifiers(expr, &dataset.geno, &probs, eqtl, 0.99, 40, 0.8, 0.7);
        assert!(
            alignment.filtered_samples.is_empty(),
            "seed {seed}: {:?}",
            alignment.filtered_samples
        );
        for (j, id) in alignment.mrna_ids.iter().enumerate() {
            let i = alignment.dna_ids.iter().position(|x| x == id).unwrap();
            let p = match_proportion(
                &alignment.observed_column(i),
                &alignment.inferred_column(j),
            )
            .unwrap();
            assert!(p > 0.9, "seed {seed}: sample {id} self match {p}");
        }
    }
}

/// Null phenotypes stay under the LOD 5 peak threshold in at least 18 of
/// 20 runs.
#[test]
fn null_scan_stays_below_threshold() {
    let config = SimConfig {
        n_samples: 200,
        ..small_sim_config(6000)
    };
    let dataset = simulate(&config);
    let grid = insert_pseudomarkers(&dataset.map, 0.5);
    let probs = calc_genoprob(&dataset.geno, &grid, 0.002).unwrap();
    let mut below = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(6001);
    for _ in 0..20 {
        let pheno: Vec<f64> = (0..dataset.geno.n_samples()).map(|_| normal(&mut rng)).collect();
        let scan = genome_scan(&pheno, &probs, &grid, Some(dataset.geno.sexes()), true);
        if scan.max_peak_lod() < 5.0 {
            below += 1;
        }
    }
    assert!(below >= 18, "only {below}/20 null scans stayed below LOD 5");
}

/// A scan restricted to one locus reproduces the single-position fit
/// exactly.
#[test]
fn genome_scan_matches_single_position_fit() {
    let config = small_sim_config(6100);
    let dataset = simulate(&config);
    let grid = insert_pseudomarkers(&dataset.map, 0.5);
    let probs = calc_genoprob(&dataset.geno, &grid, 0.002).unwrap();
    let expr = &dataset.expression[0];
    let probe = 0usize;
    let pheno: Vec<f64> = dataset
        .geno
        .sample_ids()
        .iter()
        .map(|id| expr.sample_pos(id).map(|i| expr.value(i, probe)).unwrap_or(f64::NAN))
        .collect();
    let scan = genome_scan(&pheno, &probs, &grid, None, false);
    let chrom = &scan.chromosomes[1];
    let tensor_chrom = probs.chromosome(&chrom.chrom).unwrap();
    for locus in [0usize, 7, 33] {
        let rows: Vec<[f64; 3]> = (0..tensor_chrom.n_samples)
            .map(|s| tensor_chrom.get(s, locus))
            .collect();
        let fit = hk_lod_at(&pheno, &rows, None, false);
        assert_eq!(chrom.loci[locus].lod, fit.lod);
    }
}

/// Independent F2 siblings share genotypes at roughly the exact-match rate
/// of 3/8 and never cross the duplicate threshold.
#[test]
fn sibling_identity_stays_far_from_duplicate_threshold() {
    let config = SimConfig {
        genotyping_error_rate: 0.0,
        genotype_missing_rate: 0.0,
        ..small_sim_config(6200)
    };
    let cross = simulate_cross(&config).unwrap();
    let all_pairs = find_genotype_duplicates(&cross.truth, 0.0);
    let mut identities: Vec<f64> = all_pairs.iter().map(|p| p.identity).collect();
    identities.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = identities.iter().sum::<f64>() / identities.len() as f64;
    // Marker-wise exact-match probability between independent F2 genomes is
    // (1/4)² + (1/2)² + (1/4)² = 3/8.
    assert!((mean - 0.375).abs() < 0.02, "mean sibling identity {mean}");
    let max = identities.last().copied().unwrap();
    assert!(max < 0.98, "sibling pair reached duplicate identity {max}");
    assert!(find_genotype_duplicates(&cross.truth, 0.98).is_empty());
}

/// Unperturbed expression aligns with zero false relabels in every tissue,
/// across 20 seeds.
#[test]
fn expression_alignment_clean_data_all_correct() {
    for seed in 0..20u64 {
        let config = SimConfig {
            n_samples: 120,
            ..small_sim_config(7000 + seed)
        };
        let dataset = simulate(&config);
        let results = align_expression(&dataset.expression, 0.75, 0.8, 0.8, 0.1, 0.95).unwrap();
        for r in &results {
            for d in &r.decisions {
                assert!(
                    !matches!(d.verdict, Verdict::Fixable | Verdict::Duplicate),
                    "seed {seed}, tissue {}: {} got {:?}",
                    r.tissue,
                    d.sample_id,
                    d.verdict
                );
            }
        }
    }
}

/// A known permutation of one tissue's rows is recovered exactly: every
/// moved sample's argmax is its true identity (the inverse permutation),
/// the signature of a three-way tube rotation.
#[test]
fn expression_alignment_recovers_injected_cycle() {
    let config = small_sim_config(7100);
    let clean = simulate(&config);
    let ids = [mouse(5), mouse(17), mouse(40)];
    let (dataset, truth) = inject_mixups(
        &clean,
        &[Perturbation::Cycle {
            grid: "adipose".into(),
            ids: ids.to_vec(),
        }],
        &config,
    )
    .unwrap();
    let results = align_expression(&dataset.expression, 0.75, 0.8, 0.8, 0.1, 0.95).unwrap();
    let adipose = results.iter().find(|r| r.tissue == "adipose").unwrap();
    let truth_map = &truth.expression["adipose"];
    let mut fixed = 0;
    for d in &adipose.decisions {
        if ids.contains(&d.sample_id) {
            assert_eq!(d.verdict, Verdict::Fixable, "{}", d.sample_id);
            let expected = match &truth_map[&d.sample_id] {
                lineup_core::sim::RowContent::Sample(s) => s.clone(),
                _ => unreachable!(),
            };
            assert_eq!(d.new_label.as_deref(), Some(expected.as_str()));
            fixed += 1;
        }
    }
    assert_eq!(fixed, 3, "three fixable decisions forming the inverse cycle");
}

/// The corrected CSVs re-parse to matrices whose row sets equal the
/// post-relabel sample sets, with values intact.
#[test]
fn corrected_csvs_round_trip_to_corrected_state() {
    let config = small_sim_config(7200);
    let clean = simulate(&config);
    let (dataset, truth) = inject_mixups(
        &clean,
        &[
            Perturbation::Swap {
                grid: "dna".into(),
                a: mouse(3),
                b: mouse(4),
            },
            Perturbation::Swap {
                grid: "islet".into(),
                a: mouse(8),
                b: mouse(9),
            },
        ],
        &config,
    )
    .unwrap();
    let mut config_p = PipelineConfig {
        sex_probes: simulated_sex_probes(),
        ..PipelineConfig::default()
    };
    config_p.thresholds.dna_gap_min = 0.05;
    let outputs = run_all(&dataset, None, Some(&truth), &config_p).unwrap();
    let recovery = outputs.recovery.as_ref().unwrap();
    assert_eq!(recovery.recovered, 4);
    assert_eq!(recovery.false_relabels, 0);

    let dir = tempfile::tempdir().unwrap();
    let files = ReportFiles {
        decisions: DecisionsReport {
            schema_version: 1,
            config: &config_p.thresholds,
            expression_decisions: &outputs.expression.decisions,
            dna_decisions: &outputs.dna.decisions,
            expression_duplicates: &outputs.expression.duplicates,
            genotype_duplicates: &outputs.dna.genotype_duplicates,
            correction_summary: Some(&outputs.summary),
            audit_before: None,
            audit_after: None,
            recovery: outputs.recovery.as_ref(),
        },
        expr_similarities: &outputs.expression.similarities,
        dna_similarities: &outputs.dna.similarities,
        dna_combined: Some(&outputs.dna.combined),
        plate_findings: Some(&outputs.plate_findings),
        corrected: Some(&outputs.corrected.dataset),
    };
    write_report(&files, dir.path()).unwrap();

    let geno_back = parse_genotypes(&dir.path().join("corrected_genotypes.csv")).unwrap();
    let mem = &outputs.corrected.dataset.geno;
    let back_set: BTreeSet<&String> = geno_back.sample_ids().iter().collect();
    let mem_set: BTreeSet<&String> = mem.sample_ids().iter().collect();
    assert_eq!(back_set, mem_set);
    for (i, id) in mem.sample_ids().iter().enumerate() {
        let j = geno_back.sample_pos(id).unwrap();
        assert_eq!(geno_back.row(j), mem.row(i));
    }

    for expr in &outputs.corrected.dataset.expression {
        let back = parse_expression(
            &dir.path().join(format!("corrected_expr_{}.csv", expr.tissue())),
            expr.tissue(),
        )
        .unwrap();
        let back_set: BTreeSet<&String> = back.sample_ids().iter().collect();
        let mem_set: BTreeSet<&String> = expr.sample_ids().iter().collect();
        assert_eq!(back_set, mem_set, "tissue {}", expr.tissue());
        for (i, id) in expr.sample_ids().iter().enumerate() {
            let j = back.sample_pos(id).unwrap();
            for p in 0..expr.n_probes() {
                let (a, b) = (expr.value(i, p), back.value(j, p));
                assert!(a == b || (a.is_nan() && b.is_nan()));
            }
        }
    }
}

/// Excluded samples vanish from the corrected output and the DNA alignment
/// still runs.
#[test]
fn exclusions_drop_rows_before_alignment() {
    let config = small_sim_config(7300);
    let dataset = simulate(&config);
    let pristine = CorrectedDataset::pristine(dataset.clone());
    let exclusions = Exclusions {
        dna: vec![mouse(1), mouse(2)],
        ..Default::default()
    };
    let (cleaned, summary) =
        apply_corrections(&pristine, &BTreeMap::new(), &[], &exclusions).unwrap();
    assert_eq!(summary.dna.dropped.len(), 2);
    assert!(cleaned.dataset.geno.sample_pos(&mouse(1)).is_none());
    let mut config_p = PipelineConfig {
        sex_probes: simulated_sex_probes(),
        ..PipelineConfig::default()
    };
    config_p.thresholds.dna_gap_min = 0.05;
    let stage = run_dna_alignment(&cleaned.dataset, &config_p).unwrap();
    assert!(stage
        .decisions
        .iter()
        .all(|d| d.sample_id != mouse(1) && d.sample_id != mouse(2)));
}
