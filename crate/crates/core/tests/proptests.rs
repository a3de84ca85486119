//! Property tests for the numeric kernels and file formats.

use lineup_core::expralign::pearson;
use lineup_core::genoprob::{
    calc_genoprob, cf_rec_fraction, insert_pseudomarkers, transition_matrix, F2_PRIOR,
};
use lineup_core::io::{parse_expression, parse_genotypes, write_expression, write_genotypes};
use lineup_core::qtl::hk_lod_at;
use lineup_core::types::{
    Chromosome, ChromosomeKind, ExpressionSet, GeneticMap, Genotype, GenotypeMatrix, MapLocus, Sex,
};
use proptest::prelude::*;

fn genotype_strategy() -> impl Strategy<Value = Genotype> {
    prop_oneof![
        Just(Genotype::BB),
        Just(Genotype::BR),
        Just(Genotype::RR),
        Just(Genotype::Missing),
    ]
}

fn sex_strategy() -> impl Strategy<Value = Sex> {
    prop_oneof![Just(Sex::Female), Just(Sex::Male), Just(Sex::Unknown)]
}

/// Brute-force chain posterior, independent of the forward-backward code.
fn enumerate_posterior(
    obs: &[Option<Genotype>],
    transitions: &[[[f64; 3]; 3]],
    error_rate: f64,
) -> Vec<[f64; 3]> {
    let emit = |o: Option<Genotype>, s: usize| -> f64 {
        match o.and_then(Genotype::state_index) {
            None => 1.0,
            Some(k) if k == s => 1.0 - error_rate,
            Some(_) => error_rate / 2.0,
        }
    };
    let n = obs.len();
    let mut marginals = vec![[0.0f64; 3]; n];
    let mut total = 0.0;
    for code in 0..3usize.pow(n as u32) {
        let mut path = Vec::with_capacity(n);
        let mut c = code;
        for _ in 0..n {
            path.push(c % 3);
            c /= 3;
        }
        let mut p = F2_PRIOR[path[0]] * emit(obs[0], path[0]);
        for t in 1..n {
            p *= transitions[t - 1][path[t - 1]][path[t]] * emit(obs[t], path[t]);
        }
        total += p;
        for t in 0..n {
            marginals[t][path[t]] += p;
        }
    }
    for m in &mut marginals {
        for v in m.iter_mut() {
            *v /= total;
        }
    }
    marginals
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Forward-backward equals exhaustive path enumeration on short
    /// chromosomes, for arbitrary observation patterns and spacings.
    #[test]
    fn hmm_matches_enumeration(
        calls in prop::collection::vec(genotype_strategy(), 1..=5),
        gaps in prop::collection::vec(0.0f64..20.0, 4),
    ) {
        let n = calls.len();
        let mut pos = 0.0;
        let mut loci = Vec::new();
        for i in 0..n {
            loci.push(MapLocus { marker_id: format!("m{i}"), pos_cm: pos });
            pos += gaps[i.min(gaps.len() - 1)];
        }
        let map = GeneticMap::new(vec![Chromosome {
            name: "1".into(),
            kind: ChromosomeKind::Autosome,
            loci,
        }]).unwrap();
        let grid = insert_pseudomarkers(&map, 1e9);
        let geno = GenotypeMatrix::new(
            vec!["s".into()],
            (0..n).map(|i| format!("m{i}")).collect(),
            vec![Sex::Unknown],
            calls.clone(),
        ).unwrap();
        let probs = calc_genoprob(&geno, &grid, 0.002).unwrap();
        let transitions: Vec<_> = grid.chromosomes[0]
            .loci
            .windows(2)
            .map(|w| transition_matrix(cf_rec_fraction((w[1].pos_cm - w[0].pos_cm) / 100.0)))
            .collect();
        let obs: Vec<Option<Genotype>> = calls.into_iter().map(Some).collect();
        let expected = enumerate_posterior(&obs, &transitions, 0.002);
        for (t, row) in expected.iter().enumerate() {
            let got = probs.chromosomes[0].get(0, t);
            let sum: f64 = got.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            for s in 0..3 {
                prop_assert!((got[s] - row[s]).abs() < 1e-10,
                    "locus {} state {}: {} vs {}", t, s, got[s], row[s]);
            }
        }
    }

    /// LOD is invariant under affine rephrasing of the phenotype.
    #[test]
    fn lod_affine_invariance(
        genos in prop::collection::vec(0usize..3, 6..24),
        noise in prop::collection::vec(-1.0f64..1.0, 24),
        a in 0.1f64..5.0,
        b in -10.0f64..10.0,
    ) {
        let n = genos.len();
        let probs: Vec<[f64; 3]> = genos.iter().map(|&g| {
            let mut p = [0.0; 3];
            p[g] = 1.0;
            p
        }).collect();
        let pheno: Vec<f64> = (0..n).map(|i| genos[i] as f64 + noise[i]).collect();
        let base = hk_lod_at(&pheno, &probs, None, false);
        let scaled: Vec<f64> = pheno.iter().map(|y| a * y + b).collect();
        let fit = hk_lod_at(&scaled, &probs, None, false);
        prop_assert!((fit.lod - base.lod).abs() < 1e-9, "{} vs {}", fit.lod, base.lod);
    }

    /// Pearson stays within [-1, 1] and is symmetric in its arguments.
    #[test]
    fn pearson_range_and_symmetry(
        x in prop::collection::vec(-100.0f64..100.0, 3..30),
        shift in -5.0f64..5.0,
    ) {
        let y: Vec<f64> = x.iter().rev().map(|v| v + shift).collect();
        if let Some(r) = pearson(&x, &y) {
            prop_assert!((-1.0..=1.0).contains(&r));
            let r2 = pearson(&y, &x).unwrap();
            prop_assert!((r - r2).abs() < 1e-12);
        }
    }

    /// Genotype CSVs round-trip exactly.
    #[test]
    fn genotype_io_round_trip(
        calls in prop::collection::vec(genotype_strategy(), 12),
        sexes in prop::collection::vec(sex_strategy(), 4),
    ) {
        let geno = GenotypeMatrix::new(
            (0..4).map(|i| format!("s{i}")).collect(),
            (0..3).map(|i| format!("m{i}")).collect(),
            sexes,
            calls,
        ).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        write_genotypes(&geno, &path).unwrap();
        let back = parse_genotypes(&path).unwrap();
        prop_assert_eq!(back.sample_ids(), geno.sample_ids());
        prop_assert_eq!(back.marker_ids(), geno.marker_ids());
        for i in 0..4 {
            prop_assert_eq!(back.row(i), geno.row(i));
            prop_assert_eq!(back.sex(i), geno.sex(i));
        }
    }

    /// Expression CSVs round-trip exactly, including NaN cells and values
    /// needing full float precision.
    #[test]
    fn expression_io_round_trip(
        raw in prop::collection::vec(prop_oneof![
            4 => any::<i32>().prop_map(|v| v as f64 * 1e-6),
            2 => -1.0f64..1.0,
            1 => Just(f64::NAN),
        ], 12),
    ) {
        let expr = ExpressionSet::new(
            "t",
            (0..3).map(|i| format!("s{i}")).collect(),
            (0..4).map(|i| format!("p{i}")).collect(),
            raw,
        ).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        write_expression(&expr, &path).unwrap();
        let back = parse_expression(&path, "t").unwrap();
        for i in 0..3 {
            for j in 0..4 {
                let (a, b) = (expr.value(i, j), back.value(i, j));
                prop_assert!(a == b || (a.is_nan() && b.is_nan()), "{} vs {}", a, b);
            }
        }
    }
}
