//! Selection of probes with a strong local-eQTL, for the DNA alignment.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::genoprob::{GenoProbTensor, PositionGrid};
use crate::qtl::hk::hk_lod_at;
use crate::types::{ExpressionSet, GenotypeMatrix, ProbeAnnotation};

/// A grid locus with an exceptionally strong association to one or more
/// nearby probes (at most three share a locus).
#[derive(Clone, Debug)]
pub struct LocalEqtl {
    pub tissue: String,
    pub chrom: String,
    /// Index of the chromosome within the genoprob tensor.
    pub chrom_index: usize,
    /// Index of the locus within that chromosome's grid.
    pub locus_index: usize,
    pub locus_id: String,
    pub pos_cm: f64,
    pub probe_ids: Vec<String>,
    pub lods: Vec<f64>,
}

/// For every located autosomal probe, computes the Haley-Knott LOD at the
/// single grid locus nearest the probe (ties toward the lower position) and
/// keeps probes whose LOD exceeds `lod_select`, grouped by shared locus.
pub fn select_local_eqtl(
    expr: &ExpressionSet,
    annot: &ProbeAnnotation,
    probs: &GenoProbTensor,
    grid: &PositionGrid,
    geno: &GenotypeMatrix,
    lod_select: f64,
) -> Vec<LocalEqtl> {
    // Expression rows aligned to genotype rows by sample id; expression-only
    // samples contribute no phenotype.
    let geno_row_of: Vec<Option<usize>> = expr
        .sample_ids()
        .iter()
        .map(|id| geno.sample_pos(id))
        .collect();

    let candidates: Vec<(usize, usize, String, f64)> = expr
        .probe_ids()
        .par_iter()
        .enumerate()
        .filter_map(|(probe_idx, probe_id)| {
            let (chrom_name, pos_cm) = annot.located(probe_id)?;
            let chrom_index = probs.chromosomes.iter().position(|c| c.name == chrom_name)?;
            let chrom_probs = &probs.chromosomes[chrom_index];
            let grid_chrom = grid.chromosome(chrom_name)?;
            let locus_index = grid_chrom.nearest_locus(pos_cm)?;

            let mut pheno = Vec::new();
            let mut rows = Vec::new();
            for (expr_row, geno_row) in geno_row_of.iter().enumerate() {
                if let Some(g) = geno_row {
                    pheno.push(expr.value(expr_row, probe_idx));
                    rows.push(chrom_probs.get(*g, locus_index));
                }
            }
            let fit = hk_lod_at(&pheno, &rows, None, false);
            if fit.lod > lod_select {
                Some((chrom_index, locus_index, probe_id.clone(), fit.lod))
            } else {
                None
            }
        })
        .collect();

    let mut by_locus: BTreeMap<(usize, usize), Vec<(String, f64)>> = BTreeMap::new();
    for (chrom_index, locus_index, probe_id, lod) in candidates {
        by_locus
            .entry((chrom_index, locus_index))
            .or_default()
            .push((probe_id, lod));
    }

    by_locus
        .into_iter()
        .map(|((chrom_index, locus_index), mut probes)| {
            probes.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            if probes.len() > 3 {
                log::warn!(
                    "{} probes share eQTL locus; keeping the 3 strongest",
                    probes.len()
                );
                probes.truncate(3);
            }
            let grid_chrom = &grid
                .chromosome(&probs.chromosomes[chrom_index].name)
                .expect("tensor chromosome missing from grid");
            let locus = &grid_chrom.loci[locus_index];
            LocalEqtl {
                tissue: expr.tissue().to_string(),
                chrom: probs.chromosomes[chrom_index].name.clone(),
                chrom_index,
                locus_index,
                locus_id: locus.id.clone(),
                pos_cm: locus.pos_cm,
                probe_ids: probes.iter().map(|(id, _)| id.clone()).collect(),
                lods: probes.iter().map(|(_, lod)| *lod).collect(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genoprob::{calc_genoprob, insert_pseudomarkers};
    use crate::types::{
        Chromosome, ChromosomeKind, GeneticMap, Genotype, MapLocus, ProbeLocus, Sex,
    };
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap as Map;

    fn toy_dataset(effect: f64, noise_sd: f64, n: usize) -> (GenotypeMatrix, GeneticMap, ExpressionSet, ProbeAnnotation) {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let markers = ["m0", "m1", "m2"];
        let map = GeneticMap::new(vec![Chromosome {
            name: "1".into(),
            kind: ChromosomeKind::Autosome,
            loci: markers
                .iter()
                .enumerate()
                .map(|(i, m)| MapLocus {
                    marker_id: (*m).into(),
                    pos_cm: i as f64 * 5.0,
                })
                .collect(),
        }])
        .unwrap();

        let mut calls = Vec::new();
        let mut values = Vec::new();
        for _ in 0..n {
            let g = *[Genotype::BB, Genotype::BR, Genotype::BR, Genotype::RR]
                .choose(&mut rng)
                .unwrap();
            for _ in 0..markers.len() {
                calls.push(g);
            }
            let dosage = g.additive_dosage().unwrap();
            values.push(effect * dosage + noise_sd * rng.random::<f64>());
        }
        let geno = GenotypeMatrix::new(
            (0..n).map(|i| format!("s{i:03}")).collect(),
            markers.iter().map(|m| (*m).to_string()).collect(),
            vec![Sex::Unknown; n],
            calls,
        )
        .unwrap();
        let expr = ExpressionSet::new(
            "islet",
            (0..n).map(|i| format!("s{i:03}")).collect(),
            vec!["p0".into()],
            values,
        )
        .unwrap();
        let mut entries = Map::new();
        entries.insert(
            "p0".into(),
            ProbeLocus {
                chromosome: Some("1".into()),
                pos_cm: Some(5.2),
            },
        );
        (geno, map, expr, ProbeAnnotation::new(entries))
    }

    #[test]
    fn strong_probe_selected_at_nearest_locus() {
        let (geno, map, expr, annot) = toy_dataset(2.0, 0.25, 500);
        let grid = insert_pseudomarkers(&map, 0.5);
        let probs = calc_genoprob(&geno, &grid, 0.002).unwrap();
        let eqtl = select_local_eqtl(&expr, &annot, &probs, &grid, &geno, 100.0);
        assert_eq!(eqtl.len(), 1);
        assert_eq!(eqtl[0].probe_ids, vec!["p0".to_string()]);
        assert!(eqtl[0].lods[0] > 100.0);
        // Probe at 5.2 cM sits nearest the marker at 5.0.
        assert_eq!(eqtl[0].locus_id, "m1");
    }

    #[test]
    fn weak_probe_yields_empty_list() {
        let (geno, map, expr, annot) = toy_dataset(0.0, 1.0, 200);
        let grid = insert_pseudomarkers(&map, 0.5);
        let probs = calc_genoprob(&geno, &grid, 0.002).unwrap();
        let eqtl = select_local_eqtl(&expr, &annot, &probs, &grid, &geno, 100.0);
        assert!(eqtl.is_empty());
    }
}
