//! Evaluation grid: markers plus evenly spaced pseudomarkers.

use crate::types::{ChromosomeKind, GeneticMap};

/// One evaluation position: a genotyped marker or an inserted pseudomarker.
#[derive(Clone, Debug)]
pub struct GridLocus {
    pub id: String,
    pub pos_cm: f64,
    pub is_pseudomarker: bool,
}

#[derive(Clone, Debug)]
pub struct ChromGrid {
    pub name: String,
    pub kind: ChromosomeKind,
    pub loci: Vec<GridLocus>,
}

impl ChromGrid {
    /// Index of the grid locus nearest to `pos_cm`; ties resolve toward the
    /// lower position.
    pub fn nearest_locus(&self, pos_cm: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, locus) in self.loci.iter().enumerate() {
            let d = (locus.pos_cm - pos_cm).abs();
            let better = match best {
                None => true,
                Some((_, bd)) => d < bd,
            };
            if better {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Ordered evaluation positions for every chromosome of a map.
#[derive(Clone, Debug)]
pub struct PositionGrid {
    pub chromosomes: Vec<ChromGrid>,
}

impl PositionGrid {
    pub fn chromosome(&self, name: &str) -> Option<&ChromGrid> {
        self.chromosomes.iter().find(|c| c.name == name)
    }

    pub fn chromosome_index(&self, name: &str) -> Option<usize> {
        self.chromosomes.iter().position(|c| c.name == name)
    }
}

/// Inserts pseudomarkers so no adjacent pair of grid loci is more than
/// `step_cm` apart. A marker interval of length L > step gets
/// ceil(L/step) − 1 pseudomarkers at even spacing; markers keep their
/// original positions.
pub fn insert_pseudomarkers(map: &GeneticMap, step_cm: f64) -> PositionGrid {
    assert!(step_cm > 0.0, "pseudomarker step must be positive");
    let chromosomes = map
        .chromosomes()
        .iter()
        .map(|chrom| {
            let mut loci = Vec::new();
            for (i, locus) in chrom.loci.iter().enumerate() {
                if i > 0 {
                    let prev = &chrom.loci[i - 1];
                    let len = locus.pos_cm - prev.pos_cm;
                    if len > step_cm {
                        let k = (len / step_cm).ceil() as usize - 1;
                        let spacing = len / (k + 1) as f64;
                        for j in 1..=k {
                            let pos = prev.pos_cm + spacing * j as f64;
                            loci.push(GridLocus {
                                id: format!("pm_{}_{}", chrom.name, pos),
                                pos_cm: pos,
                                is_pseudomarker: true,
                            });
                        }
                    }
                }
                loci.push(GridLocus {
                    id: locus.marker_id.clone(),
                    pos_cm: locus.pos_cm,
                    is_pseudomarker: false,
                });
            }
            ChromGrid {
                name: chrom.name.clone(),
                kind: chrom.kind,
                loci,
            }
        })
        .collect();
    PositionGrid { chromosomes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Chromosome, MapLocus};
    use approx::assert_abs_diff_eq;

    fn map_with(positions: &[f64]) -> GeneticMap {
        GeneticMap::new(vec![Chromosome {
            name: "1".into(),
            kind: ChromosomeKind::Autosome,
            loci: positions
                .iter()
                .enumerate()
                .map(|(i, &p)| MapLocus {
                    marker_id: format!("m{i}"),
                    pos_cm: p,
                })
                .collect(),
        }])
        .unwrap()
    }

    fn positions(grid: &PositionGrid) -> Vec<(f64, bool)> {
        grid.chromosomes[0]
            .loci
            .iter()
            .map(|l| (l.pos_cm, l.is_pseudomarker))
            .collect()
    }

    #[test]
    fn short_interval_gets_none() {
        let grid = insert_pseudomarkers(&map_with(&[0.0, 0.4]), 0.5);
        assert_eq!(positions(&grid), vec![(0.0, false), (0.4, false)]);
    }

    #[test]
    fn one_cm_interval_gets_one() {
        let grid = insert_pseudomarkers(&map_with(&[0.0, 1.0]), 0.5);
        let pos = positions(&grid);
        assert_eq!(pos.len(), 3);
        assert_eq!(pos[1], (0.5, true));
    }

    #[test]
    fn two_cm_interval_gets_three() {
        let grid = insert_pseudomarkers(&map_with(&[0.0, 2.0]), 0.5);
        let pos = positions(&grid);
        assert_eq!(pos.len(), 5);
        assert_abs_diff_eq!(pos[1].0, 0.5);
        assert_abs_diff_eq!(pos[2].0, 1.0);
        assert_abs_diff_eq!(pos[3].0, 1.5);
        assert!(pos[1].1 && pos[2].1 && pos[3].1);
    }

    #[test]
    fn spacing_never_exceeds_step() {
        let grid = insert_pseudomarkers(&map_with(&[0.0, 0.7, 2.3, 2.3, 9.9]), 0.5);
        let pos = positions(&grid);
        for w in pos.windows(2) {
            assert!(w[1].0 - w[0].0 <= 0.5 + 1e-12);
        }
        // Markers keep their original positions.
        for p in [0.0, 0.7, 2.3, 9.9] {
            assert!(pos.iter().any(|&(q, pm)| !pm && (q - p).abs() < 1e-12));
        }
    }

    #[test]
    fn nearest_locus_ties_toward_lower_position() {
        let grid = insert_pseudomarkers(&map_with(&[0.0, 1.0]), 0.5);
        // Loci at 0.0, 0.5, 1.0; query 0.25 ties between 0.0 and 0.5.
        assert_eq!(grid.chromosomes[0].nearest_locus(0.25), Some(0));
        assert_eq!(grid.chromosomes[0].nearest_locus(0.26), Some(1));
    }
}
