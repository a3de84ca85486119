//! Multipoint genotype probabilities via a scaled forward–backward pass.
//!
//! The chain runs over the grid loci of one chromosome. The latent state is
//! the true F2 genotype with stationary distribution (¼, ½, ¼); adjacent
//! loci are linked by the two-haplotype transition matrix for the
//! recombination fraction implied by their cM gap; observed calls emit the
//! true genotype with probability 1 − e and each wrong code with e/2.
//! Pseudomarkers (and markers absent from the genotype matrix) emit nothing.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::genoprob::grid::PositionGrid;
use crate::genoprob::mapfun::cf_rec_fraction;
use crate::types::{ChromosomeKind, Genotype, GenotypeMatrix};

/// F2 prior at a single locus.
pub const F2_PRIOR: [f64; 3] = [0.25, 0.5, 0.25];

/// Transition matrix between the three genotype states across a gap with
/// recombination fraction `r`, as the product chain of two independent
/// haplotypes.
pub fn transition_matrix(r: f64) -> [[f64; 3]; 3] {
    let s = 1.0 - r;
    [
        [s * s, 2.0 * r * s, r * r],
        [r * s, s * s + r * r, r * s],
        [r * r, 2.0 * r * s, s * s],
    ]
}

/// Emission probability of an observed call given the true state index.
fn emission(obs: Option<Genotype>, error_rate: f64) -> [f64; 3] {
    match obs.and_then(Genotype::state_index) {
        None => [1.0, 1.0, 1.0],
        Some(k) => {
            let mut e = [error_rate / 2.0; 3];
            e[k] = 1.0 - error_rate;
            e
        }
    }
}

/// Posterior genotype probabilities for one chromosome: samples × loci × 3.
#[derive(Clone, Debug)]
pub struct ChromProbs {
    pub name: String,
    pub n_samples: usize,
    pub n_loci: usize,
    probs: Vec<f64>,
}

impl ChromProbs {
    /// Wraps a precomputed probability buffer laid out samples × loci × 3.
    pub fn from_raw(name: String, n_samples: usize, n_loci: usize, probs: Vec<f64>) -> Self {
        assert_eq!(probs.len(), n_samples * n_loci * 3);
        ChromProbs {
            name,
            n_samples,
            n_loci,
            probs,
        }
    }

    pub fn get(&self, sample: usize, locus: usize) -> [f64; 3] {
        let base = (sample * self.n_loci + locus) * 3;
        [self.probs[base], self.probs[base + 1], self.probs[base + 2]]
    }
}

/// Posterior genotype probabilities across all autosomes.
#[derive(Clone, Debug)]
pub struct GenoProbTensor {
    pub chromosomes: Vec<ChromProbs>,
}

impl GenoProbTensor {
    pub fn chromosome(&self, name: &str) -> Option<&ChromProbs> {
        self.chromosomes.iter().find(|c| c.name == name)
    }
}

/// Computes multipoint genotype probabilities on every autosome of the grid.
///
/// Samples are independent chains and are processed in parallel; each writes
/// a disjoint slice of the output, so results do not depend on thread count.
pub fn calc_genoprob(
    geno: &GenotypeMatrix,
    grid: &PositionGrid,
    error_rate: f64,
) -> Result<GenoProbTensor> {
    let mut chromosomes = Vec::new();
    for chrom in &grid.chromosomes {
        if chrom.kind != ChromosomeKind::Autosome {
            continue;
        }
        if chrom.loci.is_empty() {
            return Err(Error::invalid(
                "position grid",
                format!("chromosome {} has no loci", chrom.name),
            ));
        }
        let n_loci = chrom.loci.len();
        let n_samples = geno.n_samples();

        // Column in the genotype matrix for each grid locus, if observed.
        let marker_cols: Vec<Option<usize>> = chrom
            .loci
            .iter()
            .map(|locus| {
                if locus.is_pseudomarker {
                    None
                } else {
                    geno.marker_pos(&locus.id)
                }
            })
            .collect();

        // One transition matrix per adjacent gap.
        let transitions: Vec<[[f64; 3]; 3]> = chrom
            .loci
            .windows(2)
            .map(|w| {
                let gap_morgans = (w[1].pos_cm - w[0].pos_cm) / 100.0;
                transition_matrix(cf_rec_fraction(gap_morgans))
            })
            .collect();

        let mut probs = vec![0.0; n_samples * n_loci * 3];
        probs
            .par_chunks_mut(n_loci * 3)
            .enumerate()
            .for_each(|(sample, out)| {
                let obs: Vec<Option<Genotype>> = marker_cols
                    .iter()
                    .map(|col| col.map(|c| geno.call(sample, c)))
                    .collect();
                forward_backward(&obs, &transitions, error_rate, out);
            });

        chromosomes.push(ChromProbs {
            name: chrom.name.clone(),
            n_samples,
            n_loci,
            probs,
        });
    }
    Ok(GenoProbTensor { chromosomes })
}

/// Scaled forward–backward over one sample's chromosome; writes the
/// per-locus posterior triples into `out`.
fn forward_backward(
    obs: &[Option<Genotype>],
    transitions: &[[[f64; 3]; 3]],
    error_rate: f64,
    out: &mut [f64],
) {
    let n = obs.len();
    debug_assert_eq!(out.len(), n * 3);

    let emit: Vec<[f64; 3]> = obs.iter().map(|&o| emission(o, error_rate)).collect();

    // Forward, rescaled at every locus to guard against underflow on long
    // chromosomes.
    let mut alpha = vec![[0.0f64; 3]; n];
    for j in 0..3 {
        alpha[0][j] = F2_PRIOR[j] * emit[0][j];
    }
    rescale(&mut alpha[0]);
    for t in 1..n {
        let tr = &transitions[t - 1];
        let prev = alpha[t - 1];
        for j in 0..3 {
            let mut s = 0.0;
            for i in 0..3 {
                s += prev[i] * tr[i][j];
            }
            alpha[t][j] = s * emit[t][j];
        }
        rescale(&mut alpha[t]);
    }

    // Backward, likewise rescaled.
    let mut beta = vec![[0.0f64; 3]; n];
    beta[n - 1] = [1.0, 1.0, 1.0];
    for t in (0..n - 1).rev() {
        let tr = &transitions[t];
        let next = beta[t + 1];
        for i in 0..3 {
            let mut s = 0.0;
            for j in 0..3 {
                s += tr[i][j] * emit[t + 1][j] * next[j];
            }
            beta[t][i] = s;
        }
        rescale(&mut beta[t]);
    }

    for t in 0..n {
        let mut post = [
            alpha[t][0] * beta[t][0],
            alpha[t][1] * beta[t][1],
            alpha[t][2] * beta[t][2],
        ];
        rescale(&mut post);
        out[t * 3..t * 3 + 3].copy_from_slice(&post);
    }
}

fn rescale(v: &mut [f64; 3]) {
    let s = v[0] + v[1] + v[2];
    if s > 0.0 {
        v[0] /= s;
        v[1] /= s;
        v[2] /= s;
    }
}
