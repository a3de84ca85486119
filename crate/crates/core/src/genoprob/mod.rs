//! Pseudomarker grids and hidden-Markov multipoint genotype probabilities.

pub mod grid;
pub mod hmm;
pub mod mapfun;

pub use grid::{insert_pseudomarkers, ChromGrid, GridLocus, PositionGrid};
pub use hmm::{calc_genoprob, transition_matrix, ChromProbs, GenoProbTensor, F2_PRIOR};
pub use mapfun::{cf_map_distance, cf_rec_fraction};
