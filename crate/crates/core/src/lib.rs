//! Detection and correction of sample mix-ups in matched genotype /
//! gene-expression datasets from experimental crosses.
//!
//! The library aligns expression arrays across tissues by correlation over
//! tissue-shared probes, aligns DNA samples to mRNA samples by predicting
//! strong local-eQTL genotypes from expression, merges the resulting relabel
//! decisions into a corrected dataset, projects DNA errors onto 96-well
//! plate coordinates, and quantifies before/after improvement with genome
//! scans. A deterministic simulator provides ground truth for end-to-end
//! verification.

pub mod config;
pub mod decide;
pub mod error;
pub mod expralign;
pub mod genoalign;
pub mod genoprob;
pub mod io;
pub mod pipeline;
pub mod plate;
pub mod qtl;
pub mod relabel;
pub mod sim;
pub mod types;
pub mod validate;

pub use error::{Error, Result};
