//! Haley-Knott LOD computation: single-position selection of strong
//! local-eQTL and whole-genome verification scans.

pub mod hk;
pub mod scan;
pub mod select;
pub mod transform;

pub use hk::{hk_lod_at, HkFit};
pub use scan::{classify_local_trans, genome_scan, ChromScan, EqtlClass, LocusLod, ScanResult};
pub use select::{select_local_eqtl, LocalEqtl};
pub use transform::normal_quantile_transform;
