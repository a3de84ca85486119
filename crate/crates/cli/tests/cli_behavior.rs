//! Command-line contract: exit codes, validate output, and stage
//! subcommands on a small simulated dataset.

use std::path::Path;
use std::process::Command;

use lineup_core::sim::{ChromSpec, Perturbation, SimConfig};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lineup-forge"))
}

fn small_config(perturbations: Vec<Perturbation>) -> SimConfig {
    SimConfig {
        seed: 17,
        n_samples: 200,
        chromosomes: (1..=3)
            .map(|c| ChromSpec {
                name: c.to_string(),
                length_cm: 80.0,
                n_markers: 25,
            })
            .collect(),
        eqtl_probes_per_tissue: 30,
        cross_tissue_probes: 40,
        noise_probes: 150,
        perturbations,
        ..SimConfig::default()
    }
}

fn simulate_into(dir: &Path, config: &SimConfig) -> std::path::PathBuf {
    let config_path = dir.join("sim.toml");
    std::fs::write(&config_path, toml::to_string(config).unwrap()).unwrap();
    let data = dir.join("data");
    let out = binary()
        .args([
            "simulate",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            data.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    data.join("manifest.toml")
}

#[test]
fn unknown_flag_is_an_input_error() {
    let out = binary().args(["run-all", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_manifest_is_an_input_error() {
    let out = binary()
        .args(["validate", "--manifest", "/nonexistent/manifest.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_consistent_dataset_exits_zero_with_empty_report() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = simulate_into(tmp.path(), &small_config(Vec::new()));
    let out = binary()
        .args(["validate", "--manifest", manifest.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["entries"].as_array().unwrap().len(), 0, "{report}");
}

#[test]
fn validate_flags_no_call_rows_from_a_shift() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = simulate_into(
        tmp.path(),
        &small_config(vec![Perturbation::ShiftRun {
            plate: "p01".into(),
            start_well: "A01".into(),
            offset: 1,
            length: 3,
        }]),
    );
    let out = binary()
        .args(["validate", "--manifest", manifest.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let entries = report["entries"].as_array().unwrap();
    assert!(
        entries.iter().any(|e| e["kind"] == "no-call sample"),
        "{report}"
    );
}

#[test]
fn align_expr_writes_decisions_and_similarities() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = simulate_into(
        tmp.path(),
        &small_config(vec![Perturbation::Swap {
            grid: "islet".into(),
            a: "Mouse0005".into(),
            b: "Mouse0006".into(),
        }]),
    );
    let out_dir = tmp.path().join("out");
    let out = binary()
        .args([
            "align-expr",
            "--manifest",
            manifest.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let decisions: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("decisions.json")).unwrap())
            .unwrap();
    let islet = decisions["expression_decisions"]["islet"].as_array().unwrap();
    let fixed: Vec<&str> = islet
        .iter()
        .filter(|d| d["verdict"] == "fixable")
        .map(|d| d["sample_id"].as_str().unwrap())
        .collect();
    assert!(fixed.contains(&"Mouse0005") && fixed.contains(&"Mouse0006"), "{fixed:?}");
    assert!(out_dir.join("similarity_expr_islet.csv").exists());
    // Threshold echo in the report header.
    assert_eq!(decisions["config"]["probe_corr_min"], 0.75);
    assert_eq!(decisions["schema_version"], 1);
}

#[test]
fn stage_subcommands_write_their_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = simulate_into(
        tmp.path(),
        &small_config(vec![Perturbation::Swap {
            grid: "islet".into(),
            a: "Mouse0011".into(),
            b: "Mouse0012".into(),
        }]),
    );
    let manifest = manifest.to_str().unwrap();

    let correct_dir = tmp.path().join("correct");
    let out = binary()
        .args(["correct", "--manifest", manifest, "--out", correct_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(correct_dir.join("corrected_genotypes.csv").exists());
    assert!(correct_dir.join("corrected_expr_islet.csv").exists());
    assert!(!correct_dir.join("plate_findings.json").exists());

    let forensics_dir = tmp.path().join("forensics");
    let out = binary()
        .args(["forensics", "--manifest", manifest, "--out", forensics_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(forensics_dir.join("plate_findings.json").exists());
    assert!(forensics_dir.join("plates").join("plate_p01.svg").exists());

    let scan_dir = tmp.path().join("scan");
    let out = binary()
        .args([
            "scan",
            "--manifest",
            manifest,
            "--out",
            scan_dir.to_str().unwrap(),
            "--trait",
            "polygenic",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(scan_dir.join("scan_polygenic_before.csv").exists());
    assert!(scan_dir.join("scan_polygenic_after.csv").exists());
    let before = std::fs::read_to_string(scan_dir.join("scan_polygenic_before.csv")).unwrap();
    assert!(before.starts_with("locus,chr,pos_cM,lod\n"));

    let out = binary()
        .args(["scan", "--manifest", manifest, "--out", scan_dir.to_str().unwrap(), "--trait", "nope"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "unknown trait is an input error");
}

#[test]
fn seed_env_var_overrides_simulation_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(Vec::new());
    let config_path = tmp.path().join("sim.toml");
    std::fs::write(&config_path, toml::to_string(&config).unwrap()).unwrap();
    let run = |dir: &str, seed: Option<&str>| {
        let mut cmd = binary();
        cmd.args([
            "simulate",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            tmp.path().join(dir).to_str().unwrap(),
        ]);
        if let Some(seed) = seed {
            cmd.env("LINEUP_FORGE_SEED", seed);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        std::fs::read(tmp.path().join(dir).join("genotypes.csv")).unwrap()
    };
    let base = run("a", None);
    let overridden = run("b", Some("99"));
    let replay = run("c", Some("99"));
    assert_ne!(base, overridden, "seed override must change the dataset");
    assert_eq!(overridden, replay, "same seed must replay identically");
}
