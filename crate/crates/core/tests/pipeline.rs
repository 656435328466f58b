use std::path::PathBuf;

use ruelle::pipeline::report::{self, Format};
use ruelle::pipeline::run::{write_outputs, Stage};
use ruelle::pipeline::{run_certification, RunConfig, RunOptions};

fn doubling(out: &std::path::Path, workers: usize) -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/doubling.toml");
    let mut cfg = RunConfig::load(&path, None).unwrap();
    cfg.out_dir = out.to_path_buf();
    cfg.workers = workers;
    cfg
}

#[test]
fn doubling_is_proven_with_expected_multiplicities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = doubling(dir.path(), 1);
    let cert = run_certification(&cfg, &RunOptions::default());
    assert!(cert.is_proven(), "{:?}", cert.failure);
    let m: Vec<_> = cert.disks.iter().map(|d| d.multiplicity).collect();
    assert_eq!(m, vec![Some(16), Some(1)]);
    let ex = cert.exclosure.as_ref().unwrap();
    let inv = cert.bounds.as_ref().unwrap().delta_inv;
    assert!(ex.transferred_sups.iter().all(|&s| s <= inv));
    assert!(ex.usable_delta >= ex.delta);

    write_outputs(&cert, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("disks.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + cert.disks.len());
    let svg = std::fs::read_to_string(dir.path().join("disks.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 1 + cert.disks.len());
    let back = report::read_report(&dir.path().join("certificate.json")).unwrap();
    assert_eq!(back, cert);
    let log = std::fs::read_to_string(dir.path().join("run.log")).unwrap();
    assert!(log.contains("arc"));
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let a = run_certification(&doubling(d1.path(), 1), &RunOptions::default()).without_timings();
    let b = run_certification(&doubling(d2.path(), 2), &RunOptions::default()).without_timings();
    let (mut ja, mut jb) = (report::to_json(&a), report::to_json(&b));
    // the worker count itself is part of the stats block
    ja = ja.replace("\"workers\": 1", "");
    jb = jb.replace("\"workers\": 2", "");
    assert_eq!(ja, jb);
}

#[test]
fn resume_reuses_the_archived_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = doubling(dir.path(), 1);
    let first = run_certification(&cfg, &RunOptions::default());
    let again = run_certification(&cfg, &RunOptions { resume: true, cache: true });
    let (g1, g2) = (first.galerkin.unwrap(), again.galerkin.unwrap());
    assert!(!g1.resumed && g2.resumed);
    assert_eq!(g1.matrix_hash, g2.matrix_hash);
    assert_eq!(first.disks, again.disks);
}

#[test]
fn failures_name_their_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = doubling(dir.path(), 1);
    // K = 2 leaves the discretization error far too large for the disks
    cfg.k = 2;
    cfg.fft_size = 32;
    let cert = run_certification(&cfg, &RunOptions::default());
    assert!(!cert.is_proven());
    let f = cert.failure.as_ref().unwrap();
    assert_ne!(f.stage, Stage::Config);
    let json = report::to_json(&cert);
    assert!(json.contains("\"stage\""));
    let path = dir.path().join("failed.txt");
    report::write_report(&cert, &path, Format::Text).unwrap();
    assert!(std::fs::read_to_string(&path).unwrap().contains("FAILED"));
}
