use std::process::Command;

use mqci::cache::DiskCache;
use mqci::tablefile::{read_table, table_csv};
use mqci_core::bench::TableSource;
use mqci_core::cardinal::{synthesize_with, SynthesisConfig};
use mqci_core::kernel::MultiquadricParams;

#[test]
fn cached_table_reloads_identical_to_fresh_synthesis() {
    let dir = tempfile::tempdir().unwrap();
    let p = MultiquadricParams::new(0.5, 1.0, 1).unwrap();
    let cfg = SynthesisConfig::new(1e-9, 8.0);
    let fresh = synthesize_with(&p, &cfg).unwrap();

    let mut cache = DiskCache::new(dir.path()).unwrap();
    let first = cache.table(&p, &cfg).unwrap();
    assert_eq!((cache.hits(), cache.misses()), (0, 1));
    let again = cache.table(&p, &cfg).unwrap();
    assert_eq!((cache.hits(), cache.misses()), (1, 1));
    assert_eq!(first.to_parts(), fresh.to_parts());
    assert_eq!(again.to_parts(), fresh.to_parts());

    // A fresh cache over the same directory sees the file.
    let mut other = DiskCache::new(dir.path()).unwrap();
    assert_eq!(other.table(&p, &cfg).unwrap().to_parts(), fresh.to_parts());
    assert_eq!(other.hits(), 1);
}

#[test]
fn key_separates_configurations() {
    let p = MultiquadricParams::new(0.5, 1.0, 1).unwrap();
    let q = MultiquadricParams::new(0.5, 2.0, 1).unwrap();
    let cfg = SynthesisConfig::new(1e-9, 8.0);
    let k = DiskCache::key(&p, &cfg);
    assert_eq!(k.len(), 64);
    assert_eq!(k, DiskCache::key(&p, &cfg.clone()));
    assert_ne!(k, DiskCache::key(&q, &cfg));
    assert_ne!(k, DiskCache::key(&p, &SynthesisConfig::new(1e-8, 8.0)));
    assert_ne!(k, DiskCache::key(&p, &cfg.clone().with_points_per_unit(32)));
}

#[test]
fn corrupt_cache_entries_are_resynthesized() {
    let dir = tempfile::tempdir().unwrap();
    let p = MultiquadricParams::new(-2.5, 1.0, 1).unwrap();
    let cfg = SynthesisConfig::new(1e-8, 4.0);
    let mut cache = DiskCache::new(dir.path()).unwrap();
    std::fs::write(cache.path_for(&p, &cfg), b"MQCI-TABLE 1\n{broken").unwrap();
    let t = cache.table(&p, &cfg).unwrap();
    assert_eq!(cache.misses(), 1);
    assert_eq!(t.to_parts(), synthesize_with(&p, &cfg).unwrap().to_parts());
    assert!(read_table(&cache.path_for(&p, &cfg)).is_ok());
}

#[test]
fn cli_cache_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let export = dir.path().join("t.mqct");
    let export_csv = dir.path().join("t.csv");
    let run = |extra: &[&str]| {
        let mut args = vec!["cardinal", "--alpha", "-2", "--radius", "4", "--residual-radius", "3", "--cache-dir", cache.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = Command::new(env!("CARGO_BIN_EXE_mqci")).args(&args).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        mqci::format::csv_body(&String::from_utf8(o.stdout).unwrap())
    };
    let a = run(&["--export", export.to_str().unwrap()]);
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 1);
    let b = run(&["--export", export_csv.to_str().unwrap()]);
    assert_eq!(a, b);

    let p = MultiquadricParams::new(-2.0, 1.0, 1).unwrap();
    let fresh = synthesize_with(&p, &SynthesisConfig::new(1e-9, 4.0)).unwrap();
    let loaded = read_table(&export).unwrap();
    assert_eq!(loaded.to_parts(), fresh.to_parts());
    let text = std::fs::read_to_string(&export_csv).unwrap();
    assert_eq!(mqci::format::csv_body(&text), table_csv(&fresh).body());
}
