//! Content-addressed disk cache of cardinal tables.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mqci_core::bench::TableSource;
use mqci_core::cardinal::{synthesize_with, CardinalTable, SynthesisConfig};
use mqci_core::kernel::MultiquadricParams;
use sha2::{Digest, Sha256};

use crate::tablefile::{read_table, write_table};

/// Environment variable overriding the cache directory.
pub const CACHE_ENV: &str = "MQCI_CACHE_DIR";

#[derive(Debug, Clone)]
pub struct DiskCache {
    dir: PathBuf,
    hits: usize,
    misses: usize,
}

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, hits: 0, misses: 0 })
    }

    /// The directory from the flag, else from the environment, if either is set.
    pub fn resolve(flag: Option<&Path>) -> Option<PathBuf> {
        flag.map(Path::to_path_buf).or_else(|| std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hits(&self) -> usize {
        self.hits
    }

    pub fn misses(&self) -> usize {
        self.misses
    }

    /// Hash of every input that affects the synthesized samples.
    pub fn key(params: &MultiquadricParams, cfg: &SynthesisConfig) -> String {
        let text = format!(
            "mqci-table v{} alpha={:016x} c={:016x} d={} acc={:016x} radius={:016x} q={:?} budget={} band+={} period*={} tol={:016x} shells={}",
            env!("CARGO_PKG_VERSION"),
            params.alpha().to_bits(),
            params.c().to_bits(),
            params.dim(),
            cfg.target_accuracy.to_bits(),
            cfg.spatial_radius.to_bits(),
            cfg.points_per_unit,
            cfg.max_grid_points,
            cfg.band_extra,
            cfg.period_factor,
            cfg.periodization.tail_log_tol.to_bits(),
            cfg.periodization.max_shell,
        );
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn path_for(&self, params: &MultiquadricParams, cfg: &SynthesisConfig) -> PathBuf {
        self.dir.join(format!("{}.mqct", Self::key(params, cfg)))
    }
}

impl TableSource for DiskCache {
    fn table(&mut self, params: &MultiquadricParams, cfg: &SynthesisConfig) -> mqci_core::Result<Arc<CardinalTable>> {
        let path = self.path_for(params, cfg);
        if let Ok(t) = read_table(&path) {
            self.hits += 1;
            return Ok(Arc::new(t));
        }
        self.misses += 1;
        let t = synthesize_with(params, cfg)?;
        // A failed cache write only costs a later resynthesis.
        let _ = write_table(&path, &t);
        Ok(Arc::new(t))
    }
}
