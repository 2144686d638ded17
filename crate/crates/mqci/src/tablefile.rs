//! Cardinal tables on disk: a magic line, a JSON header line, then the
//! samples as little-endian `f64`.

use std::fs;
use std::path::Path;

use mqci_core::cardinal::{CardinalTable, TableParts};
use mqci_core::lattice::IndexBox;

use crate::error::{AppError, Result};
use crate::format::{csv_f64, write_atomic, Csv};

const MAGIC: &[u8] = b"MQCI-TABLE 1\n";

pub fn encode(table: &CardinalTable) -> Result<Vec<u8>> {
    let mut parts = table.to_parts();
    let samples = std::mem::take(&mut parts.samples);
    let mut out = Vec::with_capacity(MAGIC.len() + 512 + 8 * samples.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(serde_json::to_string(&parts)?.as_bytes());
    out.push(b'\n');
    for v in samples {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<CardinalTable> {
    let bad = |reason: &str| AppError::BadTable { path: path.to_path_buf(), reason: reason.into() };
    let rest = bytes.strip_prefix(MAGIC).ok_or_else(|| bad("missing magic line"))?;
    let nl = rest.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header"))?;
    let mut parts: TableParts = serde_json::from_slice(&rest[..nl]).map_err(|e| bad(&e.to_string()))?;
    let data = &rest[nl + 1..];
    if data.len() % 8 != 0 {
        return Err(bad("truncated sample block"));
    }
    parts.samples = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    CardinalTable::from_parts(parts).map_err(|e| bad(&e.to_string()))
}

pub fn write_table(path: &Path, table: &CardinalTable) -> Result<()> {
    write_atomic(path, &encode(table)?)
}

pub fn read_table(path: &Path) -> Result<CardinalTable> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    decode(&bytes, path)
}

/// Every node as a row of coordinates and value.
pub fn table_csv(table: &CardinalTable) -> Csv {
    let d = table.params().dim();
    let names: Vec<String> = (0..d).map(|a| format!("x{a}")).chain(["value".to_string()]).collect();
    let header: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut csv = Csv::new(&header);
    let step = table.spatial_step();
    IndexBox::symmetric(d, table.half_nodes() as i64).for_each(|i| {
        let mut row: Vec<String> = i.iter().map(|&k| csv_f64(k as f64 * step)).collect();
        row.push(csv_f64(table.node(i).expect("node inside table")));
        csv.push(row);
    });
    csv
}

#[cfg(test)]
mod tests {
    use super::*;
    use mqci_core::cardinal::synthesize;
    use mqci_core::kernel::MultiquadricParams;

    #[test]
    fn roundtrip_is_exact() {
        let p = MultiquadricParams::new(-2.5, 1.0, 1).unwrap();
        let t = synthesize(&p, 1e-8, 3.0).unwrap();
        let bytes = encode(&t).unwrap();
        let back = decode(&bytes, Path::new("mem")).unwrap();
        assert_eq!(back.to_parts(), t.to_parts());
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let p = MultiquadricParams::new(-2.5, 1.0, 1).unwrap();
        let t = synthesize(&p, 1e-8, 2.0).unwrap();
        let mut bytes = encode(&t).unwrap();
        bytes.pop();
        assert!(decode(&bytes, Path::new("mem")).is_err());
        assert!(decode(b"nonsense", Path::new("mem")).is_err());
    }
}
