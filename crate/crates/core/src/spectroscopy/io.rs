//! Artifact writers. Floats carry 17 significant digits so values round-trip
//! exactly, and every file is written to a temporary sibling and renamed into
//! place.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::analytic::OverlayRow;
use crate::model::to_ghz;
use crate::model::to_mhz;

use super::{EigenOverlay, SpectrumGrid};

/// Exact round-trip representation.
pub fn float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Write through a temporary file in the target directory, then rename.
pub fn atomic_write(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

pub fn grid_csv(grid: &SpectrumGrid) -> io::Result<Vec<u8>> {
    let np = grid.probe.len();
    let rows = (0..grid.drive_values.len()).flat_map(move |k| {
        (0..np).map(move |j| {
            vec![
                float(grid.drive_values[k]),
                float(to_ghz(grid.probe[j])),
                float(grid.n_tilde[[k, j]]),
                grid.converged[[k, j]].to_string(),
            ]
        })
    });
    csv_bytes(&["drive_value", "probe_GHz", "n_tilde", "converged"], rows)
}

pub fn overlay_csv(drive_values: &[f64], overlay: &EigenOverlay) -> io::Result<Vec<u8>> {
    let labels = overlay.path.labels;
    let rows = drive_values.iter().zip(&overlay.transitions).flat_map(move |(&v, ts)| {
        ts.iter().map(move |t| {
            vec![
                float(v),
                labels.label(t.from_branch),
                labels.label(t.to_branch),
                float(to_ghz(t.freq)),
                float(t.matelem),
                float(t.intensity),
            ]
        })
    });
    csv_bytes(&["sweep_value", "from", "to", "freq_GHz", "matelem", "intensity"], rows)
}

pub fn analytic_csv(rows: &[OverlayRow]) -> io::Result<Vec<u8>> {
    let it = rows.iter().map(|r| {
        vec![
            float(to_mhz(r.rabi)),
            float(r.power_dbm),
            float(to_ghz(r.lines.w13)),
            float(to_ghz(r.lines.w14)),
            float(to_ghz(r.lines.w23)),
            float(to_ghz(r.lines.w24)),
        ]
    });
    csv_bytes(&["rabi_MHz", "power_dBm", "w13_GHz", "w14_GHz", "w23_GHz", "w24_GHz"], it)
}

/// SHA-256 of the JSON form of anything serialisable.
pub fn params_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("serialisable parameters");
    hex::encode(Sha256::digest(&json))
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serialisable metadata");
    v.push(b'\n');
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [7.1400000000000001, 1.0 / 3.0, -2.5e-17, 6.02e23] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(f64::NAN), "NaN");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = crate::model::DeviceParams::reference();
        let mut b = a;
        b.kappa += 1e-12;
        assert_eq!(params_hash(&a), params_hash(&a));
        assert_ne!(params_hash(&a), params_hash(&b));
        assert_eq!(params_hash(&a).len(), 64);
    }
}
