//! Deterministic CSV/JSON encoding and the run manifest.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Files produced by one run, in write order.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    /// Set when estimators ran but fell below the quality threshold; the
    /// files are still written.
    pub quality_failure: Option<String>,
}

impl Outputs {
    pub fn json<S: Serialize>(&mut self, name: &str, value: &S) {
        self.files.push((name.into(), json_bytes(value)));
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) {
        self.files.push((name.into(), csv_bytes(header, rows)));
    }

    /// Table with text cells; numbers should go through [`fmt_f64`].
    pub fn csv_text(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) {
        self.files.push((name.into(), csv_text_bytes(header, rows)));
    }
}

pub fn json_bytes<S: Serialize>(value: &S) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("reports always serialize");
    v.push(b'\n');
    v
}

/// Shortest round-trip decimal; scientific notation outside `[1e-4, 1e6)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Vec<u8> {
    csv_text_bytes(header, rows.into_iter().map(|r| r.into_iter().map(fmt_f64).collect()))
}

pub fn csv_text_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub qbm: &'static str,
    pub qbm_core: &'static str,
}

/// Written next to every run's outputs. Carries no timestamps or paths, so
/// identical runs produce identical manifests.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub subcommand: String,
    /// SHA-256 of the `config.toml` written alongside.
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub versions: Versions,
    /// Output files with their SHA-256.
    pub outputs: Vec<(String, String)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.0, 1.0, -2.5, 1e-12, 123456789.0, 0.1 + 0.2, f64::MIN_POSITIVE, -7.25e-5] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1e-12), "1e-12");
        assert_eq!(fmt_f64(0.5), "0.5");
    }

    #[test]
    fn csv_has_header_and_crlf() {
        let b = csv_bytes(&["t", "x"], vec![vec![0.0, 1.5]]);
        assert_eq!(String::from_utf8(b).unwrap(), "t,x\r\n0,1.5\r\n");
    }
}
