//! Run reports: command echo, resolved parameters, payload, timing, input
//! digests. JSON output is full precision; tables round to 6 significant
//! digits.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub model: String,
    pub input_digest: String,
    pub tol: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub duration_ms: f64,
    pub payload: serde_json::Value,
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(format!("sha256:{}", hex::encode(Sha256::digest(&bytes))))
}

/// Round to 6 significant digits for table output.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = x.abs().log10().floor() as i32;
    let decimals = (5 - digits).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Format a complex value for tables.
pub fn sig6_complex(re: f64, im: f64) -> String {
    format!("{} {} {}i", sig6(re), if im < 0.0 { "-" } else { "+" }, sig6(im.abs()))
}
