//! Run manifests: resolved config snapshot, content hash, emitted files.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::output::write_atomic;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub mode: String,
    /// Unix epoch seconds at completion.
    pub created_unix: u64,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

pub fn config_hash(config_text: &str) -> String {
    hex::encode(Sha256::digest(config_text.as_bytes()))
}

/// Run directory name: first 12 hex digits of the config hash.
pub fn run_dir_name(hash: &str) -> &str {
    &hash[..12]
}

pub fn write_manifest(
    dir: &Path,
    mode: &str,
    config_text: &str,
    seed: Option<u64>,
    outputs: &[String],
) -> std::io::Result<()> {
    let manifest = RunManifest {
        tool: "syndyn",
        version: env!("CARGO_PKG_VERSION"),
        mode: mode.to_string(),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        config_sha256: config_hash(config_text),
        seed,
        config: serde_json::from_str(config_text).unwrap_or(serde_json::Value::Null),
        outputs: outputs.to_vec(),
    };
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(dir, "manifest.json", body.as_bytes())?;
    Ok(())
}
