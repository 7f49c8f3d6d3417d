//! Sidecar manifests for emitted artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{fail, Run};

#[derive(Serialize)]
struct RunManifest<'a, P: Serialize> {
    config: &'a Path,
    subcommand: &'a str,
    parameters: &'a P,
    version: &'static str,
    /// Seconds since the epoch; `SOURCE_DATE_EPOCH` pins it.
    timestamp: u64,
    sha256: String,
}

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes `body` to `out` and its manifest next to it.
pub fn write_with_sidecar(out: &Path, config: &Path, subcommand: &str, parameters: &impl Serialize, body: &[u8]) -> Run {
    let manifest = RunManifest {
        config,
        subcommand,
        parameters,
        version: env!("CARGO_PKG_VERSION"),
        timestamp: timestamp(),
        sha256: format!("{:x}", Sha256::digest(body)),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("serializable manifest") + "\n";
    fs::write(out, body).map_err(|e| fail(1, format!("cannot write {}: {e}", out.display())))?;
    let side = sidecar_path(out);
    fs::write(&side, text).map_err(|e| fail(1, format!("cannot write {}: {e}", side.display())))
}
