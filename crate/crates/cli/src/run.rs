//! Run manifests: the merged configuration of a command plus hashes of
//! every input and output file.

use std::fs;
use std::path::{Path, PathBuf};

use casimir_core::io::write_json;
use casimir_core::{CoreError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const RUN_MANIFEST: &str = "run_manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub format: String,
    /// Worker threads of the run; outputs do not depend on it.
    pub threads: usize,
    pub config: serde_json::Value,
    pub inputs: Vec<FileHash>,
    /// Paths relative to the output directory.
    pub outputs: Vec<FileHash>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CoreError::Io(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn hashes(paths: &[PathBuf], display: impl Fn(&Path) -> String) -> Result<Vec<FileHash>> {
    let mut out: Vec<FileHash> = paths
        .iter()
        .map(|p| Ok(FileHash { path: display(p), sha256: sha256_file(p)? }))
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| a.path.cmp(&b.path));
    out.dedup();
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
pub fn write_run_manifest(
    out_dir: &Path,
    command: &str,
    format: &str,
    threads: usize,
    config: serde_json::Value,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> Result<RunManifest> {
    let manifest = RunManifest {
        tool: "casimir-lab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        format: format.into(),
        threads,
        config,
        inputs: hashes(inputs, |p| fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf()).display().to_string())?,
        outputs: hashes(outputs, |p| p.strip_prefix(out_dir).unwrap_or(p).display().to_string())?,
    };
    write_json(&out_dir.join(RUN_MANIFEST), &manifest)?;
    Ok(manifest)
}

/// Reads a config file. A run manifest yields its recorded configuration
/// (which must belong to `command`) and format.
pub fn read_config(path: &Path, command: &str) -> Result<(serde_json::Value, Option<String>)> {
    let text = fs::read_to_string(path).map_err(|e| CoreError::Io(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("tool").is_some() && value.get("config").is_some() {
        let manifest: RunManifest = serde_json::from_value(value)?;
        if manifest.command != command {
            return Err(CoreError::Config(format!(
                "{} records a `{}` run, not `{command}`",
                path.display(),
                manifest.command
            )));
        }
        return Ok((manifest.config, Some(manifest.format)));
    }
    Ok((value, None))
}
