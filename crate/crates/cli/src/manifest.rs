// SPDX-License-Identifier: Apache-2.0
//! Run manifests: everything needed to repeat a command.

use crate::{Cli, CliError, Command};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub command: Command,
    /// Input path to SHA-256 of its contents (directories hash their files in
    /// sorted order).
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

fn hash_into(h: &mut Sha256, path: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Data(format!("{}: {e}", path.display()));
    if path.is_dir() {
        let mut children: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(io)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io)?;
        children.sort();
        for c in children {
            h.update(c.file_name().unwrap_or_default().to_string_lossy().as_bytes());
            hash_into(h, &c)?;
        }
    } else {
        h.update(std::fs::read(path).map_err(io)?);
    }
    Ok(())
}

pub fn digest(path: &Path) -> Result<String, CliError> {
    let mut h = Sha256::new();
    hash_into(&mut h, path)?;
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

impl RunManifest {
    pub fn new(cli: &Cli, inputs: &[&Path], outputs: &[&str]) -> Result<RunManifest, CliError> {
        Ok(RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cli.seed,
            command: cli.command.clone(),
            inputs: inputs
                .iter()
                .map(|p| Ok((p.display().to_string(), digest(p)?)))
                .collect::<Result<_, CliError>>()?,
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn load(path: &Path) -> Result<RunManifest, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    /// Fails if any recorded input changed since the manifest was written.
    pub fn verify_inputs(&self) -> Result<(), CliError> {
        for (path, want) in &self.inputs {
            let got = digest(Path::new(path))?;
            if &got != want {
                return Err(CliError::Data(format!("{path}: contents differ from the manifest")));
            }
        }
        Ok(())
    }
}
