//! Per-output manifests recording what an output was built from.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{read_to_string, write, CliError, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub config_sha256: String,
    /// Input path to content hash.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

/// Whether a command has to run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Plan {
    Run,
    /// Outputs exist and were built from identical inputs and configuration.
    UpToDate,
}

/// A command's inputs and outputs, keyed on its primary output.
pub struct Stage {
    pub command: String,
    pub primary: PathBuf,
    pub config_sha256: String,
    pub inputs: BTreeMap<String, String>,
}

impl Stage {
    pub fn new(command: &str, primary: PathBuf, config_sha256: String, inputs: &[&Path]) -> Result<Stage> {
        let inputs = inputs
            .iter()
            .map(|p| Ok((p.display().to_string(), hash_file(p)?)))
            .collect::<Result<_>>()?;
        Ok(Stage { command: command.into(), primary, config_sha256, inputs })
    }

    /// Outputs are write-once: an existing primary output is only replaced
    /// with `force`, unless its manifest shows it is already current.
    pub fn plan(&self, force: bool) -> Result<Plan> {
        if !self.primary.exists() {
            return Ok(Plan::Run);
        }
        if let Some(m) = self.read_manifest() {
            let outputs_intact =
                m.outputs.iter().all(|(p, h)| hash_file(Path::new(p)).map(|x| &x == h).unwrap_or(false));
            if m.config_sha256 == self.config_sha256 && m.inputs == self.inputs && outputs_intact {
                return Ok(Plan::UpToDate);
            }
        }
        if force {
            Ok(Plan::Run)
        } else {
            Err(CliError::Validation(format!(
                "{} exists and was built from different inputs; pass --force to replace it",
                self.primary.display()
            )))
        }
    }

    fn read_manifest(&self) -> Option<Manifest> {
        let text = read_to_string(&manifest_path(&self.primary)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn finish(&self, outputs: &[&Path]) -> Result<Manifest> {
        let m = Manifest {
            command: self.command.clone(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: self.config_sha256.clone(),
            inputs: self.inputs.clone(),
            outputs: outputs
                .iter()
                .map(|p| Ok((p.display().to_string(), hash_file(p)?)))
                .collect::<Result<_>>()?,
        };
        write(&manifest_path(&self.primary), serde_json::to_string_pretty(&m)? + "\n")?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_once_unless_forced() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        let out = dir.path().join("out.txt");
        std::fs::write(&input, "a").unwrap();
        let stage = Stage::new("x", out.clone(), "c1".into(), &[&input]).unwrap();
        assert_eq!(stage.plan(false).unwrap(), Plan::Run);
        std::fs::write(&out, "result").unwrap();
        stage.finish(&[&out]).unwrap();
        assert_eq!(stage.plan(false).unwrap(), Plan::UpToDate);

        std::fs::write(&input, "b").unwrap();
        let changed = Stage::new("x", out.clone(), "c1".into(), &[&input]).unwrap();
        assert!(matches!(changed.plan(false), Err(CliError::Validation(_))));
        assert_eq!(changed.plan(true).unwrap(), Plan::Run);
        assert_eq!(manifest_path(&out), dir.path().join("out.txt.manifest.json"));
    }
}
