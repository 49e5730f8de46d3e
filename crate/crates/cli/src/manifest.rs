use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub project: String,
    pub config_sha256: String,
    pub seed: u64,
    pub threads: usize,
    #[serde(default)]
    pub timings: Vec<Timing>,
    #[serde(default)]
    pub artifacts: Vec<Artifact>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact {
    /// Relative to the manifest's directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn artifact(dir: &Path, name: &str) -> anyhow::Result<Artifact> {
    let bytes = fs::read(dir.join(name)).with_context(|| format!("hashing {name}"))?;
    Ok(Artifact { path: name.to_string(), bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) })
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        fs::write(dir.join(MANIFEST_FILE), toml::to_string(self)?)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> anyhow::Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(toml::from_str(&text)?)
    }
}

/// Rehashes every listed artifact. Returns the number checked, or an error
/// naming every missing or modified file.
pub fn verify(dir: &Path) -> anyhow::Result<usize> {
    let manifest = Manifest::read(dir)?;
    let mut problems = Vec::new();
    for a in &manifest.artifacts {
        match fs::read(dir.join(&a.path)) {
            Err(_) => problems.push(format!("{}: missing", a.path)),
            Ok(bytes) if bytes.len() as u64 != a.bytes || sha256_hex(&bytes) != a.sha256 => {
                problems.push(format!("{}: contents changed", a.path))
            }
            Ok(_) => {}
        }
    }
    if !problems.is_empty() {
        bail!("{} of {} artifacts failed verification: {}", problems.len(), manifest.artifacts.len(), problems.join("; "));
    }
    Ok(manifest.artifacts.len())
}
