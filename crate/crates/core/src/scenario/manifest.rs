use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ScenarioConfig;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// A file to be written into a run directory, by relative path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub path: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(path: impl Into<String>, bytes: impl Into<Vec<u8>>) -> Self {
        Artifact {
            path: path.into(),
            bytes: bytes.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub engine: String,
    pub root_seed: u64,
    pub config: ScenarioConfig,
    pub artifacts: Vec<ArtifactRecord>,
    pub timings: Vec<StageTiming>,
}

pub fn engine_version() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(dir: &Path, a: &Artifact) -> Result<ArtifactRecord> {
    if a.path.is_empty() || a.path.contains(['/', '\\']) || a.path == MANIFEST_FILE || a.path.starts_with('.') {
        return Err(Error::param(format!("artifact name `{}` is not allowed", a.path)));
    }
    let path = dir.join(&a.path);
    std::fs::write(&path, &a.bytes).map_err(|e| Error::io(&path, e))?;
    Ok(ArtifactRecord {
        path: a.path.clone(),
        sha256: sha256_hex(&a.bytes),
        bytes: a.bytes.len() as u64,
    })
}

/// Writes `artifacts` into `dir` and then the manifest listing them. A
/// manifest left over from an earlier run is removed first, so an
/// interrupted write never looks complete.
pub fn write_run_directory(
    dir: &Path,
    artifacts: &[Artifact],
    config: &ScenarioConfig,
    timings: Vec<StageTiming>,
) -> Result<RunManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    match std::fs::remove_file(&manifest_path) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => return Err(Error::io(&manifest_path, e)),
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut records = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        if !seen.insert(a.path.as_str()) {
            return Err(Error::param(format!("artifact `{}` written twice", a.path)));
        }
        records.push(write_file(dir, a)?);
    }
    let manifest = RunManifest {
        engine: engine_version(),
        root_seed: config.root_seed,
        config: config.clone(),
        artifacts: records,
        timings,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}

/// Checks every artifact listed in the manifest against its digest.
pub fn verify_run_directory(dir: &Path) -> Result<RunManifest> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = match std::fs::read_to_string(&manifest_path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::Verification(format!("{MANIFEST_FILE} is missing")))
        }
        Err(e) => return Err(Error::io(&manifest_path, e)),
    };
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| Error::Verification(format!("{MANIFEST_FILE} is unreadable: {e}")))?;
    for rec in &manifest.artifacts {
        let path = dir.join(&rec.path);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::Verification(format!("{} is missing", rec.path)))
            }
            Err(e) => return Err(Error::io(&path, e)),
        };
        if sha256_hex(&bytes) != rec.sha256 {
            return Err(Error::Verification(format!("{} does not match its digest", rec.path)));
        }
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn rejects_nested_or_reserved_names() {
        let cfg: ScenarioConfig = serde_json::from_str(
            r#"{"graph":{"generator":"barbell","clique":3,"bridge":0},
                "epidemic":{"beta_u":0.5,"beta_v":0.0,"gamma":0.5,"mu_d":0.0,"mu_n":0.0,"p_vacc":0.0},
                "initial_infected":{"nodes":[0]},"strategies":[{"strategy":"none"}],
                "t_max":5,"n_runs":1,"root_seed":0}"#,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        for bad in ["a/b.csv", "manifest.json", "", ".hidden"] {
            assert!(write_run_directory(dir.path(), &[Artifact::new(bad, "x")], &cfg, vec![]).is_err());
        }
        let twice = [Artifact::new("a.csv", "1"), Artifact::new("a.csv", "2")];
        assert!(write_run_directory(dir.path(), &twice, &cfg, vec![]).is_err());
        assert!(verify_run_directory(dir.path()).is_err());
        write_run_directory(dir.path(), &[Artifact::new("a.csv", "1")], &cfg, vec![]).unwrap();
        verify_run_directory(dir.path()).unwrap();
        std::fs::write(dir.path().join("a.csv"), "2").unwrap();
        let err = verify_run_directory(dir.path()).unwrap_err().to_string();
        assert!(err.contains("a.csv"), "{err}");
    }
}
