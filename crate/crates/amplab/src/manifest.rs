//! The manifest: configuration echo, generator, seeds and a SHA-256 hash of
//! every artifact. Wall-clock time goes to `timing.json`, which is listed
//! but not hashed, so reruns produce identical hashed files.

use std::fs;

use amplab_core::rng::{trial_seed, SPLITTING_RULE};
use anyhow::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::io::ArtifactDir;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMING_FILE: &str = "timing.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub splitting_rule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub config: serde_json::Value,
    pub master_seed: u64,
    pub generator: Generator,
    pub trial_seeds: Vec<u64>,
    pub files: Vec<FileEntry>,
    pub unhashed: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_clock_seconds: f64,
    pub threads: usize,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct ManifestInput<'a> {
    pub experiment: &'a str,
    pub config: serde_json::Value,
    pub master_seed: u64,
    /// Trial indices used; the manifest lists the seed of each.
    pub trials: usize,
    pub pass: bool,
}

/// Hashes every file written so far, then writes the manifest and the timing file.
pub fn finish(dir: &mut ArtifactDir, input: ManifestInput<'_>, timing: &Timing) -> Result<Manifest> {
    let mut files = Vec::new();
    for rel in dir.files() {
        let bytes = fs::read(dir.root().join(rel))?;
        files.push(FileEntry {
            path: rel.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: input.experiment.into(),
        config: input.config,
        master_seed: input.master_seed,
        generator: Generator {
            name: "ChaCha8".into(),
            splitting_rule: SPLITTING_RULE.into(),
        },
        trial_seeds: (0..input.trials as u64).map(|t| trial_seed(input.master_seed, t)).collect(),
        files,
        unhashed: vec![TIMING_FILE.into()],
        pass: input.pass,
    };
    dir.write_json(MANIFEST_FILE, &manifest)?;
    dir.write_json(TIMING_FILE, timing)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn manifest_lists_every_artifact() {
        let tmp = tempfile::tempdir().unwrap();
        let mut dir = ArtifactDir::create(tmp.path()).unwrap();
        dir.write("a.csv", "x\n1\n").unwrap();
        dir.write("trials/b.json", "{}\n").unwrap();
        let input = ManifestInput {
            experiment: "demo",
            config: serde_json::json!({"k": 1}),
            master_seed: 7,
            trials: 2,
            pass: true,
        };
        let m = finish(&mut dir, input, &Timing { wall_clock_seconds: 0.5, threads: 1 }).unwrap();
        let paths: Vec<&str> = m.files.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(paths, ["a.csv", "trials/b.json"]);
        assert_eq!(m.files[0].sha256, sha256_hex(b"x\n1\n"));
        assert_eq!(m.trial_seeds.len(), 2);
        assert!(tmp.path().join(MANIFEST_FILE).exists() && tmp.path().join(TIMING_FILE).exists());
    }
}
