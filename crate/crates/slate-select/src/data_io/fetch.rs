//! Manifest-driven dataset downloads with SHA-256 verification.
//!
//! A manifest is a JSON file listing remote files, their checksums, and the
//! relative paths they should occupy under a data directory. Files already
//! present with a matching checksum are left alone, so re-running a fetch is
//! cheap and idempotent.

use std::fs::{self, File};
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One downloadable file: where it lives, what it hashes to, and where it
/// lands relative to the chosen data directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub url: String,
    pub sha256: String,
    pub path: String,
}

/// The full download manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub files: Vec<ManifestFile>,
}

/// What [`fetch_file`] did for one entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchOutcome {
    /// The destination already existed with the expected checksum.
    AlreadyPresent(PathBuf),
    /// The file was downloaded, verified, and written.
    Downloaded(PathBuf),
}

impl FetchOutcome {
    pub fn path(&self) -> &Path {
        match self {
            FetchOutcome::AlreadyPresent(p) | FetchOutcome::Downloaded(p) => p,
        }
    }
}

/// Reads a manifest from disk.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::data(path.display().to_string(), e.to_string()))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::data(path.display().to_string(), format!("bad manifest: {e}")))
}

/// Hex-encoded SHA-256 of a reader's contents.
pub fn sha256_hex(mut reader: impl Read) -> io::Result<String> {
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let read = reader.read(&mut buf)?;
        if read == 0 {
            break;
        }
        hasher.update(&buf[..read]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Checks a file on disk against an expected hex digest (case-insensitive).
pub fn verify_checksum(path: &Path, expected: &str) -> Result<()> {
    let file =
        File::open(path).map_err(|e| Error::data(path.display().to_string(), e.to_string()))?;
    let actual = sha256_hex(file)?;
    if actual.eq_ignore_ascii_case(expected) {
        Ok(())
    } else {
        Err(Error::Checksum {
            path: path.to_path_buf(),
            expected: expected.to_ascii_lowercase(),
            actual,
        })
    }
}

/// Fetches one manifest entry into `data_dir`, skipping the download when the
/// destination already verifies. Downloads are hashed before anything is
/// written, staged to a `.part` file, and renamed into place, so a checksum
/// mismatch never leaves a corrupt destination behind.
pub fn fetch_file(entry: &ManifestFile, data_dir: &Path) -> Result<FetchOutcome> {
    let dest = data_dir.join(&entry.path);
    if dest.exists() && verify_checksum(&dest, &entry.sha256).is_ok() {
        return Ok(FetchOutcome::AlreadyPresent(dest));
    }
    if let Some(parent) = dest.parent() {
        fs::create_dir_all(parent)?;
    }

    let mut response = ureq::get(&entry.url).call().map_err(|e| Error::Download {
        url: entry.url.clone(),
        message: e.to_string(),
    })?;
    let body = response
        .body_mut()
        .with_config()
        .limit(u64::MAX)
        .read_to_vec()
        .map_err(|e| Error::Download {
            url: entry.url.clone(),
            message: e.to_string(),
        })?;

    let actual = sha256_hex(body.as_slice())?;
    if !actual.eq_ignore_ascii_case(&entry.sha256) {
        return Err(Error::Checksum {
            path: PathBuf::from(&entry.url),
            expected: entry.sha256.to_ascii_lowercase(),
            actual,
        });
    }

    let staged = dest.with_extension(match dest.extension() {
        Some(ext) => format!("{}.part", ext.to_string_lossy()),
        None => "part".to_string(),
    });
    fs::write(&staged, &body)?;
    fs::rename(&staged, &dest)?;
    Ok(FetchOutcome::Downloaded(dest))
}

/// Fetches every manifest entry, in order, returning one outcome per entry.
pub fn fetch_all(manifest: &DatasetManifest, data_dir: &Path) -> Result<Vec<FetchOutcome>> {
    manifest
        .files
        .iter()
        .map(|entry| fetch_file(entry, data_dir))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn sha256_matches_known_vector() {
        // SHA-256("abc") from the FIPS 180 test vectors.
        assert_eq!(
            sha256_hex("abc".as_bytes()).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn verify_checksum_accepts_any_case_and_rejects_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.txt");
        let mut f = File::create(&path).unwrap();
        f.write_all(b"abc").unwrap();
        drop(f);
        let digest = "BA7816BF8F01CFEA414140DE5DAE2223B00361A396177A9CB410FF61F20015AD";
        verify_checksum(&path, digest).unwrap();
        let err = verify_checksum(&path, &"0".repeat(64)).unwrap_err();
        assert!(matches!(err, Error::Checksum { .. }));
    }

    #[test]
    fn present_and_valid_files_are_not_refetched() {
        let dir = tempfile::tempdir().unwrap();
        let entry = ManifestFile {
            // Unresolvable on purpose: the test fails if a fetch is attempted.
            url: "http://invalid.invalid/data.txt".into(),
            sha256: "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad".into(),
            path: "sub/data.txt".into(),
        };
        let dest = dir.path().join("sub/data.txt");
        fs::create_dir_all(dest.parent().unwrap()).unwrap();
        fs::write(&dest, b"abc").unwrap();
        let outcome = fetch_file(&entry, dir.path()).unwrap();
        assert_eq!(outcome, FetchOutcome::AlreadyPresent(dest));
    }

    #[test]
    fn manifest_round_trips_through_json() {
        let manifest = DatasetManifest {
            files: vec![ManifestFile {
                url: "https://example.org/a.csv".into(),
                sha256: "00".repeat(32),
                path: "a.csv".into(),
            }],
        };
        let text = serde_json::to_string(&manifest).unwrap();
        assert_eq!(serde_json::from_str::<DatasetManifest>(&text).unwrap(), manifest);
    }

    #[test]
    fn load_manifest_reports_path_on_parse_failure() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        fs::write(&path, "{not json").unwrap();
        let err = load_manifest(&path).unwrap_err();
        assert!(err.to_string().contains("manifest.json"));
    }
}
