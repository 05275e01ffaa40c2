//! Checkpoint store for continuous training.
//!
//! A store is a directory tree with one subdirectory per problem name and
//! one immutable file per checkpoint, named `<unix-micros>.ckpt`. The latest
//! checkpoint is the lexicographically greatest filename, so no index file
//! exists that could be corrupted. Files are written to a temporary path and
//! atomically renamed into place; a failed persist never leaves a partial
//! file visible.
//!
//! Checkpoint container layout, all integers little-endian:
//!
//! ```text
//! offset 0   magic bytes  "MOPT"
//! offset 4   format version u16 (currently 1)
//! offset 6   params_blob length u64
//! offset 14  state_blob length u64
//! offset 22  params_blob, then state_blob
//! ```
//!
//! Blob encodings are owned by the problem (params) and the engine (state);
//! the store treats them as opaque bytes. The engines in this crate encode
//! state as a JSON object carrying a top-level `best_cost` key, which the
//! store peeks at so a checkpoint can report its cost without decoding
//! engine internals.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

const MAGIC: &[u8; 4] = b"MOPT";
const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 22;
const CKPT_EXT: &str = "ckpt";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: corrupt checkpoint: {detail}")]
    Corrupt { path: PathBuf, detail: String },
}

impl StoreError {
    fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// One persisted snapshot: problem parameters plus engine state.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub problem_name: String,
    /// Microseconds since the Unix epoch; strictly increasing per name
    /// within one store.
    pub created_at_micros: u64,
    pub params_blob: Vec<u8>,
    pub state_blob: Vec<u8>,
    /// Best cost duplicated out of the state blob for cheap reporting;
    /// `None` when the state blob carries no incumbent (or is not an
    /// engine snapshot from this crate).
    pub best_cost: Option<f64>,
}

fn peek_best_cost(state_blob: &[u8]) -> Option<f64> {
    #[derive(Deserialize)]
    struct Peek {
        #[serde(default)]
        best_cost: Option<f64>,
    }
    serde_json::from_slice::<Peek>(state_blob)
        .ok()
        .and_then(|p| p.best_cost)
}

/// Compares saved and current problem parameters. Resumption from a
/// checkpoint is permitted only when they are structurally equal; a changed
/// instance means a different problem, so no tolerance is applied.
pub fn params_match<P: PartialEq>(saved: &P, current: &P) -> bool {
    saved == current
}

/// Directory-backed checkpoint store.
///
/// At most one writer per problem name at a time (callers provide
/// exclusion); concurrent readers are safe because checkpoint files are
/// immutable once renamed into place.
#[derive(Debug, Clone)]
pub struct CheckpointStore {
    root: PathBuf,
}

impl CheckpointStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn problem_dir(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Durably writes a new checkpoint for `name` and returns the record
    /// written. The timestamp is bumped past any existing checkpoint so
    /// `created_at` stays strictly increasing even for rapid calls.
    pub fn persist(
        &self,
        name: &str,
        params_blob: &[u8],
        state_blob: &[u8],
    ) -> Result<Checkpoint, StoreError> {
        let dir = self.problem_dir(name);
        fs::create_dir_all(&dir).map_err(|e| StoreError::io(&dir, e))?;

        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_micros() as u64)
            .unwrap_or(0);
        let micros = match self.newest_micros(name)? {
            Some(latest) if now <= latest => latest + 1,
            _ => now,
        };

        let bytes = encode_container(params_blob, state_blob);
        let tmp = tempfile::Builder::new()
            .prefix(".ckpt-")
            .tempfile_in(&dir)
            .map_err(|e| StoreError::io(&dir, e))?;
        tmp.as_file()
            .write_all(&bytes)
            .and_then(|()| tmp.as_file().sync_all())
            .map_err(|e| StoreError::io(tmp.path(), e))?;

        let path = dir.join(format!("{micros}.{CKPT_EXT}"));
        tmp.persist(&path)
            .map_err(|e| StoreError::io(&path, e.error))?;

        Ok(Checkpoint {
            problem_name: name.to_string(),
            created_at_micros: micros,
            params_blob: params_blob.to_vec(),
            state_blob: state_blob.to_vec(),
            best_cost: peek_best_cost(state_blob),
        })
    }

    /// Returns the newest readable checkpoint for `name`, or `None` when
    /// none exist. A corrupt or truncated file is skipped with a warning
    /// and the next-newest is tried, so an interrupted persist cannot
    /// block later resumption.
    pub fn load_latest(&self, name: &str) -> Result<Option<Checkpoint>, StoreError> {
        let mut stamps = self.list(name)?;
        stamps.reverse();
        for micros in stamps {
            let path = self.problem_dir(name).join(format!("{micros}.{CKPT_EXT}"));
            match self.read_checkpoint(name, micros, &path) {
                Ok(ckpt) => return Ok(Some(ckpt)),
                Err(StoreError::Corrupt { detail, .. }) => {
                    log::warn!("skipping corrupt checkpoint {}: {detail}", path.display());
                }
                Err(err) => return Err(err),
            }
        }
        Ok(None)
    }

    /// Timestamps of all checkpoints stored for `name`, ascending.
    pub fn list(&self, name: &str) -> Result<Vec<u64>, StoreError> {
        let dir = self.problem_dir(name);
        let entries = match fs::read_dir(&dir) {
            Ok(entries) => entries,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(StoreError::io(&dir, e)),
        };
        let mut names: Vec<String> = entries
            .filter_map(|entry| entry.ok())
            .filter_map(|entry| entry.file_name().into_string().ok())
            .filter_map(|file| file.strip_suffix(&format!(".{CKPT_EXT}")).map(String::from))
            // foreign files (zero-padded or non-numeric stems) are not ours
            .filter(|stem| stem.parse::<u64>().is_ok_and(|m| m.to_string() == *stem))
            .collect();
        // latest = lexicographically greatest filename
        names.sort();
        Ok(names.iter().filter_map(|s| s.parse::<u64>().ok()).collect())
    }

    fn newest_micros(&self, name: &str) -> Result<Option<u64>, StoreError> {
        Ok(self.list(name)?.last().copied())
    }

    fn read_checkpoint(
        &self,
        name: &str,
        micros: u64,
        path: &Path,
    ) -> Result<Checkpoint, StoreError> {
        let bytes = fs::read(path).map_err(|e| StoreError::io(path, e))?;
        let (params_blob, state_blob) =
            decode_container(&bytes).map_err(|detail| StoreError::Corrupt {
                path: path.to_path_buf(),
                detail,
            })?;
        let best_cost = peek_best_cost(state_blob);
        Ok(Checkpoint {
            problem_name: name.to_string(),
            created_at_micros: micros,
            params_blob: params_blob.to_vec(),
            state_blob: state_blob.to_vec(),
            best_cost,
        })
    }
}

/// Builds the on-disk container for one checkpoint.
pub fn encode_container(params_blob: &[u8], state_blob: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + params_blob.len() + state_blob.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(params_blob.len() as u64).to_le_bytes());
    out.extend_from_slice(&(state_blob.len() as u64).to_le_bytes());
    out.extend_from_slice(params_blob);
    out.extend_from_slice(state_blob);
    out
}

/// Splits a container into (params_blob, state_blob), validating the header
/// and that the declared lengths cover the payload exactly.
pub fn decode_container(bytes: &[u8]) -> Result<(&[u8], &[u8]), String> {
    if bytes.len() < HEADER_LEN {
        return Err(format!("file too short ({} bytes)", bytes.len()));
    }
    if &bytes[0..4] != MAGIC {
        return Err("bad magic bytes".into());
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(format!("unsupported format version {version}"));
    }
    let params_len = u64::from_le_bytes(bytes[6..14].try_into().unwrap()) as usize;
    let state_len = u64::from_le_bytes(bytes[14..22].try_into().unwrap()) as usize;
    let expected = HEADER_LEN
        .checked_add(params_len)
        .and_then(|n| n.checked_add(state_len))
        .ok_or_else(|| "declared lengths overflow".to_string())?;
    if bytes.len() != expected {
        return Err(format!(
            "declared payload {} bytes, file has {}",
            expected,
            bytes.len()
        ));
    }
    let params = &bytes[HEADER_LEN..HEADER_LEN + params_len];
    let state = &bytes[HEADER_LEN + params_len..];
    Ok((params, state))
}
