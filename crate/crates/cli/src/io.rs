//! Atomic file output and run manifests.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use swapsim_core::protocol::ExperimentConfig;
use swapsim_core::records::{read_jsonl, ReadError, RecordLine};

use crate::error::{CliError, CliResult};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> CliResult<()> {
    let tmp = temp_path(path);
    let result = (|| {
        let file = fs::File::create(&tmp)?;
        let mut out = BufWriter::new(file);
        fill(&mut out)?;
        out.flush()?;
        out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(path.display(), e)
    })
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => write_atomic(p, |w| w.write_all(text.as_bytes())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io("stdout", e))
        }
    }
}

pub fn read_records(path: &Path) -> CliResult<Vec<RecordLine>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path.display(), e))?;
    read_jsonl(BufReader::new(file)).map_err(|e| match e {
        ReadError::Io(err) => CliError::io(path.display(), err),
        ReadError::Garbled { line, message } => CliError::Io(format!("{}: line {line}: {message}", path.display())),
    })
}

pub fn manifest_path(records: &Path) -> PathBuf {
    let mut name = records.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    records.with_file_name(name)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    /// First trial id of the run.
    pub start_counter: u64,
    /// One past the last trial id.
    pub end_counter: u64,
    pub records_path: PathBuf,
    pub manifest_path: PathBuf,
    pub record_count: u64,
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}
