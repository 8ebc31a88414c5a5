use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crm_core::CrmError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Process exit codes.
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    /// Prefixes the message with the flag the failure belongs to.
    pub fn for_flag(self, flag: &str) -> Self {
        CliError {
            message: format!("{flag}: {}", self.message),
            ..self
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<CrmError> for CliError {
    fn from(e: CrmError) -> Self {
        let code = if e.is_numerical() {
            EXIT_NUMERICAL
        } else {
            EXIT_USAGE
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn resolve(out_dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_owned()
    } else {
        out_dir.join(path)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::usage(format!("cannot write {}: {e}", path.display()))
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_owned(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| CliError::usage(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(io_error(path, e));
    }
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `run.csv` gets `run.manifest.json`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoleculeSnapshot {
    /// What was passed to --molecule.
    pub source: String,
    pub name: String,
    /// Complete constants, loadable with --molecule after saving to a file.
    pub toml: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseRecord {
    pub strength: f64,
    pub n_kick: u32,
    /// Population beyond N_max after truncation.
    pub leakage: f64,
    pub m_i1: String,
    pub m_i2: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub m_f: String,
    pub parity: String,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridRecord {
    Window {
        start_tr: f64,
        length_tr: f64,
        samples: usize,
    },
    Log {
        first_tr: f64,
        last_tr: f64,
        samples: usize,
    },
    List {
        times_tr: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub created_utc: String,
    pub molecule: MoleculeSnapshot,
    pub n_max: u32,
    pub precision: String,
    pub threads: usize,
    pub fields_gauss: Vec<f64>,
    pub pulse: Option<PulseRecord>,
    pub blocks: Vec<BlockRecord>,
    pub grid: Option<GridRecord>,
    pub rotational_period_us: Option<f64>,
    pub observables: Vec<String>,
    pub timings_s: BTreeMap<String, f64>,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn new(command: &str, molecule: MoleculeSnapshot, n_max: u32, precision: &str) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            argv: std::env::args().collect(),
            created_utc: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            molecule,
            n_max,
            precision: precision.to_owned(),
            threads: rayon::current_num_threads(),
            fields_gauss: Vec::new(),
            pulse: None,
            blocks: Vec::new(),
            grid: None,
            rotational_period_us: None,
            observables: Vec::new(),
            timings_s: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    /// Writes `bytes` to `path` atomically and records its digest.
    pub fn emit(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        write_atomic(path, bytes)?;
        let file = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        self.outputs.push(OutputDigest {
            file,
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_beside(&self, csv: &Path) -> CliResult<PathBuf> {
        let path = manifest_path(csv);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}
