//! Output directory bookkeeping and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fsns_core::dynamics::EnergyRecord;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::RunError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// `complete` or `blowup`.
    pub status: String,
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    pub wall_clock_seconds: f64,
    /// Relative path to sha256 of every artifact of the run.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST))?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

/// An output directory being filled by one command. A stale manifest is
/// removed on creation so an interrupted rerun is never mistaken for a
/// complete one.
pub struct ArtifactDir {
    root: PathBuf,
    outputs: BTreeMap<String, String>,
    started: Instant,
}

impl ArtifactDir {
    pub fn create(root: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(root)
            .map_err(|e| RunError::Config(format!("output directory {} not creatable: {e}", root.display())))?;
        match fs::remove_file(root.join(MANIFEST)) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(e.into()),
            _ => {}
        }
        Ok(Self { root: root.to_path_buf(), outputs: BTreeMap::new(), started: Instant::now() })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> io::Result<()> {
        write_atomic(&self.path(rel), bytes)?;
        self.outputs.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Records a file left by an earlier run as part of this one.
    pub fn adopt(&mut self, rel: &str) -> io::Result<()> {
        let bytes = fs::read(self.path(rel))?;
        self.outputs.insert(rel.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn finish(self, command: &str, status: &str, config_sha256: String, seed: u64) -> io::Result<RunManifest> {
        let m = RunManifest {
            command: command.to_string(),
            status: status.to_string(),
            config_sha256,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&m).map_err(io::Error::other)?;
        text.push('\n');
        write_atomic(&self.root.join(MANIFEST), text.as_bytes())?;
        Ok(m)
    }
}

pub const ENERGY_HEADER: &str = "t,H1_norm_sq,H1a2_norm_sq,trilinear_residual\n";

pub fn energy_row(out: &mut String, r: &EnergyRecord) {
    use std::fmt::Write;
    let _ = writeln!(out, "{:e},{:e},{:e},{:e}", r.t, r.h1_norm_sq, r.h1a2_norm_sq, r.trilinear_residual);
}

/// Running totals for `|u(T)|² + 2ν Σ dt |u_{n+1}|²_{H^{1+α/2}}` against
/// `|u_0|²`, in the same form as the core energy balance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyTally {
    pub initial: f64,
    pub terminal: f64,
    pub dissipation: f64,
    #[serde(skip)]
    last_t: Option<f64>,
}

impl EnergyTally {
    pub fn push(&mut self, r: &EnergyRecord, nu: f64) {
        match self.last_t {
            None => self.initial = r.h1_norm_sq,
            Some(t0) => self.dissipation += 2.0 * nu * (r.t - t0) * r.h1a2_norm_sq,
        }
        self.last_t = Some(r.t);
        self.terminal = r.h1_norm_sq;
    }

    pub fn ratio(&self) -> f64 {
        (self.terminal + self.dissipation) / self.initial
    }
}
