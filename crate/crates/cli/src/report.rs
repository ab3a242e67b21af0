//! The run report: one pretty-printed JSON document per command.

use serde::Serialize;
use sha2::{Digest, Sha256};

use convsim_core::perfmodel::Candidate;
use convsim_core::{ArchKind, Constraints, CycleReport, OpCount, PerfReport, Psnr};

use crate::kernel_spec::KernelSummary;

/// Identifies the layout below; bumped on any incompatible change.
pub const SCHEMA: &str = "convsim.run-report/1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub command: CommandEcho,
    pub inputs: Vec<InputHash>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clock_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSettings>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<ArchRun>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<Skipped>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exploration: Option<Exploration>,
}

impl RunReport {
    pub fn new(name: &str, args: Vec<String>) -> Self {
        Self {
            schema: SCHEMA,
            command: CommandEcho {
                name: name.to_string(),
                args,
            },
            inputs: Vec::new(),
            kernel: None,
            clock_hz: None,
            noise: None,
            runs: Vec::new(),
            skipped: Vec::new(),
            exploration: None,
        }
    }

    pub fn add_input(&mut self, role: &str, path: &std::path::Path, bytes: &[u8]) {
        self.inputs.push(InputHash {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CommandEcho {
    pub name: String,
    /// Arguments after the program name, as given.
    pub args: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputHash {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NoiseSettings {
    pub variance: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PsnrPair {
    /// Image fed to the pipeline against the reference.
    pub input_db: Psnr,
    /// Pipeline output against the reference.
    pub output_db: Psnr,
}

/// One simulated architecture.
#[derive(Debug, Clone, Serialize)]
pub struct ArchRun {
    pub kind: ArchKind,
    pub oracle_match: bool,
    pub output_sha256: String,
    pub cycle_report: CycleReport,
    pub op_count: OpCount,
    /// Frame time from the simulated cycle count.
    pub measured: PerfReport,
    /// Frame-time model evaluated with the measured throughput and latency.
    pub model: PerfReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psnr: Option<PsnrPair>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Skipped {
    pub kind: ArchKind,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Exploration {
    pub constraints: Constraints,
    pub considered: Vec<Candidate>,
    pub ranking: Vec<ArchKind>,
}
