use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::{CliResult, Failure};

pub const MANIFEST_SCHEMA: &str = "hwroute.manifest/1";

/// Everything needed to replay a command: the parsed flags plus the fully
/// resolved scenario, so a later edit of the scenario file does not change
/// a replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub command: String,
    pub scenario: PathBuf,
    pub ladder: Vec<usize>,
    pub reps: usize,
    /// Master seed after overrides.
    pub seed: u64,
    pub outdir: PathBuf,
    pub workers: Option<usize>,
    /// Scenario after flag overrides, as TOML.
    pub resolved_scenario: String,
    pub args: Command,
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read manifest {}: {e}", path.display())))?;
        let m: RunManifest = serde_json::from_str(&text)
            .map_err(|e| Failure::Config(format!("malformed manifest {}: {e}", path.display())))?;
        if m.schema != MANIFEST_SCHEMA {
            return Err(Failure::Config(format!(
                "manifest schema {} is not {MANIFEST_SCHEMA}",
                m.schema
            )));
        }
        Ok(m)
    }
}
