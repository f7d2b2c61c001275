//! Output directory handling and run manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::CliError;

/// Replay record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub outputs: Vec<PathBuf>,
    pub duration_s: f64,
    pub passed: bool,
}

pub struct Run {
    dir: PathBuf,
    command: &'static str,
    inputs: Vec<PathBuf>,
    seed: Option<u64>,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl Run {
    pub fn start(dir: &Path, command: &'static str) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Run {
            dir: dir.to_path_buf(),
            command,
            inputs: Vec::new(),
            seed: None,
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.outputs.push(p.clone());
        p
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::numeric(e.to_string()))?;
        fs::write(&p, text + "\n").map_err(|e| write_error(&p, e))?;
        Ok(p)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        fs::write(&p, text).map_err(|e| write_error(&p, e))?;
        Ok(p)
    }

    pub fn write_csv<T: Serialize>(
        &mut self,
        name: &str,
        rows: impl IntoIterator<Item = T>,
    ) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        let mut w = csv::Writer::from_path(&p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
        for row in rows {
            w.serialize(row)
                .map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
        }
        w.flush().map_err(|e| write_error(&p, e))?;
        Ok(p)
    }

    /// Writes `manifest.json` and turns `passed` into the exit status.
    pub fn finish(self, passed: bool) -> Result<(), CliError> {
        let path = self.dir.join("manifest.json");
        let manifest = RunManifest {
            command: self.command.to_string(),
            inputs: self.inputs,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION"),
            outputs: self.outputs,
            duration_s: self.started.elapsed().as_secs_f64(),
            passed,
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::numeric(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| write_error(&path, e))?;
        if passed {
            Ok(())
        } else {
            Err(CliError::numeric(format!("{} failed its checks", self.command)))
        }
    }
}

fn write_error(p: &Path, e: std::io::Error) -> CliError {
    CliError::input(format!("cannot write {}: {e}", p.display()))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("schema error in {}: {e}", path.display())))
}
