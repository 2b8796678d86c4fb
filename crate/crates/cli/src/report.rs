use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::{CliError, Run};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: &'a crate::RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub result: T,
}

/// Collects output files under the run's output directory.
pub struct Writer<'a> {
    run: &'a Run,
    written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    pub fn new(run: &'a Run) -> Result<Self, CliError> {
        std::fs::create_dir_all(&run.config.output_dir)?;
        Ok(Writer {
            run,
            written: Vec::new(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.run.config.output_dir.join(name)
    }

    pub fn report<T: Serialize>(&mut self, name: &str, result: T) -> Result<(), CliError> {
        let timestamp = self.run.timestamp.then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
        });
        let env = Envelope {
            version: ARTIFACT_VERSION,
            command: self.run.command.name(),
            seed: self.run.config.seed,
            config: &self.run.config,
            timestamp,
            result,
        };
        let text =
            serde_json::to_string_pretty(&env).map_err(|e| CliError::Runtime(e.to_string()))?;
        self.text(name, &(text + "\n"))
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.path(name);
        write_file(&path, body)?;
        self.written.push(path);
        Ok(())
    }

    pub fn finish(self) -> Vec<PathBuf> {
        self.written
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}
