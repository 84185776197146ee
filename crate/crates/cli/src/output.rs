//! Outputs are assembled in memory and only written once a command has
//! succeeded, so a failing run leaves nothing behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
    plots: Vec<Value>,
}

impl OutputSet {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    pub fn add_with<F>(&mut self, name: &str, write: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> fluoro::Result<()>,
    {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.add(name, buf);
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    /// Registers a line plot of `y` columns against `x` from a CSV file.
    pub fn plot(&mut self, title: &str, file: &str, x: &str, y: &[&str], xlabel: &str, ylabel: &str, log_x: bool) {
        self.plots.push(json!({
            "kind": "line",
            "title": title,
            "file": file,
            "x": x,
            "y": y,
            "xlabel": xlabel,
            "ylabel": ylabel,
            "log_x": log_x,
        }));
    }

    /// Registers a grouped bar chart of `y` columns over the categories in `x`.
    pub fn bars(&mut self, title: &str, file: &str, x: &[&str], y: &[&str]) {
        self.plots.push(json!({ "kind": "bar", "title": title, "file": file, "x": x, "y": y }));
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Writes every file plus the plot recipe, run metadata and timestamp
    /// into `dir`. Each file goes to a temporary name first and is renamed
    /// into place.
    pub fn commit(mut self, dir: &Path, meta: &RunMetadata) -> Result<Vec<PathBuf>, CliError> {
        if !self.plots.is_empty() {
            let recipe = json!({ "schema_version": fluoro::SCHEMA_VERSION, "plots": self.plots });
            self.add_json("plot.json", &recipe)?;
        }
        let mut meta = meta.clone();
        meta.files = self.names();
        self.add_json("metadata.json", &meta)?;
        let now =
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        self.add_json("timestamp.json", &json!({ "schema_version": fluoro::SCHEMA_VERSION, "unix_time_s": now }))?;

        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let target = dir.join(name);
            let tmp = dir.join(format!(".{name}.partial"));
            let res = fs::File::create(&tmp)
                .and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()))
                .and_then(|_| fs::rename(&tmp, &target));
            if let Err(e) = res {
                let _ = fs::remove_file(&tmp);
                return Err(CliError::Io(format!("cannot write {}: {e}", target.display())));
            }
            written.push(target);
        }
        Ok(written)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub schema_version: u32,
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
    pub simulate: bool,
    pub files: Vec<String>,
}

impl RunMetadata {
    pub fn new(command: &str, config_text: &str, seed: u64, simulate: bool) -> Self {
        let digest = Sha256::digest(config_text.as_bytes());
        let config_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        RunMetadata {
            schema_version: fluoro::SCHEMA_VERSION,
            command: command.to_string(),
            version: fluoro::VERSION.to_string(),
            seed,
            config_sha256,
            simulate,
            files: Vec::new(),
        }
    }
}
