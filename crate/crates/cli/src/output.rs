//! Run directories: artifacts are written first, the manifest last.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub path: String,
    pub kind: &'static str,
    pub bytes: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    started: &'a str,
    finished: String,
    threads: usize,
    config: &'a Value,
    artifacts: &'a [Artifact],
    results: &'a Value,
    acceptance: &'a Value,
}

pub struct RunDir {
    dir: PathBuf,
    started: String,
    artifacts: Vec<Artifact>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

impl RunDir {
    /// Creates `dir` and removes any manifest left by an earlier run, so an
    /// interrupted run never looks complete.
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let stale = dir.join(MANIFEST);
        if stale.exists() {
            fs::remove_file(&stale)?;
        }
        Ok(RunDir { dir: dir.to_path_buf(), started: now(), artifacts: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, kind: &'static str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.adopt(name, kind)
    }

    pub fn write_json(&mut self, name: &str, kind: &'static str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, kind, text.as_bytes())
    }

    /// Records a file some other writer already put in the run directory.
    pub fn adopt(&mut self, name: &str, kind: &'static str) -> Result<()> {
        let bytes = fs::metadata(self.dir.join(name)).with_context(|| format!("artifact {name} missing"))?.len();
        self.artifacts.retain(|a| a.path != name);
        self.artifacts.push(Artifact { path: name.to_string(), kind, bytes });
        Ok(())
    }

    pub fn finish(self, command: &str, config: &Value, results: &Value, acceptance: &Value) -> Result<PathBuf> {
        for a in &self.artifacts {
            if !self.dir.join(&a.path).is_file() {
                bail!("artifact {} vanished before the manifest was written", a.path);
            }
        }
        let manifest = Manifest {
            tool: "smectic",
            version: env!("CARGO_PKG_VERSION"),
            command,
            started: &self.started,
            finished: now(),
            threads: rayon::current_num_threads(),
            config,
            artifacts: &self.artifacts,
            results,
            acceptance,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join(MANIFEST);
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}
