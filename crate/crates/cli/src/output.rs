//! Run directories and output files stamped with run metadata.
//!
//! Each command writes to `<out>/<command>/<tag>/` and records the tag in
//! `<out>/<command>/latest`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset_sha256: Option<String>,
    pub config: serde_json::Value,
}

impl Meta {
    pub fn new(command: &str, cfg: &RunConfig, dataset: Option<&Path>) -> Result<Self> {
        let dataset_sha256 = dataset.map(file_sha256).transpose()?;
        Ok(Meta {
            tool: "cryptopred".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed: cfg.seed,
            config_hash: cfg.hash(),
            dataset_sha256,
            config: cfg.echo(),
        })
    }

    fn markdown_header(&self) -> String {
        format!(
            "<!-- {} {} | seed {} | config {} -->\n\n",
            self.tool, self.command, self.seed, self.config_hash
        )
    }
}

/// A JSON output file: run metadata plus the command's result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub meta: Meta,
    pub result: T,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub struct RunDir {
    pub path: PathBuf,
    meta: Meta,
}

impl RunDir {
    pub fn create(cfg: &RunConfig, meta: Meta) -> Result<Self> {
        let command_dir = cfg.out.join(&meta.command);
        let tag = cfg.run_tag();
        let path = command_dir.join(&tag);
        fs::create_dir_all(&path).map_err(|e| io_err(&path, e))?;
        let latest = command_dir.join("latest");
        fs::write(&latest, format!("{tag}\n")).map_err(|e| io_err(&latest, e))?;
        Ok(RunDir { path, meta })
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    pub fn write_raw(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.path.join(name);
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, result: &T) -> Result<PathBuf> {
        let artifact = Artifact {
            meta: self.meta.clone(),
            result,
        };
        let mut text = serde_json::to_string_pretty(&artifact)
            .map_err(|e| CliError::Data(format!("{name}: {e}")))?;
        text.push('\n');
        self.write_raw(name, &text)
    }

    pub fn write_markdown(&self, name: &str, body: &str) -> Result<PathBuf> {
        self.write_raw(name, &format!("{}{body}", self.meta.markdown_header()))
    }
}

pub fn read_artifact<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Artifact<T>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Directory named by `<out>/<command>/latest`.
pub fn latest_dir(out: &Path, command: &str) -> Result<PathBuf> {
    let pointer = out.join(command).join("latest");
    let tag = fs::read_to_string(&pointer).map_err(|e| io_err(&pointer, e))?;
    Ok(out.join(command).join(tag.trim()))
}
