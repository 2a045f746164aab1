//! Run configuration: one TOML file plus command-line overrides.
//!
//! ```toml
//! dataset = "data/tweets.jsonl"
//! task = 2
//! models = ["logreg", "svm", "rf"]
//! k = 5
//! seed = 42
//! out = "out"
//!
//! [train]
//! learning_rate = 0.1
//! epochs = 100
//!
//! [train.forest]
//! n_trees = 100
//!
//! [remote]
//! endpoint = "http://localhost:8080/v1/chat/completions"
//! api_key_env = "OPENAI_API_KEY"
//!
//! [emotion]
//! lexicon = "lexicon.json"
//! ```
//!
//! Relative paths in the file resolve against the file's directory. The
//! top-level seed also seeds model training.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use cryptopred::augment::ProviderConfig;
use cryptopred::corpus::Task;
use cryptopred::features::TfidfConfig;
use cryptopred::models::{ModelKind, TrainConfig};
use cryptopred::preprocess::CleanConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::GlobalArgs;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Offline,
    Remote,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BalanceSection {
    pub max_retries: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmotionSection {
    pub lexicon: Option<PathBuf>,
    pub threshold: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KappaSection {
    pub a: Option<PathBuf>,
    pub b: Option<PathBuf>,
    pub annotators: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub task: u8,
    pub models: Vec<String>,
    pub k: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub provider: Option<ProviderKind>,
    pub tag: Option<String>,
    pub train: TrainConfig,
    pub clean: CleanConfig,
    pub tfidf: TfidfConfig,
    pub remote: Option<ProviderConfig>,
    pub balance: BalanceSection,
    pub emotion: EmotionSection,
    pub kappa: KappaSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            task: 1,
            models: ModelKind::ALL
                .iter()
                .map(|m| m.as_str().to_string())
                .collect(),
            k: 5,
            seed: 42,
            out: PathBuf::from("out"),
            provider: None,
            tag: None,
            train: TrainConfig::default(),
            clean: CleanConfig::default(),
            tfidf: TfidfConfig::default(),
            remote: None,
            balance: BalanceSection::default(),
            emotion: EmotionSection::default(),
            kappa: KappaSection::default(),
        }
    }
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        resolve(&base, &mut cfg.dataset);
        resolve(&base, &mut cfg.emotion.lexicon);
        resolve(&base, &mut cfg.kappa.a);
        resolve(&base, &mut cfg.kappa.b);
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        Ok(cfg)
    }

    /// Config file (if any) with flags applied on top.
    pub fn from_args(args: &GlobalArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(d) = &args.dataset {
            cfg.dataset = Some(d.clone());
        }
        if let Some(t) = args.task {
            cfg.task = t;
        }
        if !args.models.is_empty() {
            cfg.models = args.models.iter().map(|m| m.as_str().to_string()).collect();
        }
        if let Some(k) = args.k {
            cfg.k = k;
        }
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        if let Some(o) = &args.out {
            cfg.out = o.clone();
        }
        if let Some(p) = args.provider {
            cfg.provider = Some(p);
        }
        if let Some(t) = &args.tag {
            cfg.tag = Some(t.clone());
        }
        cfg.train.seed = cfg.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.task()?;
        self.model_kinds()?;
        if self.k < 2 {
            return Err(CliError::Usage(format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        self.train.validate()?;
        self.clean.validate().map_err(CliError::Usage)?;
        if self.tfidf.min_df == 0 {
            return Err(CliError::Usage("tfidf.min_df must be at least 1".into()));
        }
        if let Some(tag) = &self.tag {
            if tag.is_empty() || tag.contains(['/', '\\']) || tag == "." || tag == ".." {
                return Err(CliError::Usage(format!("invalid tag {tag:?}")));
            }
        }
        Ok(())
    }

    pub fn task(&self) -> Result<Task> {
        Task::from_number(self.task)
            .ok_or_else(|| CliError::Usage(format!("task must be 1 or 2, got {}", self.task)))
    }

    /// Models in the configured order, without repeats.
    pub fn model_kinds(&self) -> Result<Vec<ModelKind>> {
        let mut kinds: Vec<ModelKind> = Vec::new();
        for name in &self.models {
            let kind: ModelKind = name.parse()?;
            if !kinds.contains(&kind) {
                kinds.push(kind);
            }
        }
        if kinds.is_empty() {
            return Err(CliError::Usage("no models selected".into()));
        }
        Ok(kinds)
    }

    pub fn dataset_path(&self) -> Result<&Path> {
        self.dataset.as_deref().ok_or_else(|| {
            CliError::Usage("no dataset given (use --dataset or set it in the config)".into())
        })
    }

    /// Explicit choice wins; otherwise remote only when a remote section exists.
    pub fn provider_kind(&self) -> ProviderKind {
        self.provider.unwrap_or(if self.remote.is_some() {
            ProviderKind::Remote
        } else {
            ProviderKind::Offline
        })
    }

    /// The configuration echoed into outputs. Output location and tag are
    /// left out so identical runs into different directories match.
    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("out");
            map.remove("tag");
        }
        v
    }

    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&self.echo()).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Output tag: explicit, or derived from seed and config hash.
    pub fn run_tag(&self) -> String {
        self.tag
            .clone()
            .unwrap_or_else(|| format!("seed{}-{}", self.seed, &self.hash()[..12]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_parses_with_defaults() {
        let cfg: RunConfig =
            toml::from_str("task = 2\nmodels = [\"svm\"]\n[train.forest]\nn_trees = 7\n").unwrap();
        assert_eq!(cfg.task, 2);
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.train.forest.n_trees, 7);
        assert_eq!(cfg.train.forest.max_depth, 16);
        assert_eq!(cfg.model_kinds().unwrap(), vec![ModelKind::Svm]);
    }

    #[test]
    fn unknown_key_and_model_rejected() {
        assert!(toml::from_str::<RunConfig>("taks = 2").is_err());
        let cfg = RunConfig {
            models: vec!["xgboost".into()],
            ..RunConfig::default()
        };
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("xgboost"));
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = RunConfig::default();
        let b = RunConfig {
            out: "elsewhere".into(),
            ..RunConfig::default()
        };
        let c = RunConfig {
            seed: 7,
            ..RunConfig::default()
        };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert!(a.run_tag().starts_with("seed42-"));
    }

    #[test]
    fn provider_default_follows_remote_section() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.provider_kind(), ProviderKind::Offline);
        cfg.remote = Some(ProviderConfig::default());
        assert_eq!(cfg.provider_kind(), ProviderKind::Remote);
        cfg.provider = Some(ProviderKind::Offline);
        assert_eq!(cfg.provider_kind(), ProviderKind::Offline);
    }
}
