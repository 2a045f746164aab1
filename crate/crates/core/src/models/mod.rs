//! Classifiers trained on TF-IDF vectors: multinomial logistic regression,
//! one-vs-rest linear SVM and a Gini random forest.
//!
//! Every classifier orders its classes by ascending label code and breaks
//! prediction ties toward the lowest code.

mod forest;
mod linear;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::SparseVector;
use crate::scalar::Scalar;

pub use forest::{gini, train_random_forest, DecisionTree, ForestModel, Node};
pub use linear::{
    train_logreg, train_logreg_traced, train_svm_linear, HingeObjective, LinearKind, LinearModel,
    LogRegObjective,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training data has a single class ({0}); need at least two")]
    SingleClass(u8),
    #[error("need at least 2 training samples, got {0}")]
    TooFewSamples(usize),
    #[error("{samples} samples but {labels} labels")]
    LengthMismatch { samples: usize, labels: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("operation requires a logistic regression model")]
    NotProbabilistic,
    #[error("unknown model kind {0:?} (expected logreg, svm or rf)")]
    UnknownKind(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Candidate features per split; `None` means ⌈√n_features⌉.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 16,
            min_samples_leaf: 2,
            features_per_split: None,
            bootstrap: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
    pub forest: ForestConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 100,
            l2: 1e-4,
            seed: 42,
            forest: ForestConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be non-negative");
        }
        let f = &self.forest;
        if f.n_trees == 0 || f.max_depth == 0 || f.min_samples_leaf == 0 {
            return bad("forest n_trees, max_depth and min_samples_leaf must be positive");
        }
        if f.features_per_split == Some(0) {
            return bad("features_per_split must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "logreg")]
    LogReg,
    #[serde(rename = "svm")]
    Svm,
    #[serde(rename = "rf")]
    RandomForest,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::LogReg, ModelKind::Svm, ModelKind::RandomForest];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::LogReg => "logreg",
            ModelKind::Svm => "svm",
            ModelKind::RandomForest => "rf",
        }
    }

    /// Name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::LogReg => "Logistic Regression",
            ModelKind::Svm => "SVM (Linear)",
            ModelKind::RandomForest => "Random Forest",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logreg" | "lr" | "logistic" => Ok(ModelKind::LogReg),
            "svm" | "svm-linear" | "linear-svm" => Ok(ModelKind::Svm),
            "rf" | "forest" | "random-forest" => Ok(ModelKind::RandomForest),
            _ => Err(ModelError::UnknownKind(s.to_string())),
        }
    }
}

/// Any trained classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainedModel<F> {
    Linear(LinearModel<F>),
    Forest(ForestModel<F>),
}

impl<F: Scalar> TrainedModel<F> {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Linear(m) => match m.kind {
                LinearKind::LogReg => ModelKind::LogReg,
                LinearKind::SvmLinear => ModelKind::Svm,
            },
            TrainedModel::Forest(_) => ModelKind::RandomForest,
        }
    }

    pub fn classes(&self) -> &[u8] {
        match self {
            TrainedModel::Linear(m) => &m.classes,
            TrainedModel::Forest(m) => &m.classes,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Linear(m) => m.n_features(),
            TrainedModel::Forest(m) => m.n_features,
        }
    }

    pub fn predict(&self, x: &SparseVector<F>) -> Result<u8> {
        match self {
            TrainedModel::Linear(m) => m.predict(x),
            TrainedModel::Forest(m) => m.predict(x),
        }
    }

    pub fn predict_all(&self, xs: &[SparseVector<F>]) -> Result<Vec<u8>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

pub fn train<F: Scalar>(
    kind: ModelKind,
    x: &[SparseVector<F>],
    y: &[u8],
    cfg: &TrainConfig,
) -> Result<TrainedModel<F>> {
    Ok(match kind {
        ModelKind::LogReg => TrainedModel::Linear(train_logreg(x, y, cfg)?),
        ModelKind::Svm => TrainedModel::Linear(train_svm_linear(x, y, cfg)?),
        ModelKind::RandomForest => TrainedModel::Forest(train_random_forest(x, y, cfg)?),
    })
}

/// On-disk form of a trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile<F> {
    pub kind: ModelKind,
    pub n_features: usize,
    pub classes: Vec<u8>,
    pub config: TrainConfig,
    pub seed: u64,
    pub model: TrainedModel<F>,
}

impl<F: Scalar> ModelFile<F> {
    pub fn new(model: TrainedModel<F>, config: &TrainConfig) -> Self {
        ModelFile {
            kind: model.kind(),
            n_features: model.n_features(),
            classes: model.classes().to_vec(),
            config: config.clone(),
            seed: config.seed,
            model,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&json)?)
    }
}

/// Shared input checks. Returns the feature dimension and the sorted class codes.
fn check_training_data<F: Scalar>(x: &[SparseVector<F>], y: &[u8]) -> Result<(usize, Vec<u8>)> {
    if x.len() != y.len() {
        return Err(ModelError::LengthMismatch {
            samples: x.len(),
            labels: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(ModelError::TooFewSamples(x.len()));
    }
    let dim = x[0].dim();
    if let Some(bad) = x.iter().find(|v| v.dim() != dim) {
        return Err(ModelError::DimensionMismatch {
            expected: dim,
            got: bad.dim(),
        });
    }
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(ModelError::SingleClass(classes[0]));
    }
    Ok((dim, classes))
}

/// Index of the first maximum, i.e. the lowest class code among ties.
fn argmax<F: Scalar>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let mut c = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
        c.learning_rate = 0.1;
        c.l2 = -1.0;
        assert!(c.validate().is_err());
        c.l2 = 0.0;
        c.forest.n_trees = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("logreg".parse::<ModelKind>().unwrap(), ModelKind::LogReg);
        assert_eq!("RF".parse::<ModelKind>().unwrap(), ModelKind::RandomForest);
        let err = "xgboost".parse::<ModelKind>().unwrap_err();
        assert!(err.to_string().contains("xgboost"));
    }

    #[test]
    fn input_errors() {
        let x = vec![SparseVector::<f64>::zeros(2), SparseVector::zeros(2)];
        assert!(matches!(
            check_training_data(&x, &[1, 1]),
            Err(ModelError::SingleClass(1))
        ));
        assert!(matches!(
            check_training_data(&x, &[1]),
            Err(ModelError::LengthMismatch { .. })
        ));
        let mixed = vec![SparseVector::<f64>::zeros(2), SparseVector::zeros(3)];
        assert!(matches!(
            check_training_data(&mixed, &[0, 1]),
            Err(ModelError::DimensionMismatch {
                expected: 2,
                got: 3
            })
        ));
        assert!(matches!(
            check_training_data(&x[..1], &[0]),
            Err(ModelError::TooFewSamples(1))
        ));
    }

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax(&[1.0, 1.0, 0.5]), 0);
        assert_eq!(argmax(&[0.0, 2.0, 2.0]), 1);
    }
}
