//! Predictive-statement classification for cryptocurrency tweets.
//!
//! The pipeline runs from a labeled corpus through text cleaning, TF-IDF
//! features and three classifiers (logistic regression, linear SVM, random
//! forest) to cross-validated metrics. Around it sit paraphrase-based class
//! balancing, Cohen's kappa for annotator agreement and lexicon-based
//! emotion aggregation.
//!
//! Two tasks share one document type: task 1 separates predictive from
//! non-predictive tweets, task 2 labels the direction of a prediction
//! (incremental, decremental, neutral).
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix it to `f64` unless the name says otherwise.

pub mod augment;
pub mod corpus;
pub mod emotion;
pub mod eval;
pub mod features;
pub mod models;
pub mod preprocess;
pub mod scalar;

pub use augment::{balance, compute_plan, offline_paraphrase, AugmentPlan, ParaphraseProvider};
pub use corpus::{distribution, Coin, Dataset, Document, Source, Task, Task1Label, Task2Label};
pub use emotion::{
    aggregate, load_lexicon, tag_text, EmotionCategory, EmotionLexicon, EmotionReport,
};
pub use eval::{cohen_kappa, confusion, cross_validate, metrics, ConfusionMatrix, CvConfig};
pub use features::{fit_tfidf, TfidfConfig};
pub use models::{train, ModelKind, TrainConfig};
pub use preprocess::{preprocess, CleanConfig, TokenList};
pub use scalar::Scalar;

pub type SparseVec = features::SparseVector<f64>;
pub type SparseVecF32 = features::SparseVector<f32>;
pub type Tfidf = features::TfidfModel<f64>;
pub type TfidfF32 = features::TfidfModel<f32>;
pub type Model = models::TrainedModel<f64>;
pub type ModelF32 = models::TrainedModel<f32>;
pub type LinearClassifier = models::LinearModel<f64>;
pub type RandomForest = models::ForestModel<f64>;
pub type Metrics = eval::MetricsReport<f64>;
pub type MetricsF32 = eval::MetricsReport<f32>;
pub type CvResult = eval::CvReport<f64>;
