use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{confusion, metrics, ConfusionMatrix, MetricsReport, Summary};
use super::Result;
use crate::corpus::{stratified_folds, Dataset, Task};
use crate::features::{fit_tfidf, TfidfConfig};
use crate::models::{train, ModelKind, TrainConfig};
use crate::preprocess::{preprocess, CleanConfig, TokenList};
use crate::scalar::Scalar;

/// Everything that determines a cross-validation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub task: Task,
    pub model: ModelKind,
    pub k: usize,
    /// Seed for the fold assignment. Model training uses `train.seed`.
    pub seed: u64,
    pub train: TrainConfig,
    pub clean: CleanConfig,
    pub tfidf: TfidfConfig,
}

impl CvConfig {
    pub fn new(task: Task, model: ModelKind) -> Self {
        CvConfig {
            task,
            model,
            k: 5,
            seed: 42,
            train: TrainConfig::default(),
            clean: CleanConfig::default(),
            tfidf: TfidfConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport<F> {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub vocabulary_size: usize,
    pub metrics: MetricsReport<F>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport<F> {
    pub config: CvConfig,
    pub folds: Vec<FoldReport<F>>,
    /// Metrics of the confusion matrix summed over all folds.
    pub pooled: MetricsReport<F>,
    /// Unweighted mean of the per-fold summaries.
    pub fold_mean: Summary<F>,
}

/// Stratified k-fold cross-validation. Text is cleaned once; the TF-IDF
/// model is fitted on the training folds of each split only.
pub fn cross_validate<F: Scalar>(ds: &Dataset, cfg: &CvConfig) -> Result<CvReport<F>> {
    cfg.train.validate()?;
    let folds = stratified_folds(ds, cfg.task, cfg.k, cfg.seed)?;
    let classes = cfg.task.codes();

    let mut tokens: Vec<TokenList> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    let mut fold_of: Vec<usize> = Vec::new();
    for (doc, label) in ds.labeled(cfg.task) {
        tokens.push(preprocess(&doc.text, &cfg.clean));
        labels.push(label);
        fold_of.push(
            folds
                .fold_of(&doc.id)
                .expect("every labeled document has a fold"),
        );
    }

    let run_fold = |fold: usize| -> Result<(FoldReport<F>, ConfusionMatrix)> {
        let (mut train_docs, mut train_y, mut test_docs, mut test_y) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..tokens.len() {
            if fold_of[i] == fold {
                test_docs.push(tokens[i].clone());
                test_y.push(labels[i]);
            } else {
                train_docs.push(tokens[i].clone());
                train_y.push(labels[i]);
            }
        }
        let tfidf = fit_tfidf::<F>(&train_docs, &cfg.tfidf)?;
        let x_train = tfidf.transform_all(&train_docs);
        let x_test = tfidf.transform_all(&test_docs);
        let model = train(cfg.model, &x_train, &train_y, &cfg.train)?;
        let pred = model.predict_all(&x_test)?;
        let cm = confusion(&test_y, &pred, classes)?;
        let report = FoldReport {
            fold,
            train_size: train_y.len(),
            test_size: test_y.len(),
            vocabulary_size: tfidf.dim(),
            metrics: metrics(&cm)?,
        };
        Ok((report, cm))
    };

    let results: Vec<(FoldReport<F>, ConfusionMatrix)> = (0..cfg.k)
        .into_par_iter()
        .map(run_fold)
        .collect::<Result<_>>()?;

    let mut pooled = ConfusionMatrix::zeros(classes);
    for (_, cm) in &results {
        pooled.add(cm)?;
    }
    let folds: Vec<FoldReport<F>> = results.into_iter().map(|(r, _)| r).collect();
    let summaries: Vec<Summary<F>> = folds.iter().map(|f| f.metrics.summary()).collect();
    Ok(CvReport {
        config: cfg.clone(),
        pooled: metrics(&pooled)?,
        fold_mean: Summary::mean(&summaries).expect("k >= 2 folds"),
        folds,
    })
}
