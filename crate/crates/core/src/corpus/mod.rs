//! Dataset schema, validation, label distributions and stratified folds.

mod folds;
mod io;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use folds::{stratified_folds, FoldAssignment};
pub use io::{jsonl_with_meta, load_dataset, save_dataset, DataFormat};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown label code {code} for {field}")]
    UnknownLabel {
        line: usize,
        field: &'static str,
        code: i64,
    },
    #[error("document {id}: {reason}")]
    Invariant { id: String, reason: String },
    #[error("duplicate document id {0}")]
    DuplicateId(String),
    #[error("fold count k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("label {label} has {count} labeled documents, fewer than k={k}")]
    TooFewMembers { label: u8, count: usize, k: usize },
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// Which of the two classification tasks a label belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    /// Predictive vs. non-predictive.
    Task1,
    /// Direction of a predictive statement.
    Task2,
}

impl Task {
    /// Every label code of the task, ascending.
    pub fn codes(self) -> &'static [u8] {
        match self {
            Task::Task1 => &[0, 1],
            Task::Task2 => &[1, 2, 3],
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Task::Task1 => 1,
            Task::Task2 => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Task> {
        match n {
            1 => Some(Task::Task1),
            2 => Some(Task::Task2),
            _ => None,
        }
    }

    /// Report name of a label code, e.g. `"Predictive Neutral"`.
    pub fn label_name(self, code: u8) -> String {
        match self {
            Task::Task1 => Task1Label::try_from(code)
                .map(|l| l.name().to_string())
                .unwrap_or_else(|_| format!("label {code}")),
            Task::Task2 => Task2Label::try_from(code)
                .map(|l| format!("Predictive {}", l.name()))
                .unwrap_or_else(|_| format!("label {code}")),
        }
    }

    pub fn is_valid_code(self, code: i64) -> bool {
        self.codes().iter().any(|&c| i64::from(c) == code)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Task {}", self.number())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Task1Label {
    NonPredictive = 0,
    Predictive = 1,
}

impl Task1Label {
    pub fn name(self) -> &'static str {
        match self {
            Task1Label::NonPredictive => "Non-Predictive",
            Task1Label::Predictive => "Predictive",
        }
    }
}

impl TryFrom<u8> for Task1Label {
    type Error = String;
    fn try_from(code: u8) -> std::result::Result<Self, String> {
        match code {
            0 => Ok(Task1Label::NonPredictive),
            1 => Ok(Task1Label::Predictive),
            other => Err(format!("unknown task1 label code {other}")),
        }
    }
}

impl From<Task1Label> for u8 {
    fn from(l: Task1Label) -> u8 {
        l as u8
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Task2Label {
    Incremental = 1,
    Decremental = 2,
    Neutral = 3,
}

impl Task2Label {
    pub const ALL: [Task2Label; 3] = [
        Task2Label::Incremental,
        Task2Label::Decremental,
        Task2Label::Neutral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task2Label::Incremental => "Incremental",
            Task2Label::Decremental => "Decremental",
            Task2Label::Neutral => "Neutral",
        }
    }
}

impl TryFrom<u8> for Task2Label {
    type Error = String;
    fn try_from(code: u8) -> std::result::Result<Self, String> {
        match code {
            1 => Ok(Task2Label::Incremental),
            2 => Ok(Task2Label::Decremental),
            3 => Ok(Task2Label::Neutral),
            other => Err(format!("unknown task2 label code {other}")),
        }
    }
}

impl From<Task2Label> for u8 {
    fn from(l: Task2Label) -> u8 {
        l as u8
    }
}

/// Coin a tweet is about. Anything outside the five tracked coins is `Other`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum Coin {
    Bnb,
    Matic,
    Ada,
    Ftm,
    Xrp,
    Other(String),
}

impl Coin {
    /// Tracked coins in report order.
    pub const TRACKED: [Coin; 5] = [Coin::Bnb, Coin::Matic, Coin::Ada, Coin::Ftm, Coin::Xrp];

    pub fn symbol(&self) -> &str {
        match self {
            Coin::Bnb => "BNB",
            Coin::Matic => "MATIC",
            Coin::Ada => "ADA",
            Coin::Ftm => "FTM",
            Coin::Xrp => "XRP",
            Coin::Other(s) => s,
        }
    }
}

impl From<String> for Coin {
    fn from(s: String) -> Coin {
        match s.to_ascii_uppercase().as_str() {
            "BNB" => Coin::Bnb,
            "MATIC" => Coin::Matic,
            "ADA" => Coin::Ada,
            "FTM" => Coin::Ftm,
            "XRP" => Coin::Xrp,
            _ => Coin::Other(s),
        }
    }
}

impl From<Coin> for String {
    fn from(c: Coin) -> String {
        c.symbol().to_string()
    }
}

impl fmt::Display for Coin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    #[default]
    Original,
    Synthetic,
}

/// One label assigned by one annotator (human or model).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub annotator: String,
    pub task: u8,
    pub label: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub coin: Option<Coin>,
    pub task1: Option<Task1Label>,
    pub task2: Option<Task2Label>,
    pub source: Source,
    pub parent_id: Option<String>,
    #[serde(default)]
    pub annotations: Vec<Annotation>,
}

impl Document {
    /// Unlabeled original document.
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            coin: None,
            task1: None,
            task2: None,
            source: Source::Original,
            parent_id: None,
            annotations: Vec::new(),
        }
    }

    pub fn with_task1(mut self, l: Task1Label) -> Self {
        self.task1 = Some(l);
        self
    }

    /// Sets the direction label; also marks the document predictive.
    pub fn with_task2(mut self, l: Task2Label) -> Self {
        self.task1 = Some(Task1Label::Predictive);
        self.task2 = Some(l);
        self
    }

    pub fn with_coin(mut self, c: Coin) -> Self {
        self.coin = Some(c);
        self
    }

    /// Label code for `task`, if the document carries one.
    pub fn label(&self, task: Task) -> Option<u8> {
        match task {
            Task::Task1 => self.task1.map(u8::from),
            Task::Task2 => self.task2.map(u8::from),
        }
    }

    /// Checks the document-local invariants.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(CorpusError::Invariant {
                id: self.id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.id.is_empty() {
            return fail("empty id");
        }
        if self.text.trim().is_empty() {
            return fail("empty text");
        }
        if self.task2.is_some() && self.task1 != Some(Task1Label::Predictive) {
            return fail("task2 label present but task1 is not Predictive");
        }
        if self.source == Source::Synthetic && self.parent_id.is_none() {
            return fail("synthetic document without parent_id");
        }
        for a in &self.annotations {
            let Some(task) = Task::from_number(a.task) else {
                return fail(&format!("annotation task {} is not 1 or 2", a.task));
            };
            if !task.is_valid_code(i64::from(a.label)) {
                return fail(&format!(
                    "annotation by {} has unknown label code {} for task {}",
                    a.annotator, a.label, a.task
                ));
            }
        }
        Ok(())
    }
}

/// A validated, immutable collection of documents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    documents: Vec<Document>,
    name: String,
    seed: Option<u64>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        documents: Vec<Document>,
        seed: Option<u64>,
    ) -> Result<Self> {
        let mut by_id: HashMap<&str, &Document> = HashMap::with_capacity(documents.len());
        for d in &documents {
            d.validate()?;
            if by_id.insert(d.id.as_str(), d).is_some() {
                return Err(CorpusError::DuplicateId(d.id.clone()));
            }
        }
        for d in documents.iter().filter(|d| d.source == Source::Synthetic) {
            let parent = d.parent_id.as_deref().unwrap_or_default();
            match by_id.get(parent) {
                Some(p) if p.source == Source::Original => {}
                Some(_) => {
                    return Err(CorpusError::Invariant {
                        id: d.id.clone(),
                        reason: format!("parent {parent} is not an original document"),
                    })
                }
                None => {
                    return Err(CorpusError::Invariant {
                        id: d.id.clone(),
                        reason: format!("parent {parent} not found"),
                    })
                }
            }
        }
        Ok(Dataset {
            documents,
            name: name.into(),
            seed,
        })
    }

    pub fn empty(name: impl Into<String>) -> Self {
        Dataset {
            documents: Vec::new(),
            name: name.into(),
            seed: None,
        }
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Seed of the run that produced this dataset, if any.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    /// Documents carrying a label for `task`, in dataset order.
    pub fn labeled(&self, task: Task) -> impl Iterator<Item = (&Document, u8)> {
        self.documents
            .iter()
            .filter_map(move |d| d.label(task).map(|l| (d, l)))
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.documents
    }
}

/// Per-label document counts for one task.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub task: Task,
    pub counts: BTreeMap<u8, usize>,
    pub total: usize,
}

impl LabelDistribution {
    /// Builds a distribution from explicit counts; labels not given count 0.
    pub fn from_counts(task: Task, counts: &[(u8, usize)]) -> Self {
        let mut map: BTreeMap<u8, usize> = task.codes().iter().map(|&c| (c, 0)).collect();
        for &(label, n) in counts {
            *map.entry(label).or_default() += n;
        }
        let total = map.values().sum();
        LabelDistribution {
            task,
            counts: map,
            total,
        }
    }

    pub fn count(&self, label: u8) -> usize {
        self.counts.get(&label).copied().unwrap_or(0)
    }
}

pub fn distribution(ds: &Dataset, task: Task) -> LabelDistribution {
    let mut counts: BTreeMap<u8, usize> = task.codes().iter().map(|&c| (c, 0)).collect();
    for (_, label) in ds.labeled(task) {
        *counts.entry(label).or_default() += 1;
    }
    let total = counts.values().sum();
    LabelDistribution {
        task,
        counts,
        total,
    }
}
