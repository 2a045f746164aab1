//! Class balancing by paraphrasing minority-class documents.

mod offline;
mod remote;

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, Dataset, Document, LabelDistribution, Source, Task};

pub use offline::{offline_paraphrase, OfflineParaphraser};
pub use remote::{
    default_label_template, default_paraphrase_template, llm_label, parse_label, CompletionClient,
    HttpClient, ProviderConfig, RemoteParaphraser,
};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("label distribution is empty")]
    EmptyDistribution,
    #[error("input text is empty")]
    EmptyText,
    #[error("requested {requested} distinct variants but only {achievable} are reachable")]
    InsufficientVariants { requested: usize, achievable: usize },
    #[error("provider: {0}")]
    Provider(String),
    #[error("environment variable {0} holding the API key is not set")]
    MissingApiKey(String),
    #[error("no label code in response after {attempts} attempts (last: {last:?})")]
    Unparseable { attempts: usize, last: String },
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

pub type Result<T> = std::result::Result<T, AugmentError>;

/// Source of paraphrases. Implementations return at most `n` strings, each
/// different from `text` and from each other after [`normalize_text`].
pub trait ParaphraseProvider {
    fn paraphrase(&mut self, text: &str, n: usize, seed: u64) -> Result<Vec<String>>;
}

/// Whitespace-collapsed, lowercased form used for duplicate detection.
pub fn normalize_text(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentPlan {
    pub task: Task,
    pub target: usize,
    pub needed: BTreeMap<u8, usize>,
}

impl AugmentPlan {
    pub fn total_needed(&self) -> usize {
        self.needed.values().sum()
    }
}

/// Upsample every class to the size of the largest one.
pub fn compute_plan(dist: &LabelDistribution) -> Result<AugmentPlan> {
    if dist.total == 0 {
        return Err(AugmentError::EmptyDistribution);
    }
    let target = dist.counts.values().copied().max().unwrap_or(0);
    let needed = dist
        .counts
        .iter()
        .map(|(&label, &n)| (label, target - n))
        .collect();
    Ok(AugmentPlan {
        task: dist.task,
        target,
        needed,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BalanceConfig {
    pub seed: u64,
    /// Extra generation rounds after the first when paraphrases are rejected.
    pub max_retries: usize,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        BalanceConfig {
            seed: 42,
            max_retries: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BalanceOutcome {
    pub dataset: Dataset,
    pub plan: AugmentPlan,
    pub generated: BTreeMap<u8, usize>,
    /// Documents still missing per label when the target was not reached.
    pub shortfall: BTreeMap<u8, usize>,
}

impl BalanceOutcome {
    /// Set when some class could not be brought up to the target.
    pub fn warning(&self) -> bool {
        self.shortfall.values().any(|&n| n > 0)
    }
}

/// Appends synthetic paraphrases until every class of `task` matches the
/// largest one. Original documents are kept unchanged and in order.
///
/// Parents are the original documents of each short class, shuffled with the
/// seed and used round-robin. Paraphrases whose normalized text already
/// exists are dropped and regenerated in later rounds.
pub fn balance<P: ParaphraseProvider + ?Sized>(
    ds: &Dataset,
    task: Task,
    provider: &mut P,
    cfg: &BalanceConfig,
) -> Result<BalanceOutcome> {
    let plan = compute_plan(&crate::corpus::distribution(ds, task))?;
    let mut seen: HashSet<String> = ds
        .documents()
        .iter()
        .map(|d| normalize_text(&d.text))
        .collect();
    let mut ids: HashSet<String> = ds.documents().iter().map(|d| d.id.clone()).collect();
    let mut synthetic: Vec<Document> = Vec::new();
    let mut generated = BTreeMap::new();
    let mut shortfall = BTreeMap::new();

    for (&label, &needed) in &plan.needed {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(u64::from(label));
        let mut pool: Vec<&Document> = ds
            .labeled(task)
            .filter(|&(d, l)| l == label && d.source == Source::Original)
            .map(|(d, _)| d)
            .collect();
        pool.shuffle(&mut rng);

        let mut children = vec![0usize; pool.len()];
        let mut exhausted = vec![false; pool.len()];
        let mut remaining = needed;
        let mut cursor = 0usize;
        for _round in 0..=cfg.max_retries {
            let active: Vec<usize> = (0..pool.len()).filter(|&i| !exhausted[i]).collect();
            if remaining == 0 || active.is_empty() {
                break;
            }
            let mut quota = vec![0usize; pool.len()];
            for j in 0..remaining {
                quota[active[(cursor + j) % active.len()]] += 1;
            }
            cursor = (cursor + remaining) % active.len();

            for &p in &active {
                if quota[p] == 0 {
                    continue;
                }
                let parent = pool[p];
                let request = quota[p] + children[p];
                let candidates = provider.paraphrase(&parent.text, request, rng.next_u64())?;
                let mut accepted = 0;
                for text in candidates {
                    if accepted == quota[p] {
                        break;
                    }
                    if !seen.insert(normalize_text(&text)) {
                        continue;
                    }
                    children[p] += 1;
                    accepted += 1;
                    synthetic.push(child_of(parent, text, children[p], &mut ids));
                }
                if accepted == 0 {
                    exhausted[p] = true;
                }
                remaining -= accepted;
            }
        }
        generated.insert(label, needed - remaining);
        shortfall.insert(label, remaining);
    }

    let mut docs = ds.documents().to_vec();
    docs.extend(synthetic);
    let dataset = Dataset::new(format!("{}-balanced", ds.name()), docs, Some(cfg.seed))?;
    Ok(BalanceOutcome {
        dataset,
        plan,
        generated,
        shortfall,
    })
}

fn child_of(parent: &Document, text: String, mut n: usize, ids: &mut HashSet<String>) -> Document {
    let mut id = format!("{}-syn{n}", parent.id);
    while !ids.insert(id.clone()) {
        n += 1;
        id = format!("{}-syn{n}", parent.id);
    }
    Document {
        id,
        text,
        coin: parent.coin.clone(),
        task1: parent.task1,
        task2: parent.task2,
        source: Source::Synthetic,
        parent_id: Some(parent.id.clone()),
        annotations: Vec::new(),
    }
}
