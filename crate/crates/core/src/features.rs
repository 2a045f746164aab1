//! Vocabulary building and TF-IDF sparse vectors.
//!
//! idf(t) = ln((1 + N) / (1 + df(t))) + 1, tf is the raw count (or
//! `1 + ln(count)` with sublinear tf), and every transformed vector is
//! L2-normalized.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::TokenList;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot fit TF-IDF: every document is empty")]
    EmptyCorpus,
    #[error("invalid sparse vector: {0}")]
    InvalidVector(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Sparse vector: `(index, value)` pairs with strictly increasing indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "SparseRepr<F>",
    into = "SparseRepr<F>",
    bound(serialize = "F: Scalar", deserialize = "F: Scalar")
)]
pub struct SparseVector<F> {
    indices: Vec<usize>,
    values: Vec<F>,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct SparseRepr<F> {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<F>,
}

impl<F: Scalar> TryFrom<SparseRepr<F>> for SparseVector<F> {
    type Error = FeatureError;
    fn try_from(r: SparseRepr<F>) -> Result<Self, FeatureError> {
        SparseVector::new(r.dim, r.indices, r.values)
    }
}

impl<F> From<SparseVector<F>> for SparseRepr<F> {
    fn from(v: SparseVector<F>) -> Self {
        SparseRepr {
            dim: v.dim,
            indices: v.indices,
            values: v.values,
        }
    }
}

impl<F: Scalar> SparseVector<F> {
    /// Checked constructor: indices strictly increasing and `< dim`, values finite.
    pub fn new(dim: usize, indices: Vec<usize>, values: Vec<F>) -> Result<Self, FeatureError> {
        if indices.len() != values.len() {
            return Err(FeatureError::InvalidVector(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FeatureError::InvalidVector(
                "indices not strictly increasing".into(),
            ));
        }
        if let Some(&last) = indices.last() {
            if last >= dim {
                return Err(FeatureError::InvalidVector(format!(
                    "index {last} out of range for dimension {dim}"
                )));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::InvalidVector("non-finite value".into()));
        }
        Ok(SparseVector {
            indices,
            values,
            dim,
        })
    }

    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            indices: Vec::new(),
            values: Vec::new(),
            dim,
        }
    }

    /// Builds from a dense slice, keeping non-zero entries.
    pub fn from_dense(dense: &[F]) -> Result<Self, FeatureError> {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, &v)| (i, v))
            .unzip();
        SparseVector::new(dense.len(), indices, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, F)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> F {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => F::zero(),
        }
    }

    /// Dot product with a dense row. The row must be at least `dim` long.
    pub fn dot(&self, dense: &[F]) -> F {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    pub fn norm(&self) -> F {
        self.values.iter().map(|&v| v * v).sum::<F>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<F> {
        let mut out = vec![F::zero(); self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn scaled(&self, factor: F) -> Self {
        SparseVector {
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| v * factor).collect(),
            dim: self.dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    n_docs: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    n_docs: usize,
    terms: Vec<String>,
    doc_freq: Vec<usize>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        Vocabulary::from_parts(r.terms, r.doc_freq, r.n_docs)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            n_docs: v.n_docs,
            terms: v.terms,
            doc_freq: v.doc_freq,
        }
    }
}

impl Vocabulary {
    fn from_parts(terms: Vec<String>, doc_freq: Vec<usize>, n_docs: usize) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            terms,
            doc_freq,
            n_docs,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn doc_freq(&self, index: usize) -> usize {
        self.doc_freq[index]
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TfidfConfig {
    pub min_df: usize,
    /// Keep only the highest-df terms (ties broken lexicographically).
    pub max_features: Option<usize>,
    pub sublinear_tf: bool,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        TfidfConfig {
            min_df: 1,
            max_features: None,
            sublinear_tf: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel<F> {
    pub vocabulary: Vocabulary,
    pub idf: Vec<F>,
    pub config: TfidfConfig,
}

pub fn fit_tfidf<F: Scalar>(
    docs: &[TokenList],
    config: &TfidfConfig,
) -> Result<TfidfModel<F>, FeatureError> {
    if docs.iter().all(|d| d.is_empty()) {
        return Err(FeatureError::EmptyCorpus);
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = df
        .into_iter()
        .filter(|&(_, n)| n >= config.min_df)
        .collect();
    if let Some(max) = config.max_features {
        if kept.len() > max {
            kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            kept.truncate(max);
            kept.sort_by(|a, b| a.0.cmp(b.0));
        }
    }

    let n_docs = docs.len();
    let n1 = F::of_usize(n_docs + 1);
    let idf = kept
        .iter()
        .map(|&(_, n)| (n1 / F::of_usize(n + 1)).ln() + F::one())
        .collect();
    let (terms, doc_freq) = kept.into_iter().map(|(t, n)| (t.to_string(), n)).unzip();
    Ok(TfidfModel {
        vocabulary: Vocabulary::from_parts(terms, doc_freq, n_docs),
        idf,
        config: config.clone(),
    })
}

impl<F: Scalar> TfidfModel<F> {
    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    /// L2-normalized TF-IDF vector; out-of-vocabulary tokens are ignored.
    pub fn transform(&self, doc: &TokenList) -> SparseVector<F> {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for t in doc.iter() {
            if let Some(i) = self.vocabulary.index_of(t) {
                *counts.entry(i).or_default() += 1;
            }
        }
        let (indices, mut values): (Vec<usize>, Vec<F>) = counts
            .into_iter()
            .map(|(i, c)| {
                let count = F::of_usize(c);
                let tf = if self.config.sublinear_tf {
                    F::one() + count.ln()
                } else {
                    count
                };
                (i, tf * self.idf[i])
            })
            .unzip();
        let norm = values.iter().map(|&v| v * v).sum::<F>().sqrt();
        if norm > F::zero() {
            for v in &mut values {
                *v /= norm;
            }
        }
        SparseVector {
            indices,
            values,
            dim: self.dim(),
        }
    }

    pub fn transform_all(&self, docs: &[TokenList]) -> Vec<SparseVector<F>> {
        docs.iter().map(|d| self.transform(d)).collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), FeatureError> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json).map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, FeatureError> {
        let json = fs::read_to_string(path).map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&json)?)
    }
}
