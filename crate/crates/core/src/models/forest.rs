use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, check_training_data, ForestConfig, ModelError, Result, TrainConfig};
use crate::features::SparseVector;
use crate::scalar::Scalar;

/// Gini impurity `1 − Σ pᵢ²` of a class-count vector; 0 for an empty node.
pub fn gini<F: Scalar>(counts: &[u64]) -> F {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return F::zero();
    }
    let t = F::from_u64(total).expect("count fits scalar");
    F::one()
        - counts
            .iter()
            .map(|&c| {
                let p = F::from_u64(c).expect("count fits scalar") / t;
                p * p
            })
            .sum::<F>()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node<F> {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: F,
        left: usize,
        right: usize,
        /// Weighted Gini decrease achieved by the split.
        gain: F,
    },
    Leaf {
        /// Class frequencies in the leaf, in class order; sums to 1.
        distribution: Vec<F>,
    },
}

/// CART tree stored as a flat node list; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree<F> {
    pub nodes: Vec<Node<F>>,
}

impl<F: Scalar> DecisionTree<F> {
    pub fn leaf_distribution(&self, x: &SparseVector<F>) -> &[F] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    at = if x.get(*feature) <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                Node::Leaf { distribution } => return distribution,
            }
        }
    }

    /// Index (into the class list) of the tree's vote.
    pub fn vote(&self, x: &SparseVector<F>) -> usize {
        argmax(self.leaf_distribution(x))
    }

    pub fn depth(&self) -> usize {
        fn walk<F>(nodes: &[Node<F>], at: usize) -> usize {
            match &nodes[at] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel<F> {
    pub trees: Vec<DecisionTree<F>>,
    pub n_features: usize,
    pub classes: Vec<u8>,
    pub config: ForestConfig,
    pub seed: u64,
}

impl<F: Scalar> ForestModel<F> {
    /// Majority vote over trees; ties go to the lowest class code.
    pub fn predict(&self, x: &SparseVector<F>) -> Result<u8> {
        if x.dim() != self.n_features {
            return Err(ModelError::DimensionMismatch {
                expected: self.n_features,
                got: x.dim(),
            });
        }
        let mut votes = vec![0usize; self.classes.len()];
        for t in &self.trees {
            votes[t.vote(x)] += 1;
        }
        let mut best = 0;
        for (i, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = i;
            }
        }
        Ok(self.classes[best])
    }
}

struct Candidate<F> {
    feature: usize,
    threshold: F,
    gain: F,
}

struct TreeBuilder<'a, F> {
    x: &'a [SparseVector<F>],
    targets: &'a [usize],
    weight: Vec<u64>,
    n_classes: usize,
    cfg: &'a ForestConfig,
    per_split: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node<F>>,
}

impl<'a, F: Scalar> TreeBuilder<'a, F> {
    fn class_counts(&self, samples: &[usize]) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_classes];
        for &s in samples {
            counts[self.targets[s]] += self.weight[s];
        }
        counts
    }

    fn build(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let counts = self.class_counts(&samples);
        let total: u64 = counts.iter().sum();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let min_leaf = self.cfg.min_samples_leaf as u64;
        let split = if pure || depth >= self.cfg.max_depth || total < 2 * min_leaf {
            None
        } else {
            self.best_split(&samples, &counts)
        };

        let Some(best) = split else {
            let t = F::from_u64(total.max(1)).expect("count fits scalar");
            let distribution = counts
                .iter()
                .map(|&c| F::from_u64(c).expect("count fits scalar") / t)
                .collect();
            self.nodes.push(Node::Leaf { distribution });
            return self.nodes.len() - 1;
        };

        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&s| self.x[s].get(best.feature) <= best.threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf {
            distribution: Vec::new(),
        });
        let l = self.build(left, depth + 1);
        let r = self.build(right, depth + 1);
        self.nodes[at] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
            gain: best.gain,
        };
        at
    }

    /// Searches random batches of the features that are non-zero somewhere in
    /// the node until a batch yields a split with positive Gini decrease.
    fn best_split(&mut self, samples: &[usize], counts: &[u64]) -> Option<Candidate<F>> {
        let mut present: Vec<usize> = samples
            .iter()
            .flat_map(|&s| self.x[s].indices().iter().copied())
            .collect();
        present.sort_unstable();
        present.dedup();

        let parent = gini::<F>(counts);
        let total: u64 = counts.iter().sum();
        let mut best: Option<Candidate<F>> = None;
        let mut pos = 0;
        while pos < present.len() && best.is_none() {
            let end = (pos + self.per_split).min(present.len());
            for i in pos..end {
                let j = self.rng.random_range(i..present.len());
                present.swap(i, j);
            }
            let batch = &present[pos..end];
            let slot: HashMap<usize, usize> =
                batch.iter().enumerate().map(|(k, &f)| (f, k)).collect();
            let mut values: Vec<Vec<(F, usize, u64)>> = vec![Vec::new(); batch.len()];
            for &s in samples {
                for (f, v) in self.x[s].iter() {
                    if let Some(&k) = slot.get(&f) {
                        values[k].push((v, self.targets[s], self.weight[s]));
                    }
                }
            }
            for (k, entries) in values.into_iter().enumerate() {
                if let Some(c) = self.scan_feature(batch[k], entries, counts, total, parent) {
                    if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                        best = Some(c);
                    }
                }
            }
            pos = end;
        }
        best
    }

    fn scan_feature(
        &self,
        feature: usize,
        mut entries: Vec<(F, usize, u64)>,
        counts: &[u64],
        total: u64,
        parent: F,
    ) -> Option<Candidate<F>> {
        // Explicitly stored zeros belong to the implicit zero group.
        entries.retain(|e| !e.0.is_zero());
        entries.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));
        let mut zeros = counts.to_vec();
        for &(_, c, w) in &entries {
            zeros[c] -= w;
        }

        // Distinct values in ascending order with their class counts.
        let mut groups: Vec<(F, Vec<u64>)> = Vec::new();
        let mut zero_placed = zeros.iter().all(|&z| z == 0);
        for (v, c, w) in entries {
            if !zero_placed && v > F::zero() {
                groups.push((F::zero(), zeros.clone()));
                zero_placed = true;
            }
            match groups.last_mut() {
                Some((gv, gc)) if *gv == v => gc[c] += w,
                _ => {
                    let mut gc = vec![0u64; self.n_classes];
                    gc[c] = w;
                    groups.push((v, gc));
                }
            }
        }
        if !zero_placed {
            groups.push((F::zero(), zeros));
        }

        let min_leaf = self.cfg.min_samples_leaf as u64;
        let tf = F::from_u64(total).expect("count fits scalar");
        let eps = F::epsilon() * F::of(8.0);
        let mut left = vec![0u64; self.n_classes];
        let mut best: Option<Candidate<F>> = None;
        for g in 0..groups.len().saturating_sub(1) {
            for (l, &c) in left.iter_mut().zip(&groups[g].1) {
                *l += c;
            }
            let wl: u64 = left.iter().sum();
            let wr = total - wl;
            if wl < min_leaf || wr < min_leaf {
                continue;
            }
            let right: Vec<u64> = counts.iter().zip(&left).map(|(&a, &b)| a - b).collect();
            let fl = F::from_u64(wl).expect("count fits scalar") / tf;
            let fr = F::from_u64(wr).expect("count fits scalar") / tf;
            let gain = parent - fl * gini::<F>(&left) - fr * gini::<F>(&right);
            if gain > eps && best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(Candidate {
                    feature,
                    threshold: (groups[g].0 + groups[g + 1].0) * F::of(0.5),
                    gain,
                });
            }
        }
        best
    }
}

/// Random forest of Gini CART trees on bootstrap samples.
pub fn train_random_forest<F: Scalar>(
    x: &[SparseVector<F>],
    y: &[u8],
    cfg: &TrainConfig,
) -> Result<ForestModel<F>> {
    cfg.validate()?;
    let (dim, classes) = check_training_data(x, y)?;
    let targets: Vec<usize> = y
        .iter()
        .map(|l| classes.binary_search(l).expect("label drawn from classes"))
        .collect();
    let fc = &cfg.forest;
    let per_split = fc
        .features_per_split
        .unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize)
        .max(1);
    let n = x.len();

    let trees = (0..fc.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(t as u64);
            let mut weight = vec![0u64; n];
            if fc.bootstrap {
                for _ in 0..n {
                    weight[rng.random_range(0..n)] += 1;
                }
            } else {
                weight.iter_mut().for_each(|w| *w = 1);
            }
            let samples: Vec<usize> = (0..n).filter(|&s| weight[s] > 0).collect();
            let mut b = TreeBuilder {
                x,
                targets: &targets,
                weight,
                n_classes: classes.len(),
                cfg: fc,
                per_split,
                rng,
                nodes: Vec::new(),
            };
            b.build(samples, 0);
            DecisionTree { nodes: b.nodes }
        })
        .collect();

    Ok(ForestModel {
        trees,
        n_features: dim,
        classes,
        config: fc.clone(),
        seed: cfg.seed,
    })
}
