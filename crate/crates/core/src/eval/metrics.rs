use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EvalError, Result};
use crate::scalar::Scalar;

/// Counts of (gold, predicted) pairs; rows are gold, columns predicted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<u8>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: &[u8]) -> Self {
        ConfusionMatrix {
            classes: classes.to_vec(),
            counts: vec![vec![0; classes.len()]; classes.len()],
        }
    }

    pub fn k(&self) -> usize {
        self.classes.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    pub fn tp(&self, i: usize) -> usize {
        self.counts[i][i]
    }

    pub fn fp(&self, i: usize) -> usize {
        (0..self.k()).map(|r| self.counts[r][i]).sum::<usize>() - self.tp(i)
    }

    pub fn fn_(&self, i: usize) -> usize {
        self.counts[i].iter().sum::<usize>() - self.tp(i)
    }

    pub fn tn(&self, i: usize) -> usize {
        self.total() - self.tp(i) - self.fp(i) - self.fn_(i)
    }

    /// Gold count of class `i`.
    pub fn support(&self, i: usize) -> usize {
        self.counts[i].iter().sum()
    }

    /// Adds another matrix over the same classes.
    pub fn add(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes != self.classes {
            return Err(EvalError::ClassMismatch);
        }
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
        Ok(())
    }
}

pub fn confusion(gold: &[u8], pred: &[u8], classes: &[u8]) -> Result<ConfusionMatrix> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch(gold.len(), pred.len()));
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let index = |l: u8| {
        classes
            .iter()
            .position(|&c| c == l)
            .ok_or(EvalError::UnknownLabel(l))
    };
    let mut cm = ConfusionMatrix::zeros(classes);
    for (&g, &p) in gold.iter().zip(pred) {
        cm.counts[index(g)?][index(p)?] += 1;
    }
    Ok(cm)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics<F> {
    pub precision: F,
    pub recall: F,
    pub f1: F,
    pub support: usize,
}

/// The seven headline numbers of a results table row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary<F> {
    pub weighted_precision: F,
    pub weighted_recall: F,
    pub weighted_f1: F,
    pub macro_precision: F,
    pub macro_recall: F,
    pub macro_f1: F,
    pub accuracy: F,
}

impl<F: Scalar> Summary<F> {
    pub fn as_array(&self) -> [F; 7] {
        [
            self.weighted_precision,
            self.weighted_recall,
            self.weighted_f1,
            self.macro_precision,
            self.macro_recall,
            self.macro_f1,
            self.accuracy,
        ]
    }

    /// Element-wise mean; `None` for an empty slice.
    pub fn mean(items: &[Summary<F>]) -> Option<Summary<F>> {
        if items.is_empty() {
            return None;
        }
        let n = F::of_usize(items.len());
        let mut acc = [F::zero(); 7];
        for s in items {
            for (a, v) in acc.iter_mut().zip(s.as_array()) {
                *a += v;
            }
        }
        let [wp, wr, wf, mp, mr, mf, acc_] = acc.map(|v| v / n);
        Some(Summary {
            weighted_precision: wp,
            weighted_recall: wr,
            weighted_f1: wf,
            macro_precision: mp,
            macro_recall: mr,
            macro_f1: mf,
            accuracy: acc_,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport<F> {
    pub confusion: ConfusionMatrix,
    pub per_class: BTreeMap<u8, ClassMetrics<F>>,
    pub accuracy: F,
    pub macro_precision: F,
    pub macro_recall: F,
    pub macro_f1: F,
    pub weighted_precision: F,
    pub weighted_recall: F,
    pub weighted_f1: F,
    /// Number of classes averaged over by the macro metrics.
    pub n_classes: usize,
}

impl<F: Scalar> MetricsReport<F> {
    pub fn summary(&self) -> Summary<F> {
        Summary {
            weighted_precision: self.weighted_precision,
            weighted_recall: self.weighted_recall,
            weighted_f1: self.weighted_f1,
            macro_precision: self.macro_precision,
            macro_recall: self.macro_recall,
            macro_f1: self.macro_f1,
            accuracy: self.accuracy,
        }
    }
}

fn ratio<F: Scalar>(num: usize, den: usize) -> F {
    if den == 0 {
        F::zero()
    } else {
        F::of_usize(num) / F::of_usize(den)
    }
}

/// Support-weighted mean. Classes sharing a support are averaged first, so
/// equal supports reproduce the plain mean bit for bit.
fn weighted_mean<F: Scalar>(values: &[F], supports: &[usize], total: usize) -> F {
    let mut groups: BTreeMap<usize, (usize, F)> = BTreeMap::new();
    for (&v, &s) in values.iter().zip(supports) {
        let g = groups.entry(s).or_insert((0, F::zero()));
        g.0 += 1;
        g.1 += v;
    }
    let (mut num, mut den) = (F::zero(), F::zero());
    for (s, (n, sum)) in groups {
        let w: F = ratio(n * s, total);
        num += w * (sum / F::of_usize(n));
        den += w;
    }
    num / den
}

fn mean<F: Scalar>(values: &[F]) -> F {
    values.iter().copied().sum::<F>() / F::of_usize(values.len())
}

/// Accuracy, per-class precision/recall/F1 and their macro and
/// support-weighted averages. A zero denominator yields 0.
pub fn metrics<F: Scalar>(cm: &ConfusionMatrix) -> Result<MetricsReport<F>> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::ZeroTotal);
    }
    let k = cm.k();
    let mut per_class = BTreeMap::new();
    let (mut p, mut r, mut f, mut sup) = (vec![], vec![], vec![], vec![]);
    for (i, &label) in cm.classes.iter().enumerate() {
        let tp = cm.tp(i);
        let precision: F = ratio(tp, tp + cm.fp(i));
        let recall: F = ratio(tp, tp + cm.fn_(i));
        let f1 = if precision + recall > F::zero() {
            F::of(2.0) * precision * recall / (precision + recall)
        } else {
            F::zero()
        };
        let support = cm.support(i);
        p.push(precision);
        r.push(recall);
        f.push(f1);
        sup.push(support);
        per_class.insert(
            label,
            ClassMetrics {
                precision,
                recall,
                f1,
                support,
            },
        );
    }
    Ok(MetricsReport {
        confusion: cm.clone(),
        per_class,
        accuracy: ratio(cm.correct(), total),
        macro_precision: mean(&p),
        macro_recall: mean(&r),
        macro_f1: mean(&f),
        weighted_precision: weighted_mean(&p, &sup, total),
        weighted_recall: weighted_mean(&r, &sup, total),
        weighted_f1: weighted_mean(&f, &sup, total),
        n_classes: k,
    })
}
