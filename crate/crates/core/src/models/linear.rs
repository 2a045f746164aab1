use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, check_training_data, ModelError, Result, TrainConfig};
use crate::features::SparseVector;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinearKind {
    LogReg,
    SvmLinear,
}

/// Dense per-class weight rows over sparse inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel<F> {
    pub kind: LinearKind,
    /// `classes.len()` rows of `n_features` weights.
    pub weights: Vec<Vec<F>>,
    pub bias: Vec<F>,
    pub classes: Vec<u8>,
}

impl<F: Scalar> LinearModel<F> {
    pub fn zeros(kind: LinearKind, classes: Vec<u8>, n_features: usize) -> Self {
        LinearModel {
            kind,
            weights: vec![vec![F::zero(); n_features]; classes.len()],
            bias: vec![F::zero(); classes.len()],
            classes,
        }
    }

    pub fn n_features(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    fn check_dim(&self, x: &SparseVector<F>) -> Result<()> {
        if x.dim() != self.n_features() {
            return Err(ModelError::DimensionMismatch {
                expected: self.n_features(),
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// Per-class scores `w_c · x + b_c`.
    pub fn scores(&self, x: &SparseVector<F>) -> Result<Vec<F>> {
        self.check_dim(x)?;
        Ok(self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, &b)| x.dot(w) + b)
            .collect())
    }

    /// Softmax class probabilities, in `classes` order.
    pub fn predict_proba(&self, x: &SparseVector<F>) -> Result<Vec<F>> {
        if self.kind != LinearKind::LogReg {
            return Err(ModelError::NotProbabilistic);
        }
        Ok(softmax(&self.scores(x)?))
    }

    pub fn predict(&self, x: &SparseVector<F>) -> Result<u8> {
        let s = self.scores(x)?;
        Ok(self.classes[argmax(&s)])
    }
}

pub(crate) fn softmax<F: Scalar>(scores: &[F]) -> Vec<F> {
    let max = scores.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: F = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn class_indices(y: &[u8], classes: &[u8]) -> Vec<usize> {
    y.iter()
        .map(|l| classes.binary_search(l).expect("label drawn from classes"))
        .collect()
}

/// Mean cross-entropy of a softmax model plus `(l2/2)‖W‖²`. The bias is not
/// regularized.
pub struct LogRegObjective<'a, F> {
    x: &'a [SparseVector<F>],
    targets: Vec<usize>,
    n_classes: usize,
    l2: F,
}

impl<'a, F: Scalar> LogRegObjective<'a, F> {
    pub fn new(x: &'a [SparseVector<F>], y: &[u8], classes: &[u8], l2: F) -> Self {
        LogRegObjective {
            x,
            targets: class_indices(y, classes),
            n_classes: classes.len(),
            l2,
        }
    }

    fn scores(&self, w: &[Vec<F>], b: &[F], x: &SparseVector<F>) -> Vec<F> {
        (0..self.n_classes).map(|c| x.dot(&w[c]) + b[c]).collect()
    }

    pub fn value(&self, w: &[Vec<F>], b: &[F]) -> F {
        let n = F::of_usize(self.x.len());
        let mut data = F::zero();
        for (x, &t) in self.x.iter().zip(&self.targets) {
            let s = self.scores(w, b, x);
            let max = s.iter().copied().fold(F::neg_infinity(), F::max);
            let lse = max + s.iter().map(|&v| (v - max).exp()).sum::<F>().ln();
            data += lse - s[t];
        }
        let reg: F = w.iter().flatten().map(|&v| v * v).sum();
        data / n + self.l2 * F::of(0.5) * reg
    }

    pub fn gradient(&self, w: &[Vec<F>], b: &[F]) -> (Vec<Vec<F>>, Vec<F>) {
        let n = F::of_usize(self.x.len());
        let mut gw: Vec<Vec<F>> = w.iter().map(|row| vec![F::zero(); row.len()]).collect();
        let mut gb = vec![F::zero(); self.n_classes];
        for (x, &t) in self.x.iter().zip(&self.targets) {
            let p = softmax(&self.scores(w, b, x));
            for c in 0..self.n_classes {
                let mut r = p[c];
                if c == t {
                    r -= F::one();
                }
                let r = r / n;
                gb[c] += r;
                for (i, v) in x.iter() {
                    gw[c][i] += r * v;
                }
            }
        }
        for (grow, wrow) in gw.iter_mut().zip(w) {
            for (g, &v) in grow.iter_mut().zip(wrow) {
                *g += self.l2 * v;
            }
        }
        (gw, gb)
    }
}

/// Multinomial logistic regression by full-batch gradient descent from zero.
pub fn train_logreg<F: Scalar>(
    x: &[SparseVector<F>],
    y: &[u8],
    cfg: &TrainConfig,
) -> Result<LinearModel<F>> {
    train_logreg_traced(x, y, cfg).map(|(m, _)| m)
}

/// Like [`train_logreg`], also returning the objective before training and
/// after each accepted epoch.
///
/// A step that would raise the objective is retried with half the learning
/// rate; the reduced rate is kept for later epochs. Training stops early if
/// no step size below the starting rate decreases the objective.
pub fn train_logreg_traced<F: Scalar>(
    x: &[SparseVector<F>],
    y: &[u8],
    cfg: &TrainConfig,
) -> Result<(LinearModel<F>, Vec<F>)> {
    cfg.validate()?;
    let (dim, classes) = check_training_data(x, y)?;
    let objective = LogRegObjective::new(x, y, &classes, F::of(cfg.l2));
    let mut model = LinearModel::zeros(LinearKind::LogReg, classes, dim);
    let mut loss = objective.value(&model.weights, &model.bias);
    let mut history = vec![loss];
    let mut lr = F::of(cfg.learning_rate);

    'epochs: for _ in 0..cfg.epochs {
        let (gw, gb) = objective.gradient(&model.weights, &model.bias);
        for _ in 0..60 {
            let w: Vec<Vec<F>> = model
                .weights
                .iter()
                .zip(&gw)
                .map(|(row, grow)| row.iter().zip(grow).map(|(&v, &g)| v - lr * g).collect())
                .collect();
            let b: Vec<F> = model
                .bias
                .iter()
                .zip(&gb)
                .map(|(&v, &g)| v - lr * g)
                .collect();
            let candidate = objective.value(&w, &b);
            if candidate <= loss {
                model.weights = w;
                model.bias = b;
                loss = candidate;
                history.push(loss);
                continue 'epochs;
            }
            lr *= F::of(0.5);
        }
        break;
    }
    Ok((model, history))
}

/// Sum over classes of the one-vs-rest objective
/// `(l2/2)(‖w_c‖² + b_c²) + mean_i max(0, 1 − t_ic (w_c·x_i + b_c))` with
/// `t_ic = ±1`. The bias is regularized like a constant feature.
pub struct HingeObjective<'a, F> {
    x: &'a [SparseVector<F>],
    targets: Vec<usize>,
    n_classes: usize,
    l2: F,
}

impl<'a, F: Scalar> HingeObjective<'a, F> {
    pub fn new(x: &'a [SparseVector<F>], y: &[u8], classes: &[u8], l2: F) -> Self {
        HingeObjective {
            x,
            targets: class_indices(y, classes),
            n_classes: classes.len(),
            l2,
        }
    }

    fn sign(&self, sample: usize, class: usize) -> F {
        if self.targets[sample] == class {
            F::one()
        } else {
            -F::one()
        }
    }

    /// Smallest `|t·(w·x + b) − 1|` over all samples and classes.
    pub fn min_kink_distance(&self, w: &[Vec<F>], b: &[F]) -> F {
        let mut best = F::infinity();
        for (i, x) in self.x.iter().enumerate() {
            for c in 0..self.n_classes {
                let m = self.sign(i, c) * (x.dot(&w[c]) + b[c]);
                best = best.min((m - F::one()).abs());
            }
        }
        best
    }

    pub fn value(&self, w: &[Vec<F>], b: &[F]) -> F {
        let n = F::of_usize(self.x.len());
        let mut total = F::zero();
        for c in 0..self.n_classes {
            let reg: F = w[c].iter().map(|&v| v * v).sum::<F>() + b[c] * b[c];
            let mut hinge = F::zero();
            for (i, x) in self.x.iter().enumerate() {
                let m = self.sign(i, c) * (x.dot(&w[c]) + b[c]);
                hinge += (F::one() - m).max(F::zero());
            }
            total += self.l2 * F::of(0.5) * reg + hinge / n;
        }
        total
    }

    /// Subgradient; a sample with margin ≥ 1 contributes nothing.
    pub fn gradient(&self, w: &[Vec<F>], b: &[F]) -> (Vec<Vec<F>>, Vec<F>) {
        let n = F::of_usize(self.x.len());
        let mut gw: Vec<Vec<F>> = w
            .iter()
            .map(|row| row.iter().map(|&v| self.l2 * v).collect())
            .collect();
        let mut gb: Vec<F> = b.iter().map(|&v| self.l2 * v).collect();
        for c in 0..self.n_classes {
            for (i, x) in self.x.iter().enumerate() {
                let t = self.sign(i, c);
                if t * (x.dot(&w[c]) + b[c]) < F::one() {
                    gb[c] -= t / n;
                    for (j, v) in x.iter() {
                        gw[c][j] -= t * v / n;
                    }
                }
            }
        }
        (gw, gb)
    }
}

/// One-vs-rest linear SVM trained by Pegasos-style SGD with step `1/(l2·t)`.
///
/// Each class runs `epochs` shuffled passes over the data. With `l2 = 0` the
/// step falls back to `learning_rate/√t`.
pub fn train_svm_linear<F: Scalar>(
    x: &[SparseVector<F>],
    y: &[u8],
    cfg: &TrainConfig,
) -> Result<LinearModel<F>> {
    cfg.validate()?;
    let (dim, classes) = check_training_data(x, y)?;
    let targets = class_indices(y, &classes);
    let mut model = LinearModel::zeros(LinearKind::SvmLinear, classes, dim);
    let lambda = F::of(cfg.l2);
    let lr = F::of(cfg.learning_rate);

    for c in 0..model.classes.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(c as u64);
        // w = scale · v keeps the shrink step O(1) on sparse inputs.
        let mut v = vec![F::zero(); dim];
        let mut vb = F::zero();
        let mut scale = F::one();
        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut t = 0usize;
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let sign = if targets[i] == c { F::one() } else { -F::one() };
                let margin = sign * scale * (x[i].dot(&v) + vb);
                let eta = if lambda > F::zero() {
                    F::one() / (lambda * F::of_usize(t))
                } else {
                    lr / F::of_usize(t).sqrt()
                };
                let shrink = F::one() - eta * lambda;
                if shrink <= F::zero() {
                    v.iter_mut().for_each(|w| *w = F::zero());
                    vb = F::zero();
                    scale = F::one();
                } else {
                    scale *= shrink;
                }
                if margin < F::one() {
                    let step = eta * sign / scale;
                    for (j, val) in x[i].iter() {
                        v[j] += step * val;
                    }
                    vb += step;
                }
                if scale < F::of(1e-9) {
                    v.iter_mut().for_each(|w| *w *= scale);
                    vb *= scale;
                    scale = F::one();
                }
            }
        }
        model.weights[c] = v.into_iter().map(|w| w * scale).collect();
        model.bias[c] = vb * scale;
    }
    Ok(model)
}
