use std::collections::BTreeMap;

use super::{EvalError, Result};
use crate::scalar::Scalar;

/// Cohen's kappa between two label sequences over the same items.
///
/// When chance agreement is 1 (both raters used a single identical label)
/// the value is 1 if they agree everywhere and an error otherwise.
pub fn cohen_kappa<L: Ord, F: Scalar>(a: &[L], b: &[L]) -> Result<F> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = F::of_usize(a.len());
    let mut marginals: BTreeMap<&L, (usize, usize)> = BTreeMap::new();
    let mut agree = 0usize;
    for (x, y) in a.iter().zip(b) {
        marginals.entry(x).or_default().0 += 1;
        marginals.entry(y).or_default().1 += 1;
        if x == y {
            agree += 1;
        }
    }
    let p0 = F::of_usize(agree) / n;
    let pe: F = marginals
        .values()
        .map(|&(ca, cb)| (F::of_usize(ca) / n) * (F::of_usize(cb) / n))
        .sum();
    if pe >= F::one() {
        return if agree == a.len() {
            Ok(F::one())
        } else {
            Err(EvalError::DegenerateKappa(p0.to_f64_lossy()))
        };
    }
    Ok((p0 - pe) / (F::one() - pe))
}
