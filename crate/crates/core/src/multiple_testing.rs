//! Holm step-down procedure for family-wise error control.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An unordered pair of stock indices stored as `(low, high)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StockPair(usize, usize);

impl StockPair {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::domain(format!("self-loop pair ({a}, {a})")));
        }
        Ok(StockPair(a.min(b), a.max(b)))
    }

    pub fn low(&self) -> usize {
        self.0
    }

    pub fn high(&self) -> usize {
        self.1
    }
}

/// All `C(p, 2)` pairs in lexicographic order.
pub fn all_pairs(p: usize) -> Vec<StockPair> {
    (0..p)
        .flat_map(|i| (i + 1..p).map(move |j| StockPair(i, j)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolmStep<K> {
    pub hypothesis: K,
    pub p_value: f64,
    pub threshold: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolmOutcome<K> {
    /// Rejected hypotheses in the order they were rejected.
    pub rejected: Vec<K>,
    /// Accepted hypotheses in ascending `(p, key)` order.
    pub accepted: Vec<K>,
    /// One entry per executed step; a trailing non-rejecting step accepts
    /// every remaining hypothesis.
    pub steps: Vec<HolmStep<K>>,
    pub alpha: f64,
}

impl<K> HolmOutcome<K> {
    pub fn n_hypotheses(&self) -> usize {
        self.rejected.len() + self.accepted.len()
    }

    pub fn any_rejected(&self) -> bool {
        !self.rejected.is_empty()
    }
}

/// Holm step-down at FWER `alpha`.
///
/// At step `K` (1-based) the smallest remaining p-value is rejected if it is
/// strictly below `alpha / (M - K + 1)`; otherwise every remaining hypothesis
/// is accepted. Equal p-values are visited in key order.
pub fn holm<K: Ord + Clone>(p_values: &BTreeMap<K, f64>, alpha: f64) -> Result<HolmOutcome<K>> {
    if p_values.is_empty() {
        return Err(Error::domain("holm: no hypotheses"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("holm: alpha = {alpha} is not in (0, 1)")));
    }
    if let Some((_, bad)) = p_values.iter().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return Err(Error::domain(format!("holm: p-value {bad} is not in [0, 1]")));
    }

    // BTreeMap iteration is already in key order, and the sort is stable.
    let mut order: Vec<(&K, f64)> = p_values.iter().map(|(k, &p)| (k, p)).collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1));

    let total = order.len();
    let mut rejected = Vec::new();
    let mut steps = Vec::new();
    let mut cut = total;
    for (idx, &(key, p)) in order.iter().enumerate() {
        let threshold = alpha / (total - idx) as f64;
        let reject = p < threshold;
        steps.push(HolmStep {
            hypothesis: key.clone(),
            p_value: p,
            threshold,
            rejected: reject,
        });
        if !reject {
            cut = idx;
            break;
        }
        rejected.push(key.clone());
    }
    let accepted = order[cut.min(total)..]
        .iter()
        .map(|(k, _)| (*k).clone())
        .collect();

    Ok(HolmOutcome {
        rejected,
        accepted,
        steps,
        alpha,
    })
}
