//! Exact combinatorial primitives: log binomial coefficients and
//! hypergeometric / binomial tail probabilities.
//!
//! Every probability is assembled from log-space terms. Tails are summed in
//! linear space relative to the largest term with Neumaier compensation, and
//! whichever side of the distribution carries less mass is summed directly
//! while the other side is obtained as its complement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A probability together with its natural logarithm.
///
/// `log_value` stays meaningful when `value` underflows to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailProbability {
    value: f64,
    log_value: f64,
}

impl TailProbability {
    pub const ZERO: TailProbability = TailProbability {
        value: 0.0,
        log_value: f64::NEG_INFINITY,
    };

    pub const ONE: TailProbability = TailProbability {
        value: 1.0,
        log_value: 0.0,
    };

    pub fn from_log(log_value: f64) -> Self {
        let log_value = log_value.min(0.0);
        TailProbability {
            value: log_value.exp(),
            log_value,
        }
    }

    fn from_value(value: f64) -> Self {
        let value = value.clamp(0.0, 1.0);
        TailProbability {
            value,
            log_value: value.ln(),
        }
    }

    /// `1 - x` for a probability `x`, keeping precision when `x` is small.
    fn complement_of(x: f64) -> Self {
        let x = x.clamp(0.0, 1.0);
        TailProbability::from_log((-x).ln_1p())
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn log_value(&self) -> f64 {
        self.log_value
    }
}

/// `ln C(n, k)`.
///
/// Small coefficients are computed exactly in integer arithmetic. Larger ones
/// use a sum of logs when `min(k, n-k)` is small and otherwise the
/// Stirling-series deviance form, which avoids the cancellation a plain
/// `lgamma` difference suffers for large `n`.
pub fn log_choose(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::domain(format!("log_choose: k = {k} exceeds n = {n}")));
    }
    Ok(ln_choose(n, k))
}

pub(crate) fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    if k == 0 {
        return 0.0;
    }
    if let Some(exact) = exact_choose(n, k) {
        return (exact as f64).ln();
    }
    if k < 16 {
        let base = (n - k) as f64;
        return (1..=k)
            .map(|j| (base + j as f64).ln() - (j as f64).ln())
            .sum();
    }
    // n! = exp(stirlerr(n)) (n/e)^n sqrt(2 pi n), so the large factors collapse
    // into two non-negative entropy-like terms.
    let nf = n as f64;
    let kf = k as f64;
    let jf = (n - k) as f64;
    let frac = kf / nf;
    let entropy = -kf * frac.ln() - jf * (-frac).ln_1p();
    let prefactor = 0.5 * (nf / (2.0 * std::f64::consts::PI * kf * jf)).ln();
    entropy + prefactor + stirlerr(nf) - stirlerr(kf) - stirlerr(jf)
}

/// Exact `C(n, k)` when it and every intermediate product fit in `u128`.
fn exact_choose(n: u64, k: u64) -> Option<u128> {
    let mut acc: u128 = 1;
    let base = (n - k) as u128;
    for j in 1..=k as u128 {
        acc = acc.checked_mul(base + j)? / j;
    }
    Some(acc)
}

/// `ln n! - [(n + 1/2) ln n - n + ln sqrt(2 pi)]` for `n >= 16`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let nn = n * n;
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}

/// Running sums with Neumaier compensation.
fn compensated_prefix_sums(terms: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    terms
        .map(|x| {
            let t = sum + x;
            if sum.abs() >= x.abs() {
                comp += (sum - t) + x;
            } else {
                comp += (x - t) + sum;
            }
            sum = t;
            sum + comp
        })
        .collect()
}

/// Tail machinery shared by the finite discrete laws in this module.
///
/// Holds the support `lo..=hi`, the pmf in both log and linear form, and
/// compensated cumulative sums of the linear pmf in both directions.
#[derive(Debug, Clone)]
struct DiscreteTails {
    lo: i64,
    hi: i64,
    log_pmf: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl DiscreteTails {
    fn new(lo: i64, log_pmf: Vec<f64>, pmf: Vec<f64>) -> Self {
        debug_assert_eq!(log_pmf.len(), pmf.len());
        let hi = lo + log_pmf.len() as i64 - 1;
        let left = compensated_prefix_sums(pmf.iter().copied());
        let mut right = compensated_prefix_sums(pmf.iter().rev().copied());
        right.reverse();
        DiscreteTails {
            lo,
            hi,
            log_pmf,
            left,
            right,
        }
    }

    fn from_log(lo: i64, log_pmf: Vec<f64>) -> Self {
        let pmf = log_pmf.iter().map(|l| l.exp()).collect();
        Self::new(lo, log_pmf, pmf)
    }

    fn pmf(&self, i: i64) -> TailProbability {
        if i < self.lo || i > self.hi {
            return TailProbability::ZERO;
        }
        TailProbability::from_log(self.log_pmf[(i - self.lo) as usize])
    }

    /// Tail from a partial sum over `terms`. Falls back to a log-sum-exp
    /// when the terms underflow in linear space.
    fn direct(&self, sum: f64, terms: &[f64]) -> TailProbability {
        if sum > 1e-290 {
            return TailProbability::from_value(sum);
        }
        let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return TailProbability::ZERO;
        }
        let rest: f64 = terms.iter().map(|l| (l - top).exp()).sum();
        TailProbability::from_log(top + rest.ln())
    }

    /// `P(X <= c)`.
    fn left_tail(&self, c: i64) -> TailProbability {
        if c < self.lo {
            return TailProbability::ZERO;
        }
        if c >= self.hi {
            return TailProbability::ONE;
        }
        let idx = (c - self.lo) as usize;
        let below = self.left[idx];
        let above = self.right[idx + 1];
        if below <= above {
            self.direct(below, &self.log_pmf[..=idx])
        } else {
            TailProbability::complement_of(above)
        }
    }

    /// `P(X >= c)`.
    fn right_tail(&self, c: i64) -> TailProbability {
        if c > self.hi {
            return TailProbability::ZERO;
        }
        if c <= self.lo {
            return TailProbability::ONE;
        }
        let idx = (c - self.lo) as usize;
        let above = self.right[idx];
        let below = self.left[idx - 1];
        if above <= below {
            self.direct(above, &self.log_pmf[idx..])
        } else {
            TailProbability::complement_of(below)
        }
    }
}

/// Number of "successes" among `t` items drawn without replacement from
/// `r` successes and `m` failures.
#[derive(Debug, Clone)]
pub struct Hypergeometric {
    r: u64,
    m: u64,
    t: u64,
    tails: DiscreteTails,
}

impl Hypergeometric {
    pub fn new(r: u64, m: u64, t: u64) -> Result<Self> {
        if t > r + m {
            return Err(Error::domain(format!(
                "hypergeometric: t = {t} exceeds r + m = {}",
                r + m
            )));
        }
        let lo = t.saturating_sub(m);
        let hi = r.min(t);
        let log_total = ln_choose(r + m, t);
        let log_pmf = (lo..=hi)
            .map(|i| ln_choose(r, i) + ln_choose(m, t - i) - log_total)
            .collect();
        Ok(Hypergeometric {
            r,
            m,
            t,
            tails: DiscreteTails::from_log(lo as i64, log_pmf),
        })
    }

    pub fn params(&self) -> (u64, u64, u64) {
        (self.r, self.m, self.t)
    }

    /// Smallest value in the support, `max(0, t - m)`.
    pub fn support_min(&self) -> i64 {
        self.tails.lo
    }

    /// Largest value in the support, `min(r, t)`.
    pub fn support_max(&self) -> i64 {
        self.tails.hi
    }

    pub fn pmf(&self, i: i64) -> TailProbability {
        self.tails.pmf(i)
    }

    pub fn left_tail(&self, c: i64) -> TailProbability {
        self.tails.left_tail(c)
    }

    pub fn right_tail(&self, c: i64) -> TailProbability {
        self.tails.right_tail(c)
    }
}

/// `C(r,i) C(m,t-i) / C(r+m,t)`; zero outside the support.
pub fn hypergeom_pmf(r: u64, m: u64, t: u64, i: i64) -> Result<TailProbability> {
    if t > r + m {
        return Err(Error::domain(format!(
            "hypergeometric: t = {t} exceeds r + m = {}",
            r + m
        )));
    }
    let lo = t.saturating_sub(m) as i64;
    let hi = r.min(t) as i64;
    if i < lo || i > hi {
        return Ok(TailProbability::ZERO);
    }
    let i = i as u64;
    Ok(TailProbability::from_log(
        ln_choose(r, i) + ln_choose(m, t - i) - ln_choose(r + m, t),
    ))
}

/// `P(X <= c)` for `X ~ Hypergeometric(r, m, t)`.
pub fn hypergeom_left_tail(r: u64, m: u64, t: u64, c: i64) -> Result<TailProbability> {
    Ok(Hypergeometric::new(r, m, t)?.left_tail(c))
}

/// `P(X >= c)` for `X ~ Hypergeometric(r, m, t)`.
pub fn hypergeom_right_tail(r: u64, m: u64, t: u64, c: i64) -> Result<TailProbability> {
    Ok(Hypergeometric::new(r, m, t)?.right_tail(c))
}

#[derive(Debug, Clone)]
pub struct Binomial {
    n: u64,
    p: f64,
    tails: DiscreteTails,
}

impl Binomial {
    pub fn new(n: u64, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("binomial: p = {p} is not in [0, 1]")));
        }
        let ln_p = p.ln();
        let ln_q = (-p).ln_1p();
        let q = 1.0 - p;
        let mut log_pmf = Vec::with_capacity(n as usize + 1);
        let mut pmf = Vec::with_capacity(n as usize + 1);
        for i in 0..=n {
            let succ = if i == 0 { 0.0 } else { i as f64 * ln_p };
            let fail = if i == n { 0.0 } else { (n - i) as f64 * ln_q };
            let log = ln_choose(n, i) + succ + fail;
            // Direct products are exact more often (e.g. p itself when n = 1).
            let linear = match (exact_choose(n, i.min(n - i)), i32::try_from(n)) {
                (Some(c), Ok(_)) if c < (1u128 << 53) && log > -700.0 => {
                    c as f64 * p.powi(i as i32) * q.powi((n - i) as i32)
                }
                _ => log.exp(),
            };
            log_pmf.push(log);
            pmf.push(linear);
        }
        Ok(Binomial {
            n,
            p,
            tails: DiscreteTails::new(0, log_pmf, pmf),
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn pmf(&self, i: i64) -> TailProbability {
        self.tails.pmf(i)
    }

    /// `P(X >= c)`.
    pub fn right_tail(&self, c: i64) -> TailProbability {
        self.tails.right_tail(c)
    }
}

/// `sum_{i=c}^{n} C(n,i) p^i (1-p)^(n-i)`, defined for `0 <= c <= n + 1`.
pub fn binom_tail(n: u64, p: f64, c: i64) -> Result<TailProbability> {
    if c < 0 || c > n as i64 + 1 {
        return Err(Error::domain(format!(
            "binom_tail: c = {c} outside 0..={}",
            n + 1
        )));
    }
    Ok(Binomial::new(n, p)?.right_tail(c))
}
