//! Exact big-integer oracles shared by the integration tests.

#![allow(dead_code)]

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Pascal's triangle in arbitrary precision, rows `0..=rows`.
pub struct Binomials {
    rows: Vec<Vec<BigUint>>,
}

impl Binomials {
    pub fn new(rows: usize) -> Self {
        let mut tri: Vec<Vec<BigUint>> = vec![vec![BigUint::one()]];
        for n in 1..=rows {
            let prev = &tri[n - 1];
            let mut row = vec![BigUint::one(); n + 1];
            for k in 1..n {
                row[k] = &prev[k - 1] + &prev[k];
            }
            tri.push(row);
        }
        Binomials { rows: tri }
    }

    pub fn choose(&self, n: usize, k: usize) -> BigUint {
        if k > n {
            BigUint::zero()
        } else {
            self.rows[n][k].clone()
        }
    }
}

fn ratio(num: BigUint, den: &BigUint) -> f64 {
    BigRational::new(num.into(), den.clone().into())
        .to_f64()
        .expect("finite ratio")
}

/// Exact pmf, left tails and right tails of `Hypergeometric(r, m, t)` over
/// `i = 0..=min(r, t)`, each converted to `f64` only at the end.
pub struct ExactHypergeometric {
    pub pmf: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

pub fn exact_hypergeometric(b: &Binomials, r: usize, m: usize, t: usize) -> ExactHypergeometric {
    let den = b.choose(r + m, t);
    let top = r.min(t);
    let nums: Vec<BigUint> = (0..=top)
        .map(|i| if t - i > m { BigUint::zero() } else { b.choose(r, i) * b.choose(m, t - i) })
        .collect();
    let mut left = Vec::with_capacity(nums.len());
    let mut acc = BigUint::zero();
    for n in &nums {
        acc += n;
        left.push(ratio(acc.clone(), &den));
    }
    let mut right = vec![0.0; nums.len()];
    let mut acc = BigUint::zero();
    for (i, n) in nums.iter().enumerate().rev() {
        acc += n;
        right[i] = ratio(acc.clone(), &den);
    }
    ExactHypergeometric {
        pmf: nums.into_iter().map(|n| ratio(n, &den)).collect(),
        left,
        right,
    }
}

/// Exact `P(Bin(n, num/den) >= c)`.
pub fn exact_binom_tail(n: usize, num: u64, den: u64, c: usize) -> f64 {
    let b = Binomials::new(n);
    let p = BigRational::new(num.into(), den.into());
    let q = BigRational::one() - &p;
    let mut total = BigRational::zero();
    for i in c..=n {
        let coef = BigRational::from_integer(b.choose(n, i).into());
        total += coef * pow(&p, i) * pow(&q, n - i);
    }
    total.to_f64().expect("finite")
}

fn pow(x: &BigRational, e: usize) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * x)
}

/// Relative closeness, treating exact zeros as equal only to zero.
pub fn rel_close(got: f64, want: f64, tol: f64) -> bool {
    if want == 0.0 {
        got == 0.0
    } else {
        ((got - want) / want).abs() <= tol
    }
}
