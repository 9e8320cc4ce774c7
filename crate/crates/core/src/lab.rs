//! Samplers and Monte Carlo experiments for checking the pair test
//! machinery on elliptical and non-elliptical laws.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`; replication `i` runs on stream `i` of that key, so
//! every replication owns an independent, reproducible generator and results
//! do not depend on thread scheduling. Normal variates are drawn with
//! `rand_distr::StandardNormal`, chi-square mixing variables with
//! `rand_distr::ChiSquared`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiple_testing::{all_pairs, holm};
use crate::pair_test::{q_hat, tau_hat, test_pair, PairCounts};

/// Generator for replication `stream` under a 64-bit `seed`.
pub fn replication_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Normal,
    Student { nu: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Student { .. } => "student",
        }
    }

    pub fn nu(&self) -> Option<f64> {
        match self {
            Family::Normal => None,
            Family::Student { nu } => Some(*nu),
        }
    }
}

/// Location-scale description of a normal or Student-t elliptical law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticalSpec {
    pub family: Family,
    pub mu: Vec<f64>,
    /// Row-major `p x p` scatter matrix.
    pub lambda: Vec<Vec<f64>>,
}

impl EllipticalSpec {
    pub fn new(family: Family, mu: Vec<f64>, lambda: Vec<Vec<f64>>) -> Result<Self> {
        let spec = EllipticalSpec { family, mu, lambda };
        spec.cholesky()?;
        Ok(spec)
    }

    /// Two standardized coordinates with correlation `rho`.
    pub fn bivariate(family: Family, rho: f64) -> Result<Self> {
        Self::exchangeable(family, 2, rho)
    }

    /// `p` standardized coordinates with common pairwise correlation `rho`.
    pub fn exchangeable(family: Family, p: usize, rho: f64) -> Result<Self> {
        let lambda = (0..p)
            .map(|i| (0..p).map(|j| if i == j { 1.0 } else { rho }).collect())
            .collect();
        Self::new(family, vec![0.0; p], lambda)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Lower Cholesky factor of `lambda`; fails unless `lambda` is square,
    /// symmetric and positive definite.
    fn cholesky(&self) -> Result<DMatrix<f64>> {
        let p = self.mu.len();
        if p == 0 {
            return Err(Error::domain("elliptical spec has dimension 0"));
        }
        if self.lambda.len() != p || self.lambda.iter().any(|row| row.len() != p) {
            return Err(Error::domain(format!("lambda must be {p} x {p}")));
        }
        if let Family::Student { nu } = self.family {
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(Error::domain(format!("student degrees of freedom {nu} must be > 0")));
            }
        }
        for i in 0..p {
            for j in 0..i {
                let (a, b) = (self.lambda[i][j], self.lambda[j][i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::domain(format!("lambda is not symmetric at ({i}, {j})")));
                }
            }
        }
        let mat = DMatrix::from_fn(p, p, |i, j| self.lambda[i][j]);
        let chol = mat
            .cholesky()
            .ok_or_else(|| Error::domain("lambda is not positive definite"))?;
        Ok(chol.unpack())
    }

    pub fn sampler(&self) -> Result<EcdSampler> {
        Ok(EcdSampler {
            family: self.family,
            mu: self.mu.clone(),
            chol: self.cholesky()?,
        })
    }
}

/// Departures from ellipticity for power studies. Both reduce to the normal
/// law `base` when `delta = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlternativeSpec {
    /// `Z + B * delta * u` with `Z ~ base`, `B ~ Bernoulli(weight)` and `u`
    /// the unit diagonal direction.
    SkewMixture {
        base: EllipticalSpec,
        weight: f64,
        delta: f64,
    },
    /// `Z + delta * |W| * u` with an independent standard normal `W`.
    AsymmetricTail { base: EllipticalSpec, delta: f64 },
}

impl AlternativeSpec {
    pub fn base(&self) -> &EllipticalSpec {
        match self {
            AlternativeSpec::SkewMixture { base, .. } | AlternativeSpec::AsymmetricTail { base, .. } => base,
        }
    }

    pub fn delta(&self) -> f64 {
        match self {
            AlternativeSpec::SkewMixture { delta, .. } | AlternativeSpec::AsymmetricTail { delta, .. } => *delta,
        }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            AlternativeSpec::SkewMixture { delta: d, .. } | AlternativeSpec::AsymmetricTail { delta: d, .. } => *d = delta,
        }
        out
    }

    pub fn name(&self) -> &'static str {
        match self {
            AlternativeSpec::SkewMixture { .. } => "skew_mixture",
            AlternativeSpec::AsymmetricTail { .. } => "asymmetric_tail",
        }
    }
}

/// Any law the experiments can draw from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Law {
    Elliptical(EllipticalSpec),
    Alternative(AlternativeSpec),
}

impl Law {
    pub fn dim(&self) -> usize {
        match self {
            Law::Elliptical(spec) => spec.dim(),
            Law::Alternative(alt) => alt.base().dim(),
        }
    }

    pub fn sampler(&self) -> Result<LawSampler> {
        match self {
            Law::Elliptical(spec) => Ok(LawSampler::Elliptical(spec.sampler()?)),
            Law::Alternative(alt) => {
                let base = alt.base();
                if base.family != Family::Normal {
                    return Err(Error::domain("alternative laws are built on a normal base"));
                }
                let p = base.dim();
                let shift = alt.delta() / (p as f64).sqrt();
                match alt {
                    AlternativeSpec::SkewMixture { weight, .. } => {
                        if !(0.0..=1.0).contains(weight) {
                            return Err(Error::domain(format!("mixing weight {weight} not in [0, 1]")));
                        }
                        Ok(LawSampler::SkewMixture {
                            base: base.sampler()?,
                            weight: *weight,
                            shift,
                        })
                    }
                    AlternativeSpec::AsymmetricTail { .. } => Ok(LawSampler::AsymmetricTail {
                        base: base.sampler()?,
                        shift,
                    }),
                }
            }
        }
    }
}

/// Draws rows of an elliptical law.
#[derive(Debug, Clone)]
pub struct EcdSampler {
    family: Family,
    mu: Vec<f64>,
    chol: DMatrix<f64>,
}

impl EcdSampler {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Writes one observation vector into `out`.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [f64], out: &mut [f64]) {
        let p = self.mu.len();
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        // One mixing variable per vector keeps the law elliptical.
        let scale = match self.family {
            Family::Normal => 1.0,
            Family::Student { nu } => {
                let chi2: f64 = ChiSquared::new(nu).expect("nu > 0").sample(rng);
                (nu / chi2).sqrt()
            }
        };
        for (i, o) in out.iter_mut().enumerate().take(p) {
            let acc: f64 = z[..=i].iter().enumerate().map(|(j, zj)| self.chol[(i, j)] * zj).sum();
            *o = self.mu[i] + scale * acc;
        }
    }
}

#[derive(Debug, Clone)]
pub enum LawSampler {
    Elliptical(EcdSampler),
    SkewMixture {
        base: EcdSampler,
        weight: f64,
        shift: f64,
    },
    AsymmetricTail {
        base: EcdSampler,
        shift: f64,
    },
}

impl LawSampler {
    pub fn dim(&self) -> usize {
        match self {
            LawSampler::Elliptical(s)
            | LawSampler::SkewMixture { base: s, .. }
            | LawSampler::AsymmetricTail { base: s, .. } => s.dim(),
        }
    }

    /// Draws `n_obs` observations as a column-major `n_obs x p` matrix, so
    /// each coordinate's series is contiguous.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, n_obs: usize) -> DMatrix<f64> {
        let p = self.dim();
        let mut out = DMatrix::zeros(n_obs, p);
        let mut z = vec![0.0; p];
        let mut row = vec![0.0; p];
        for t in 0..n_obs {
            match self {
                LawSampler::Elliptical(s) => s.draw_into(rng, &mut z, &mut row),
                LawSampler::SkewMixture {
                    base,
                    weight,
                    shift,
                } => {
                    base.draw_into(rng, &mut z, &mut row);
                    if rng.random::<f64>() < *weight {
                        row.iter_mut().for_each(|x| *x += shift);
                    }
                }
                LawSampler::AsymmetricTail { base, shift } => {
                    base.draw_into(rng, &mut z, &mut row);
                    let w: f64 = rng.sample(StandardNormal);
                    let bump = shift * w.abs();
                    row.iter_mut().for_each(|x| *x += bump);
                }
            }
            for (j, &v) in row.iter().enumerate() {
                out[(t, j)] = v;
            }
        }
        out
    }
}

/// Column `j` of a column-major sample as a slice, restricted to rows `rows`.
pub fn series(sample: &DMatrix<f64>, j: usize, rows: std::ops::Range<usize>) -> &[f64] {
    let n = sample.nrows();
    &sample.as_slice()[j * n + rows.start..j * n + rows.end]
}

/// `n_obs` i.i.d. draws from `spec` as an `n_obs x p` matrix.
pub fn sample_ecd(spec: &EllipticalSpec, n_obs: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n_obs == 0 {
        return Err(Error::domain("sample_ecd: n_obs must be >= 1"));
    }
    let sampler = LawSampler::Elliptical(spec.sampler()?);
    Ok(sampler.draw(&mut replication_rng(seed, 0), n_obs))
}

/// `P(U_i > 0, U_j > 0)` for a centered elliptical vector with scatter entries
/// `lambda_ii`, `lambda_jj`, `lambda_ij`: `1/4 + asin(rho) / (2 pi)`.
pub fn orthant_prob(lambda_ii: f64, lambda_jj: f64, lambda_ij: f64) -> Result<f64> {
    if !(lambda_ii > 0.0 && lambda_jj > 0.0) {
        return Err(Error::domain("orthant_prob: diagonal entries must be positive"));
    }
    let rho = lambda_ij / (lambda_ii * lambda_jj).sqrt();
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::domain(format!("orthant_prob: correlation {rho} outside [-1, 1]")));
    }
    Ok(0.25 + rho.asin() / (2.0 * PI))
}

/// Mean, standard error, and replication count of a Monte Carlo proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub se: f64,
    pub reps: u64,
}

impl RateEstimate {
    fn from_hits(hits: u64, reps: u64) -> Self {
        let rate = hits as f64 / reps as f64;
        RateEstimate {
            rate,
            se: (rate * (1.0 - rate) / reps as f64).sqrt(),
            reps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EqualityReport {
    /// Mean of `k / r` across replications.
    pub tau_prop: f64,
    /// Mean of `l / m` across replications.
    pub q_prop: f64,
    /// `2 * orthant_prob`, the common value both proportions estimate.
    pub closed_form: f64,
    pub se_tau: f64,
    pub se_q: f64,
    pub abs_diff: f64,
    pub se_diff: f64,
    pub reps: u64,
}

/// Integer moments keep the parallel reduction exact and order-free.
#[derive(Default, Clone, Copy)]
struct Moments {
    sum: u128,
    sum_sq: u128,
}

impl Moments {
    fn push(x: u64) -> Self {
        Moments {
            sum: x as u128,
            sum_sq: (x as u128) * (x as u128),
        }
    }

    fn merge(self, other: Self) -> Self {
        Moments {
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    /// Mean and standard error of `x / denom` over `reps` replications.
    fn proportion(&self, reps: u64, denom: u64) -> (f64, f64) {
        let n = reps as f64;
        let d = denom as f64;
        let mean = self.sum as f64 / n;
        let var = if reps > 1 {
            ((self.sum_sq as f64) - n * mean * mean).max(0.0) / (n - 1.0)
        } else {
            0.0
        };
        (mean / d, (var / n).sqrt() / d)
    }
}

fn check_blocks(n_obs: usize, m_obs: usize) -> Result<()> {
    if n_obs < 2 || m_obs < 2 {
        return Err(Error::domain("block lengths must be >= 2"));
    }
    Ok(())
}

/// Counts for coordinates `(i, j)` of a sample laid out as `n_obs` rows of
/// the concordance block followed by `m_obs` rows of the sign block.
fn counts_from_sample(
    sample: &DMatrix<f64>,
    i: usize,
    j: usize,
    n_obs: usize,
    m_obs: usize,
) -> PairCounts {
    let tau_rows = 0..n_obs;
    let q_rows = n_obs..n_obs + m_obs;
    let (k, r) = tau_hat(series(sample, i, tau_rows.clone()), series(sample, j, tau_rows))
        .expect("blocks were validated");
    let (l, m) = q_hat(series(sample, i, q_rows.clone()), series(sample, j, q_rows))
        .expect("blocks were validated");
    PairCounts { k, r, l, m }
}

/// Replicates the two block statistics for one pair and compares their
/// average proportions with each other and with the arcsin closed form.
pub fn mc_verify_equality(
    spec: &EllipticalSpec,
    pair: (usize, usize),
    n_obs: usize,
    m_obs: usize,
    reps: u64,
    seed: u64,
) -> Result<EqualityReport> {
    check_blocks(n_obs, m_obs)?;
    if reps < 100 {
        return Err(Error::domain("mc_verify_equality: reps must be >= 100"));
    }
    let (i, j) = pair;
    let p = spec.dim();
    if i == j || i >= p || j >= p {
        return Err(Error::domain(format!("invalid pair ({i}, {j}) for dimension {p}")));
    }
    let closed_form = 2.0 * orthant_prob(spec.lambda[i][i], spec.lambda[j][j], spec.lambda[i][j])?;
    let sampler = LawSampler::Elliptical(spec.sampler()?);

    let (tau_m, q_m) = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(seed, rep);
            let sample = sampler.draw(&mut rng, n_obs + m_obs);
            let c = counts_from_sample(&sample, i, j, n_obs, m_obs);
            (Moments::push(c.k), Moments::push(c.l))
        })
        .reduce(
            || (Moments::default(), Moments::default()),
            |a, b| (a.0.merge(b.0), a.1.merge(b.1)),
        );
    let (tau_prop, se_tau) = tau_m.proportion(reps, (n_obs / 2) as u64);
    let (q_prop, se_q) = q_m.proportion(reps, m_obs as u64);
    Ok(EqualityReport {
        tau_prop,
        q_prop,
        closed_form,
        se_tau,
        se_q,
        abs_diff: (tau_prop - q_prop).abs(),
        se_diff: (se_tau * se_tau + se_q * se_q).sqrt(),
        reps,
    })
}

/// Rejection rate of the pair test on coordinates 0 and 1 of `law`.
pub fn mc_size_power(
    law: &Law,
    n_obs: usize,
    m_obs: usize,
    alpha: f64,
    reps: u64,
    seed: u64,
) -> Result<RateEstimate> {
    check_blocks(n_obs, m_obs)?;
    if reps < 1000 {
        return Err(Error::domain("mc_size_power: reps must be >= 1000"));
    }
    if law.dim() < 2 {
        return Err(Error::domain("mc_size_power: law needs at least 2 coordinates"));
    }
    let sampler = law.sampler()?;
    // Validate alpha once up front so the parallel loop can't fail.
    test_pair(&PairCounts { k: 0, r: 1, l: 0, m: 1 }, alpha)?;
    let hits: u64 = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(seed, rep);
            let sample = sampler.draw(&mut rng, n_obs + m_obs);
            let c = counts_from_sample(&sample, 0, 1, n_obs, m_obs);
            u64::from(test_pair(&c, alpha).expect("valid counts").rejected)
        })
        .sum();
    Ok(RateEstimate::from_hits(hits, reps))
}

/// Family-wise error rate of the full pipeline (pair tests on every pair,
/// then Holm at level `alpha`) under the elliptical law `spec`.
pub fn mc_fwer(
    spec: &EllipticalSpec,
    n_obs: usize,
    m_obs: usize,
    alpha: f64,
    reps: u64,
    seed: u64,
) -> Result<RateEstimate> {
    check_blocks(n_obs, m_obs)?;
    let p = spec.dim();
    if p < 3 {
        return Err(Error::domain("mc_fwer: need at least 3 stocks"));
    }
    if reps < 1000 {
        return Err(Error::domain("mc_fwer: reps must be >= 1000"));
    }
    test_pair(&PairCounts { k: 0, r: 1, l: 0, m: 1 }, alpha)?;
    let sampler = LawSampler::Elliptical(spec.sampler()?);
    let pairs = all_pairs(p);
    let hits: u64 = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(seed, rep);
            let sample = sampler.draw(&mut rng, n_obs + m_obs);
            let p_values: BTreeMap<_, _> = pairs
                .iter()
                .map(|pair| {
                    let c = counts_from_sample(&sample, pair.low(), pair.high(), n_obs, m_obs);
                    (*pair, test_pair(&c, alpha).expect("valid counts").p_value)
                })
                .collect();
            u64::from(holm(&p_values, alpha).expect("valid p-values").any_rejected())
        })
        .sum();
    Ok(RateEstimate::from_hits(hits, reps))
}

/// Large-sample estimates of the concordance probability and the
/// mean-centred sign-coincidence probability of coordinates 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub tau: f64,
    pub q: f64,
    pub gap: f64,
}

pub fn estimate_gap(law: &Law, n_draws: usize, seed: u64) -> Result<GapEstimate> {
    if n_draws < 4 {
        return Err(Error::domain("estimate_gap: need at least 4 draws"));
    }
    let sampler = law.sampler()?;
    let sample = sampler.draw(&mut replication_rng(seed, 0), 2 * n_draws);
    let c = counts_from_sample(&sample, 0, 1, n_draws, n_draws);
    let tau = c.k as f64 / c.r as f64;
    let q = c.l as f64 / c.m as f64;
    Ok(GapEstimate {
        tau,
        q,
        gap: (q - tau).abs(),
    })
}

/// Pilot calibration: the smallest departure on `grid` whose estimated gap
/// `|Q - tau|` reaches `target_gap`.
pub fn calibrate_departure(
    alt: &AlternativeSpec,
    grid: &[f64],
    target_gap: f64,
    pilot_draws: usize,
    seed: u64,
) -> Result<(f64, GapEstimate)> {
    for &delta in grid {
        let est = estimate_gap(&Law::Alternative(alt.with_delta(delta)), pilot_draws, seed)?;
        if est.gap >= target_gap {
            return Ok((delta, est));
        }
    }
    Err(Error::Numeric(format!(
        "no departure on the grid reaches |Q - tau| >= {target_gap}"
    )))
}
