//! Year and multi-year pipelines: pair statistics for every stock pair,
//! Holm across pairs, the rejection graph, and the binomial meta-test.

use std::collections::BTreeMap;

use chrono::Datelike;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::meta_test::{meta_test, MetaMode, MetaResult};
use crate::multiple_testing::{all_pairs, holm, HolmOutcome, StockPair};
use crate::panel::{split_blocks, ReturnPanel};
use crate::pair_test::{q_hat, tau_hat, test_pair, PairCounts, PairTestResult};
use crate::rejection_graph::RejectionGraph;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRecord {
    pub pair: StockPair,
    pub test: PairTestResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YearDecision {
    pub year: i32,
    pub alpha: f64,
    pub n: usize,
    pub m: usize,
    pub tickers: Vec<String>,
    pub pairs: Vec<PairRecord>,
    pub holm: HolmOutcome<StockPair>,
    pub graph: RejectionGraph,
    /// Tickers whose concordance or sign block is constant.
    pub degenerate: Vec<String>,
    pub rejected_h_year: bool,
}

impl YearDecision {
    pub fn n_rejected(&self) -> usize {
        self.holm.rejected.len()
    }

    /// Holm-rejected pairs in lexicographic order.
    pub fn rejected_pairs(&self) -> Vec<StockPair> {
        let mut out = self.holm.rejected.clone();
        out.sort();
        out
    }
}

fn is_constant(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] == w[1])
}

/// Pair statistics for every pair of the panel, in lexicographic pair order.
pub fn pair_counts(panel: &ReturnPanel, n: usize, m: usize) -> Result<Vec<(StockPair, PairCounts)>> {
    let (tau_block, q_block) = split_blocks(panel, n, m)?;
    all_pairs(panel.n_stocks())
        .into_par_iter()
        .map(|pair| {
            let (i, j) = (pair.low(), pair.high());
            let (k, r) = tau_hat(tau_block.series(i), tau_block.series(j))?;
            let (l, m) = q_hat(q_block.series(i), q_block.series(j))?;
            Ok((pair, PairCounts { k, r, l, m }))
        })
        .collect()
}

fn check_result(pair: StockPair, res: &PairTestResult) -> Result<()> {
    let p = res.p_value;
    if !(0.0..=1.0).contains(&p) || (res.rejected && p > res.alpha) || res.c1 > res.c2 {
        return Err(Error::Numeric(format!(
            "pair {pair:?}: inconsistent test result {res:?}"
        )));
    }
    Ok(())
}

fn decide(
    year: i32,
    panel: &ReturnPanel,
    n: usize,
    m: usize,
    counts: &[(StockPair, PairCounts)],
    alpha: f64,
) -> Result<YearDecision> {
    let pairs = counts
        .iter()
        .map(|(pair, c)| {
            let test = test_pair(c, alpha)?;
            check_result(*pair, &test)?;
            Ok(PairRecord { pair: *pair, test })
        })
        .collect::<Result<Vec<_>>>()?;
    let p_values: BTreeMap<StockPair, f64> = pairs.iter().map(|r| (r.pair, r.test.p_value)).collect();
    let outcome = holm(&p_values, alpha)?;
    let graph = RejectionGraph::from_edges(
        outcome.rejected.iter().copied().collect(),
        Some(panel.tickers()),
    )?;
    if graph.n_edges() != outcome.rejected.len() {
        return Err(Error::Numeric("rejection graph disagrees with Holm outcome".into()));
    }
    let degenerate = panel
        .tickers()
        .iter()
        .enumerate()
        .filter(|&(s, _)| {
            let x = panel.series(s);
            is_constant(&x[..n]) || is_constant(&x[n..n + m])
        })
        .map(|(_, t)| t.clone())
        .collect();
    Ok(YearDecision {
        year,
        alpha,
        n,
        m,
        tickers: panel.tickers().to_vec(),
        pairs,
        rejected_h_year: outcome.any_rejected(),
        holm: outcome,
        graph,
        degenerate,
    })
}

/// Runs the one-year procedure on the first `n + m` dates of `panel`. The
/// year label is the calendar year of the first date.
pub fn run_year(panel: &ReturnPanel, n: usize, m: usize, alpha: f64) -> Result<YearDecision> {
    Ok(run_year_grid(panel, n, m, &[alpha])?.remove(0))
}

/// One decision per level in `alphas`; pair statistics are computed once.
pub fn run_year_grid(panel: &ReturnPanel, n: usize, m: usize, alphas: &[f64]) -> Result<Vec<YearDecision>> {
    if alphas.is_empty() {
        return Err(Error::input("no alpha levels given"));
    }
    let counts = pair_counts(panel, n, m)?;
    let year = panel.dates().first().map_or(0, |d| d.year());
    alphas
        .iter()
        .map(|&alpha| decide(year, panel, n, m, &counts, alpha))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodOutcome {
    pub meta: MetaResult,
    pub mode: MetaMode,
    pub decisions: Vec<YearDecision>,
}

impl PeriodOutcome {
    pub fn p_value(&self) -> f64 {
        self.meta.p_value(self.mode)
    }

    pub fn rejected_years(&self) -> Vec<i32> {
        self.decisions
            .iter()
            .filter(|d| d.rejected_h_year)
            .map(|d| d.year)
            .collect()
    }
}

/// Multi-year procedure at a single per-year level `alpha`.
pub fn run_period(
    panels: &BTreeMap<i32, ReturnPanel>,
    n: usize,
    m: usize,
    alpha: f64,
    beta: f64,
    mode: MetaMode,
) -> Result<PeriodOutcome> {
    Ok(run_period_grid(panels, n, m, &[alpha], beta, mode)?.remove(0))
}

/// Multi-year procedure for each level in `alphas`, in the given order.
pub fn run_period_grid(
    panels: &BTreeMap<i32, ReturnPanel>,
    n: usize,
    m: usize,
    alphas: &[f64],
    beta: f64,
    mode: MetaMode,
) -> Result<Vec<PeriodOutcome>> {
    if panels.is_empty() {
        return Err(Error::input("no years to test"));
    }
    // Years are independent; collect keeps BTreeMap order.
    let per_year: Vec<Vec<YearDecision>> = panels
        .par_iter()
        .map(|(&year, panel)| {
            let mut ds = run_year_grid(panel, n, m, alphas).map_err(|e| match e {
                Error::Input(msg) => Error::Input(format!("year {year}: {msg}")),
                other => other,
            })?;
            ds.iter_mut().for_each(|d| d.year = year);
            Ok(ds)
        })
        .collect::<Result<_>>()?;

    alphas
        .iter()
        .enumerate()
        .map(|(a, &alpha)| {
            let decisions: Vec<YearDecision> = per_year.iter().map(|ds| ds[a].clone()).collect();
            let x = decisions.iter().filter(|d| d.rejected_h_year).count() as u64;
            let meta = meta_test(x, decisions.len() as u64, alpha, beta)?;
            Ok(PeriodOutcome {
                meta,
                mode,
                decisions,
            })
        })
        .collect()
}
