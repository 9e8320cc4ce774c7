//! On-disk reports for year and period runs.
//!
//! Layout of `out_dir`:
//!
//! * `summary.csv`: `year,alpha,rejected` with the Holm rejection count.
//! * `table.csv`: one row per year, one column per level, each cell the
//!   rejected pairs as `(i;j)` separated by commas, or `0`.
//! * `rejected_pairs.csv`: every Holm-rejected pair with tickers and p-value.
//! * `year_<Y>_alpha_<A>.json`: the full decision for one year and level.
//! * `pairs_<Y>_alpha_<A>.csv`: statistics and tests for every pair.
//! * `graph_<Y>_alpha_<A>.dot`: the rejection graph.
//! * `meta.json`: meta-test results, written for period runs only.
//!
//! Output bytes depend only on the decisions passed in.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::meta_test::MetaMode;
use crate::multiple_testing::{HolmStep, StockPair};
use crate::pipeline::{PeriodOutcome, YearDecision};

#[derive(Serialize)]
struct PairJson<'a> {
    i: usize,
    j: usize,
    ticker_i: &'a str,
    ticker_j: &'a str,
    k: u64,
    r: u64,
    l: u64,
    m: u64,
    c1: i64,
    c2: i64,
    p_value: f64,
}

#[derive(Serialize)]
struct StepJson {
    i: usize,
    j: usize,
    p_value: f64,
    threshold: f64,
    rejected: bool,
}

#[derive(Serialize)]
struct YearJson<'a> {
    year: i32,
    alpha: f64,
    n: usize,
    m: usize,
    n_stocks: usize,
    n_pairs: usize,
    n_rejected: usize,
    rejected_h_year: bool,
    degenerate_tickers: &'a [String],
    rejected: Vec<PairJson<'a>>,
    holm_steps: Vec<StepJson>,
    graph: serde_json::Value,
}

#[derive(Serialize)]
struct MetaJson {
    alpha: f64,
    beta: f64,
    mode: MetaMode,
    n_years: u64,
    x: u64,
    c_beta: u64,
    p_value: f64,
    p_value_inclusive: f64,
    p_value_exclusive: f64,
    rejected: bool,
    rejected_years: Vec<i32>,
}

fn tag(d: &YearDecision) -> String {
    format!("{}_alpha_{}", d.year, d.alpha)
}

fn write(path: PathBuf, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn csv_bytes<F>(fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    fill(&mut w).map_err(|e| Error::Numeric(format!("csv encoding: {e}")))?;
    w.into_inner()
        .map_err(|e| Error::Numeric(format!("csv encoding: {e}")))
}

fn pair_label(pair: StockPair) -> String {
    format!("({};{})", pair.low(), pair.high())
}

fn year_json(d: &YearDecision) -> Result<Vec<u8>> {
    let rejected = d
        .rejected_pairs()
        .into_iter()
        .map(|pair| {
            let rec = d
                .pairs
                .iter()
                .find(|r| r.pair == pair)
                .expect("rejected pair was tested");
            let c = rec.test.counts;
            PairJson {
                i: pair.low(),
                j: pair.high(),
                ticker_i: &d.tickers[pair.low()],
                ticker_j: &d.tickers[pair.high()],
                k: c.k,
                r: c.r,
                l: c.l,
                m: c.m,
                c1: rec.test.c1,
                c2: rec.test.c2,
                p_value: rec.test.p_value,
            }
        })
        .collect();
    let holm_steps = d
        .holm
        .steps
        .iter()
        .map(|s: &HolmStep<_>| StepJson {
            i: s.hypothesis.low(),
            j: s.hypothesis.high(),
            p_value: s.p_value,
            threshold: s.threshold,
            rejected: s.rejected,
        })
        .collect();
    let doc = YearJson {
        year: d.year,
        alpha: d.alpha,
        n: d.n,
        m: d.m,
        n_stocks: d.tickers.len(),
        n_pairs: d.pairs.len(),
        n_rejected: d.n_rejected(),
        rejected_h_year: d.rejected_h_year,
        degenerate_tickers: &d.degenerate,
        rejected,
        holm_steps,
        graph: serde_json::from_str(&d.graph.to_json()).expect("graph JSON parses"),
    };
    let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| Error::Numeric(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn pairs_csv(d: &YearDecision) -> Result<Vec<u8>> {
    let rejected: std::collections::BTreeSet<_> = d.holm.rejected.iter().copied().collect();
    csv_bytes(|w| {
        w.write_record([
            "i", "j", "ticker_i", "ticker_j", "k", "r", "l", "m", "c1", "c2", "p_value",
            "pair_rejected", "holm_rejected",
        ])?;
        for rec in &d.pairs {
            let c = rec.test.counts;
            w.write_record([
                rec.pair.low().to_string(),
                rec.pair.high().to_string(),
                d.tickers[rec.pair.low()].clone(),
                d.tickers[rec.pair.high()].clone(),
                c.k.to_string(),
                c.r.to_string(),
                c.l.to_string(),
                c.m.to_string(),
                rec.test.c1.to_string(),
                rec.test.c2.to_string(),
                rec.test.p_value.to_string(),
                rec.test.rejected.to_string(),
                rejected.contains(&rec.pair).to_string(),
            ])?;
        }
        Ok(())
    })
}

/// Writes every report file for `decisions` (and `meta`, if non-empty) into
/// `out_dir`, creating it if needed. Returns the paths written.
pub fn emit_reports(decisions: &[YearDecision], meta: &[PeriodOutcome], out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();

    let mut years: Vec<i32> = decisions.iter().map(|d| d.year).collect();
    years.sort_unstable();
    years.dedup();
    let mut alphas: Vec<f64> = Vec::new();
    for d in decisions {
        if !alphas.contains(&d.alpha) {
            alphas.push(d.alpha);
        }
    }
    let find = |y: i32, a: f64| decisions.iter().find(|d| d.year == y && d.alpha == a);

    let summary = csv_bytes(|w| {
        w.write_record(["year", "alpha", "rejected"])?;
        for &y in &years {
            for &a in &alphas {
                if let Some(d) = find(y, a) {
                    w.write_record([y.to_string(), a.to_string(), d.n_rejected().to_string()])?;
                }
            }
        }
        Ok(())
    })?;
    write(out_dir.join("summary.csv"), &summary, &mut written)?;

    let table = csv_bytes(|w| {
        let mut header = vec!["year".to_string()];
        header.extend(alphas.iter().map(|a| format!("alpha={a}")));
        w.write_record(&header)?;
        for &y in &years {
            let mut row = vec![y.to_string()];
            for &a in &alphas {
                row.push(match find(y, a) {
                    Some(d) if d.n_rejected() > 0 => d
                        .rejected_pairs()
                        .into_iter()
                        .map(pair_label)
                        .collect::<Vec<_>>()
                        .join(","),
                    Some(_) => "0".into(),
                    None => String::new(),
                });
            }
            w.write_record(&row)?;
        }
        Ok(())
    })?;
    write(out_dir.join("table.csv"), &table, &mut written)?;

    let rejected = csv_bytes(|w| {
        w.write_record(["year", "alpha", "i", "j", "ticker_i", "ticker_j", "p_value"])?;
        for &y in &years {
            for &a in &alphas {
                let Some(d) = find(y, a) else { continue };
                for pair in d.rejected_pairs() {
                    let p = d
                        .pairs
                        .iter()
                        .find(|r| r.pair == pair)
                        .map_or(f64::NAN, |r| r.test.p_value);
                    w.write_record([
                        y.to_string(),
                        a.to_string(),
                        pair.low().to_string(),
                        pair.high().to_string(),
                        d.tickers[pair.low()].clone(),
                        d.tickers[pair.high()].clone(),
                        p.to_string(),
                    ])?;
                }
            }
        }
        Ok(())
    })?;
    write(out_dir.join("rejected_pairs.csv"), &rejected, &mut written)?;

    for &y in &years {
        for &a in &alphas {
            let Some(d) = find(y, a) else { continue };
            let t = tag(d);
            write(out_dir.join(format!("year_{t}.json")), &year_json(d)?, &mut written)?;
            write(out_dir.join(format!("pairs_{t}.csv")), &pairs_csv(d)?, &mut written)?;
            write(out_dir.join(format!("graph_{t}.dot")), d.graph.to_dot().as_bytes(), &mut written)?;
        }
    }

    if !meta.is_empty() {
        let docs: Vec<MetaJson> = meta
            .iter()
            .map(|o| MetaJson {
                alpha: o.meta.alpha,
                beta: o.meta.beta,
                mode: o.mode,
                n_years: o.meta.n_years,
                x: o.meta.x,
                c_beta: o.meta.c_beta,
                p_value: o.p_value(),
                p_value_inclusive: o.meta.p_value_inclusive,
                p_value_exclusive: o.meta.p_value_exclusive,
                rejected: o.meta.rejected,
                rejected_years: o.rejected_years(),
            })
            .collect();
        let mut bytes = serde_json::to_vec_pretty(&docs).map_err(|e| Error::Numeric(e.to_string()))?;
        bytes.push(b'\n');
        write(out_dir.join("meta.json"), &bytes, &mut written)?;
    }
    Ok(written)
}
