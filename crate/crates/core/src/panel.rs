//! Return panels: loading from CSV, date alignment, year and block splits.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelFormat {
    /// Price levels; converted to log returns between consecutive dates.
    PricesCsv,
    /// Returns, used as given.
    ReturnsCsv,
}

impl FromStr for PanelFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prices" | "prices_csv" => Ok(PanelFormat::PricesCsv),
            "returns" | "returns_csv" => Ok(PanelFormat::ReturnsCsv),
            other => Err(Error::input(format!("unknown panel format {other:?}"))),
        }
    }
}

/// `p` aligned return series over `T` strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    tickers: Vec<String>,
    dates: Vec<NaiveDate>,
    /// One series per ticker, each of length `T`.
    returns: Vec<Vec<f64>>,
}

impl ReturnPanel {
    pub fn new(tickers: Vec<String>, dates: Vec<NaiveDate>, returns: Vec<Vec<f64>>) -> Result<Self> {
        if tickers.len() < 2 {
            return Err(Error::input(format!("panel needs >= 2 tickers, got {}", tickers.len())));
        }
        if returns.len() != tickers.len() {
            return Err(Error::input("one return series per ticker is required"));
        }
        if let Some((idx, s)) = returns.iter().enumerate().find(|(_, s)| s.len() != dates.len()) {
            return Err(Error::input(format!(
                "series {:?} has {} values for {} dates",
                tickers[idx],
                s.len(),
                dates.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::input(format!("dates not strictly increasing at {}", w[1])));
        }
        for (t, s) in tickers.iter().zip(&returns) {
            if let Some(pos) = s.iter().position(|v| !v.is_finite()) {
                return Err(Error::input(format!("non-finite return for {t:?} on {}", dates[pos])));
            }
        }
        Ok(ReturnPanel {
            tickers,
            dates,
            returns,
        })
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn series(&self, stock: usize) -> &[f64] {
        &self.returns[stock]
    }

    pub fn n_stocks(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    /// The sub-panel over date positions `range`.
    pub fn window(&self, range: std::ops::Range<usize>) -> ReturnPanel {
        ReturnPanel {
            tickers: self.tickers.clone(),
            dates: self.dates[range.clone()].to_vec(),
            returns: self.returns.iter().map(|s| s[range.clone()].to_vec()).collect(),
        }
    }

    /// Splits observations by calendar year.
    pub fn split_years(&self) -> BTreeMap<i32, ReturnPanel> {
        let mut out = BTreeMap::new();
        let mut start = 0;
        while start < self.dates.len() {
            let year = self.dates[start].year();
            let end = self.dates[start..]
                .iter()
                .position(|d| d.year() != year)
                .map_or(self.dates.len(), |off| start + off);
            out.insert(year, self.window(start..end));
            start = end;
        }
        out
    }
}

/// A loaded panel plus bookkeeping about the alignment step.
#[derive(Debug, Clone)]
pub struct LoadedPanel {
    pub panel: ReturnPanel,
    /// Input rows dropped because at least one ticker had no value.
    pub dropped_rows: usize,
}

/// Reads a wide CSV with header `date,<ticker>...`.
///
/// Rows with an empty cell for any ticker are dropped so only dates common
/// to every ticker remain. Prices become log returns `ln(P_t / P_{t-1})`
/// dated at `t`.
pub fn load_panel(path: &Path, format: PanelFormat) -> Result<LoadedPanel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_panel(file, format, &path.display().to_string())
}

pub fn read_panel<R: std::io::Read>(reader: R, format: PanelFormat, source: &str) -> Result<LoadedPanel> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::input(format!("{source}: cannot read header: {e}")))?
        .clone();
    if header.get(0).map(|h| h.eq_ignore_ascii_case("date")) != Some(true) {
        return Err(Error::input(format!("{source}: first header column must be 'date'")));
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    if tickers.len() < 2 {
        return Err(Error::input(format!("{source}: need >= 2 tickers, found {}", tickers.len())));
    }

    let mut rows: Vec<(NaiveDate, Vec<f64>)> = Vec::new();
    let mut dropped = 0;
    for (idx, record) in rdr.records().enumerate() {
        // Line 1 is the header.
        let line = idx + 2;
        let record = record.map_err(|e| Error::input(format!("{source}: line {line}: {e}")))?;
        if record.len() != tickers.len() + 1 {
            return Err(Error::input(format!(
                "{source}: line {line}: expected {} fields, found {}",
                tickers.len() + 1,
                record.len()
            )));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|e| {
            Error::input(format!("{source}: line {line}, column 'date': {:?}: {e}", &record[0]))
        })?;
        let mut values = Vec::with_capacity(tickers.len());
        let mut missing = false;
        for (col, cell) in record.iter().skip(1).enumerate() {
            if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
                missing = true;
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                Error::input(format!(
                    "{source}: line {line}, column {:?}: cannot parse {cell:?} as a number",
                    tickers[col]
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::input(format!(
                    "{source}: line {line}, column {:?}: non-finite value",
                    tickers[col]
                )));
            }
            if format == PanelFormat::PricesCsv && v <= 0.0 {
                return Err(Error::input(format!(
                    "{source}: line {line}, column {:?}: non-positive price {v}",
                    tickers[col]
                )));
            }
            values.push(v);
        }
        if missing {
            dropped += 1;
        } else {
            rows.push((date, values));
        }
    }

    rows.sort_by_key(|(d, _)| *d);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::input(format!("{source}: duplicate date {}", w[0].0)));
    }
    match rows.len() {
        0 => return Err(Error::input(format!("{source}: no common dates across tickers"))),
        1 => return Err(Error::input(format!("{source}: only 1 common date across tickers"))),
        _ => {}
    }

    let p = tickers.len();
    let (dates, returns) = match format {
        PanelFormat::ReturnsCsv => {
            let dates = rows.iter().map(|(d, _)| *d).collect();
            let returns = (0..p).map(|j| rows.iter().map(|(_, v)| v[j]).collect()).collect();
            (dates, returns)
        }
        PanelFormat::PricesCsv => {
            let dates = rows[1..].iter().map(|(d, _)| *d).collect();
            let returns = (0..p)
                .map(|j| rows.windows(2).map(|w| (w[1].1[j] / w[0].1[j]).ln()).collect())
                .collect();
            (dates, returns)
        }
    };
    Ok(LoadedPanel {
        panel: ReturnPanel::new(tickers, dates, returns)?,
        dropped_rows: dropped,
    })
}

/// Splits the first `n + m` dates into a concordance block of `n` dates and
/// the following sign block of `m` dates.
pub fn split_blocks(panel: &ReturnPanel, n: usize, m: usize) -> Result<(ReturnPanel, ReturnPanel)> {
    if n < 2 || m < 2 {
        return Err(Error::input(format!("block sizes must be >= 2, got n = {n}, m = {m}")));
    }
    let have = panel.n_dates();
    if n + m > have {
        return Err(Error::input(format!(
            "n + m = {} exceeds the {have} available dates (short by {})",
            n + m,
            n + m - have
        )));
    }
    Ok((panel.window(0..n), panel.window(n..n + m)))
}
