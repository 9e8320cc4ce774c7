//! Rejection graphs: one undirected edge per rejected pairwise hypothesis,
//! vertices restricted to stocks incident to at least one edge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiple_testing::StockPair;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RejectionGraph {
    tickers: BTreeMap<usize, String>,
    edges: BTreeSet<StockPair>,
    degree: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    Json,
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(GraphFormat::Dot),
            "json" => Ok(GraphFormat::Json),
            other => Err(Error::domain(format!("unknown graph format {other:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GraphDocument {
    edges: Vec<[String; 2]>,
    ticker_map: BTreeMap<String, String>,
    vertices: Vec<String>,
}

impl RejectionGraph {
    /// Builds the graph from index pairs. Vertex labels come from `tickers`
    /// when given, otherwise the index itself is used.
    pub fn build(pairs: &[(usize, usize)], tickers: Option<&[String]>) -> Result<Self> {
        let edges = pairs
            .iter()
            .map(|&(a, b)| StockPair::new(a, b))
            .collect::<Result<BTreeSet<_>>>()?;
        Self::from_edges(edges, tickers)
    }

    pub fn from_edges(edges: BTreeSet<StockPair>, tickers: Option<&[String]>) -> Result<Self> {
        let mut degree = BTreeMap::new();
        for e in &edges {
            *degree.entry(e.low()).or_insert(0) += 1;
            *degree.entry(e.high()).or_insert(0) += 1;
        }
        let tickers = degree
            .keys()
            .map(|&v| {
                let label = match tickers {
                    Some(names) => names.get(v).cloned().ok_or_else(|| {
                        Error::domain(format!("vertex {v} has no ticker ({} known)", names.len()))
                    })?,
                    None => v.to_string(),
                };
                Ok((v, label))
            })
            .collect::<Result<_>>()?;
        Ok(RejectionGraph {
            tickers,
            edges,
            degree,
        })
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.degree.keys().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = StockPair> + '_ {
        self.edges.iter().copied()
    }

    pub fn n_vertices(&self) -> usize {
        self.degree.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degree.get(&v).copied().unwrap_or(0)
    }

    pub fn ticker(&self, v: usize) -> Option<&str> {
        self.tickers.get(&v).map(String::as_str)
    }

    /// Vertices of degree at least `min_degree`, by descending degree then index.
    pub fn hubs(&self, min_degree: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .degree
            .iter()
            .filter(|(_, &d)| d >= min_degree.max(1))
            .map(|(&v, _)| v)
            .collect();
        out.sort_by(|a, b| self.degree[b].cmp(&self.degree[a]).then(a.cmp(b)));
        out
    }

    pub fn export(&self, format: GraphFormat) -> Vec<u8> {
        match format {
            GraphFormat::Dot => self.to_dot().into_bytes(),
            GraphFormat::Json => self.to_json().into_bytes(),
        }
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph rejection {\n");
        for (v, label) in &self.tickers {
            let label = label.replace('\\', "\\\\").replace('"', "\\\"");
            let _ = writeln!(out, "  {v} [label=\"{label}\"];");
        }
        for e in &self.edges {
            let _ = writeln!(out, "  {} -- {};", e.low(), e.high());
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> String {
        let label = |v: usize| self.tickers[&v].clone();
        let doc = GraphDocument {
            edges: self
                .edges
                .iter()
                .map(|e| [label(e.low()), label(e.high())])
                .collect(),
            ticker_map: self
                .tickers
                .iter()
                .map(|(v, t)| (v.to_string(), t.clone()))
                .collect(),
            vertices: self.tickers.values().cloned().collect(),
        };
        serde_json::to_string(&doc).expect("graph document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GraphDocument = serde_json::from_str(text)
            .map_err(|e| Error::input(format!("rejection graph JSON: {e}")))?;
        let mut by_ticker = BTreeMap::new();
        for (idx, ticker) in &doc.ticker_map {
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::input(format!("ticker_map key {idx:?} is not an index")))?;
            if by_ticker.insert(ticker.clone(), idx).is_some() {
                return Err(Error::input(format!("duplicate ticker {ticker:?}")));
            }
        }
        let lookup = |t: &String| {
            by_ticker
                .get(t)
                .copied()
                .ok_or_else(|| Error::input(format!("edge endpoint {t:?} missing from ticker_map")))
        };
        let mut pairs = Vec::with_capacity(doc.edges.len());
        for [a, b] in &doc.edges {
            pairs.push((lookup(a)?, lookup(b)?));
        }
        let max_idx = by_ticker.values().copied().max().map_or(0, |m| m + 1);
        let mut names = vec![String::new(); max_idx];
        for (t, &i) in &by_ticker {
            names[i] = t.clone();
        }
        let graph = Self::build(&pairs, Some(&names))?;
        if graph.n_vertices() != doc.ticker_map.len() {
            return Err(Error::input("ticker_map lists vertices with no incident edge"));
        }
        Ok(graph)
    }
}
