//! Exact tests of whether a panel of asset returns is consistent with an
//! elliptically contoured law.
//!
//! For every pair of stocks the Kendall concordance probability and the
//! sign-coincidence probability about the mean must agree under any
//! elliptical law. [`pair_test`] tests that equality exactly by
//! conditioning on the total count, [`multiple_testing`] combines the pairs
//! with Holm's step-down procedure, [`rejection_graph`] records the rejected
//! pairs, and [`meta_test`] combines yearly decisions with a binomial test.
//! [`lab`] holds the samplers and Monte Carlo experiments used to check the
//! machinery, and [`panel`], [`pipeline`] and [`report`] connect it to CSV
//! data.

pub mod error;
pub mod exact_stats;
pub mod experiment;
pub mod lab;
pub mod multiple_testing;
pub mod panel;
pub mod pipeline;
pub mod rejection_graph;
pub mod report;

pub use error::{Error, Result};
pub use exact_stats::{
    binom_tail, hypergeom_left_tail, hypergeom_pmf, hypergeom_right_tail, log_choose, Binomial,
    Hypergeometric, TailProbability,
};
pub use experiment::{run_experiment, Experiment, ExperimentRows, LabConfig};
pub use lab::{
    mc_fwer, mc_size_power, mc_verify_equality, orthant_prob, sample_ecd, AlternativeSpec,
    EllipticalSpec, EqualityReport, Family, Law, RateEstimate,
};
pub use meta_test::{meta_decide, meta_p_value, meta_test, meta_threshold, MetaMode, MetaResult};
pub use multiple_testing::{holm, HolmOutcome, HolmStep, StockPair};
pub use pair_test::{
    conditional_thresholds, pair_p_value, q_hat, sign_indicator, tau_hat, test_pair, PairCounts,
    PairTestResult,
};
pub use panel::{load_panel, split_blocks, LoadedPanel, PanelFormat, ReturnPanel};
pub use pipeline::{run_period, run_period_grid, run_year, run_year_grid, PeriodOutcome, YearDecision};
pub use rejection_graph::{GraphFormat, RejectionGraph};
pub use report::emit_reports;
