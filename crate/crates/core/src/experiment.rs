//! Configurable Monte Carlo experiments behind `elliptest lab`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lab::{
    calibrate_departure, mc_fwer, mc_size_power, mc_verify_equality, AlternativeSpec,
    EllipticalSpec, Family, Law,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Size,
    Power,
    Fwer,
    Equality,
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "size" => Ok(Experiment::Size),
            "power" => Ok(Experiment::Power),
            "fwer" => Ok(Experiment::Fwer),
            "equality" => Ok(Experiment::Equality),
            other => Err(Error::input(format!("unknown experiment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Normal,
    Student,
}

fn default_families() -> Vec<FamilyName> {
    vec![FamilyName::Normal, FamilyName::Student]
}

fn default_rhos() -> Vec<f64> {
    vec![0.0, 0.3, 0.7]
}

/// Experiment settings, usually read from a TOML file. Every field has a
/// default matching the one-year configuration (`n = m = 125`, `alpha = 0.05`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    pub families: Vec<FamilyName>,
    /// Degrees of freedom for the Student family.
    pub nu: f64,
    pub rhos: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub reps: u64,
    /// Number of stocks for the FWER experiment.
    pub p: usize,
    /// Mixing weight of the skew mixture used by the power experiment.
    pub weight: f64,
    /// Minimum `|Q - tau|` the pilot calibration must reach.
    pub target_gap: f64,
    /// Candidate departures, tried in order.
    pub delta_grid: Vec<f64>,
    pub pilot_draws: usize,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            families: default_families(),
            nu: 3.0,
            rhos: default_rhos(),
            n: 125,
            m: 125,
            alpha: 0.05,
            reps: 10_000,
            p: 10,
            weight: 0.3,
            target_gap: 0.1,
            delta_grid: (1..=32).map(|i| i as f64 * 0.25).collect(),
            pilot_draws: 200_000,
        }
    }
}

impl LabConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::input(format!("lab config: {e}")))
    }

    fn family(&self, name: FamilyName) -> Family {
        match name {
            FamilyName::Normal => Family::Normal,
            FamilyName::Student => Family::Student { nu: self.nu },
        }
    }
}

/// One CSV row of a size, power, or FWER experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub family: String,
    pub rho: f64,
    pub nu: Option<f64>,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub reps: u64,
    pub seed: u64,
    pub rate: f64,
    pub se: f64,
}

/// One CSV row of the equality experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EqualityRow {
    pub family: String,
    pub rho: f64,
    pub nu: Option<f64>,
    pub n: usize,
    pub m: usize,
    pub reps: u64,
    pub seed: u64,
    pub tau_prop: f64,
    pub q_prop: f64,
    pub closed_form: f64,
    pub abs_diff: f64,
    pub se_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentRows {
    Rates(Vec<RateRow>),
    Equality(Vec<EqualityRow>),
}

impl ExperimentRows {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        fn encode<T: Serialize>(rows: &[T], header: &[&str]) -> csv::Result<Vec<u8>> {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.write_record(header)?;
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
            Ok(w.into_inner().expect("in-memory writer"))
        }
        match self {
            ExperimentRows::Rates(rows) => encode(
                rows,
                &["family", "rho", "nu", "n", "m", "alpha", "reps", "seed", "rate", "se"],
            ),
            ExperimentRows::Equality(rows) => encode(
                rows,
                &[
                    "family", "rho", "nu", "n", "m", "reps", "seed", "tau_prop", "q_prop",
                    "closed_form", "abs_diff", "se_diff",
                ],
            ),
        }
        .map_err(|e| Error::Numeric(format!("csv encoding: {e}")))
    }
}

/// Runs `experiment` for every family and correlation in `cfg`.
///
/// Cells are seeded `seed + cell_index` so each one is reproducible on its
/// own. The power experiment uses the normal base only and emits the
/// matched null rate followed by the alternative's rate for each `rho`.
pub fn run_experiment(experiment: Experiment, cfg: &LabConfig, seed: u64) -> Result<ExperimentRows> {
    let mut cell = 0u64;
    let mut next_seed = || {
        let s = seed.wrapping_add(cell);
        cell += 1;
        s
    };
    let rate_row = |family: &str, rho: f64, nu: Option<f64>, seed: u64, rate: crate::lab::RateEstimate| RateRow {
        family: family.into(),
        rho,
        nu,
        n: cfg.n,
        m: cfg.m,
        alpha: cfg.alpha,
        reps: cfg.reps,
        seed,
        rate: rate.rate,
        se: rate.se,
    };

    match experiment {
        Experiment::Size | Experiment::Fwer => {
            let mut rows = Vec::new();
            for &name in &cfg.families {
                let family = cfg.family(name);
                for &rho in &cfg.rhos {
                    let s = next_seed();
                    let est = if experiment == Experiment::Size {
                        let law = Law::Elliptical(EllipticalSpec::bivariate(family, rho)?);
                        mc_size_power(&law, cfg.n, cfg.m, cfg.alpha, cfg.reps, s)?
                    } else {
                        let spec = EllipticalSpec::exchangeable(family, cfg.p, rho)?;
                        mc_fwer(&spec, cfg.n, cfg.m, cfg.alpha, cfg.reps, s)?
                    };
                    rows.push(rate_row(family.name(), rho, family.nu(), s, est));
                }
            }
            Ok(ExperimentRows::Rates(rows))
        }
        Experiment::Power => {
            let mut rows = Vec::new();
            for &rho in &cfg.rhos {
                let base = EllipticalSpec::bivariate(Family::Normal, rho)?;
                let s = next_seed();
                let null = mc_size_power(&Law::Elliptical(base.clone()), cfg.n, cfg.m, cfg.alpha, cfg.reps, s)?;
                rows.push(rate_row("normal", rho, None, s, null));
                let alt = AlternativeSpec::SkewMixture {
                    base,
                    weight: cfg.weight,
                    delta: 0.0,
                };
                let (delta, _) = calibrate_departure(&alt, &cfg.delta_grid, cfg.target_gap, cfg.pilot_draws, s)?;
                let s = next_seed();
                let power = mc_size_power(&Law::Alternative(alt.with_delta(delta)), cfg.n, cfg.m, cfg.alpha, cfg.reps, s)?;
                rows.push(rate_row("skew_mixture", rho, None, s, power));
            }
            Ok(ExperimentRows::Rates(rows))
        }
        Experiment::Equality => {
            let mut rows = Vec::new();
            for &name in &cfg.families {
                let family = cfg.family(name);
                for &rho in &cfg.rhos {
                    let s = next_seed();
                    let spec = EllipticalSpec::bivariate(family, rho)?;
                    let rep = mc_verify_equality(&spec, (0, 1), cfg.n, cfg.m, cfg.reps, s)?;
                    rows.push(EqualityRow {
                        family: family.name().into(),
                        rho,
                        nu: family.nu(),
                        n: cfg.n,
                        m: cfg.m,
                        reps: cfg.reps,
                        seed: s,
                        tau_prop: rep.tau_prop,
                        q_prop: rep.q_prop,
                        closed_form: rep.closed_form,
                        abs_diff: rep.abs_diff,
                        se_diff: rep.se_diff,
                    });
                }
            }
            Ok(ExperimentRows::Equality(rows))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let cfg = LabConfig::from_toml("families = [\"student\"]\nnu = 5.0\nreps = 1000\n").unwrap();
        assert_eq!(cfg.families, vec![FamilyName::Student]);
        assert_eq!(cfg.nu, 5.0);
        assert_eq!(cfg.n, 125);
        assert!(LabConfig::from_toml("bogus = 1").is_err());
        assert!("power".parse::<Experiment>().is_ok());
        assert!("speed".parse::<Experiment>().is_err());
    }

    #[test]
    fn size_rows_csv_shape() {
        let cfg = LabConfig {
            families: vec![FamilyName::Normal],
            rhos: vec![0.3],
            n: 20,
            m: 20,
            reps: 1000,
            ..LabConfig::default()
        };
        let rows = run_experiment(Experiment::Size, &cfg, 9).unwrap();
        let csv = String::from_utf8(rows.to_csv().unwrap()).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "family,rho,nu,n,m,alpha,reps,seed,rate,se");
        let row = lines.next().unwrap();
        assert!(row.starts_with("normal,0.3,,20,20,0.05,1000,9,"), "{row}");
        assert_eq!(rows, run_experiment(Experiment::Size, &cfg, 9).unwrap());
    }
}
