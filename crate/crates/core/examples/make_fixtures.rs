//! Regenerates the CSV fixtures under `tests/fixtures/`.
//!
//! ```text
//! cargo run -p elliptest --example make_fixtures
//! ```

use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use elliptest::lab::replication_rng;
use elliptest::{AlternativeSpec, EllipticalSpec, Family, Law};

fn weekdays(year: i32) -> Vec<NaiveDate> {
    NaiveDate::from_ymd_opt(year, 1, 1)
        .unwrap()
        .iter_days()
        .take_while(|d| d.year() == year)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect()
}

fn render(tickers: &[String], dates: &[NaiveDate], law: &Law, seed: u64, holes: &[(usize, usize)]) -> String {
    let sample = law.sampler().unwrap().draw(&mut replication_rng(seed, 0), dates.len());
    let mut out = String::from("date");
    for t in tickers {
        write!(out, ",{t}").unwrap();
    }
    out.push('\n');
    for (row, date) in dates.iter().enumerate() {
        write!(out, "{date}").unwrap();
        for col in 0..tickers.len() {
            if holes.contains(&(row, col)) {
                out.push(',');
            } else {
                // Daily-return scale.
                write!(out, ",{:.6}", 0.01 * sample[(row, col)]).unwrap();
            }
        }
        out.push('\n');
    }
    out
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    std::fs::create_dir_all(dir.join("period")).unwrap();

    let tickers: Vec<String> = (0..100).map(|i| format!("T{i:03}")).collect();
    let dates: Vec<NaiveDate> = weekdays(2006).into_iter().take(250).collect();
    let law = Law::Elliptical(EllipticalSpec::exchangeable(Family::Student { nu: 5.0 }, 100, 0.3).unwrap());
    std::fs::write(dir.join("returns_2006.csv"), render(&tickers, &dates, &law, 2006, &[])).unwrap();

    // Ten stocks over 2003-2007 in two files. 2005 departs from ellipticity.
    let tickers: Vec<String> = ["AA", "BB", "CC", "DD", "EE", "FF", "GG", "HH", "II", "JJ"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for (name, years) in [("period_2003_2005.csv", 2003..=2005), ("period_2006_2007.csv", 2006..=2007)] {
        let mut text = String::new();
        for year in years {
            let dates = weekdays(year);
            let base = EllipticalSpec::exchangeable(Family::Normal, 10, 0.4).unwrap();
            let law = if year == 2005 {
                Law::Alternative(AlternativeSpec::SkewMixture {
                    base,
                    weight: 0.3,
                    delta: 12.0,
                })
            } else {
                Law::Elliptical(base)
            };
            let block = render(&tickers, &dates, &law, year as u64, &[(3, 2), (100, 7)]);
            let body = block.split_once('\n').unwrap();
            if text.is_empty() {
                text.push_str(body.0);
                text.push('\n');
            }
            text.push_str(body.1);
        }
        std::fs::write(dir.join("period").join(name), text).unwrap();
    }
}
