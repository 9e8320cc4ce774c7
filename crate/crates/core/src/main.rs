use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use elliptest::{
    emit_reports, load_panel, run_experiment, run_period_grid, run_year_grid, Error, Experiment,
    LabConfig, MetaMode, PanelFormat, ReturnPanel,
};

const ALPHA_GRID: [f64; 4] = [0.5, 0.25, 0.1, 0.05];

#[derive(Parser)]
#[command(name = "elliptest", version, about = "Exact pairwise tests of elliptical symmetry for return panels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Levels {
    /// Per-year significance level; repeat for several levels.
    #[arg(long = "alpha", value_name = "A")]
    alpha: Vec<f64>,
    /// Use the levels 0.5, 0.25, 0.1, 0.05.
    #[arg(long, conflicts_with = "alpha")]
    alpha_grid: bool,
}

impl Levels {
    fn resolve(&self) -> Vec<f64> {
        if self.alpha_grid {
            ALPHA_GRID.to_vec()
        } else if self.alpha.is_empty() {
            vec![0.05]
        } else {
            self.alpha.clone()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Test one year of returns.
    Year {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "returns")]
        format: PanelFormat,
        /// Length of the concordance block.
        #[arg(long, default_value_t = 125)]
        n: usize,
        /// Length of the sign block.
        #[arg(long, default_value_t = 125)]
        m: usize,
        #[command(flatten)]
        levels: Levels,
        #[arg(long)]
        out: PathBuf,
    },
    /// Test every calendar year in the matched files and combine the years.
    Period {
        /// Glob pattern of panel files.
        #[arg(long)]
        inputs: String,
        #[arg(long, default_value = "returns")]
        format: PanelFormat,
        #[arg(long, default_value_t = 83)]
        n: usize,
        #[arg(long, default_value_t = 166)]
        m: usize,
        #[command(flatten)]
        levels: Levels,
        #[arg(long, default_value_t = 0.05)]
        beta: f64,
        #[arg(long, default_value = "inclusive")]
        meta_mode: MetaMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a Monte Carlo experiment and write CSV rows.
    Lab {
        #[arg(long)]
        experiment: Experiment,
        /// TOML file overriding the default experiment settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_years(pattern: &str, format: PanelFormat) -> elliptest::Result<BTreeMap<i32, ReturnPanel>> {
    let mut files: Vec<PathBuf> = glob::glob(pattern)
        .map_err(|e| Error::Input(format!("bad glob {pattern:?}: {e}")))?
        .collect::<Result<_, _>>()
        .map_err(|e| Error::Io {
            path: e.path().to_path_buf(),
            source: e.into(),
        })?;
    files.sort();
    if files.is_empty() {
        return Err(Error::Input(format!("no files match {pattern:?}")));
    }
    let mut years = BTreeMap::new();
    for file in &files {
        let loaded = load_panel(file, format)?;
        for (year, panel) in loaded.panel.split_years() {
            if years.insert(year, panel).is_some() {
                return Err(Error::Input(format!(
                    "year {year} appears in more than one file (again in {})",
                    file.display()
                )));
            }
        }
    }
    Ok(years)
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> elliptest::Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes).map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            })
        }
    }
}

fn run(cli: Cli) -> elliptest::Result<()> {
    match cli.command {
        Command::Year {
            input,
            format,
            n,
            m,
            levels,
            out,
        } => {
            let loaded = load_panel(&input, format)?;
            if loaded.dropped_rows > 0 {
                eprintln!("dropped {} rows with missing values", loaded.dropped_rows);
            }
            let decisions = run_year_grid(&loaded.panel, n, m, &levels.resolve())?;
            for d in &decisions {
                println!("year {} alpha {}: {} rejected pairs", d.year, d.alpha, d.n_rejected());
            }
            print_written(&emit_reports(&decisions, &[], &out)?);
        }
        Command::Period {
            inputs,
            format,
            n,
            m,
            levels,
            beta,
            meta_mode,
            out,
        } => {
            let years = load_years(&inputs, format)?;
            let outcomes = run_period_grid(&years, n, m, &levels.resolve(), beta, meta_mode)?;
            for o in &outcomes {
                println!(
                    "alpha {}: {}/{} years rejected, c_beta {}, p {} ({}), meta {}",
                    o.meta.alpha,
                    o.meta.x,
                    o.meta.n_years,
                    o.meta.c_beta,
                    o.p_value(),
                    o.mode,
                    if o.meta.rejected { "rejected" } else { "not rejected" }
                );
            }
            let decisions: Vec<_> = outcomes.iter().flat_map(|o| o.decisions.iter().cloned()).collect();
            print_written(&emit_reports(&decisions, &outcomes, &out)?);
        }
        Command::Lab {
            experiment,
            config,
            seed,
            out,
        } => {
            let cfg = match config {
                Some(path) => {
                    let text = fs::read_to_string(&path).map_err(|e| Error::Io { path, source: e })?;
                    LabConfig::from_toml(&text)?
                }
                None => LabConfig::default(),
            };
            let rows = run_experiment(experiment, &cfg, seed)?;
            write_output(out.as_deref(), &rows.to_csv()?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Numeric(_) => 3,
                _ => 2,
            })
        }
    }
}
