//! `dxbounds` command-line front end.

mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use dxbounds::derived::PretestRange;
use dxbounds::identification::DependenceAssumption;
use dxbounds::inference::{BetaPreset, TestConfig};
use dxbounds::io::read_counts;
use dxbounds::moments::{build_moment_system, moment_stats, ThetaPoint};
use dxbounds::probability::{CellCounts, RefPerf, SRegion, DEFAULT_S_GRID};
use dxbounds::report::{analyze, sensitivity, write_outputs, OutputFormat, ReportBundle, ReportToggles, StudyConfig};
use dxbounds::{Error, Execution};

const EXIT_REFUTED: u8 = 2;
const EXIT_INVALID: u8 = 3;

#[derive(Parser)]
#[command(name = "dxbounds", version, about = "Bounds on index-test sensitivity and specificity under an imperfect reference test")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apparent measures, sharp identified set and Fréchet comparator.
    Estimate {
        #[command(flatten)]
        study: StudyArgs,
        /// Print per-cell moment values and sample moments at THETA1,THETA0
        /// (first reference point of the region).
        #[arg(long, value_name = "THETA1,THETA0", value_parser = parse_pair)]
        dump_moments: Option<(f64, f64)>,
    },
    /// Confidence set for (θ1, θ0) by bootstrap test inversion.
    Infer {
        #[command(flatten)]
        study: StudyArgs,
        #[command(flatten)]
        test: TestArgs,
        /// Also report the confidence-set projections under every β preset.
        #[arg(long)]
        all_beta: bool,
    },
    /// Prevalence bounds in a screened population with positivity rate Q.
    Prevalence {
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long)]
        q: f64,
        /// Points in the prevalence-width curve over q.
        #[arg(long, default_value_t = 201)]
        q_grid: usize,
    },
    /// Predictive-value bounds for a pre-test probability range.
    Predict {
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long)]
        pi_lo: f64,
        /// Defaults to --pi-lo.
        #[arg(long)]
        pi_hi: Option<f64>,
    },
    /// Projections for each reference sensitivity in --s1-range and their union.
    Sensitivity {
        #[command(flatten)]
        study: StudyArgs,
    },
    /// Monte Carlo coverage of identified-set points, with the estimate as truth.
    SimulateCoverage {
        #[command(flatten)]
        study: StudyArgs,
        #[command(flatten)]
        test: TestArgs,
        #[arg(long, default_value_t = 200)]
        reps: usize,
    },
}

#[derive(Args)]
struct StudyArgs {
    /// Counts as JSON (n11, n01, n10, n00) or CSV (t,r,count).
    #[arg(long)]
    input: PathBuf,
    /// Reference sensitivity.
    #[arg(long, default_value_t = 0.9)]
    s1: f64,
    /// Reference specificity.
    #[arg(long, default_value_t = 1.0)]
    s0: f64,
    #[arg(long, value_name = "LO,HI", value_parser = parse_pair)]
    s1_range: Option<(f64, f64)>,
    #[arg(long, value_name = "LO,HI", value_parser = parse_pair)]
    s0_range: Option<(f64, f64)>,
    /// Points per axis over a reference range.
    #[arg(long, default_value_t = DEFAULT_S_GRID)]
    s_grid: usize,
    #[arg(long, default_value = "none", value_parser = parse_assumption)]
    assumption: DependenceAssumption,
    /// Write report files here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output formats for --out.
    #[arg(long, value_delimiter = ',', default_value = "json,csv,svg", value_parser = parse_format)]
    format: Vec<OutputFormat>,
    /// Disable data-parallel evaluation.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "10", value_parser = parse_beta)]
    beta_preset: BetaPreset,
    #[arg(long, default_value_t = 500)]
    bootstrap: usize,
    #[arg(long, default_value_t = TestConfig::default().seed)]
    seed: u64,
    /// Points per θ axis.
    #[arg(long, default_value_t = TestConfig::default().theta_grid)]
    theta_grid: usize,
}

impl TestArgs {
    fn config(&self, s_grid: usize) -> TestConfig {
        TestConfig {
            alpha: self.alpha,
            beta_preset: self.beta_preset,
            bootstrap: self.bootstrap,
            seed: self.seed,
            theta_grid: self.theta_grid,
            s_grid,
        }
    }
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got '{s}'"))?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}"));
    Ok((num(a)?, num(b)?))
}

fn parse_assumption(s: &str) -> std::result::Result<DependenceAssumption, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_beta(s: &str) -> std::result::Result<BetaPreset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> std::result::Result<OutputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

struct Study {
    counts: CellCounts,
    cfg: StudyConfig,
    out: Option<PathBuf>,
    formats: Vec<OutputFormat>,
}

impl StudyArgs {
    fn region(&self) -> Result<SRegion> {
        Ok(match (self.s1_range, self.s0_range) {
            (None, None) => SRegion::singleton(RefPerf::new(self.s1, self.s0)?),
            (r1, r0) => SRegion::rect(r1.unwrap_or((self.s1, self.s1)), r0.unwrap_or((self.s0, self.s0)), self.s_grid)?,
        })
    }

    fn load(self, toggles: ReportToggles, test: TestConfig) -> Result<Study> {
        let counts = read_counts(&self.input)
            .map_err(|e| Error::InvalidInput(e.to_string()))
            .with_context(|| format!("reading {}", self.input.display()))?;
        let mut cfg = StudyConfig::new(&self.input, self.assumption, self.region()?);
        cfg.toggles = toggles;
        cfg.test = test;
        cfg.execution = if self.sequential { Execution::Sequential } else { Execution::Parallel };
        cfg.validate()?;
        Ok(Study { counts, cfg, out: self.out, formats: self.format })
    }
}

impl Study {
    fn finish(&self, bundle: &ReportBundle) -> Result<()> {
        if let Some(dir) = &self.out {
            let files = write_outputs(bundle, dir, &self.formats).with_context(|| format!("writing to {}", dir.display()))?;
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Ok(())
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate { study, dump_moments } => {
            let toggles = ReportToggles { apparent: true, sharp: true, frechet: true, ..ReportToggles::none() };
            let study = study.load(toggles, TestConfig::default())?;
            let bundle = analyze(&study.counts, &study.cfg)?;
            print!("{}", render::header(&bundle, false));
            print!("{}", render::validation(&bundle));
            print!("{}", render::estimates(&bundle));
            if let Some((t1, t0)) = dump_moments {
                let s = study.cfg.region.grid_points()[0];
                let sys = build_moment_system(ThetaPoint::new(t1, t0, s), study.cfg.assumption);
                let mut buf = Vec::new();
                sys.write_csv(&mut buf)?;
                println!("\nmoment values per cell at θ=({t1}, {t0}), s=({}, {}):", s.s1, s.s0);
                print!("{}", String::from_utf8(buf)?);
                print!("{}", render::moment_stats(&moment_stats(&study.counts, &sys)?));
            }
            study.finish(&bundle)
        }
        Command::Infer { study, test, all_beta } => {
            let toggles = ReportToggles { apparent: true, sharp: true, confidence_set: true, ..ReportToggles::none() };
            let grid = study.s_grid;
            let study = study.load(toggles, test.config(grid))?;
            let bundle = analyze(&study.counts, &study.cfg)?;
            print!("{}", render::header(&bundle, true));
            print!("{}", render::validation(&bundle));
            print!("{}", render::estimates(&bundle));
            print!("{}", render::confidence_set(&bundle));
            if all_beta {
                let mut rows = Vec::new();
                for preset in [BetaPreset::Twentieth, BetaPreset::Tenth, BetaPreset::Fifth] {
                    let cfg = StudyConfig {
                        test: TestConfig { beta_preset: preset, ..study.cfg.test },
                        toggles: ReportToggles { confidence_set: true, ..ReportToggles::none() },
                        ..study.cfg.clone()
                    };
                    rows.push((preset, analyze(&study.counts, &cfg)?));
                }
                print!("{}", render::beta_comparison(&rows));
            }
            study.finish(&bundle)
        }
        Command::Prevalence { study, q, q_grid } => {
            let toggles = ReportToggles { sharp: true, prevalence: true, prevalence_curve: true, ..ReportToggles::none() };
            let mut study = study.load(toggles, TestConfig::default())?;
            study.cfg.screening_q = Some(q);
            study.cfg.q_grid = q_grid;
            study.cfg.validate()?;
            let bundle = analyze(&study.counts, &study.cfg)?;
            print!("{}", render::header(&bundle, false));
            print!("{}", render::estimates(&bundle));
            print!("{}", render::prevalence(&bundle));
            study.finish(&bundle)
        }
        Command::Predict { study, pi_lo, pi_hi } => {
            let toggles = ReportToggles { sharp: true, predictive_values: true, ..ReportToggles::none() };
            let mut study = study.load(toggles, TestConfig::default())?;
            study.cfg.pretest = Some(PretestRange::new(pi_lo, pi_hi.unwrap_or(pi_lo))?);
            let bundle = analyze(&study.counts, &study.cfg)?;
            print!("{}", render::header(&bundle, false));
            print!("{}", render::estimates(&bundle));
            print!("{}", render::predictive(&bundle));
            study.finish(&bundle)
        }
        Command::Sensitivity { study } => {
            let s1_range = study.s1_range.ok_or_else(|| Error::InvalidInput("sensitivity needs --s1-range".into()))?;
            let grid = study.s_grid;
            let toggles = ReportToggles { apparent: true, sharp: true, ..ReportToggles::none() };
            let study = study.load(toggles, TestConfig::default())?;
            let bundle = sensitivity(&study.counts, &study.cfg, s1_range, grid)?;
            print!("{}", render::header(&bundle, false));
            print!("{}", render::sensitivity(&bundle));
            study.finish(&bundle)
        }
        Command::SimulateCoverage { study, test, reps } => {
            let toggles = ReportToggles { sharp: true, coverage_sim: true, ..ReportToggles::none() };
            let grid = study.s_grid;
            let mut study = study.load(toggles, test.config(grid))?;
            study.cfg.coverage_reps = reps;
            let bundle = analyze(&study.counts, &study.cfg)?;
            print!("{}", render::header(&bundle, true));
            print!("{}", render::coverage(&bundle));
            study.finish(&bundle)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Refuted { .. }) => EXIT_REFUTED,
        Some(Error::InvalidInput(_) | Error::Json(_) | Error::Csv(_)) => EXIT_INVALID,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INVALID) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
