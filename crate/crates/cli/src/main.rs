//! Command-line driver: prices a put surface or reproduces the refinement,
//! stability, variance-regime and hedging studies, writing CSV tables.
//!
//! Exit codes: 0 on success, 2 on validation errors, 3 when a `price` run
//! hits a numerical blow-up.

use bates_hoc::config::{parse_scheme, parse_transform};
use bates_hoc::harness::{
    convergence_study, feller_study, hedge_experiment, stability_sweep, write_feller_csv,
};
use bates_hoc::solver::price_surface;
use bates_hoc::{delta_surface, Error, RunConfig};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bates-hoc", version, about = "European put pricer for a stochastic-volatility jump model (fourth-order compact scheme)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Flat key=value config file; defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Spatial scheme
    #[arg(long, value_parser = ["hoc", "fd2"], global = true)]
    scheme: Option<String>,

    /// Value transform between computational and financial units
    #[arg(long, value_parser = ["consistent", "paper-literal"], global = true)]
    transform: Option<String>,

    /// Parabolic mesh ratio k/h^2 (price runs) or ratio list (stability)
    #[arg(long, value_delimiter = ',', global = true)]
    ratio: Option<Vec<f64>>,

    /// Output CSV path; reports also print to stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Price one surface and report the at-the-money value
    Price {
        #[command(flatten)]
        common: CommonArgs,
        /// Mesh width
        #[arg(long)]
        h: Option<f64>,
        /// Optional Delta CSV path
        #[arg(long)]
        delta_out: Option<PathBuf>,
    },
    /// Mesh-refinement study against a fine reference
    Converge {
        #[command(flatten)]
        common: CommonArgs,
        /// Mesh widths of the sweep
        #[arg(long, value_delimiter = ',', default_values_t = [0.4, 0.2, 0.1, 0.05])]
        h: Vec<f64>,
        /// Reference mesh width
        #[arg(long = "h-ref", default_value_t = 0.025)]
        h_ref: f64,
    },
    /// l2-error over a (parabolic ratio, mesh width) sweep
    Stability {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [0.4, 0.2, 0.1, 0.05])]
        h: Vec<f64>,
        #[arg(long = "h-ref", default_value_t = 0.025)]
        h_ref: f64,
    },
    /// Refinement study across the three variance regimes
    Feller {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05])]
        h: Vec<f64>,
        #[arg(long = "h-ref", default_value_t = 0.025)]
        h_ref: f64,
    },
    /// Delta-neutral portfolio accuracy after bumping the spot
    Hedge {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [0.4, 0.2, 0.1, 0.05])]
        h: Vec<f64>,
        #[arg(long = "h-ref", default_value_t = 0.025)]
        h_ref: f64,
        /// Spot bump as a fraction of the spot level
        #[arg(long, default_value_t = 0.005)]
        bump: f64,
    },
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(scheme) = &common.scheme {
        cfg.scheme = parse_scheme(scheme)?;
    }
    if let Some(transform) = &common.transform {
        cfg.params.transform = parse_transform(transform)?;
    }
    if let Some(ratios) = &common.ratio {
        if let [one] = ratios.as_slice() {
            cfg.parabolic_ratio = *one;
        }
    }
    Ok(cfg)
}

type CsvSink = std::io::BufWriter<std::fs::File>;

fn write_out<F>(path: &Option<PathBuf>, write: F) -> Result<(), Error>
where
    F: Fn(&mut CsvSink) -> std::io::Result<()>,
{
    if let Some(path) = path {
        let mut file = CsvSink::new(std::fs::File::create(path)?);
        write(&mut file)?;
    }
    Ok(())
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Price { common, h, delta_out } => {
            let cfg = load_config(&common)?;
            let solver_cfg = cfg.solver_config(h, common.ratio.as_deref().and_then(|r| r.first().copied()))?;
            let surface = price_surface(&solver_cfg)?;
            let grid = &surface.grid;
            let j_mid = grid.m / 2;
            println!(
                "grid {} x {} (h = {}), {} time steps, {} factorization(s)",
                grid.nx(),
                grid.ny(),
                grid.h,
                surface.stats.steps,
                surface.stats.factorizations
            );
            println!(
                "at the money (S = {}, variance = {:.6}): V = {:.6}",
                surface.spot(0),
                surface.variance(j_mid),
                surface.financial_at(0, j_mid)
            );
            write_out(&common.out, |w| surface.write_csv(w))?;
            if let Some(path) = &delta_out {
                let deltas = delta_surface(&surface)?;
                let mut file = std::fs::File::create(path)?;
                deltas.write_csv(&mut file, &surface)?;
            }
        }
        Command::Converge { common, h, h_ref } => {
            let cfg = load_config(&common)?;
            let base = cfg.solver_config(Some(h_ref), None)?;
            let report = convergence_study(&base, &h, h_ref)?;
            let mut stdout = std::io::stdout();
            report.write_csv(&mut stdout)?;
            println!(
                "slope_l2={:.6} slope_linf={:.6}",
                report.slope_l2.unwrap_or(f64::NAN),
                report.slope_linf.unwrap_or(f64::NAN)
            );
            write_out(&common.out, |w| report.write_csv(w))?;
        }
        Command::Stability { common, h, h_ref } => {
            let cfg = load_config(&common)?;
            let base = cfg.solver_config(Some(h_ref), None)?;
            let ratios = common
                .ratio
                .clone()
                .unwrap_or_else(|| (1..=10).map(|q| q as f64 / 10.0).collect());
            let table = stability_sweep(&base, &ratios, &h, h_ref)?;
            let mut stdout = std::io::stdout();
            table.write_csv(&mut stdout)?;
            write_out(&common.out, |w| table.write_csv(w))?;
        }
        Command::Feller { common, h, h_ref } => {
            let cfg = load_config(&common)?;
            let base = cfg.solver_config(Some(h_ref), None)?;
            let regimes = feller_study(&base, &h, h_ref)?;
            let mut stdout = std::io::stdout();
            write_feller_csv(&regimes, &mut stdout)?;
            for regime in &regimes {
                println!(
                    "theta={} v={} feller={}: slope_l2={:.6}",
                    regime.theta,
                    regime.vol_of_vol,
                    regime.feller,
                    regime.report.slope_l2.unwrap_or(f64::NAN)
                );
            }
            write_out(&common.out, |w| write_feller_csv(&regimes, w))?;
        }
        Command::Hedge { common, h, h_ref, bump } => {
            let cfg = load_config(&common)?;
            let base = cfg.solver_config(Some(h_ref), None)?;
            let report = hedge_experiment(&base, &h, h_ref, bump)?;
            println!(
                "portfolio evaluated at x={}, y={} with bump fraction {}",
                report.eval_x, report.eval_y, report.bump_fraction
            );
            let mut stdout = std::io::stdout();
            report.write_csv(&mut stdout)?;
            write_out(&common.out, |w| report.write_csv(w))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::NonFinite { .. } => ExitCode::from(3),
                Error::Io(_) => ExitCode::FAILURE,
                _ => ExitCode::from(2),
            }
        }
    }
}
